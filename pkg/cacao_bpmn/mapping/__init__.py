"""CACAO to BPMN mapping in both directions."""

from .forward import (
    AGENT_TARGET_HEADER,
    COMMAND_HEADER,
    MAPPING_STYLES,
    MARKINGS_HEADER,
    SIGNATURES_HEADER,
    MappingOptions,
    attach_agent_target_annotation,
    attach_command_annotation,
    map_playbook,
    map_step,
    map_variables,
)
from .reverse import ImportPolicy, map_to_cacao

__all__ = [
    # Forward
    "AGENT_TARGET_HEADER",
    "COMMAND_HEADER",
    "MAPPING_STYLES",
    "MARKINGS_HEADER",
    "SIGNATURES_HEADER",
    "MappingOptions",
    "attach_agent_target_annotation",
    "attach_command_annotation",
    "map_playbook",
    "map_step",
    "map_variables",
    # Reverse
    "ImportPolicy",
    "map_to_cacao",
]
