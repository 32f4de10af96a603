"""CACAO 2.0 playbook model and JSON codec."""

from .codec import canonical_json, parse_playbook, playbook_from_dict, playbook_to_dict, serialize_playbook
from .model import (
    ActionPayload,
    AgentTarget,
    Command,
    DataMarking,
    ExtensionDefinition,
    IfConditionPayload,
    ParallelPayload,
    Playbook,
    PlaybookActionPayload,
    Signature,
    SwitchConditionPayload,
    Variable,
    WhileConditionPayload,
    WorkflowStep,
    agent_category,
)

__all__ = [
    "ActionPayload",
    "AgentTarget",
    "Command",
    "DataMarking",
    "ExtensionDefinition",
    "IfConditionPayload",
    "ParallelPayload",
    "Playbook",
    "PlaybookActionPayload",
    "Signature",
    "SwitchConditionPayload",
    "Variable",
    "WhileConditionPayload",
    "WorkflowStep",
    "agent_category",
    "canonical_json",
    "parse_playbook",
    "playbook_from_dict",
    "playbook_to_dict",
    "serialize_playbook",
]
