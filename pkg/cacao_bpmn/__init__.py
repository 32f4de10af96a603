"""Public package interface for the CACAO/BPMN converter."""

from .analysis import count_constructs, detect_regions
from .bpmn import Definitions, parse_definitions, serialize_definitions
from .cacao import Playbook, WorkflowStep, parse_playbook, serialize_playbook
from .errors import (
    ConversionError,
    DanglingReferenceError,
    DocumentSyntaxError,
    ImportMetadataError,
    InvalidDocumentError,
    LayoutError,
    MappingError,
    SchemaError,
    UnstructuredFlowError,
    UnsupportedElementError,
)
from .layout import LayoutConfig, layout
from .mapping import ImportPolicy, MappingOptions, map_playbook, map_to_cacao
from .validation import Violation, check_well_formed, validate

__all__ = [
    # Documents
    "Definitions",
    "Playbook",
    "WorkflowStep",
    "parse_definitions",
    "parse_playbook",
    "serialize_definitions",
    "serialize_playbook",
    # Validation
    "Violation",
    "check_well_formed",
    "validate",
    # Mapping
    "ImportPolicy",
    "MappingOptions",
    "map_playbook",
    "map_to_cacao",
    # Layout and analysis
    "LayoutConfig",
    "count_constructs",
    "detect_regions",
    "layout",
    # Errors
    "ConversionError",
    "DanglingReferenceError",
    "DocumentSyntaxError",
    "ImportMetadataError",
    "InvalidDocumentError",
    "LayoutError",
    "MappingError",
    "SchemaError",
    "UnstructuredFlowError",
    "UnsupportedElementError",
]
