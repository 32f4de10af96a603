"""BPMN 2.0 model subset and its XML codec."""

from .model import (
    CACAO_NS,
    CONDITION_LANGUAGE,
    Association,
    CallActivity,
    Category,
    Definitions,
    Diagram,
    Edge,
    Event,
    ExclusiveGateway,
    ExtensionBag,
    FlowNode,
    Group,
    ItemDefinition,
    LoopCharacteristics,
    ParallelGateway,
    Process,
    ProcessProperty,
    SequenceFlow,
    Shape,
    SubProcess,
    Task,
    TextAnnotation,
)
from .xml import parse_definitions, serialize_definitions

__all__ = [
    "Association",
    "CACAO_NS",
    "CONDITION_LANGUAGE",
    "CallActivity",
    "Category",
    "Definitions",
    "Diagram",
    "Edge",
    "Event",
    "ExclusiveGateway",
    "ExtensionBag",
    "FlowNode",
    "Group",
    "ItemDefinition",
    "LoopCharacteristics",
    "ParallelGateway",
    "Process",
    "ProcessProperty",
    "SequenceFlow",
    "Shape",
    "SubProcess",
    "Task",
    "TextAnnotation",
    "parse_definitions",
    "serialize_definitions",
]
