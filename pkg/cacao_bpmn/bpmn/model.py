"""BPMN 2.0 model for the subset the converter reads and writes.

All containers are tuples sorted by element id at construction, so two models
describing the same document compare equal no matter in which order their
elements were collected.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from operator import attrgetter
from typing import Any, Iterable, Iterator, Literal, Mapping, TypeAlias

from cacao_bpmn.errors import ImportMetadataError

MODEL_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"
BPMNDI_NS = "http://www.omg.org/spec/BPMN/20100524/DI"
DC_NS = "http://www.omg.org/spec/DD/20100524/DC"
DI_NS = "http://www.omg.org/spec/DD/20100524/DI"
XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"
CACAO_NS = "urn:cacao:bpmn:2.0"
CONDITION_LANGUAGE = "urn:cacao:condition"

TaskKind: TypeAlias = Literal["abstract", "user", "service"]
GatewayDirection: TypeAlias = Literal["diverging", "converging"]
EventPosition: TypeAlias = Literal["start", "end"]
ExtensionKey: TypeAlias = tuple[str, str]

# Characters XML 1.0 cannot carry, even as character references.
_XML_ILLEGAL = re.compile("[\x00-\x08\x0b\x0c\x0e-\x1f\ud800-\udfff\ufffe\uffff]")
ESCAPED_SUFFIX = "-json"


def xml_safe(text: str) -> str:
    """Replace characters XML cannot carry with U+FFFD."""

    return _XML_ILLEGAL.sub("\ufffd", text)


def is_xml_safe(text: str) -> bool:
    return _XML_ILLEGAL.search(text) is None


class ExtensionBag(Mapping[ExtensionKey, str]):
    """Immutable map of namespaced extension attributes.

    Keys are ``(namespace URI, local name)`` pairs; iteration follows the
    sorted key order.
    """

    __slots__ = ("_items",)

    def __init__(self, items: Mapping[ExtensionKey, str] | Iterable[tuple[ExtensionKey, str]] = ()):
        pairs = items.items() if isinstance(items, Mapping) else items
        self._items: dict[ExtensionKey, str] = dict(sorted(pairs))

    @classmethod
    def cacao(cls, values: Mapping[str, str | None]) -> ExtensionBag:
        """Build a bag in the CACAO namespace, skipping ``None`` values.

        A value XML cannot carry is stored JSON-encoded under
        ``<local>-json`` instead; :meth:`get_cacao` decodes it again.
        """

        pairs = []
        for local, value in values.items():
            if value is None:
                continue
            if is_xml_safe(value):
                pairs.append(((CACAO_NS, local), value))
            else:
                pairs.append(((CACAO_NS, local + ESCAPED_SUFFIX), json.dumps(value)))
        return cls(pairs)

    def __getitem__(self, key: ExtensionKey) -> str:
        return self._items[key]

    def __iter__(self) -> Iterator[ExtensionKey]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        return hash(tuple(self._items.items()))

    def __repr__(self) -> str:
        return f"ExtensionBag({self._items!r})"

    def get_cacao(self, local: str, default: str | None = None) -> str | None:
        if (CACAO_NS, local) in self._items:
            return self._items[(CACAO_NS, local)]
        escaped = self._items.get((CACAO_NS, local + ESCAPED_SUFFIX))
        if escaped is None:
            return default
        try:
            value = json.loads(escaped)
        except ValueError:
            value = None
        if not isinstance(value, str):
            raise ImportMetadataError(f"cacao:{local}{ESCAPED_SUFFIX}", detail=f"cacao:{local}{ESCAPED_SUFFIX} is not a JSON string")
        return value


def _by_id(items: Iterable[Any]) -> tuple[Any, ...]:
    return tuple(sorted(items, key=attrgetter("id")))


# --- Flow nodes ---


@dataclass(frozen=True, slots=True, kw_only=True)
class FlowNode:
    id: str
    name: str | None = None
    extensions: ExtensionBag = field(default_factory=ExtensionBag)


@dataclass(frozen=True, slots=True, kw_only=True)
class Task(FlowNode):
    task_kind: TaskKind = "abstract"


@dataclass(frozen=True, slots=True, kw_only=True)
class CallActivity(FlowNode):
    called_element: str


@dataclass(frozen=True, slots=True, kw_only=True)
class ExclusiveGateway(FlowNode):
    direction: GatewayDirection
    default_flow: str | None = None


@dataclass(frozen=True, slots=True, kw_only=True)
class ParallelGateway(FlowNode):
    direction: GatewayDirection


@dataclass(frozen=True, slots=True, kw_only=True)
class Event(FlowNode):
    """A plain start or end event; accepted on import, never emitted."""

    position: EventPosition


@dataclass(frozen=True, slots=True, kw_only=True)
class LoopCharacteristics:
    condition_text: str
    test_before: bool = True
    language: str | None = CONDITION_LANGUAGE


@dataclass(frozen=True, slots=True, kw_only=True)
class SequenceFlow:
    id: str
    source_id: str
    target_id: str
    name: str | None = None
    condition_text: str | None = None
    condition_language: str | None = None
    extensions: ExtensionBag = field(default_factory=ExtensionBag)


@dataclass(frozen=True, slots=True, kw_only=True)
class TextAnnotation:
    id: str
    text: str


@dataclass(frozen=True, slots=True, kw_only=True)
class Association:
    id: str
    source_id: str
    target_id: str


@dataclass(frozen=True, slots=True, kw_only=True)
class SubProcess(FlowNode):
    flow_nodes: tuple[FlowNode, ...] = ()
    sequence_flows: tuple[SequenceFlow, ...] = ()
    annotations: tuple[TextAnnotation, ...] = ()
    associations: tuple[Association, ...] = ()
    loop: LoopCharacteristics | None = None

    def __post_init__(self) -> None:
        for name in ("flow_nodes", "sequence_flows", "annotations", "associations"):
            object.__setattr__(self, name, _by_id(getattr(self, name)))


@dataclass(frozen=True, slots=True, kw_only=True)
class Group:
    id: str
    category_value_id: str
    extensions: ExtensionBag = field(default_factory=ExtensionBag)


@dataclass(frozen=True, slots=True, kw_only=True)
class ProcessProperty:
    id: str
    name: str
    item_ref: str
    extensions: ExtensionBag = field(default_factory=ExtensionBag)


@dataclass(frozen=True, slots=True, kw_only=True)
class ItemDefinition:
    id: str
    structure_ref: str


@dataclass(frozen=True, slots=True, kw_only=True)
class Category:
    id: str
    value_id: str
    value_text: str


@dataclass(frozen=True, slots=True, kw_only=True)
class Process:
    id: str
    name: str | None = None
    flow_nodes: tuple[FlowNode, ...] = ()
    sequence_flows: tuple[SequenceFlow, ...] = ()
    annotations: tuple[TextAnnotation, ...] = ()
    associations: tuple[Association, ...] = ()
    groups: tuple[Group, ...] = ()
    properties: tuple[ProcessProperty, ...] = ()
    extensions: ExtensionBag = field(default_factory=ExtensionBag)

    def __post_init__(self) -> None:
        for name in ("flow_nodes", "sequence_flows", "annotations", "associations", "groups", "properties"):
            object.__setattr__(self, name, _by_id(getattr(self, name)))


# --- Diagram interchange ---


@dataclass(frozen=True, slots=True, kw_only=True)
class Shape:
    element_id: str
    x: int
    y: int
    width: int
    height: int

    @property
    def right(self) -> int:
        return self.x + self.width

    @property
    def bottom(self) -> int:
        return self.y + self.height


@dataclass(frozen=True, slots=True, kw_only=True)
class Edge:
    element_id: str
    waypoints: tuple[tuple[int, int], ...]


@dataclass(frozen=True, slots=True, kw_only=True)
class Diagram:
    shapes: tuple[Shape, ...] = ()
    edges: tuple[Edge, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "shapes", tuple(sorted(self.shapes, key=attrgetter("element_id"))))
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=attrgetter("element_id"))))

    def shape_map(self) -> dict[str, Shape]:
        return {shape.element_id: shape for shape in self.shapes}


@dataclass(frozen=True, slots=True, kw_only=True)
class Definitions:
    target_namespace: str
    process: Process
    item_definitions: tuple[ItemDefinition, ...] = ()
    categories: tuple[Category, ...] = ()
    diagram: Diagram | None = None
    extra_processes: tuple[Process, ...] = ()
    id: str | None = None

    def __post_init__(self) -> None:
        for name in ("item_definitions", "categories", "extra_processes"):
            object.__setattr__(self, name, _by_id(getattr(self, name)))


# --- Traversal helpers ---


def walk_scopes(scope: Process | SubProcess) -> Iterator[Process | SubProcess]:
    """Yield ``scope`` and every sub-process nested in it, depth first."""

    yield scope
    for node in scope.flow_nodes:
        if isinstance(node, SubProcess):
            yield from walk_scopes(node)


def iter_flow_nodes(scope: Process | SubProcess) -> Iterator[FlowNode]:
    for inner in walk_scopes(scope):
        yield from inner.flow_nodes


def iter_sequence_flows(scope: Process | SubProcess) -> Iterator[SequenceFlow]:
    for inner in walk_scopes(scope):
        yield from inner.sequence_flows


def is_synthesized(node: FlowNode, role: str | None = None) -> bool:
    """Whether the converter generated ``node``, optionally as a ``join`` or ``fork``."""

    value = node.extensions.get_cacao("synthesized")
    return value is not None if role is None else value == role


__all__ = [
    "Association",
    "BPMNDI_NS",
    "CACAO_NS",
    "CONDITION_LANGUAGE",
    "CallActivity",
    "Category",
    "DC_NS",
    "DI_NS",
    "Definitions",
    "Diagram",
    "ESCAPED_SUFFIX",
    "Edge",
    "Event",
    "EventPosition",
    "ExclusiveGateway",
    "ExtensionBag",
    "FlowNode",
    "GatewayDirection",
    "Group",
    "ItemDefinition",
    "LoopCharacteristics",
    "MODEL_NS",
    "ParallelGateway",
    "Process",
    "ProcessProperty",
    "SequenceFlow",
    "Shape",
    "SubProcess",
    "Task",
    "TaskKind",
    "TextAnnotation",
    "XSI_NS",
    "is_synthesized",
    "is_xml_safe",
    "iter_flow_nodes",
    "iter_sequence_flows",
    "walk_scopes",
    "xml_safe",
]
