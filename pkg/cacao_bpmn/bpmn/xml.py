"""BPMN 2.0 XML reader and writer built on :mod:`lxml`.

The writer is deterministic: fixed namespace prefixes, elements in a fixed
order sorted by id, two-space indentation. The reader accepts the mapped
subset plus plain start/end events and reports anything else as an
:class:`~cacao_bpmn.errors.UnsupportedElementError`.
"""

from __future__ import annotations

import logging
from typing import Callable, Iterable, Iterator

from lxml import etree

from cacao_bpmn.bpmn.model import (
    BPMNDI_NS,
    CACAO_NS,
    DC_NS,
    DI_NS,
    MODEL_NS,
    XSI_NS,
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
    iter_flow_nodes,
    iter_sequence_flows,
)
from cacao_bpmn.errors import DocumentSyntaxError, InvalidDocumentError, SchemaError, UnsupportedElementError

logger = logging.getLogger(__name__)

NSMAP: dict[str, str] = {
    "bpmn": MODEL_NS,
    "bpmndi": BPMNDI_NS,
    "dc": DC_NS,
    "di": DI_NS,
    "xsi": XSI_NS,
    "cacao": CACAO_NS,
}

_TASK_TAGS: dict[str, str] = {"abstract": "task", "user": "userTask", "service": "serviceTask"}
_TASK_KINDS: dict[str, str] = {tag: kind for kind, tag in _TASK_TAGS.items()}
_IGNORED_CHILDREN = frozenset({"documentation", "extensionElements", "incoming", "outgoing"})
_FORMAL_EXPRESSION = "bpmn:tFormalExpression"


def _q(namespace: str, local: str) -> str:
    return f"{{{namespace}}}{local}"


def _bpmn(local: str) -> str:
    return _q(MODEL_NS, local)


def _localname(element: etree._Element) -> str:
    return etree.QName(element).localname


def _namespace(element: etree._Element) -> str | None:
    return etree.QName(element).namespace


def _children(element: etree._Element) -> Iterator[etree._Element]:
    for child in element:
        if isinstance(child.tag, str):
            yield child


def _unsupported(element: etree._Element) -> UnsupportedElementError:
    return UnsupportedElementError(_localname(element), element.sourceline)


def _extensions(element: etree._Element) -> ExtensionBag:
    pairs = []
    for key, value in element.attrib.items():
        qname = etree.QName(key)
        if qname.namespace is None or qname.namespace in (MODEL_NS, XSI_NS):
            continue
        pairs.append(((qname.namespace, qname.localname), value))
    return ExtensionBag(pairs)


def _required(element: etree._Element, attribute: str) -> str:
    value = element.get(attribute)
    if value is None:
        raise SchemaError(
            f"{_localname(element)}[line {element.sourceline}]/@{attribute}",
            f"missing mandatory attribute '{attribute}'",
        )
    return value


# --- Reading ---


class _ScopeReader:
    """Collects the contents of a process or sub-process element."""

    def __init__(self, element: etree._Element):
        self.element = element
        self.flow_nodes: list[FlowNode] = []
        self.sequence_flows: list[SequenceFlow] = []
        self.annotations: list[TextAnnotation] = []
        self.associations: list[Association] = []
        self.groups: list[Group] = []
        self.properties: list[ProcessProperty] = []
        self.loop: LoopCharacteristics | None = None
        self._gateways: list[etree._Element] = []

    def read(self, *, is_process: bool) -> _ScopeReader:
        handlers: dict[str, Callable[[etree._Element], None]] = {
            "task": self._read_task,
            "userTask": self._read_task,
            "serviceTask": self._read_task,
            "callActivity": self._read_call_activity,
            "exclusiveGateway": self._gateways.append,
            "parallelGateway": self._gateways.append,
            "subProcess": self._read_sub_process,
            "startEvent": self._read_event,
            "endEvent": self._read_event,
            "sequenceFlow": self._read_sequence_flow,
            "textAnnotation": self._read_annotation,
            "association": self._read_association,
        }
        if is_process:
            handlers["group"] = self._read_group
            handlers["property"] = self._read_property
        else:
            handlers["standardLoopCharacteristics"] = self._read_loop

        for child in _children(self.element):
            local = _localname(child)
            if _namespace(child) != MODEL_NS:
                raise _unsupported(child)
            if local in _IGNORED_CHILDREN:
                continue
            handler = handlers.get(local)
            if handler is None:
                raise _unsupported(child)
            handler(child)

        for gateway in self._gateways:
            self.flow_nodes.append(self._build_gateway(gateway))
        return self

    def _check_plain(self, element: etree._Element) -> None:
        for child in _children(element):
            if _namespace(child) != MODEL_NS or _localname(child) not in _IGNORED_CHILDREN:
                raise _unsupported(child)

    def _read_task(self, element: etree._Element) -> None:
        self._check_plain(element)
        self.flow_nodes.append(
            Task(
                id=_required(element, "id"),
                name=element.get("name"),
                task_kind=_TASK_KINDS[_localname(element)],
                extensions=_extensions(element),
            )
        )

    def _read_call_activity(self, element: etree._Element) -> None:
        self._check_plain(element)
        self.flow_nodes.append(
            CallActivity(
                id=_required(element, "id"),
                name=element.get("name"),
                called_element=element.get("calledElement", ""),
                extensions=_extensions(element),
            )
        )

    def _read_event(self, element: etree._Element) -> None:
        self._check_plain(element)
        self.flow_nodes.append(
            Event(
                id=_required(element, "id"),
                name=element.get("name"),
                position="start" if _localname(element) == "startEvent" else "end",
                extensions=_extensions(element),
            )
        )

    def _build_gateway(self, element: etree._Element) -> FlowNode:
        self._check_plain(element)
        gateway_id = _required(element, "id")
        declared = (element.get("gatewayDirection") or "Unspecified").lower()
        if declared in ("diverging", "converging"):
            direction = declared
        else:
            incoming = sum(1 for flow in self.sequence_flows if flow.target_id == gateway_id)
            outgoing = sum(1 for flow in self.sequence_flows if flow.source_id == gateway_id)
            direction = "diverging" if outgoing >= 2 and incoming <= 1 else "converging"
            logger.debug("Inferred %s direction for gateway %s", direction, gateway_id)
        if _localname(element) == "exclusiveGateway":
            return ExclusiveGateway(
                id=gateway_id,
                name=element.get("name"),
                direction=direction,
                default_flow=element.get("default"),
                extensions=_extensions(element),
            )
        return ParallelGateway(id=gateway_id, name=element.get("name"), direction=direction, extensions=_extensions(element))

    def _read_sub_process(self, element: etree._Element) -> None:
        if element.get("triggeredByEvent") == "true":
            raise _unsupported(element)
        inner = _ScopeReader(element).read(is_process=False)
        self.flow_nodes.append(
            SubProcess(
                id=_required(element, "id"),
                name=element.get("name"),
                extensions=_extensions(element),
                flow_nodes=tuple(inner.flow_nodes),
                sequence_flows=tuple(inner.sequence_flows),
                annotations=tuple(inner.annotations),
                associations=tuple(inner.associations),
                loop=inner.loop,
            )
        )

    def _read_loop(self, element: etree._Element) -> None:
        condition = element.find(_bpmn("loopCondition"))
        self.loop = LoopCharacteristics(
            condition_text=(condition.text or "") if condition is not None else "",
            test_before=element.get("testBefore", "false") == "true",
            language=condition.get("language") if condition is not None else None,
        )

    def _read_sequence_flow(self, element: etree._Element) -> None:
        condition = element.find(_bpmn("conditionExpression"))
        self.sequence_flows.append(
            SequenceFlow(
                id=_required(element, "id"),
                source_id=_required(element, "sourceRef"),
                target_id=_required(element, "targetRef"),
                name=element.get("name"),
                condition_text=(condition.text or "") if condition is not None else None,
                condition_language=condition.get("language") if condition is not None else None,
                extensions=_extensions(element),
            )
        )

    def _read_annotation(self, element: etree._Element) -> None:
        text = element.find(_bpmn("text"))
        self.annotations.append(TextAnnotation(id=_required(element, "id"), text=(text.text or "") if text is not None else ""))

    def _read_association(self, element: etree._Element) -> None:
        self.associations.append(
            Association(
                id=_required(element, "id"),
                source_id=_required(element, "sourceRef"),
                target_id=_required(element, "targetRef"),
            )
        )

    def _read_group(self, element: etree._Element) -> None:
        self.groups.append(
            Group(
                id=_required(element, "id"),
                category_value_id=element.get("categoryValueRef", ""),
                extensions=_extensions(element),
            )
        )

    def _read_property(self, element: etree._Element) -> None:
        self.properties.append(
            ProcessProperty(
                id=_required(element, "id"),
                name=element.get("name", ""),
                item_ref=element.get("itemSubjectRef", ""),
                extensions=_extensions(element),
            )
        )


def _read_process(element: etree._Element) -> Process:
    scope = _ScopeReader(element).read(is_process=True)
    return Process(
        id=_required(element, "id"),
        name=element.get("name"),
        flow_nodes=tuple(scope.flow_nodes),
        sequence_flows=tuple(scope.sequence_flows),
        annotations=tuple(scope.annotations),
        associations=tuple(scope.associations),
        groups=tuple(scope.groups),
        properties=tuple(scope.properties),
        extensions=_extensions(element),
    )


def _read_category(element: etree._Element) -> Category:
    values = element.findall(_bpmn("categoryValue"))
    if not values:
        raise SchemaError(f"category[{element.get('id')}]", "category has no categoryValue")
    if len(values) > 1:
        logger.warning("Category %s has %d values; only the first is kept", element.get("id"), len(values))
    return Category(
        id=_required(element, "id"),
        value_id=_required(values[0], "id"),
        value_text=values[0].get("value", ""),
    )


def _coordinate(element: etree._Element, attribute: str) -> int:
    value = element.get(attribute) or "0"
    try:
        return int(round(float(value)))
    except (ValueError, OverflowError) as exc:
        raise DocumentSyntaxError(
            "XML", f"{_localname(element)} {attribute}={value!r} is not a finite number", element.sourceline
        ) from exc


def _read_diagram(element: etree._Element) -> Diagram:
    shapes: list[Shape] = []
    edges: list[Edge] = []
    for plane in element.iter(_q(BPMNDI_NS, "BPMNPlane")):
        for child in _children(plane):
            local = _localname(child)
            if local == "BPMNShape":
                bounds = child.find(_q(DC_NS, "Bounds"))
                if bounds is None:
                    continue
                shapes.append(
                    Shape(
                        element_id=_required(child, "bpmnElement"),
                        x=_coordinate(bounds, "x"),
                        y=_coordinate(bounds, "y"),
                        width=_coordinate(bounds, "width"),
                        height=_coordinate(bounds, "height"),
                    )
                )
            elif local == "BPMNEdge":
                waypoints = tuple(
                    (_coordinate(point, "x"), _coordinate(point, "y"))
                    for point in child.findall(_q(DI_NS, "waypoint"))
                )
                edges.append(Edge(element_id=_required(child, "bpmnElement"), waypoints=waypoints))
            else:
                logger.debug("Ignoring diagram element %s", local)
    return Diagram(shapes=tuple(shapes), edges=tuple(edges))


def parse_definitions(text: str | bytes) -> Definitions:
    """Parse a BPMN 2.0 XML document.

    Raises
    ------
    DocumentSyntaxError
        If ``text`` is not well-formed XML or a diagram coordinate is not a
        finite number.
    UnsupportedElementError
        For elements outside the mapped subset (lanes, message flows,
        intermediate or event-definition events, ...).
    """

    data = text.encode("utf-8") if isinstance(text, str) else text
    parser = etree.XMLParser(resolve_entities=False, no_network=True, remove_comments=True, huge_tree=False)
    try:
        root = etree.fromstring(data, parser)
    except etree.XMLSyntaxError as exc:
        raise DocumentSyntaxError("XML", exc.msg, exc.lineno, exc.offset) from exc

    if _namespace(root) != MODEL_NS or _localname(root) != "definitions":
        raise _unsupported(root)

    processes: list[Process] = []
    item_definitions: list[ItemDefinition] = []
    categories: list[Category] = []
    diagram: Diagram | None = None
    for child in _children(root):
        local = _localname(child)
        namespace = _namespace(child)
        if namespace == BPMNDI_NS and local == "BPMNDiagram":
            if diagram is None:
                diagram = _read_diagram(child)
            else:
                logger.warning("Ignoring additional BPMNDiagram on line %s", child.sourceline)
        elif namespace != MODEL_NS:
            raise _unsupported(child)
        elif local == "process":
            processes.append(_read_process(child))
        elif local == "itemDefinition":
            item_definitions.append(ItemDefinition(id=_required(child, "id"), structure_ref=child.get("structureRef", "")))
        elif local == "category":
            categories.append(_read_category(child))
        elif local in ("documentation", "extensionElements"):
            continue
        else:
            raise _unsupported(child)

    if not processes:
        raise SchemaError("/definitions", "document contains no process")

    definitions = Definitions(
        id=root.get("id"),
        target_namespace=root.get("targetNamespace", ""),
        process=processes[0],
        extra_processes=tuple(processes[1:]),
        item_definitions=tuple(item_definitions),
        categories=tuple(categories),
        diagram=diagram,
    )
    logger.info(
        "Parsed BPMN process %s with %d flow nodes",
        definitions.process.id,
        sum(1 for _ in iter_flow_nodes(definitions.process)),
    )
    return definitions


# --- Writing ---


def _foreign_namespaces(defs: Definitions) -> list[str]:
    bags: list[ExtensionBag] = []
    for process in (defs.process, *defs.extra_processes):
        bags.append(process.extensions)
        bags.extend(group.extensions for group in process.groups)
        bags.extend(prop.extensions for prop in process.properties)
        bags.extend(node.extensions for node in iter_flow_nodes(process))
        bags.extend(flow.extensions for flow in iter_sequence_flows(process))
    known = set(NSMAP.values())
    return sorted({namespace for bag in bags for namespace, _ in bag if namespace not in known})


class _Writer:
    def __init__(self, defs: Definitions):
        self.defs = defs
        self.nsmap = dict(NSMAP)
        for index, namespace in enumerate(_foreign_namespaces(defs), start=1):
            self.nsmap[f"ns{index}"] = namespace

    def element(self, parent: etree._Element, local: str, attributes: Iterable[tuple[str, str | None]] = (), namespace: str = MODEL_NS) -> etree._Element:
        child = etree.SubElement(parent, _q(namespace, local))
        for key, value in attributes:
            if value is not None:
                child.set(key, value)
        return child

    def extend(self, element: etree._Element, bag: ExtensionBag) -> None:
        for (namespace, local), value in bag.items():
            element.set(_q(namespace, local), value)

    def expression(self, parent: etree._Element, local: str, text: str, language: str | None) -> None:
        expression = self.element(parent, local, [(_q(XSI_NS, "type"), _FORMAL_EXPRESSION), ("language", language)])
        expression.text = text

    def write(self) -> etree._Element:
        defs = self.defs
        root = etree.Element(_bpmn("definitions"), nsmap=self.nsmap)
        if defs.id is not None:
            root.set("id", defs.id)
        root.set("targetNamespace", defs.target_namespace)

        for item in defs.item_definitions:
            self.element(root, "itemDefinition", [("id", item.id), ("structureRef", item.structure_ref)])
        for category in defs.categories:
            element = self.element(root, "category", [("id", category.id)])
            self.element(element, "categoryValue", [("id", category.value_id), ("value", category.value_text)])
        for process in (defs.process, *defs.extra_processes):
            self.write_process(root, process)
        if defs.diagram is not None:
            self.write_diagram(root, defs.diagram)
        return root

    def write_process(self, parent: etree._Element, process: Process) -> None:
        element = self.element(parent, "process", [("id", process.id), ("name", process.name), ("isExecutable", "false")])
        self.extend(element, process.extensions)
        for prop in process.properties:
            child = self.element(element, "property", [("id", prop.id), ("name", prop.name), ("itemSubjectRef", prop.item_ref)])
            self.extend(child, prop.extensions)
        self.write_scope(element, process)
        for group in process.groups:
            child = self.element(element, "group", [("id", group.id), ("categoryValueRef", group.category_value_id)])
            self.extend(child, group.extensions)

    def write_scope(self, element: etree._Element, scope: Process | SubProcess) -> None:
        for node in scope.flow_nodes:
            self.write_node(element, node)
        for flow in scope.sequence_flows:
            child = self.element(
                element,
                "sequenceFlow",
                [("id", flow.id), ("name", flow.name), ("sourceRef", flow.source_id), ("targetRef", flow.target_id)],
            )
            self.extend(child, flow.extensions)
            if flow.condition_text is not None:
                self.expression(child, "conditionExpression", flow.condition_text, flow.condition_language)
        for annotation in scope.annotations:
            child = self.element(element, "textAnnotation", [("id", annotation.id)])
            self.element(child, "text").text = annotation.text
        for association in scope.associations:
            self.element(
                element,
                "association",
                [("id", association.id), ("sourceRef", association.source_id), ("targetRef", association.target_id)],
            )

    def write_node(self, parent: etree._Element, node: FlowNode) -> None:
        attributes: list[tuple[str, str | None]] = [("id", node.id), ("name", node.name)]
        if isinstance(node, Task):
            local = _TASK_TAGS[node.task_kind]
        elif isinstance(node, CallActivity):
            local = "callActivity"
            attributes.append(("calledElement", node.called_element))
        elif isinstance(node, ExclusiveGateway):
            local = "exclusiveGateway"
            attributes.append(("gatewayDirection", node.direction.capitalize()))
            attributes.append(("default", node.default_flow))
        elif isinstance(node, ParallelGateway):
            local = "parallelGateway"
            attributes.append(("gatewayDirection", node.direction.capitalize()))
        elif isinstance(node, SubProcess):
            local = "subProcess"
        elif isinstance(node, Event):
            local = "startEvent" if node.position == "start" else "endEvent"
        else:
            raise TypeError(f"Cannot serialize flow node of type {type(node).__name__}")

        element = self.element(parent, local, attributes)
        self.extend(element, node.extensions)
        if isinstance(node, SubProcess):
            if node.loop is not None:
                loop = self.element(element, "standardLoopCharacteristics", [("testBefore", "true" if node.loop.test_before else "false")])
                self.expression(loop, "loopCondition", node.loop.condition_text, node.loop.language)
            self.write_scope(element, node)

    def write_diagram(self, parent: etree._Element, diagram: Diagram) -> None:
        process_id = self.defs.process.id
        root = self.element(parent, "BPMNDiagram", [("id", f"BPMNDiagram_{process_id}")], namespace=BPMNDI_NS)
        plane = self.element(root, "BPMNPlane", [("id", f"BPMNPlane_{process_id}"), ("bpmnElement", process_id)], namespace=BPMNDI_NS)
        sub_processes = {node.id for node in iter_flow_nodes(self.defs.process) if isinstance(node, SubProcess)}
        for shape in diagram.shapes:
            element = self.element(
                plane,
                "BPMNShape",
                [
                    ("id", f"{shape.element_id}_di"),
                    ("bpmnElement", shape.element_id),
                    ("isExpanded", "true" if shape.element_id in sub_processes else None),
                ],
                namespace=BPMNDI_NS,
            )
            self.element(
                element,
                "Bounds",
                [("x", str(shape.x)), ("y", str(shape.y)), ("width", str(shape.width)), ("height", str(shape.height))],
                namespace=DC_NS,
            )
        for edge in diagram.edges:
            element = self.element(plane, "BPMNEdge", [("id", f"{edge.element_id}_di"), ("bpmnElement", edge.element_id)], namespace=BPMNDI_NS)
            for x, y in edge.waypoints:
                self.element(element, "waypoint", [("x", str(x)), ("y", str(y))], namespace=DI_NS)


def serialize_definitions(defs: Definitions) -> str:
    """Write ``defs`` as a BPMN 2.0 XML document.

    Raises
    ------
    InvalidDocumentError
        If :func:`~cacao_bpmn.validation.check_well_formed` reports violations.
    SchemaError
        If a text or attribute holds characters XML cannot carry.
    """

    from cacao_bpmn.validation.bpmn_checks import check_well_formed

    violations = check_well_formed(defs)
    if violations:
        raise InvalidDocumentError(violations)

    try:
        root = _Writer(defs).write()
    except ValueError as exc:
        raise SchemaError(defs.id or "", f"cannot be written as XML: {exc}") from exc
    document = etree.tostring(root, xml_declaration=True, encoding="UTF-8", pretty_print=True)
    return document.decode("utf-8")


__all__ = ["NSMAP", "parse_definitions", "serialize_definitions"]
