"""Deterministic BPMN DI geometry.

Nodes of each scope are layered left to right by their longest-path distance
from the scope's entry; nodes sharing a layer are stacked by id. Sub-processes
are laid out recursively and sized around their content, annotations sit
above the node they describe, and process-level groups enclose everything
with growing padding.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace

import networkx as nx

from cacao_bpmn.bpmn.model import (
    Association,
    Definitions,
    Diagram,
    Edge,
    Event,
    ExclusiveGateway,
    FlowNode,
    ParallelGateway,
    Process,
    Shape,
    SubProcess,
    TextAnnotation,
)
from cacao_bpmn.errors import LayoutError

logger = logging.getLogger(__name__)

Point = tuple[int, int]


@dataclass(frozen=True, slots=True)
class LayoutConfig:
    """Sizes and spacing used by :func:`layout`."""

    task_size: tuple[int, int] = (100, 80)
    gateway_size: tuple[int, int] = (50, 50)
    event_size: tuple[int, int] = (36, 36)
    annotation_width: int = 160
    annotation_line_height: int = 18
    annotation_base_height: int = 20
    subprocess_padding: int = 40
    column_pitch: int = 180
    column_gap: int = 80
    row_pitch: int = 120
    annotation_gap: int = 20
    origin: Point = (60, 60)
    group_padding: int = 30

    def __post_init__(self) -> None:
        sizes = (*self.task_size, *self.gateway_size, *self.event_size, self.annotation_width)
        spacing = (
            self.annotation_line_height,
            self.annotation_base_height,
            self.subprocess_padding,
            self.column_gap,
            self.annotation_gap,
            self.group_padding,
        )
        if min(sizes) <= 0 or min(spacing) <= 0:
            raise ValueError("layout dimensions must be positive")
        widest = max(self.task_size[0], self.gateway_size[0], self.event_size[0])
        tallest = max(self.task_size[1], self.gateway_size[1], self.event_size[1])
        if self.column_pitch <= widest or self.row_pitch <= tallest:
            raise ValueError("column and row pitch must exceed the node sizes they space")

    @property
    def row_gap(self) -> int:
        return self.row_pitch - self.task_size[1]

    def annotation_height(self, annotation: TextAnnotation) -> int:
        lines = max(1, len(annotation.text.splitlines()))
        return lines * self.annotation_line_height + self.annotation_base_height


@dataclass(slots=True)
class _Block:
    """Shapes and edges of one scope, relative to the block's top-left corner."""

    width: int = 0
    height: int = 0
    shapes: list[Shape] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)

    def add(self, shape: Shape) -> Shape:
        self.shapes.append(shape)
        self.width = max(self.width, shape.right)
        self.height = max(self.height, shape.bottom)
        return shape


def _moved(shape: Shape, dx: int, dy: int) -> Shape:
    return replace(shape, x=shape.x + dx, y=shape.y + dy)


def _moved_edge(edge: Edge, dx: int, dy: int) -> Edge:
    return replace(edge, waypoints=tuple((x + dx, y + dy) for x, y in edge.waypoints))


def _flow_waypoints(source: Shape, target: Shape) -> tuple[Point, ...]:
    start = (source.right, source.y + source.height // 2)
    end = (target.x, target.y + target.height // 2)
    if start[1] == end[1]:
        return (start, end)
    middle = (start[0] + end[0]) // 2
    return (start, (middle, start[1]), (middle, end[1]), end)


def _association_waypoints(source: Shape, target: Shape) -> tuple[Point, ...]:
    return ((source.x + source.width // 2, source.y), (target.x + target.width // 2, target.bottom))


def _layers(scope: Process | SubProcess) -> dict[str, int]:
    graph = nx.DiGraph()
    graph.add_nodes_from(node.id for node in scope.flow_nodes)
    graph.add_edges_from((flow.source_id, flow.target_id) for flow in scope.sequence_flows)
    if not nx.is_directed_acyclic_graph(graph):
        raise LayoutError(f"scope {scope.id} contains a cycle and cannot be layered")
    layer: dict[str, int] = {}
    for node_id in nx.lexicographical_topological_sort(graph):
        layer[node_id] = max((layer[pred] + 1 for pred in graph.predecessors(node_id)), default=0)
    return layer


class _ScopeLayout:
    def __init__(self, cfg: LayoutConfig, skip: frozenset[str] = frozenset()):
        self.cfg = cfg
        self.skip = skip

    def node_size(self, node: FlowNode, inner: _Block | None) -> tuple[int, int]:
        cfg = self.cfg
        if inner is not None:
            padding = 2 * cfg.subprocess_padding
            return max(inner.width + padding, cfg.task_size[0]), max(inner.height + padding, cfg.task_size[1])
        if isinstance(node, (ExclusiveGateway, ParallelGateway)):
            return cfg.gateway_size
        if isinstance(node, Event):
            return cfg.event_size
        return cfg.task_size

    def build(self, scope: Process | SubProcess) -> _Block:
        cfg = self.cfg
        layer = _layers(scope)
        nodes = {node.id: node for node in scope.flow_nodes}
        annotations = {annotation.id: annotation for annotation in scope.annotations if annotation.id not in self.skip}

        attached: dict[str, list[TextAnnotation]] = defaultdict(list)
        for association in scope.associations:
            if association.source_id in nodes and association.target_id in annotations:
                attached[association.source_id].append(annotations[association.target_id])
        placed_annotations = {annotation.id for notes in attached.values() for annotation in notes}

        inner = {
            node_id: _ScopeLayout(cfg).build(node)
            for node_id, node in nodes.items()
            if isinstance(node, SubProcess)
        }
        size = {node_id: self.node_size(node, inner.get(node_id)) for node_id, node in nodes.items()}

        columns: dict[int, list[str]] = defaultdict(list)
        for node_id in sorted(nodes):
            columns[layer[node_id]].append(node_id)
        row = {node_id: index for members in columns.values() for index, node_id in enumerate(members)}

        column_x: dict[int, int] = {}
        x = 0
        for index in sorted(columns):
            column_x[index] = x
            widest = max(
                max(size[node_id][0], cfg.annotation_width if attached[node_id] else 0) for node_id in columns[index]
            )
            x += max(cfg.column_pitch, widest + cfg.column_gap)

        band: dict[int, int] = defaultdict(int)
        content: dict[int, int] = defaultdict(int)
        for node_id, index in row.items():
            stack = sum(cfg.annotation_height(annotation) + cfg.annotation_gap for annotation in attached[node_id])
            band[index] = max(band[index], stack)
            content[index] = max(content[index], size[node_id][1])
        row_y: dict[int, int] = {}
        y = 0
        for index in sorted(content):
            row_y[index] = y
            y += max(cfg.row_pitch, band[index] + content[index] + cfg.row_gap)

        block = _Block()
        shapes: dict[str, Shape] = {}
        for node_id in sorted(nodes):
            width, height = size[node_id]
            index = row[node_id]
            top = row_y[index] + band[index] + (content[index] - height) // 2
            shapes[node_id] = block.add(Shape(element_id=node_id, x=column_x[layer[node_id]], y=top, width=width, height=height))
            if node_id in inner:
                offset = cfg.subprocess_padding
                block.shapes.extend(_moved(shape, shapes[node_id].x + offset, top + offset) for shape in inner[node_id].shapes)
                block.edges.extend(_moved_edge(edge, shapes[node_id].x + offset, top + offset) for edge in inner[node_id].edges)

            bottom = top - cfg.annotation_gap
            for annotation in reversed(sorted(attached[node_id], key=lambda note: note.id)):
                height = cfg.annotation_height(annotation)
                shapes[annotation.id] = block.add(
                    Shape(element_id=annotation.id, x=shapes[node_id].x, y=bottom - height, width=cfg.annotation_width, height=height)
                )
                bottom -= height + cfg.annotation_gap

        loose = sorted(annotation_id for annotation_id in annotations if annotation_id not in placed_annotations)
        for position, annotation_id in enumerate(loose):
            annotation = annotations[annotation_id]
            shapes[annotation_id] = block.add(
                Shape(
                    element_id=annotation_id,
                    x=position * (cfg.annotation_width + cfg.annotation_gap),
                    y=y,
                    width=cfg.annotation_width,
                    height=cfg.annotation_height(annotation),
                )
            )

        for flow in scope.sequence_flows:
            block.edges.append(Edge(element_id=flow.id, waypoints=_flow_waypoints(shapes[flow.source_id], shapes[flow.target_id])))
        for association in scope.associations:
            source, target = shapes.get(association.source_id), shapes.get(association.target_id)
            if source is not None and target is not None:
                block.edges.append(Edge(element_id=association.id, waypoints=_association_waypoints(source, target)))
        return block


def _layout_process(process: Process, cfg: LayoutConfig, top: int) -> tuple[list[Shape], list[Edge]]:
    group_ids = {group.id for group in process.groups}
    group_notes: dict[str, list[tuple[Association, TextAnnotation]]] = defaultdict(list)
    annotations = {annotation.id: annotation for annotation in process.annotations}
    for association in process.associations:
        if association.source_id in group_ids and association.target_id in annotations:
            group_notes[association.source_id].append((association, annotations[association.target_id]))
    skip = frozenset(annotation.id for notes in group_notes.values() for _, annotation in notes)

    block = _ScopeLayout(cfg, skip).build(process)
    x0, y0 = cfg.origin[0], top
    shapes = [_moved(shape, x0, y0) for shape in block.shapes]
    edges = [_moved_edge(edge, x0, y0) for edge in block.edges]

    outer: Shape | None = None
    group_shapes: dict[str, Shape] = {}
    for level, group in enumerate(sorted(process.groups, key=lambda group: group.id), start=1):
        pad = level * cfg.group_padding
        outer = Shape(element_id=group.id, x=x0 - pad, y=y0 - pad, width=block.width + 2 * pad, height=block.height + 2 * pad)
        group_shapes[group.id] = outer
    shapes.extend(group_shapes.values())

    if outer is not None:
        notes = [note for group_id in sorted(group_notes) for note in sorted(group_notes[group_id], key=lambda note: note[1].id)]
        tallest = max((cfg.annotation_height(annotation) for _, annotation in notes), default=0)
        for position, (association, annotation) in enumerate(notes):
            height = cfg.annotation_height(annotation)
            shape = Shape(
                element_id=annotation.id,
                x=outer.x + position * (cfg.annotation_width + cfg.annotation_gap),
                y=outer.y - cfg.annotation_gap - tallest + (tallest - height),
                width=cfg.annotation_width,
                height=height,
            )
            shapes.append(shape)
            edges.append(
                Edge(element_id=association.id, waypoints=_association_waypoints(group_shapes[association.source_id], shape))
            )

    dx = max(0, -min((shape.x for shape in shapes), default=0))
    dy = max(0, -min((shape.y for shape in shapes), default=0))
    if dx or dy:
        logger.debug("Shifting process %s by (%d, %d) to keep coordinates non-negative", process.id, dx, dy)
        shapes = [_moved(shape, dx, dy) for shape in shapes]
        edges = [_moved_edge(edge, dx, dy) for edge in edges]
    return shapes, edges


def layout(defs: Definitions, cfg: LayoutConfig | None = None) -> Definitions:
    """Return ``defs`` with a complete diagram.

    Existing shapes and edges are kept as they are; only elements without
    geometry receive computed positions.

    Raises
    ------
    LayoutError
        If the model is not well formed or a scope contains a cycle.
    """

    from cacao_bpmn.validation.bpmn_checks import check_well_formed

    cfg = cfg or LayoutConfig()
    violations = check_well_formed(replace(defs, diagram=None))
    if violations:
        raise LayoutError(f"cannot lay out a malformed model: {violations[0]}")

    shapes: list[Shape] = []
    edges: list[Edge] = []
    top = cfg.origin[1]
    for process in (defs.process, *defs.extra_processes):
        process_shapes, process_edges = _layout_process(process, cfg, top)
        shapes.extend(process_shapes)
        edges.extend(process_edges)
        top = max((shape.bottom for shape in shapes), default=top) + cfg.row_pitch

    if defs.diagram is not None:
        known_shapes = {shape.element_id for shape in defs.diagram.shapes}
        known_edges = {edge.element_id for edge in defs.diagram.edges}
        shapes = [*defs.diagram.shapes, *(shape for shape in shapes if shape.element_id not in known_shapes)]
        edges = [*defs.diagram.edges, *(edge for edge in edges if edge.element_id not in known_edges)]

    logger.info("Laid out %d shapes and %d edges for %s", len(shapes), len(edges), defs.process.id)
    return replace(defs, diagram=Diagram(shapes=tuple(shapes), edges=tuple(edges)))


__all__ = ["LayoutConfig", "layout"]
