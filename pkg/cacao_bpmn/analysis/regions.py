"""Single-entry/single-exit region detection over BPMN flow graphs.

A split (a diverging gateway, or an activity with several outgoing flows) is
paired with its immediate post-dominator. The pair is accepted as a region
only when the split dominates every node between the two and every flow into
the join starts inside that interior. Anything else is unstructured and
rejected.
"""

from __future__ import annotations

import logging
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Literal, TypeAlias

import networkx as nx

from cacao_bpmn.bpmn.model import (
    CallActivity,
    Event,
    ExclusiveGateway,
    FlowNode,
    ParallelGateway,
    Process,
    SequenceFlow,
    SubProcess,
    Task,
)
from cacao_bpmn.errors import UnstructuredFlowError

logger = logging.getLogger(__name__)

RegionKind: TypeAlias = Literal["sequence", "parallel", "conditional", "switch", "loop", "leaf", "outcome"]
SPLIT_KINDS: frozenset[str] = frozenset({"parallel", "conditional", "switch", "outcome"})
OUTCOME_EDGE_KINDS: frozenset[str] = frozenset({"success", "failure"})

_EXIT = "\x00exit"


@dataclass(frozen=True, slots=True)
class Region:
    """A node of the region tree.

    ``entry``/``exit`` are element ids: the split and its join for split
    regions (``exit`` is ``None`` when the branches have no own join), the
    sub-process for loops and sub-process boxes, the first/last node for
    sequences (both ``None`` for an empty branch). ``via_flow`` is the
    sequence flow entering a branch.
    """

    kind: RegionKind
    entry: str | None
    exit: str | None
    children: tuple[Region, ...] = ()
    gateways: tuple[str, ...] = ()
    via_flow: str | None = None

    @property
    def is_box(self) -> bool:
        return self.kind in SPLIT_KINDS and self.entry is not None and self.entry == self.exit


class _ScopeGraph:
    """Flow graph of one scope with dominator and post-dominator trees."""

    def __init__(self, scope: Process | SubProcess):
        self.scope = scope
        self.nodes: dict[str, FlowNode] = {node.id: node for node in scope.flow_nodes}
        self.outgoing: dict[str, list[SequenceFlow]] = defaultdict(list)
        self.graph = nx.DiGraph()

        events = {node_id for node_id, node in self.nodes.items() if isinstance(node, Event)}
        self.graph.add_nodes_from(node_id for node_id in self.nodes if node_id not in events)
        for flow in scope.sequence_flows:
            if flow.source_id in events or flow.target_id in events:
                continue
            self.outgoing[flow.source_id].append(flow)
            self.graph.add_edge(flow.source_id, flow.target_id)
        for event in sorted(events):
            preds = [flow for flow in scope.sequence_flows if flow.target_id == event and flow.source_id not in events]
            succs = [flow for flow in scope.sequence_flows if flow.source_id == event and flow.target_id not in events]
            for pred in preds:
                for succ in succs:
                    bypass = SequenceFlow(id=pred.id, source_id=pred.source_id, target_id=succ.target_id, name=pred.name, extensions=pred.extensions)
                    self.outgoing[pred.source_id].append(bypass)
                    self.graph.add_edge(pred.source_id, succ.target_id)
            logger.debug("Bypassing event %s in scope %s", event, scope.id)
        for flows in self.outgoing.values():
            flows.sort(key=lambda flow: flow.id)

        if not nx.is_directed_acyclic_graph(self.graph):
            cycle = nx.find_cycle(self.graph)
            raise UnstructuredFlowError(min(edge[0] for edge in cycle), "cyclic-flow", f"scope {scope.id} contains a cycle")

        sources = sorted(node for node, degree in self.graph.in_degree() if degree == 0)
        if len(sources) > 1:
            raise UnstructuredFlowError(sources[1], detail=f"scope {scope.id} has {len(sources)} entry nodes: {sources}")
        self.source = sources[0] if sources else None

        if self.source is not None:
            sinks = [node for node, degree in self.graph.out_degree() if degree == 0]
            extended = self.graph.copy()
            extended.add_edges_from((sink, _EXIT) for sink in sinks)
            self.idom = nx.immediate_dominators(extended, self.source)
            self.ipdom = nx.immediate_dominators(extended.reverse(copy=False), _EXIT)

    def successor(self, node_id: str) -> str:
        flows = self.outgoing.get(node_id, [])
        return flows[0].target_id if flows else _EXIT

    def dominates(self, dominator: str, node_id: str) -> bool:
        while node_id != dominator:
            parent = self.idom.get(node_id)
            if parent is None or parent == node_id:
                return False
            node_id = parent
        return True

    def interior(self, fork: str, stop: str) -> set[str]:
        found: set[str] = set()
        queue = deque(flow.target_id for flow in self.outgoing[fork])
        while queue:
            node_id = queue.popleft()
            if node_id in found or node_id in (stop, _EXIT):
                continue
            found.add(node_id)
            queue.extend(flow.target_id for flow in self.outgoing.get(node_id, []))
        return found


def _split_kind(node: FlowNode, flows: list[SequenceFlow]) -> RegionKind:
    if isinstance(node, ExclusiveGateway):
        return "conditional" if len(flows) == 2 else "switch"
    if isinstance(node, ParallelGateway):
        return "parallel"
    # plain flows out of an activity fork in parallel
    if any(flow.extensions.get_cacao("edge-kind") in OUTCOME_EDGE_KINDS for flow in flows):
        return "outcome"
    return "parallel"


def _join_matches(kind: RegionKind, join: FlowNode) -> bool:
    if kind == "parallel":
        return isinstance(join, ParallelGateway)
    return isinstance(join, ExclusiveGateway)


class _RegionBuilder:
    def __init__(self, scope: Process | SubProcess):
        self.graph = _ScopeGraph(scope)

    def build(self) -> Region:
        if self.graph.source is None:
            return Region("sequence", None, None)
        return self.sequence(self.graph.source, _EXIT, None)

    def sequence(self, start: str, stop: str, via_flow: str | None) -> Region:
        children: list[Region] = []
        node_id = start
        while node_id != stop and node_id != _EXIT:
            region, node_id = self.region_at(node_id, stop)
            children.append(region)
        entry = children[0].entry if children else None
        exit_ = children[-1].exit or children[-1].entry if children else None
        return Region("sequence", entry, exit_, tuple(children), via_flow=via_flow)

    def region_at(self, node_id: str, stop: str) -> tuple[Region, str]:
        graph = self.graph
        node = graph.nodes[node_id]
        flows = graph.outgoing.get(node_id, [])

        if len(flows) <= 1:
            if isinstance(node, (ExclusiveGateway, ParallelGateway)):
                raise UnstructuredFlowError(node_id, detail=f"gateway {node_id} is not paired with a matching split")
            return self.single(node), graph.successor(node_id)

        kind = _split_kind(node, flows)
        if isinstance(node, SubProcess):
            logger.debug("Sub-process %s has %d outgoing flows", node_id, len(flows))
        join = graph.ipdom.get(node_id, _EXIT)
        own_join = join not in (_EXIT, stop) and isinstance(graph.nodes[join], (ExclusiveGateway, ParallelGateway))
        if own_join and not _join_matches(kind, graph.nodes[join]):
            raise UnstructuredFlowError(node_id, "mixed-gateway-kinds", f"split {node_id} is joined by {join} of another gateway kind")

        interior = graph.interior(node_id, join)
        for inner in sorted(interior):
            if not graph.dominates(node_id, inner):
                raise UnstructuredFlowError(node_id, detail=f"branches of {node_id} are entered from outside at {inner}")
        if join not in (_EXIT, stop):
            outside = sorted(pred for pred in graph.graph.predecessors(join) if pred != node_id and pred not in interior)
            if outside:
                raise UnstructuredFlowError(node_id, detail=f"join {join} of {node_id} is also reached from {outside[0]}")

        branches = tuple(
            Region("sequence", None, None, via_flow=flow.id)
            if flow.target_id == join
            else self.sequence(flow.target_id, join, flow.id)
            for flow in flows
        )
        if own_join:
            region = Region(kind, node_id, join, branches, gateways=(join,))
            return region, graph.successor(join)
        region = Region(kind, node_id, None, branches)
        return region, join

    def single(self, node: FlowNode) -> Region:
        if isinstance(node, SubProcess):
            inner = _RegionBuilder(node).build()
            if node.loop is not None:
                return Region("loop", node.id, node.id, (inner,))
            if len(inner.children) == 1 and inner.children[0].kind in ("parallel", "conditional", "switch"):
                split = inner.children[0]
                gateways = tuple(element for element in (split.entry, *split.gateways) if element is not None)
                return Region(split.kind, node.id, node.id, split.children, gateways=gateways)
            return Region("sequence", node.id, node.id, inner.children)
        if isinstance(node, (Task, CallActivity)):
            return Region("leaf", node.id, node.id)
        raise UnstructuredFlowError(node.id, detail=f"unexpected {type(node).__name__} {node.id}")


def detect_regions(scope: Process | SubProcess) -> Region:
    """Return the region tree of a process or sub-process.

    Raises
    ------
    UnstructuredFlowError
        ``cyclic-flow`` for cycles, ``mixed-gateway-kinds`` when a split is
        closed by a join of the other gateway kind, ``unstructured-flow`` when
        a split has no single-entry/single-exit partner.
    """

    region = _RegionBuilder(scope).build()
    logger.debug("Detected %d top-level regions in %s", len(region.children), scope.id)
    return region


__all__ = ["Region", "RegionKind", "SPLIT_KINDS", "detect_regions"]
