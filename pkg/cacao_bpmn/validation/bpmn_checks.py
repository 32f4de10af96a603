"""Structural well-formedness checks for BPMN definitions."""

from __future__ import annotations

import logging
import re
from collections import Counter, defaultdict
from typing import Callable, Iterator

import networkx as nx

from cacao_bpmn.bpmn.model import (
    Definitions,
    ExclusiveGateway,
    ParallelGateway,
    Process,
    SubProcess,
    walk_scopes,
)
from cacao_bpmn.validation.validators import Violation, sort_violations

logger = logging.getLogger(__name__)

_NCNAME = re.compile(r"^[^\W\d][\w.\-]*$")


class DefinitionsChecker:
    """Well-formedness suite for a :class:`Definitions` value."""

    def __init__(self, defs: Definitions):
        self.defs = defs
        self.results: dict[str, list[Violation]] = {}
        self.node_scope: dict[str, str] = {}
        self.flow_scope: dict[str, str] = {}
        for process in self.processes:
            for scope in walk_scopes(process):
                for node in scope.flow_nodes:
                    self.node_scope[node.id] = scope.id
                for flow in scope.sequence_flows:
                    self.flow_scope[flow.id] = scope.id

    @property
    def processes(self) -> tuple[Process, ...]:
        return (self.defs.process, *self.defs.extra_processes)

    def _scopes(self) -> Iterator[Process | SubProcess]:
        for process in self.processes:
            yield from walk_scopes(process)

    def _all_ids(self) -> Iterator[str]:
        defs = self.defs
        if defs.id is not None:
            yield defs.id
        for item in defs.item_definitions:
            yield item.id
        for category in defs.categories:
            yield category.id
            yield category.value_id
        for process in self.processes:
            yield process.id
            yield from (group.id for group in process.groups)
            yield from (prop.id for prop in process.properties)
        for scope in self._scopes():
            yield from (node.id for node in scope.flow_nodes)
            yield from (flow.id for flow in scope.sequence_flows)
            yield from (annotation.id for annotation in scope.annotations)
            yield from (association.id for association in scope.associations)

    # --- Identifiers ---

    def check_unique_ids(self) -> list[Violation]:
        counts = Counter(self._all_ids())
        return [
            Violation("duplicate-id", element_id, f"id is used {count} times")
            for element_id, count in sorted(counts.items())
            if count > 1
        ]

    def check_id_syntax(self) -> list[Violation]:
        return [
            Violation("invalid-id", element_id, "id is not a valid XML NCName")
            for element_id in sorted(set(self._all_ids()))
            if not _NCNAME.match(element_id)
        ]

    # --- References ---

    def check_sequence_flows(self) -> list[Violation]:
        violations = []
        for scope in self._scopes():
            for flow in scope.sequence_flows:
                for end, code in ((flow.source_id, "dangling-flow-source"), (flow.target_id, "dangling-flow-target")):
                    if end not in self.node_scope:
                        violations.append(Violation(code, flow.id, f"{end!r} is not a flow node"))
                    elif self.node_scope[end] != scope.id:
                        violations.append(
                            Violation("cross-scope-flow", flow.id, f"{end!r} lives in scope {self.node_scope[end]!r}, not {scope.id!r}")
                        )
        return violations

    def check_associations(self) -> list[Violation]:
        known = set(self._all_ids())
        return [
            Violation("dangling-association", association.id, f"{end!r} does not exist")
            for scope in self._scopes()
            for association in scope.associations
            for end in (association.source_id, association.target_id)
            if end not in known
        ]

    def check_artifact_references(self) -> list[Violation]:
        """Check group category values, property item definitions and gateway defaults."""
        violations = []
        values = {category.value_id for category in self.defs.categories}
        items = {item.id for item in self.defs.item_definitions}
        for process in self.processes:
            for group in process.groups:
                if group.category_value_id not in values:
                    violations.append(
                        Violation("dangling-category-value", group.id, f"unknown category value {group.category_value_id!r}")
                    )
            for prop in process.properties:
                if prop.item_ref not in items:
                    violations.append(Violation("dangling-item-ref", prop.id, f"unknown item definition {prop.item_ref!r}"))
        for scope in self._scopes():
            outgoing = defaultdict(set)
            for flow in scope.sequence_flows:
                outgoing[flow.source_id].add(flow.id)
            for node in scope.flow_nodes:
                if isinstance(node, ExclusiveGateway) and node.default_flow is not None:
                    if node.default_flow not in outgoing[node.id]:
                        violations.append(
                            Violation("dangling-default-flow", node.id, f"default flow {node.default_flow!r} does not leave this gateway")
                        )
        return violations

    # --- Flow structure ---

    def check_gateway_degree(self) -> list[Violation]:
        violations = []
        for scope in self._scopes():
            incoming: Counter[str] = Counter(flow.target_id for flow in scope.sequence_flows)
            outgoing: Counter[str] = Counter(flow.source_id for flow in scope.sequence_flows)
            for node in scope.flow_nodes:
                if not isinstance(node, (ExclusiveGateway, ParallelGateway)):
                    continue
                ins, outs = incoming[node.id], outgoing[node.id]
                if node.direction == "diverging":
                    ok = ins <= 1 and outs >= 2
                else:
                    ok = ins >= 2 and outs <= 1
                if not ok:
                    violations.append(
                        Violation("gateway-degree", node.id, f"{node.direction} gateway with {ins} incoming and {outs} outgoing flows")
                    )
        return violations

    def check_condition_placement(self) -> list[Violation]:
        violations = []
        for scope in self._scopes():
            splits = {
                node.id
                for node in scope.flow_nodes
                if isinstance(node, ExclusiveGateway) and node.direction == "diverging"
            }
            for flow in scope.sequence_flows:
                if flow.condition_text is not None and flow.source_id not in splits:
                    violations.append(
                        Violation("condition-placement", flow.id, "conditions are only allowed on flows leaving a diverging exclusive gateway")
                    )
        return violations

    def check_annotations(self) -> list[Violation]:
        return [
            Violation("empty-annotation", annotation.id, "text annotation is empty")
            for scope in self._scopes()
            for annotation in scope.annotations
            if not annotation.text
        ]

    def check_sub_processes(self) -> list[Violation]:
        violations = []
        for scope in self._scopes():
            if not isinstance(scope, SubProcess):
                continue
            targets = {flow.target_id for flow in scope.sequence_flows}
            sources = {flow.source_id for flow in scope.sequence_flows}
            node_ids = [node.id for node in scope.flow_nodes]
            entries = [node_id for node_id in node_ids if node_id not in targets]
            exits = [node_id for node_id in node_ids if node_id not in sources]
            if len(entries) != 1:
                violations.append(
                    Violation("subprocess-entry", scope.id, f"sub-process has {len(entries)} nodes without incoming flows, expected 1")
                )
            if not exits:
                violations.append(Violation("subprocess-exit", scope.id, "sub-process has no node without outgoing flows"))
            if len(entries) == 1:
                graph = nx.DiGraph()
                graph.add_nodes_from(node_ids)
                graph.add_edges_from((flow.source_id, flow.target_id) for flow in scope.sequence_flows)
                detached = sorted(set(node_ids) - nx.descendants(graph, entries[0]) - {entries[0]})
                if detached:
                    violations.append(
                        Violation("subprocess-connectivity", scope.id, f"nodes not reachable from the entry: {', '.join(detached)}")
                    )
        return violations

    # --- Diagram ---

    def check_diagram(self) -> list[Violation]:
        diagram = self.defs.diagram
        if diagram is None:
            return []
        known = set(self._all_ids())
        drawn = Counter(
            [shape.element_id for shape in diagram.shapes] + [edge.element_id for edge in diagram.edges]
        )
        violations = [
            Violation("dangling-diagram-element", element_id, "diagram element references no model element")
            for element_id in sorted(drawn)
            if element_id not in known
        ]
        required = sorted(set(self.node_scope) | set(self.flow_scope))
        for element_id in required:
            if drawn[element_id] != 1:
                violations.append(
                    Violation("diagram-coverage", element_id, f"element is drawn {drawn[element_id]} times, expected once")
                )
        violations.extend(
            Violation("diagram-coverage", element_id, f"element is drawn {count} times, expected once")
            for element_id, count in sorted(drawn.items())
            if count > 1 and element_id in known and element_id not in self.node_scope and element_id not in self.flow_scope
        )
        return violations

    # --- Run All Checks ---

    def checks(self) -> list[Callable[[], list[Violation]]]:
        return [
            self.check_unique_ids,
            self.check_id_syntax,
            self.check_sequence_flows,
            self.check_associations,
            self.check_artifact_references,
            self.check_gateway_degree,
            self.check_condition_placement,
            self.check_annotations,
            self.check_sub_processes,
            self.check_diagram,
        ]

    def run_all(self) -> dict[str, list[Violation]]:
        for check in self.checks():
            logger.debug("Running: %s", check.__name__)
            self.results[check.__name__] = check()
        return self.results

    @property
    def violations(self) -> list[Violation]:
        return sort_violations(violation for found in self.results.values() for violation in found)


def check_well_formed(defs: Definitions) -> list[Violation]:
    """Return every structural problem of ``defs``; empty when well formed."""

    checker = DefinitionsChecker(defs)
    checker.run_all()
    return checker.violations


__all__ = ["DefinitionsChecker", "check_well_formed"]
