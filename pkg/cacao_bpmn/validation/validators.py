"""
Conformance validation for CACAO 2.0 playbooks.

Checks are grouped the same way the conformance requirements are: document
metadata and versioning, identifiers, the workflow graph, per-step payloads,
and the auxiliary definitions (variables, agents, markings, signatures).
Every check returns :class:`Violation` values instead of raising, so a single
run reports every problem in a document.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import networkx as nx

from cacao_bpmn.cacao.model import (
    ActionPayload,
    AgentTarget,
    BRANCHING_KINDS,
    ParallelPayload,
    PLAYBOOK_TYPE_LABEL,
    Playbook,
    PlaybookActionPayload,
    SPEC_VERSION,
    SwitchConditionPayload,
    Variable,
)
from cacao_bpmn.utils.versioning import is_identifier, is_timestamp, is_variable_name, parse_timestamp

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Violation:
    """A single validation finding.

    ``path`` is a JSON-pointer-style location for CACAO documents and the
    offending element id for BPMN documents.
    """

    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} {self.path} {self.message}"


def json_pointer(*tokens: str | int) -> str:
    return "".join("/" + str(token).replace("~", "~0").replace("/", "~1") for token in tokens)


def sort_violations(violations: Iterable[Violation]) -> list[Violation]:
    return sorted(violations, key=lambda violation: (violation.path, violation.code, violation.message))


class PlaybookValidator:
    """Validation suite for a single :class:`Playbook`."""

    def __init__(self, pb: Playbook):
        self.pb = pb
        self.results: dict[str, list[Violation]] = {}

    def _step_path(self, step_id: str, *tokens: str | int) -> str:
        return json_pointer("workflow", step_id, *tokens)

    def _graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.pb.workflow)
        for step_id, step in self.pb.workflow.items():
            for _, target in step.links():
                if target in self.pb.workflow:
                    graph.add_edge(step_id, target)
        return graph

    # --- Metadata and versioning ---

    def check_type_label(self) -> list[Violation]:
        if self.pb.type_label == PLAYBOOK_TYPE_LABEL:
            return []
        return [Violation("invalid-type-label", "/type", f"expected '{PLAYBOOK_TYPE_LABEL}', found {self.pb.type_label!r}")]

    def check_spec_version(self) -> list[Violation]:
        if self.pb.spec_version == SPEC_VERSION:
            return []
        return [Violation("invalid-spec-version", "/spec_version", f"expected '{SPEC_VERSION}', found {self.pb.spec_version!r}")]

    def check_versioning_present(self) -> list[Violation]:
        """Check that id, name, created and modified are all filled in."""
        return [
            Violation("missing-versioning", json_pointer(prop), f"mandatory property '{prop}' is empty")
            for prop in ("id", "name", "created", "modified")
            if not getattr(self.pb, prop)
        ]

    def check_timestamps(self) -> list[Violation]:
        violations = [
            Violation("invalid-timestamp", json_pointer(prop), f"{value!r} is not an RFC 3339 timestamp")
            for prop in ("created", "modified")
            if (value := getattr(self.pb, prop)) and not is_timestamp(value)
        ]
        for step_id, step in self.pb.workflow.items():
            payload = step.payload
            if isinstance(payload, PlaybookActionPayload) and payload.playbook_version is not None:
                if not is_timestamp(payload.playbook_version):
                    violations.append(
                        Violation(
                            "invalid-timestamp",
                            self._step_path(step_id, "playbook_version"),
                            f"{payload.playbook_version!r} is not an RFC 3339 timestamp",
                        )
                    )
        return violations

    def check_versioning_order(self) -> list[Violation]:
        if not (is_timestamp(self.pb.created) and is_timestamp(self.pb.modified)):
            return []
        if parse_timestamp(self.pb.created) <= parse_timestamp(self.pb.modified):
            return []
        return [
            Violation(
                "versioning-order",
                "/modified",
                f"modified {self.pb.modified} precedes created {self.pb.created}",
            )
        ]

    # --- Identifiers ---

    def check_identifiers(self) -> list[Violation]:
        """Check that every identifier has the ``<object-type>--<uuid>`` shape."""
        pb = self.pb
        candidates: list[tuple[str, str, str | None]] = []
        if pb.id:
            candidates.append(("/id", pb.id, "playbook"))
        candidates.extend((self._step_path(step_id), step_id, None) for step_id in pb.workflow)
        for prop, table in (
            ("agent_definitions", pb.agent_definitions),
            ("target_definitions", pb.target_definitions),
            ("data_marking_definitions", pb.data_marking_definitions),
        ):
            candidates.extend((json_pointer(prop, key), key, None) for key in table or {})
        for key in pb.extension_definitions or {}:
            candidates.append((json_pointer("extension_definitions", key), key, "extension-definition"))
        for step_id, step in pb.workflow.items():
            if isinstance(step.payload, PlaybookActionPayload):
                candidates.append((self._step_path(step_id, "playbook_id"), step.payload.playbook_id, "playbook"))

        violations = []
        for path, value, object_type in candidates:
            if not is_identifier(value, object_type):
                shape = f"{object_type}--<uuid>" if object_type else "<object-type>--<uuid>"
                violations.append(Violation("invalid-identifier", path, f"{value!r} does not match {shape}"))
        return violations

    # --- Workflow graph ---

    def check_references(self) -> list[Violation]:
        violations = []
        if self.pb.workflow_start not in self.pb.workflow:
            violations.append(Violation("dangling-reference", "/workflow_start", "dangling reference: workflow_start"))
        for step_id, step in self.pb.workflow.items():
            for prop, target in step.links():
                if target not in self.pb.workflow:
                    violations.append(
                        Violation(
                            "dangling-reference",
                            self._step_path(step_id, *prop.split("/")),
                            f"dangling reference: {prop.split('/')[0]} -> {target!r}",
                        )
                    )
        known_markings = self.pb.data_marking_definitions or {}
        for index, marking_id in enumerate(self.pb.markings or ()):
            if marking_id not in known_markings:
                violations.append(
                    Violation("dangling-reference", json_pointer("markings", index), f"dangling reference: markings -> {marking_id!r}")
                )
        return violations

    def check_start_step(self) -> list[Violation]:
        violations = []
        start = self.pb.workflow.get(self.pb.workflow_start)
        if start is not None and start.kind != "start":
            violations.append(
                Violation("invalid-start", "/workflow_start", f"workflow_start names a {start.kind} step, not a start step")
            )
        start_ids = [step_id for step_id, step in self.pb.workflow.items() if step.kind == "start"]
        if len(start_ids) > 1:
            extras = sorted(step_id for step_id in start_ids if step_id != self.pb.workflow_start)
            if len(extras) == len(start_ids):
                extras = extras[1:]
            violations.extend(
                Violation("multiple-start", self._step_path(step_id), f"{len(start_ids)} start steps; only one is allowed")
                for step_id in extras
            )
        return violations

    def check_reachability(self) -> list[Violation]:
        if self.pb.workflow_start not in self.pb.workflow:
            return []
        graph = self._graph()
        reachable = nx.descendants(graph, self.pb.workflow_start) | {self.pb.workflow_start}
        return [
            Violation("unreachable-step", self._step_path(step_id), "step is not reachable from workflow_start")
            for step_id in self.pb.workflow
            if step_id not in reachable
        ]

    def check_chain_termination(self) -> list[Violation]:
        """Every chain ends at an end step or hands control back to a branching step."""
        violations = []
        for step_id, step in self.pb.workflow.items():
            if step.kind == "end" or step.kind in BRANCHING_KINDS:
                continue
            if step.on_completion is None and step.on_success is None and step.on_failure is None:
                violations.append(
                    Violation(
                        "unterminated-chain",
                        self._step_path(step_id),
                        f"{step.kind} step has no successor and is not an end step",
                    )
                )
        return violations

    def check_acyclic(self) -> list[Violation]:
        graph = self._graph()
        if nx.is_directed_acyclic_graph(graph):
            return []
        violations = []
        for component in nx.strongly_connected_components(graph):
            if len(component) > 1 or any(graph.has_edge(node, node) for node in component):
                first = min(component)
                violations.append(
                    Violation(
                        "cyclic-workflow",
                        self._step_path(first),
                        f"steps {sorted(component)} form a cycle; loops must use while-condition",
                    )
                )
        return violations

    # --- Steps ---

    def check_successor_properties(self) -> list[Violation]:
        violations = []
        for step_id, step in self.pb.workflow.items():
            has_outcome = step.on_success is not None or step.on_failure is not None
            if step.kind == "end" and (step.on_completion is not None or has_outcome):
                violations.append(
                    Violation("end-step-successor", self._step_path(step_id), "end steps must not have a successor")
                )
            elif step.on_completion is not None and has_outcome:
                violations.append(
                    Violation(
                        "mixed-successors",
                        self._step_path(step_id),
                        "on_completion cannot be combined with on_success/on_failure",
                    )
                )
        return violations

    def check_branch_payloads(self) -> list[Violation]:
        violations = []
        for step_id, step in self.pb.workflow.items():
            payload = step.payload
            if isinstance(payload, ParallelPayload) and len(set(payload.next_steps)) < 2:
                violations.append(
                    Violation(
                        "parallel-branch-count",
                        self._step_path(step_id, "next_steps"),
                        "parallel steps need at least two distinct next_steps",
                    )
                )
            elif isinstance(payload, SwitchConditionPayload):
                if not payload.cases:
                    violations.append(Violation("switch-empty", self._step_path(step_id, "cases"), "switch has no cases"))
                counts = Counter(label for label, _ in payload.cases)
                violations.extend(
                    Violation("duplicate-switch-case", self._step_path(step_id, "cases", label), f"case label {label!r} appears {count} times")
                    for label, count in sorted(counts.items())
                    if count > 1
                )
        return violations

    def check_actions(self) -> list[Violation]:
        """Check commands, agent and target references of action steps."""
        violations = []
        for step_id, step in self.pb.workflow.items():
            payload = step.payload
            if not isinstance(payload, ActionPayload):
                continue
            if not payload.commands:
                violations.append(Violation("empty-commands", self._step_path(step_id, "commands"), "action has no commands"))
            for index, command in enumerate(payload.commands):
                if not command.command_type or not command.content:
                    violations.append(
                        Violation(
                            "invalid-command",
                            self._step_path(step_id, "commands", index),
                            "command type and command text must be non-empty",
                        )
                    )
            if payload.agent not in self.pb.agents:
                violations.append(
                    Violation("dangling-agent", self._step_path(step_id, "agent"), f"unknown agent {payload.agent!r}")
                )
            for index, target in enumerate(payload.targets or ()):
                if target not in self.pb.targets:
                    violations.append(
                        Violation("dangling-target", self._step_path(step_id, "targets", index), f"unknown target {target!r}")
                    )
        return violations

    def check_durations(self) -> list[Violation]:
        return [
            Violation("invalid-duration", self._step_path(step_id, prop), f"{prop} must be a non-negative integer")
            for step_id, step in self.pb.workflow.items()
            for prop in ("delay", "timeout")
            if (value := getattr(step, prop)) is not None and value < 0
        ]

    # --- Definitions ---

    def check_agent_targets(self) -> list[Violation]:
        violations = []
        tables: tuple[tuple[str, Mapping[str, AgentTarget]], ...] = (
            ("agent_definitions", self.pb.agents),
            ("target_definitions", self.pb.targets),
        )
        for prop, table in tables:
            for key, record in table.items():
                if not record.at_type or not record.name:
                    violations.append(
                        Violation("invalid-agent-target", json_pointer(prop, key), "agent-target type and name must be non-empty")
                    )
        return violations

    def check_variable_names(self) -> list[Violation]:
        scopes: list[tuple[tuple[str, ...], Mapping[str, Variable]]] = [
            (("playbook_variables",), self.pb.playbook_variables or {})
        ]
        scopes.extend(
            (("workflow", step_id, "step_variables"), step.step_variables or {})
            for step_id, step in self.pb.workflow.items()
        )
        return [
            Violation("invalid-variable-name", json_pointer(*prefix, name), f"variable name {name!r} must look like __name__")
            for prefix, variables in scopes
            for name in variables
            if not is_variable_name(name)
        ]

    def check_markings(self) -> list[Violation]:
        return [
            Violation("empty-marking", json_pointer("data_marking_definitions", key), "data marking has no displayable text")
            for key, marking in (self.pb.data_marking_definitions or {}).items()
            if not marking.display_text
        ]

    def check_signatures(self) -> list[Violation]:
        return [
            Violation("missing-signee", json_pointer("signatures", index), "signature has no signee")
            for index, signature in enumerate(self.pb.signatures or ())
            if not signature.signee
        ]

    # --- Run All Validations ---

    def checks(self) -> list[Callable[[], list[Violation]]]:
        return [
            self.check_type_label,
            self.check_spec_version,
            self.check_versioning_present,
            self.check_timestamps,
            self.check_versioning_order,
            self.check_identifiers,
            self.check_references,
            self.check_start_step,
            self.check_reachability,
            self.check_chain_termination,
            self.check_acyclic,
            self.check_successor_properties,
            self.check_branch_payloads,
            self.check_actions,
            self.check_durations,
            self.check_agent_targets,
            self.check_variable_names,
            self.check_markings,
            self.check_signatures,
        ]

    def run_all(self) -> dict[str, list[Violation]]:
        """Run every check and keep the findings per check name."""
        for check in self.checks():
            logger.debug("Running: %s", check.__name__)
            self.results[check.__name__] = check()
        return self.results

    @property
    def violations(self) -> list[Violation]:
        return sort_violations(violation for found in self.results.values() for violation in found)


def validate(pb: Playbook) -> list[Violation]:
    """Return every conformance violation of ``pb``; empty when valid."""

    validator = PlaybookValidator(pb)
    validator.run_all()
    violations = validator.violations
    if violations:
        logger.info("Playbook %s has %d violation(s)", pb.id, len(violations))
    return violations


__all__ = ["PlaybookValidator", "Violation", "json_pointer", "sort_violations", "validate"]
