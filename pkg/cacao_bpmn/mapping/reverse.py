"""Reverse mapping: BPMN definitions back to a CACAO playbook.

The region tree from :func:`~cacao_bpmn.analysis.regions.detect_regions` is
walked back to front, so every step is built once its successor is known.
Strict mode rebuilds the exact playbook from the CACAO extension attributes the
forward mapper wrote; best-effort mode derives a valid playbook from plain
BPMN, synthesizing identifiers, agents and start/end steps.
"""

from __future__ import annotations

import json
import logging
import re
import uuid
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import networkx as nx

from cacao_bpmn.analysis.regions import Region, detect_regions
from cacao_bpmn.bpmn.model import (
    CallActivity,
    Definitions,
    Event,
    ExtensionBag,
    FlowNode,
    SequenceFlow,
    SubProcess,
    Task,
    is_synthesized,
    iter_flow_nodes,
    iter_sequence_flows,
)
from cacao_bpmn.cacao.codec import (
    agent_target_from_dict,
    command_from_dict,
    data_marking_from_dict,
    extension_definition_from_dict,
    signature_from_dict,
    variable_from_dict,
    variables_from_dict,
)
from cacao_bpmn.cacao.model import (
    PLAYBOOK_TYPE_LABEL,
    SPEC_VERSION,
    ActionPayload,
    AgentTarget,
    Command,
    IfConditionPayload,
    ParallelPayload,
    Playbook,
    PlaybookActionPayload,
    SwitchConditionPayload,
    Variable,
    WhileConditionPayload,
    WorkflowStep,
)
from cacao_bpmn.errors import ImportMetadataError, InvalidDocumentError, MappingError
from cacao_bpmn.utils.config import Config, ImportMode
from cacao_bpmn.utils.versioning import is_identifier, is_variable_name, make_identifier
from cacao_bpmn.validation.validators import validate

logger = logging.getLogger(__name__)

_LEAF_KINDS = frozenset({"start", "end", "action", "playbook-action"})
_REGION_STEP_KINDS: dict[str, frozenset[str]] = {
    "parallel": frozenset({"parallel"}),
    "conditional": frozenset({"if-condition", "switch-condition"}),
    "switch": frozenset({"if-condition", "switch-condition"}),
}


def _fixed_clock() -> str:
    return Config.IMPORT_TIMESTAMP


@dataclass(frozen=True, slots=True)
class ImportPolicy:
    """How :func:`map_to_cacao` treats its input.

    ``clock`` supplies created/modified timestamps in best-effort mode; the
    default returns ``Config.IMPORT_TIMESTAMP`` so repeated imports are
    identical.
    """

    mode: ImportMode = field(default_factory=lambda: Config.IMPORT_MODE)
    id_synthesis_namespace: uuid.UUID = field(default_factory=lambda: Config.ID_NAMESPACE)
    clock: Callable[[], str] = _fixed_clock

    def __post_init__(self) -> None:
        if self.mode not in ("strict", "best-effort"):
            raise ValueError(f"Unknown import mode: {self.mode!r}")


class _Importer(ABC):
    """Shared region walk; subclasses decide how nodes become steps."""

    def __init__(self, defs: Definitions, policy: ImportPolicy):
        self.defs = defs
        self.process = defs.process
        self.policy = policy
        self.steps: dict[str, WorkflowStep] = {}
        self.nodes: dict[str, FlowNode] = {node.id: node for node in iter_flow_nodes(self.process)}
        self.flows: dict[str, SequenceFlow] = {flow.id: flow for flow in iter_sequence_flows(self.process)}
        self.outgoing: dict[str, list[SequenceFlow]] = {}
        for flow in sorted(self.flows.values(), key=lambda flow: flow.id):
            self.outgoing.setdefault(flow.source_id, []).append(flow)

    # --- Region walk ---

    def emit_sequence(self, region: Region, follow: str | None) -> str | None:
        """Emit the steps of a sequence region; return its first step id."""

        for child in reversed(region.children):
            follow = self.emit(child, follow)
        return follow

    def emit(self, region: Region, follow: str | None) -> str | None:
        if region.kind == "leaf":
            return self.leaf(self.nodes[region.entry], follow)
        if region.kind == "loop":
            return self.loop(self.nodes[region.entry], region.children[0], follow)
        if region.kind == "outcome":
            return self.outcome(region, follow)
        if region.kind == "sequence":
            return self.flatten(region, follow)
        return self.split(region, follow)

    def add(self, step_id: str, step: WorkflowStep) -> str:
        self.steps[step_id] = step
        return step_id

    def branch_flow(self, branch: Region) -> SequenceFlow:
        return self.flows[branch.via_flow]

    def join_of(self, region: Region) -> str | None:
        """The converging gateway closing a split region, if it has one."""

        return region.gateways[-1] if region.gateways else None

    def closing_flow(self, region: Region, branch: Region) -> SequenceFlow | None:
        """The flow that leaves ``branch`` for the join of ``region``."""

        if not branch.children:
            return self.branch_flow(branch)
        join = self.join_of(region)
        return next((flow for flow in self.outgoing.get(branch.exit, []) if flow.target_id == join), None)

    # --- Hooks ---

    @abstractmethod
    def leaf(self, node: FlowNode, follow: str | None) -> str: ...

    @abstractmethod
    def loop(self, node: FlowNode, body: Region, follow: str | None) -> str: ...

    @abstractmethod
    def outcome(self, region: Region, follow: str | None) -> str: ...

    @abstractmethod
    def flatten(self, region: Region, follow: str | None) -> str | None: ...

    @abstractmethod
    def split(self, region: Region, follow: str | None) -> str: ...

    @abstractmethod
    def branch_follow(self, region: Region, branch: Region, follow: str | None) -> str | None:
        """The step a branch of ``region`` continues with once it is done."""

    @abstractmethod
    def run(self) -> Playbook: ...


# --- Strict ---


class _StrictImporter(_Importer):
    def ext(self, element_id: str, bag: ExtensionBag, local: str, *, required: bool = False) -> str | None:
        value = bag.get_cacao(local)
        if value is None and required:
            raise ImportMetadataError(f"cacao:{local}", element_id)
        return value

    def ext_json(self, element_id: str, bag: ExtensionBag, local: str, *, required: bool = False) -> Any:
        raw = self.ext(element_id, bag, local, required=required)
        if raw is None:
            return None
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ImportMetadataError(f"cacao:{local}", element_id, f"corrupt cacao:{local} on {element_id}: {exc.msg}") from exc

    def ext_int(self, element_id: str, bag: ExtensionBag, local: str) -> int | None:
        raw = self.ext(element_id, bag, local)
        if raw is None:
            return None
        try:
            return int(raw)
        except ValueError as exc:
            raise ImportMetadataError(f"cacao:{local}", element_id, f"cacao:{local} on {element_id} is not an integer") from exc

    def decode(self, element_id: str, convert: Callable[[], Any], local: str) -> Any:
        try:
            return convert()
        except (ValueError, TypeError, AttributeError) as exc:
            raise ImportMetadataError(f"cacao:{local}", element_id, f"corrupt cacao:{local} on {element_id}: {exc}") from exc

    def common(self, node: FlowNode, kinds: Iterable[str]) -> dict[str, Any]:
        bag = node.extensions
        kind = self.ext(node.id, bag, "step-type", required=True)
        allowed = frozenset(kinds)
        if kind not in allowed:
            raise ImportMetadataError("cacao:step-type", node.id, f"{node.id} is a {kind} step where {sorted(allowed)} is expected")
        variables = self.ext_json(node.id, bag, "step-variables")
        other = self.ext_json(node.id, bag, "other-properties")
        return {
            "kind": kind,
            "name": bag.get_cacao("name", node.name),
            "description": self.ext(node.id, bag, "description"),
            "delay": self.ext_int(node.id, bag, "delay"),
            "timeout": self.ext_int(node.id, bag, "timeout"),
            "step_variables": self.decode(node.id, lambda: variables_from_dict(variables), "step-variables") if variables is not None else None,
            "step_extensions": self.ext_json(node.id, bag, "step-extensions"),
            "other_properties": other or {},
        }

    def successor(self, fields: dict[str, Any], flows: list[SequenceFlow], follow: str | None) -> None:
        for flow in flows:
            kind = flow.extensions.get_cacao("edge-kind")
            if kind is None:
                continue
            if kind not in ("completion", "success", "failure"):
                raise ImportMetadataError("cacao:edge-kind", flow.id, f"unknown edge kind {kind!r} on {flow.id}")
            if follow is None:
                raise ImportMetadataError("cacao:edge-kind", flow.id, f"flow {flow.id} has an edge kind but leads to no step")
            fields[f"on_{kind}"] = follow

    def leaf(self, node: FlowNode, follow: str | None) -> str:
        fields = self.common(node, _LEAF_KINDS)
        fields["payload"] = self.leaf_payload(node, fields["kind"])
        self.successor(fields, self.outgoing.get(node.id, []), follow)
        return self.add(node.id, WorkflowStep(**fields))

    def leaf_payload(self, node: FlowNode, kind: str) -> ActionPayload | PlaybookActionPayload | None:
        bag = node.extensions
        if kind == "action":
            commands = self.ext_json(node.id, bag, "commands", required=True)
            targets = self.ext_json(node.id, bag, "targets")
            return ActionPayload(
                commands=self.decode(node.id, lambda: tuple(command_from_dict(command) for command in commands), "commands"),
                agent=self.ext(node.id, bag, "agent", required=True),
                targets=tuple(targets) if targets is not None else None,
            )
        if kind == "playbook-action":
            if not isinstance(node, CallActivity):
                raise ImportMetadataError("cacao:step-type", node.id, f"playbook-action {node.id} is not a call activity")
            return PlaybookActionPayload(playbook_id=node.called_element, playbook_version=self.ext(node.id, bag, "playbook-version"))
        return None

    def loop(self, node: FlowNode, body: Region, follow: str | None) -> str:
        fields = self.common(node, {"while-condition"})
        on_true = self.emit_sequence(body, None)
        if on_true is None:
            raise ImportMetadataError("cacao:step-type", node.id, f"while-condition {node.id} has an empty body")
        fields["payload"] = WhileConditionPayload(condition=self.ext(node.id, node.extensions, "condition", required=True), on_true=on_true)
        self.successor(fields, self.outgoing.get(node.id, []), follow)
        return self.add(node.id, WorkflowStep(**fields))

    def outcome(self, region: Region, follow: str | None) -> str:
        node = self.nodes[region.entry]
        fields = self.common(node, _LEAF_KINDS)
        fields["payload"] = self.leaf_payload(node, fields["kind"])
        self.require_join(region, node, f"success/failure flows of {node.id} have no synthesized join")
        for branch in region.children:
            flow = self.branch_flow(branch)
            kind = flow.extensions.get_cacao("edge-kind")
            if kind not in ("success", "failure"):
                raise ImportMetadataError("cacao:edge-kind", flow.id, f"outcome flow {flow.id} is not tagged success or failure")
            fields[f"on_{kind}"] = self.emit_sequence(branch, self.branch_follow(region, branch, follow))
        return self.add(node.id, WorkflowStep(**fields))

    def require_join(self, region: Region, node: FlowNode, message: str) -> None:
        join = self.join_of(region)
        if join is None or not is_synthesized(self.nodes[join]):
            raise ImportMetadataError("cacao:synthesized", node.id, message)

    def branch_follow(self, region: Region, branch: Region, follow: str | None) -> str | None:
        # a branch closed by a shared end step names it on its join-bound flow
        flow = self.closing_flow(region, branch)
        target = flow.extensions.get_cacao("target-step") if flow is not None else None
        return target if target is not None else follow

    def flatten(self, region: Region, follow: str | None) -> str | None:
        raise ImportMetadataError("cacao:step-type", region.entry, f"sub-process {region.entry} encodes no CACAO construct")

    def split(self, region: Region, follow: str | None) -> str:
        node = self.nodes[region.entry]
        fields = self.common(node, _REGION_STEP_KINDS[region.kind])
        self.require_join(region, node, f"split {node.id} has no synthesized join")
        kind = fields["kind"]
        bag = node.extensions

        def entry_of(branch: Region) -> str | None:
            return self.emit_sequence(branch, self.branch_follow(region, branch, None))

        if kind == "parallel":
            entries = [entry_of(branch) for branch in region.children]
            next_steps = self.ext_json(node.id, bag, "next-steps", required=True)
            if not isinstance(next_steps, list) or sorted(next_steps) != sorted(entry for entry in entries if entry is not None):
                raise ImportMetadataError("cacao:next-steps", node.id, f"cacao:next-steps on {node.id} does not match its branches")
            fields["payload"] = ParallelPayload(next_steps=tuple(next_steps))
        elif kind == "if-condition":
            named = {self.branch_flow(branch).name: branch for branch in region.children}
            if "true" not in named:
                raise ImportMetadataError("cacao:step-type", node.id, f"if-condition {node.id} has no 'true' flow")
            on_true = entry_of(named["true"])
            on_false = entry_of(named["false"]) if "false" in named else None
            fields["payload"] = IfConditionPayload(
                condition=self.ext(node.id, bag, "condition", required=True), on_true=on_true, on_false=on_false
            )
        else:
            cases = []
            for branch in region.children:
                flow = self.branch_flow(branch)
                if flow.extensions.get_cacao("synthesized") == "default":
                    continue
                label = flow.extensions.get_cacao("name", flow.name)
                if label is None:
                    raise ImportMetadataError("name", flow.id, f"switch case flow {flow.id} has no label")
                cases.append((label, entry_of(branch)))
            fields["payload"] = SwitchConditionPayload(switch=self.ext(node.id, bag, "switch", required=True), cases=tuple(cases))

        exit_node = region.entry if region.is_box else region.exit
        self.successor(fields, self.outgoing.get(exit_node, []), follow)
        return self.add(node.id, WorkflowStep(**fields))

    def variables(self) -> dict[str, Variable] | None:
        items = {item.id: item for item in self.defs.item_definitions}
        if self.process.extensions.get_cacao("playbook-variables") is None and not self.process.properties:
            return None
        variables = {}
        for prop in self.process.properties:
            bag = prop.extensions
            record: dict[str, Any] = dict(self.ext_json(prop.id, bag, "other-properties") or {})
            structure = items[prop.item_ref].structure_ref if prop.item_ref in items else ""
            record["type"] = bag.get_cacao("type", structure)
            for local in ("description", "value"):
                if (value := bag.get_cacao(local)) is not None:
                    record[local] = value
            for local in ("constant", "external"):
                if (value := bag.get_cacao(local)) is not None:
                    record[local] = value == "true"
            variables[prop.name] = self.decode(prop.id, lambda: variable_from_dict(record), "other-properties")
        return variables

    def run(self) -> Playbook:
        process = self.process
        if self.defs.extra_processes:
            raise ImportMetadataError("process", self.defs.extra_processes[0].id, "strict import accepts exactly one process")
        events = sorted(node.id for node in self.nodes.values() if isinstance(node, Event))
        if events:
            raise ImportMetadataError("event", events[0], f"strict import does not accept BPMN events ({events[0]})")
        bag = process.extensions
        spec_version = self.ext(process.id, bag, "spec-version", required=True)

        top = detect_regions(process)
        workflow_start = self.emit_sequence(top, None)
        if workflow_start is None:
            raise ImportMetadataError("cacao:step-type", process.id, "process contains no steps")

        def table(local: str, convert: Callable[..., Any]) -> dict | None:
            records = self.ext_json(process.id, bag, local)
            if records is None:
                return None
            return self.decode(process.id, lambda: {key: convert(record) for key, record in records.items()}, local)

        markings = self.ext_json(process.id, bag, "markings")
        signatures = self.ext_json(process.id, bag, "signatures")
        extension_definitions = self.ext_json(process.id, bag, "extension-definitions")
        return Playbook(
            type_label=PLAYBOOK_TYPE_LABEL,
            spec_version=spec_version,
            id=process.id,
            name=bag.get_cacao("name", process.name) or "",
            description=self.ext(process.id, bag, "description"),
            created=self.ext(process.id, bag, "created", required=True),
            modified=self.ext(process.id, bag, "modified", required=True),
            workflow_start=workflow_start,
            workflow=self.steps,
            playbook_variables=self.variables(),
            agent_definitions=table("agent-definitions", agent_target_from_dict),
            target_definitions=table("target-definitions", agent_target_from_dict),
            data_marking_definitions=table("data-marking-definitions", data_marking_from_dict),
            markings=tuple(markings) if markings is not None else None,
            extension_definitions=self.decode(
                process.id,
                lambda: {key: extension_definition_from_dict(record, key=key) for key, record in extension_definitions.items()},
                "extension-definitions",
            )
            if extension_definitions is not None
            else None,
            signatures=self.decode(process.id, lambda: tuple(signature_from_dict(record) for record in signatures), "signatures")
            if signatures is not None
            else None,
            other_properties=self.ext_json(process.id, bag, "other-properties") or {},
        )


# --- Best effort ---


class _BestEffortImporter(_Importer):
    def __init__(self, defs: Definitions, policy: ImportPolicy):
        super().__init__(defs, policy)
        self.agents: dict[str, AgentTarget] = {}

    def make_id(self, object_type: str, element_id: str, role: str) -> str:
        return make_identifier(object_type, self.policy.id_synthesis_namespace, f"{self.process.id}/{element_id}/{role}")

    def end_step(self, element_id: str) -> str:
        step_id = self.make_id("end", element_id, "end")
        return self.add(step_id, WorkflowStep(kind="end", name="End"))

    def agent_for(self, node: FlowNode) -> str:
        at_type, name = ("http-api", "Automation API") if isinstance(node, Task) and node.task_kind == "service" else ("individual", "Analyst")
        agent_id = self.make_id(at_type, at_type, "agent")
        self.agents.setdefault(agent_id, AgentTarget(at_type=at_type, name=name))
        return agent_id

    def leaf(self, node: FlowNode, follow: str | None) -> str:
        return self.task_step(node, {"on_completion": follow})

    def task_step(self, node: FlowNode, links: dict[str, str | None]) -> str:
        if isinstance(node, CallActivity):
            playbook_id = node.called_element
            if not is_identifier(playbook_id, "playbook"):
                playbook_id = self.make_id("playbook", node.id, "called-element")
            step_id = self.make_id("playbook-action", node.id, "step")
            payload: Any = PlaybookActionPayload(playbook_id=playbook_id)
            kind = "playbook-action"
        else:
            step_id = self.make_id("action", node.id, "step")
            payload = ActionPayload(commands=(Command(command_type="manual", content=node.name or node.id),), agent=self.agent_for(node))
            kind = "action"
        return self.add(step_id, WorkflowStep(kind=kind, name=node.name, payload=payload, **links))

    def branch_follow(self, region: Region, branch: Region, follow: str | None) -> str:
        if region.exit is not None or follow is None:
            return self.end_step(branch.via_flow or branch.entry or region.entry)
        return follow

    def loop(self, node: FlowNode, body: Region, follow: str | None) -> str:
        loop = node.loop if isinstance(node, SubProcess) else None
        on_true = self.emit_sequence(body, self.end_step(node.id))
        condition = (loop.condition_text if loop else None) or node.name or "true"
        step_id = self.make_id("while-condition", node.id, "step")
        return self.add(
            step_id,
            WorkflowStep(kind="while-condition", name=node.name, on_completion=follow, payload=WhileConditionPayload(condition=condition, on_true=on_true)),
        )

    def outcome(self, region: Region, follow: str | None) -> str:
        node = self.nodes[region.entry]
        if len(region.children) != 2:
            raise MappingError("unsupported-outcome", f"{node.id} has {len(region.children)} outgoing flows; at most two are supported")
        ordered = sorted(region.children, key=lambda branch: self.branch_flow(branch).extensions.get_cacao("edge-kind") != "success")
        # both paths continue with whatever follows the task
        success, failure = (self.emit_sequence(branch, follow or self.end_step(branch.via_flow)) for branch in ordered)
        return self.task_step(node, {"on_success": success, "on_failure": failure})

    def flatten(self, region: Region, follow: str | None) -> str | None:
        logger.debug("Flattening plain sub-process %s", region.entry)
        return self.emit_sequence(region, follow)

    def split(self, region: Region, follow: str | None) -> str:
        node = self.nodes[region.entry]
        branches = [(branch, self.branch_flow(branch)) for branch in region.children]
        entries = [self.emit_sequence(branch, self.branch_follow(region, branch, follow)) for branch, _ in branches]
        continuation = follow if region.exit is not None else None

        if region.kind == "parallel":
            kind, payload = "parallel", ParallelPayload(next_steps=tuple(entries))
        elif region.kind == "conditional":
            order = sorted(range(2), key=lambda index: branches[index][1].name != "true")
            true_flow = branches[order[0]][1]
            condition = true_flow.condition_text or true_flow.name or node.name or "condition"
            kind, payload = "if-condition", IfConditionPayload(condition=condition, on_true=entries[order[0]], on_false=entries[order[1]])
        else:
            cases: dict[str, str] = {}
            for (branch, flow), entry in zip(branches, entries):
                label = flow.name or flow.condition_text or ("default" if flow.id == getattr(node, "default_flow", None) else flow.id)
                if label in cases:
                    label = f"{label} ({flow.id})"
                cases[label] = entry
            kind, payload = "switch-condition", SwitchConditionPayload(switch=node.name or node.id, cases=tuple(cases.items()))

        step_id = self.make_id(kind, node.id, "step")
        if isinstance(node, (Task, CallActivity)):
            # an activity forking on plain flows runs first, then its branches in parallel
            self.add(step_id, WorkflowStep(kind=kind, on_completion=continuation, payload=payload))
            return self.task_step(node, {"on_completion": step_id})
        return self.add(step_id, WorkflowStep(kind=kind, name=node.name, on_completion=continuation, payload=payload))

    def variables(self) -> dict[str, Variable] | None:
        if not self.process.properties:
            return None
        items = {item.id: item for item in self.defs.item_definitions}
        variables: dict[str, Variable] = {}
        for prop in self.process.properties:
            name = prop.name if is_variable_name(prop.name) else f"__{re.sub(r'[^A-Za-z0-9_.-]', '_', prop.name or prop.id)}__"
            structure = items[prop.item_ref].structure_ref if prop.item_ref in items else ""
            variables[name] = Variable(var_type=structure or "string")
        return variables

    def run(self) -> Playbook:
        process = self.process
        for extra in self.defs.extra_processes:
            logger.warning("Ignoring additional process %s", extra.id)

        top = detect_regions(process)
        end = self.end_step(process.id)
        entry = self.emit_sequence(top, end)
        start = self.make_id("start", process.id, "start")
        self.add(start, WorkflowStep(kind="start", name="Start", on_completion=entry))

        graph = nx.DiGraph()
        graph.add_nodes_from(self.steps)
        graph.add_edges_from((step_id, target) for step_id, step in self.steps.items() for _, target in step.links())
        reachable = nx.descendants(graph, start) | {start}
        workflow = {step_id: step for step_id, step in self.steps.items() if step_id in reachable}

        timestamp = self.policy.clock()
        return Playbook(
            id=process.id if is_identifier(process.id, "playbook") else make_identifier("playbook", self.policy.id_synthesis_namespace, process.id),
            name=process.name or process.id,
            type_label=PLAYBOOK_TYPE_LABEL,
            spec_version=SPEC_VERSION,
            created=timestamp,
            modified=timestamp,
            workflow_start=start,
            workflow=workflow,
            playbook_variables=self.variables(),
            agent_definitions=dict(sorted(self.agents.items())),
        )


def map_to_cacao(defs: Definitions, policy: ImportPolicy | None = None) -> Playbook:
    """Recover a playbook from BPMN definitions.

    Raises
    ------
    UnstructuredFlowError
        If the process has no structured region decomposition.
    ImportMetadataError
        In strict mode, when converter metadata is missing or corrupt.
    InvalidDocumentError
        If the recovered playbook does not pass validation.
    """

    policy = policy or ImportPolicy()
    importer = _StrictImporter(defs, policy) if policy.mode == "strict" else _BestEffortImporter(defs, policy)
    pb = importer.run()
    violations = validate(pb)
    if violations:
        raise InvalidDocumentError(violations)
    logger.info("Imported process %s as playbook %s with %d steps (%s)", defs.process.id, pb.id, len(pb.workflow), policy.mode)
    return pb


__all__ = ["ImportPolicy", "map_to_cacao"]
