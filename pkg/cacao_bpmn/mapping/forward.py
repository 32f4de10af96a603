"""Forward mapping: CACAO playbook to BPMN definitions.

Each workflow step becomes exactly one flow node whose id is the step id.
Branching steps are closed by synthesized converging gateways; a step with
both ``on_success`` and ``on_failure`` is rendered as two named flows that
meet in a synthesized exclusive join. Everything BPMN cannot express natively
is stored in CACAO-namespace extension attributes, which the reverse mapper
reads back.

An end step that closes several branches is emitted once. The other branches
flow straight into their join, and that flow names the end step in
``cacao:target-step``.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Any, Literal, TypeAlias

from cacao_bpmn.bpmn.model import (
    CONDITION_LANGUAGE,
    Association,
    CallActivity,
    Category,
    Definitions,
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
    SubProcess,
    Task,
    TextAnnotation,
    is_xml_safe,
    xml_safe,
)
from cacao_bpmn.cacao.codec import (
    agent_target_to_dict,
    canonical_json,
    command_to_dict,
    data_marking_to_dict,
    extension_definition_to_dict,
    signature_to_dict,
    variables_to_dict,
)
from cacao_bpmn.cacao.model import (
    ActionPayload,
    AgentTarget,
    Command,
    EdgeKind,
    IfConditionPayload,
    ParallelPayload,
    Playbook,
    PlaybookActionPayload,
    SwitchConditionPayload,
    Variable,
    WhileConditionPayload,
    WorkflowStep,
)
from cacao_bpmn.errors import InvalidDocumentError, MappingError
from cacao_bpmn.utils.config import TARGET_NAMESPACE
from cacao_bpmn.validation.validators import validate

logger = logging.getLogger(__name__)

MappingStyle: TypeAlias = Literal["gateway-pair", "subprocess"]
MAPPING_STYLES: tuple[MappingStyle, ...] = ("gateway-pair", "subprocess")

COMMAND_HEADER = "Command Data"
AGENT_TARGET_HEADER = "Agent-Target Data"
MARKINGS_HEADER = "Data Markings"
SIGNATURES_HEADER = "Digital Signatures"


@dataclass(frozen=True, slots=True)
class MappingOptions:
    parallel_style: MappingStyle = "gateway-pair"
    conditional_style: MappingStyle = "gateway-pair"

    def __post_init__(self) -> None:
        for name in ("parallel_style", "conditional_style"):
            if getattr(self, name) not in MAPPING_STYLES:
                raise ValueError(f"{name} must be one of {MAPPING_STYLES}, got {getattr(self, name)!r}")


@dataclass(slots=True)
class _Scope:
    """Elements collected for one process or sub-process."""

    id: str
    flow_nodes: list[FlowNode] = field(default_factory=list)
    sequence_flows: list[SequenceFlow] = field(default_factory=list)
    annotations: list[TextAnnotation] = field(default_factory=list)
    associations: list[Association] = field(default_factory=list)


@dataclass(frozen=True, slots=True)
class _Exit:
    """A pending outgoing flow from a fragment's exit node."""

    source: str
    edge_kind: EdgeKind | None = None
    name: str | None = None
    condition: str | None = None
    flow_id: str | None = None
    synthesized: str | None = None
    target_step: str | None = None


@dataclass(frozen=True, slots=True)
class Fragment:
    """What :func:`map_step` produced for one step.

    ``next_step`` is the step that follows on the same nesting level, or
    ``None`` when the chain ends here.
    """

    entry: str
    exit: _Exit
    next_step: str | None


@dataclass(slots=True)
class MappingContext:
    pb: Playbook
    options: MappingOptions = field(default_factory=MappingOptions)
    counter: int = 0
    visited: set[str] = field(default_factory=set)
    meets: dict[str, str | None] = field(default_factory=dict)
    shared_ends: frozenset[str] = frozenset()
    anchored_ends: frozenset[str] = frozenset()
    item_definitions: list[ItemDefinition] = field(default_factory=list)
    categories: list[Category] = field(default_factory=list)
    groups: list[Group] = field(default_factory=list)

    @property
    def agents(self) -> dict[str, AgentTarget]:
        return dict(self.pb.agents)

    @property
    def targets(self) -> dict[str, AgentTarget]:
        return dict(self.pb.targets)

    def next_id(self, kind: str) -> str:
        """Return a fresh ``gen-<kind>-<n>`` id; CACAO ids never start with ``gen-``."""

        self.counter += 1
        return f"gen-{kind}-{self.counter}"

    def defers(self, step_id: str) -> bool:
        """Whether a branch reaching ``step_id`` closes without emitting it.

        True for a shared end step that already has its node, or that gets
        it on a chain without a join (the process or a loop body).
        """

        return step_id in self.shared_ends and (step_id in self.visited or step_id in self.anchored_ends)

    def connect(self, scope: _Scope, pending: _Exit, target: str) -> SequenceFlow:
        flow = SequenceFlow(
            id=pending.flow_id or self.next_id("flow"),
            source_id=pending.source,
            target_id=target,
            name=_display(pending.name),
            condition_text=_display(pending.condition),
            condition_language=CONDITION_LANGUAGE if pending.condition is not None else None,
            extensions=ExtensionBag.cacao(
                {
                    "edge-kind": pending.edge_kind,
                    "synthesized": pending.synthesized,
                    "target-step": pending.target_step,
                    "name": _exact(pending.name),
                }
            ),
        )
        scope.sequence_flows.append(flow)
        return flow


# --- Extension payloads ---


def _display(text: str | None) -> str | None:
    return None if text is None else xml_safe(text)


def _exact(text: str | None) -> str | None:
    """``text`` when its native rendering lost characters, else ``None``."""

    return text if text is not None and not is_xml_safe(text) else None


def _json_or_none(value: Any) -> str | None:
    return canonical_json(value) if value is not None else None


def _bool_text(value: bool | None) -> str | None:
    return None if value is None else ("true" if value else "false")


def _step_extensions(step: WorkflowStep, pb: Playbook) -> dict[str, str | None]:
    values: dict[str, str | None] = {
        "step-type": step.kind,
        "name": _exact(step.name),
        "description": step.description,
        "delay": str(step.delay) if step.delay is not None else None,
        "timeout": str(step.timeout) if step.timeout is not None else None,
        "step-variables": _json_or_none(variables_to_dict(step.step_variables) if step.step_variables is not None else None),
        "step-extensions": _json_or_none(step.step_extensions),
        "other-properties": canonical_json(step.other_properties) if step.other_properties else None,
    }
    payload = step.payload
    if isinstance(payload, ActionPayload):
        values["commands"] = canonical_json([command_to_dict(command) for command in payload.commands])
        values["agent"] = payload.agent
        values["targets"] = _json_or_none(list(payload.targets) if payload.targets is not None else None)
        resolved = {
            "agent": agent_target_to_dict(pb.agents[payload.agent]) if payload.agent in pb.agents else None,
            "targets": {
                target: agent_target_to_dict(pb.targets[target]) for target in payload.targets or () if target in pb.targets
            },
        }
        values["agent-target"] = canonical_json(resolved)
    elif isinstance(payload, PlaybookActionPayload):
        values["playbook-version"] = payload.playbook_version
    elif isinstance(payload, (IfConditionPayload, WhileConditionPayload)):
        values["condition"] = payload.condition
    elif isinstance(payload, SwitchConditionPayload):
        values["switch"] = payload.switch
    elif isinstance(payload, ParallelPayload):
        values["next-steps"] = canonical_json(list(payload.next_steps))
    return values


def _process_extensions(pb: Playbook) -> ExtensionBag:
    def table(records: dict | None, convert) -> str | None:
        return _json_or_none({key: convert(record) for key, record in records.items()} if records is not None else None)

    return ExtensionBag.cacao(
        {
            "spec-version": pb.spec_version,
            "name": _exact(pb.name),
            "created": pb.created,
            "modified": pb.modified,
            "description": pb.description,
            "other-properties": canonical_json(pb.other_properties) if pb.other_properties else None,
            "agent-definitions": table(pb.agent_definitions, agent_target_to_dict),
            "target-definitions": table(pb.target_definitions, agent_target_to_dict),
            "extension-definitions": table(pb.extension_definitions, extension_definition_to_dict),
            "data-marking-definitions": table(pb.data_marking_definitions, data_marking_to_dict),
            "markings": _json_or_none(list(pb.markings) if pb.markings is not None else None),
            "signatures": _json_or_none(
                [signature_to_dict(signature) for signature in pb.signatures] if pb.signatures is not None else None
            ),
            "playbook-variables": "present" if pb.playbook_variables is not None else None,
        }
    )


# --- Artifacts ---


def _annotate(ctx: MappingContext, scope: _Scope, source_id: str, text: str) -> tuple[TextAnnotation, Association]:
    annotation = TextAnnotation(id=ctx.next_id("annotation"), text=xml_safe(text))
    association = Association(id=ctx.next_id("association"), source_id=source_id, target_id=annotation.id)
    scope.annotations.append(annotation)
    scope.associations.append(association)
    return annotation, association


def attach_command_annotation(
    ctx: MappingContext, scope: _Scope, node_id: str, commands: tuple[Command, ...]
) -> tuple[TextAnnotation, Association]:
    """Attach a "Command Data" annotation listing one line per command."""

    lines = [COMMAND_HEADER, *(f"{command.command_type}: {command.summary}" for command in commands)]
    return _annotate(ctx, scope, node_id, "\n".join(lines))


def attach_agent_target_annotation(
    ctx: MappingContext, scope: _Scope, node_id: str, agent_id: str, target_ids: tuple[str, ...]
) -> tuple[TextAnnotation, Association]:
    """Attach an "Agent-Target Data" annotation naming the agent and its targets."""

    agents, targets = ctx.agents, ctx.targets
    agent = agents.get(agent_id)
    lines = [AGENT_TARGET_HEADER, f"agent: {agent.name} ({agent.at_type})" if agent else f"agent: {agent_id}"]
    for target_id in target_ids:
        target = targets.get(target_id)
        lines.append(f"target: {target.name} ({target.at_type})" if target else f"target: {target_id}")
    return _annotate(ctx, scope, node_id, "\n".join(lines))


def map_variables(ctx: MappingContext) -> list[ProcessProperty]:
    """Turn playbook variables into item definitions and process properties."""

    properties = []
    variables: dict[str, Variable] = ctx.pb.playbook_variables or {}
    for name, variable in variables.items():
        item = ItemDefinition(id=ctx.next_id("item"), structure_ref=xml_safe(variable.var_type))
        ctx.item_definitions.append(item)
        properties.append(
            ProcessProperty(
                id=ctx.next_id("property"),
                name=name,
                item_ref=item.id,
                extensions=ExtensionBag.cacao(
                    {
                        "type": _exact(variable.var_type),
                        "description": variable.description,
                        "value": variable.value,
                        "constant": _bool_text(variable.constant),
                        "external": _bool_text(variable.external),
                        "other-properties": canonical_json(variable.other_properties) if variable.other_properties else None,
                    }
                ),
            )
        )
    return properties


def _add_group(ctx: MappingContext, scope: _Scope, header: str, lines: list[str]) -> None:
    category = Category(id=ctx.next_id("category"), value_id=ctx.next_id("category-value"), value_text=header)
    group = Group(id=ctx.next_id("group"), category_value_id=category.value_id)
    ctx.categories.append(category)
    ctx.groups.append(group)
    _annotate(ctx, scope, group.id, "\n".join([header, *lines]))


def map_groups(ctx: MappingContext, scope: _Scope) -> None:
    """Wrap the process in "Data Markings" and "Digital Signatures" groups."""

    pb = ctx.pb
    if pb.markings:
        definitions = pb.data_marking_definitions or {}
        lines = [definitions[marking].display_text if marking in definitions else marking for marking in pb.markings]
        _add_group(ctx, scope, MARKINGS_HEADER, lines)
    if pb.signatures:
        _add_group(ctx, scope, SIGNATURES_HEADER, [signature.signee for signature in pb.signatures])


# --- Steps ---


def _level_chain(ctx: MappingContext, step_id: str | None) -> list[str]:
    """Steps visited from ``step_id`` on the same nesting level."""

    chain: list[str] = []
    while step_id is not None and step_id in ctx.pb.workflow and step_id not in chain:
        chain.append(step_id)
        step = ctx.pb.workflow[step_id]
        step_id = _meet(ctx, step_id) if step.has_outcome_pair else step.continuation()[0]
    return chain


def _meet(ctx: MappingContext, step_id: str) -> str | None:
    """First step shared by the success and failure paths of ``step_id``."""

    if step_id not in ctx.meets:
        ctx.meets[step_id] = None
        step = ctx.pb.workflow[step_id]
        failure = set(_level_chain(ctx, step.on_failure))
        ctx.meets[step_id] = next((candidate for candidate in _level_chain(ctx, step.on_success) if candidate in failure), None)
    return ctx.meets[step_id]


def _map_chain(ctx: MappingContext, scope: _Scope, step_id: str, stop: str | None) -> tuple[str, _Exit]:
    fragment = map_step(ctx, scope, step_id, stop)
    entry, pending = fragment.entry, fragment.exit
    while fragment.next_step is not None and fragment.next_step != stop:
        fragment = map_step(ctx, scope, fragment.next_step, stop)
        ctx.connect(scope, pending, fragment.entry)
        pending = fragment.exit
    return entry, pending


def _map_branch(ctx: MappingContext, scope: _Scope, start: _Exit, step_id: str | None, stop: str | None, join_id: str) -> None:
    """Map the chain from ``step_id`` between ``start`` and the join ``join_id``."""

    pending = start
    while step_id is not None and step_id != stop:
        if ctx.defers(step_id):
            pending = replace(pending, target_step=step_id)
            break
        fragment = map_step(ctx, scope, step_id, stop)
        ctx.connect(scope, pending, fragment.entry)
        pending, step_id = fragment.exit, fragment.next_step
    ctx.connect(scope, pending, join_id)


def _shared_end_steps(ctx: MappingContext) -> tuple[frozenset[str], frozenset[str]]:
    """End steps referenced more than once, and those of them on a joinless chain."""

    workflow = ctx.pb.workflow
    references = Counter(target for step in workflow.values() for _, target in step.links())
    shared = frozenset(
        step_id for step_id, count in references.items() if count > 1 and step_id in workflow and workflow[step_id].kind == "end"
    )
    heads = [ctx.pb.workflow_start]
    heads.extend(step.payload.on_true for step in workflow.values() if isinstance(step.payload, WhileConditionPayload))
    anchored = frozenset(step_id for head in heads for step_id in _level_chain(ctx, head) if step_id in shared)
    return shared, anchored


def _leaf_node(ctx: MappingContext, step_id: str, step: WorkflowStep, extensions: ExtensionBag) -> FlowNode:
    payload = step.payload
    if isinstance(payload, ActionPayload):
        agent = ctx.agents.get(payload.agent)
        kind = "user" if agent is not None and agent.category == "human-or-place" else "service"
        return Task(id=step_id, name=_display(step.name), task_kind=kind, extensions=extensions)
    if isinstance(payload, PlaybookActionPayload):
        return CallActivity(id=step_id, name=_display(step.name), called_element=payload.playbook_id, extensions=extensions)
    return Task(id=step_id, name=_display(step.name), task_kind="abstract", extensions=extensions)


def _map_outcome(ctx: MappingContext, scope: _Scope, step_id: str, step: WorkflowStep, stop: str | None) -> Fragment:
    meet = _meet(ctx, step_id)
    if meet is None and stop is not None:
        if stop in _level_chain(ctx, step.on_success) or stop in _level_chain(ctx, step.on_failure):
            raise MappingError(
                "unsupported-outcome",
                f"success and failure paths of {step_id} leave the enclosing construct without meeting",
            )

    join_id = ctx.next_id("join")
    for edge_kind, target in (("success", step.on_success), ("failure", step.on_failure)):
        _map_branch(ctx, scope, _Exit(step_id, edge_kind, name=edge_kind), target, meet, join_id)

    scope.flow_nodes.append(
        ExclusiveGateway(id=join_id, direction="converging", extensions=ExtensionBag.cacao({"synthesized": "join"}))
    )
    return Fragment(entry=step_id, exit=_Exit(join_id), next_step=meet)


def _branches(step: WorkflowStep) -> list[tuple[str | None, str | None, str | None, bool]]:
    """``(flow name, condition, entry step, is default)`` per branch, in mapping order."""

    payload = step.payload
    if isinstance(payload, ParallelPayload):
        return [(None, None, target, False) for target in payload.next_steps]
    if isinstance(payload, IfConditionPayload):
        return [("true", payload.condition, payload.on_true, False), ("false", None, payload.on_false, True)]
    if isinstance(payload, SwitchConditionPayload):
        return [(label, label, target, False) for label, target in payload.cases]
    raise TypeError(f"{step.kind} steps have no gateway branches")


def _map_gateway_pair(
    ctx: MappingContext,
    scope: _Scope,
    fork_id: str,
    fork_name: str | None,
    step: WorkflowStep,
    fork_extensions: ExtensionBag,
) -> str:
    """Emit fork, branches and join into ``scope``; return the join id."""

    join_id = ctx.next_id("join")
    default_flow: str | None = None
    for name, condition, target, is_default in _branches(step):
        start = _Exit(fork_id, name=name, condition=condition, flow_id=ctx.next_id("flow") if is_default else None)
        if is_default:
            default_flow = start.flow_id
        _map_branch(ctx, scope, start, target, None, join_id)

    # no case matched: control passes straight to the join
    if isinstance(step.payload, SwitchConditionPayload):
        default_flow = ctx.next_id("flow")
        ctx.connect(scope, _Exit(fork_id, flow_id=default_flow, synthesized="default"), join_id)

    join_extensions = ExtensionBag.cacao({"synthesized": "join"})
    if isinstance(step.payload, ParallelPayload):
        scope.flow_nodes.append(ParallelGateway(id=fork_id, name=fork_name, direction="diverging", extensions=fork_extensions))
        scope.flow_nodes.append(ParallelGateway(id=join_id, direction="converging", extensions=join_extensions))
    else:
        scope.flow_nodes.append(
            ExclusiveGateway(
                id=fork_id, name=fork_name, direction="diverging", default_flow=default_flow, extensions=fork_extensions
            )
        )
        scope.flow_nodes.append(ExclusiveGateway(id=join_id, direction="converging", extensions=join_extensions))
    return join_id


def map_step(ctx: MappingContext, scope: _Scope, step_id: str, stop: str | None = None) -> Fragment:
    """Map one workflow step (and the branches it owns) into ``scope``.

    Raises
    ------
    MappingError
        ``shared-step`` when a step is reached a second time and cannot be
        closed into a join (any shared step other than an end step, or an end
        step that ends two joinless chains), ``unsupported-outcome`` for
        success/failure pairs on branching steps or outcome paths that cannot
        be joined.
    """

    if step_id in ctx.visited:
        raise MappingError("shared-step", f"step {step_id} is reached along more than one path")
    ctx.visited.add(step_id)
    step = ctx.pb.workflow[step_id]
    extensions = ExtensionBag.cacao(_step_extensions(step, ctx.pb))
    payload = step.payload

    if payload is None or isinstance(payload, (ActionPayload, PlaybookActionPayload)):
        scope.flow_nodes.append(_leaf_node(ctx, step_id, step, extensions))
        if isinstance(payload, ActionPayload):
            attach_command_annotation(ctx, scope, step_id, payload.commands)
            attach_agent_target_annotation(ctx, scope, step_id, payload.agent, payload.targets or ())
        if step.has_outcome_pair:
            return _map_outcome(ctx, scope, step_id, step, stop)
        next_step, edge_kind = step.continuation()
        return Fragment(entry=step_id, exit=_Exit(step_id, edge_kind), next_step=next_step)

    if step.has_outcome_pair:
        raise MappingError("unsupported-outcome", f"{step.kind} step {step_id} cannot carry on_success and on_failure")
    next_step, edge_kind = step.continuation()

    if isinstance(payload, WhileConditionPayload):
        inner = _Scope(step_id)
        _map_chain(ctx, inner, payload.on_true, None)
        loop = LoopCharacteristics(condition_text=_display(payload.condition), test_before=True)
        scope.flow_nodes.append(_sub_process(step_id, step, extensions, inner, loop))
        return Fragment(entry=step_id, exit=_Exit(step_id, edge_kind), next_step=next_step)

    style = ctx.options.parallel_style if isinstance(payload, ParallelPayload) else ctx.options.conditional_style
    if style == "subprocess":
        inner = _Scope(step_id)
        fork_id = ctx.next_id("fork")
        _map_gateway_pair(ctx, inner, fork_id, None, step, ExtensionBag.cacao({"synthesized": "fork"}))
        scope.flow_nodes.append(_sub_process(step_id, step, extensions, inner, None))
        return Fragment(entry=step_id, exit=_Exit(step_id, edge_kind), next_step=next_step)

    join_id = _map_gateway_pair(ctx, scope, step_id, _display(step.name), step, extensions)
    return Fragment(entry=step_id, exit=_Exit(join_id, edge_kind), next_step=next_step)


def _sub_process(
    step_id: str, step: WorkflowStep, extensions: ExtensionBag, inner: _Scope, loop: LoopCharacteristics | None
) -> SubProcess:
    return SubProcess(
        id=step_id,
        name=_display(step.name),
        extensions=extensions,
        flow_nodes=tuple(inner.flow_nodes),
        sequence_flows=tuple(inner.sequence_flows),
        annotations=tuple(inner.annotations),
        associations=tuple(inner.associations),
        loop=loop,
    )


def map_playbook(pb: Playbook, opts: MappingOptions | None = None) -> Definitions:
    """Map a valid playbook to BPMN definitions without diagram geometry.

    Raises
    ------
    InvalidDocumentError
        If :func:`~cacao_bpmn.validation.validate` reports violations.
    MappingError
        For workflow shapes the mapping cannot express (see :func:`map_step`).
    """

    violations = validate(pb)
    if violations:
        raise InvalidDocumentError(violations)

    ctx = MappingContext(pb=pb, options=opts or MappingOptions())
    ctx.shared_ends, ctx.anchored_ends = _shared_end_steps(ctx)
    scope = _Scope(pb.id)
    properties = map_variables(ctx)
    _map_chain(ctx, scope, pb.workflow_start, None)
    map_groups(ctx, scope)

    process = Process(
        id=pb.id,
        name=_display(pb.name),
        flow_nodes=tuple(scope.flow_nodes),
        sequence_flows=tuple(scope.sequence_flows),
        annotations=tuple(scope.annotations),
        associations=tuple(scope.associations),
        groups=tuple(ctx.groups),
        properties=tuple(properties),
        extensions=_process_extensions(pb),
    )
    logger.info(
        "Mapped playbook %s to %d top-level flow nodes (%s/%s)",
        pb.id,
        len(process.flow_nodes),
        ctx.options.parallel_style,
        ctx.options.conditional_style,
    )
    return Definitions(
        target_namespace=TARGET_NAMESPACE,
        process=process,
        item_definitions=tuple(ctx.item_definitions),
        categories=tuple(ctx.categories),
    )


__all__ = [
    "AGENT_TARGET_HEADER",
    "COMMAND_HEADER",
    "Fragment",
    "MARKINGS_HEADER",
    "MappingContext",
    "MappingOptions",
    "MappingStyle",
    "SIGNATURES_HEADER",
    "attach_agent_target_annotation",
    "attach_command_annotation",
    "map_groups",
    "map_playbook",
    "map_step",
    "map_variables",
]
