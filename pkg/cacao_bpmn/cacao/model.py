"""CACAO 2.0 domain model.

Every object keeps the properties it does not model in ``other_properties``
so a parsed document can be written back without losing anything. Optional
collections use ``None`` for "absent", which keeps absent and empty apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, Literal, Mapping, TypeAlias

StepKind: TypeAlias = Literal[
    "start",
    "end",
    "action",
    "playbook-action",
    "parallel",
    "if-condition",
    "while-condition",
    "switch-condition",
]
AgentCategory: TypeAlias = Literal["human-or-place", "device-or-equipment"]
EdgeKind: TypeAlias = Literal["completion", "success", "failure"]

STEP_KINDS: tuple[StepKind, ...] = (
    "start",
    "end",
    "action",
    "playbook-action",
    "parallel",
    "if-condition",
    "while-condition",
    "switch-condition",
)
BRANCHING_KINDS: frozenset[str] = frozenset(
    {"parallel", "if-condition", "while-condition", "switch-condition"}
)
HUMAN_OR_PLACE_TYPES: frozenset[str] = frozenset(
    {"individual", "group", "organization", "location", "sector"}
)

PLAYBOOK_TYPE_LABEL = "playbook"
SPEC_VERSION = "cacao-2.0"

JsonObject: TypeAlias = dict[str, Any]


def agent_category(at_type: str) -> AgentCategory:
    """Classify an agent-target type; unknown types count as devices."""

    return "human-or-place" if at_type in HUMAN_OR_PLACE_TYPES else "device-or-equipment"


@dataclass(frozen=True, slots=True)
class Command:
    command_type: str
    content: str
    description: str | None = None
    other_properties: JsonObject = field(default_factory=dict)

    @property
    def summary(self) -> str:
        """First line of the description, falling back to the command text."""

        text = self.description if self.description else self.content
        lines = text.splitlines()
        return lines[0] if lines else ""


@dataclass(frozen=True, slots=True)
class AgentTarget:
    at_type: str
    name: str
    other_properties: JsonObject = field(default_factory=dict)

    @property
    def category(self) -> AgentCategory:
        return agent_category(self.at_type)


@dataclass(frozen=True, slots=True)
class Variable:
    """A playbook or step variable; ``None`` marks properties the document omits."""

    var_type: str
    description: str | None = None
    value: str | None = None
    constant: bool | None = None
    external: bool | None = None
    other_properties: JsonObject = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class DataMarking:
    marking_type: str
    id: str | None = None
    other_properties: JsonObject = field(default_factory=dict)

    @property
    def display_text(self) -> str:
        props = self.other_properties
        if self.marking_type == "marking-tlp":
            level = props.get("tlpv2_level") or props.get("tlp")
            if isinstance(level, str) and level:
                return level
        if self.marking_type == "marking-statement":
            statement = props.get("statement")
            if isinstance(statement, str) and statement:
                return statement
        name = props.get("name")
        if isinstance(name, str) and name:
            return name
        return self.marking_type


@dataclass(frozen=True, slots=True)
class Signature:
    signee: str
    other_properties: JsonObject = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class ExtensionDefinition:
    id: str
    name: str | None = None
    schema_ref: str | None = None
    version: str | None = None
    other_properties: JsonObject = field(default_factory=dict)


# --- Step payloads ---


@dataclass(frozen=True, slots=True)
class ActionPayload:
    commands: tuple[Command, ...]
    agent: str
    targets: tuple[str, ...] | None = None


@dataclass(frozen=True, slots=True)
class PlaybookActionPayload:
    playbook_id: str
    playbook_version: str | None = None


@dataclass(frozen=True, slots=True)
class ParallelPayload:
    next_steps: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class IfConditionPayload:
    condition: str
    on_true: str
    on_false: str | None = None


@dataclass(frozen=True, slots=True)
class WhileConditionPayload:
    condition: str
    on_true: str


@dataclass(frozen=True, slots=True)
class SwitchConditionPayload:
    """Switch expression plus its cases.

    Cases are held as (label, step id) pairs sorted by label so duplicate
    labels from the source text remain visible to validation and equality
    does not depend on the order the document listed them in.
    """

    switch: str
    cases: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "cases", tuple(sorted(self.cases, key=lambda case: case[0])))


StepPayload: TypeAlias = (
    ActionPayload
    | PlaybookActionPayload
    | ParallelPayload
    | IfConditionPayload
    | WhileConditionPayload
    | SwitchConditionPayload
)


@dataclass(frozen=True, slots=True)
class WorkflowStep:
    kind: StepKind
    name: str | None = None
    description: str | None = None
    on_completion: str | None = None
    on_success: str | None = None
    on_failure: str | None = None
    step_variables: dict[str, Variable] | None = None
    delay: int | None = None
    timeout: int | None = None
    step_extensions: JsonObject | None = None
    other_properties: JsonObject = field(default_factory=dict)
    payload: StepPayload | None = None

    @property
    def has_outcome_pair(self) -> bool:
        return self.on_success is not None and self.on_failure is not None

    def links(self) -> Iterator[tuple[str, str]]:
        """Yield ``(property path, step id)`` for every step reference."""

        for prop in ("on_completion", "on_success", "on_failure"):
            target = getattr(self, prop)
            if target is not None:
                yield prop, target

        payload = self.payload
        if isinstance(payload, ParallelPayload):
            for index, target in enumerate(payload.next_steps):
                yield f"next_steps/{index}", target
        elif isinstance(payload, IfConditionPayload):
            yield "on_true", payload.on_true
            if payload.on_false is not None:
                yield "on_false", payload.on_false
        elif isinstance(payload, WhileConditionPayload):
            yield "on_true", payload.on_true
        elif isinstance(payload, SwitchConditionPayload):
            for label, target in payload.cases:
                yield f"cases/{label}", target

    def continuation(self) -> tuple[str | None, EdgeKind | None]:
        """The step that follows once this one (and its branches) finishes.

        Only meaningful when the step does not carry a success/failure pair.
        """

        if self.on_completion is not None:
            return self.on_completion, "completion"
        if self.on_success is not None and self.on_failure is None:
            return self.on_success, "success"
        if self.on_failure is not None and self.on_success is None:
            return self.on_failure, "failure"
        return None, None


@dataclass(frozen=True, slots=True)
class Playbook:
    id: str
    name: str
    created: str
    modified: str
    workflow_start: str
    workflow: dict[str, WorkflowStep]
    type_label: str = PLAYBOOK_TYPE_LABEL
    spec_version: str = SPEC_VERSION
    description: str | None = None
    playbook_variables: dict[str, Variable] | None = None
    agent_definitions: dict[str, AgentTarget] | None = None
    target_definitions: dict[str, AgentTarget] | None = None
    data_marking_definitions: dict[str, DataMarking] | None = None
    markings: tuple[str, ...] | None = None
    extension_definitions: dict[str, ExtensionDefinition] | None = None
    signatures: tuple[Signature, ...] | None = None
    other_properties: JsonObject = field(default_factory=dict)

    @property
    def agents(self) -> Mapping[str, AgentTarget]:
        return self.agent_definitions or {}

    @property
    def targets(self) -> Mapping[str, AgentTarget]:
        return self.target_definitions or {}

    def step(self, step_id: str) -> WorkflowStep:
        return self.workflow[step_id]
