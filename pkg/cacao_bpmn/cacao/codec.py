"""JSON codec for CACAO 2.0 playbooks.

``parse_playbook`` turns document text into :class:`~cacao_bpmn.cacao.model.Playbook`
values and ``serialize_playbook`` writes them back in canonical form (sorted
keys, two-space indent, trailing newline). The ``*_to_dict``/``*_from_dict``
helpers are also used by the mappers to embed CACAO records in BPMN extension
attributes.
"""

from __future__ import annotations

import json
import logging
from typing import Any, Callable, Mapping, TypeVar

from cacao_bpmn.cacao.model import (
    ActionPayload,
    AgentTarget,
    Command,
    DataMarking,
    ExtensionDefinition,
    IfConditionPayload,
    JsonObject,
    ParallelPayload,
    Playbook,
    PlaybookActionPayload,
    STEP_KINDS,
    Signature,
    SwitchConditionPayload,
    Variable,
    WhileConditionPayload,
    WorkflowStep,
)
from cacao_bpmn.errors import DanglingReferenceError, DocumentSyntaxError, InvalidDocumentError, SchemaError

logger = logging.getLogger(__name__)

_T = TypeVar("_T")

_PLAYBOOK_KEYS = frozenset(
    {
        "type",
        "spec_version",
        "id",
        "name",
        "description",
        "created",
        "modified",
        "workflow_start",
        "workflow",
        "playbook_variables",
        "agent_definitions",
        "target_definitions",
        "data_marking_definitions",
        "markings",
        "extension_definitions",
        "signatures",
    }
)
_STEP_KEYS = frozenset(
    {
        "type",
        "name",
        "description",
        "on_completion",
        "on_success",
        "on_failure",
        "step_variables",
        "delay",
        "timeout",
        "step_extensions",
    }
)
_PAYLOAD_KEYS: dict[str, frozenset[str]] = {
    "start": frozenset(),
    "end": frozenset(),
    "action": frozenset({"commands", "agent", "targets"}),
    "playbook-action": frozenset({"playbook_id", "playbook_version"}),
    "parallel": frozenset({"next_steps"}),
    "if-condition": frozenset({"condition", "on_true", "on_false"}),
    "while-condition": frozenset({"condition", "on_true"}),
    "switch-condition": frozenset({"switch", "cases"}),
}


class _PairsDict(dict):
    """A JSON object that remembers its key/value pairs, duplicates included."""

    pairs: list[tuple[str, Any]]


def _object_pairs_hook(pairs: list[tuple[str, Any]]) -> _PairsDict:
    obj = _PairsDict(pairs)
    obj.pairs = list(pairs)
    return obj


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_plain(item) for item in value]
    return value


def canonical_json(value: Any) -> str:
    """Compact, key-sorted JSON used to embed records in extension attributes."""

    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _pointer(path: str, key: str | int) -> str:
    token = str(key).replace("~", "~0").replace("/", "~1")
    return f"{path}/{token}"


class _Reader:
    """Typed property access that reports failures with JSON-pointer paths."""

    def __init__(self, *, strict: bool) -> None:
        self.strict = strict

    def _get(self, obj: Mapping[str, Any], key: str, path: str, expected: type | tuple[type, ...], label: str, required: bool, empty: Any) -> Any:
        if key not in obj:
            if required and self.strict:
                raise SchemaError(_pointer(path, key), f"missing mandatory property '{key}'")
            return empty if required else None
        value = obj[key]
        if isinstance(value, bool) and expected is int:
            raise SchemaError(_pointer(path, key), f"type mismatch: expected {label}")
        if not isinstance(value, expected):
            raise SchemaError(_pointer(path, key), f"type mismatch: expected {label}")
        return value

    def string(self, obj: Mapping[str, Any], key: str, path: str, *, required: bool = False) -> str | None:
        return self._get(obj, key, path, str, "string", required, "")

    def integer(self, obj: Mapping[str, Any], key: str, path: str) -> int | None:
        return self._get(obj, key, path, int, "integer", False, None)

    def boolean(self, obj: Mapping[str, Any], key: str, path: str) -> bool | None:
        return self._get(obj, key, path, bool, "boolean", False, None)

    def mapping(self, obj: Mapping[str, Any], key: str, path: str, *, required: bool = False) -> dict | None:
        return self._get(obj, key, path, dict, "object", required, {})

    def sequence(self, obj: Mapping[str, Any], key: str, path: str, *, required: bool = False) -> list | None:
        return self._get(obj, key, path, list, "array", required, [])

    def string_list(self, obj: Mapping[str, Any], key: str, path: str, *, required: bool = False) -> tuple[str, ...] | None:
        values = self.sequence(obj, key, path, required=required)
        if values is None:
            return None
        for index, item in enumerate(values):
            if not isinstance(item, str):
                raise SchemaError(_pointer(_pointer(path, key), index), "type mismatch: expected string")
        return tuple(values)

    def records(
        self,
        obj: Mapping[str, Any],
        key: str,
        path: str,
        build: Callable[[Mapping[str, Any], str], _T],
        *,
        required: bool = False,
    ) -> dict[str, _T] | None:
        table = self.mapping(obj, key, path, required=required)
        if table is None:
            return None
        table_path = _pointer(path, key)
        result: dict[str, _T] = {}
        for record_key, record in table.items():
            record_path = _pointer(table_path, record_key)
            if not isinstance(record, dict):
                raise SchemaError(record_path, "type mismatch: expected object")
            result[record_key] = build(record, record_path)
        return result


def _extras(obj: Mapping[str, Any], modeled: frozenset[str]) -> JsonObject:
    return {key: _plain(value) for key, value in obj.items() if key not in modeled}


# --- Records ---


def command_from_dict(obj: Mapping[str, Any], path: str = "", *, strict: bool = True) -> Command:
    reader = _Reader(strict=strict)
    return Command(
        command_type=reader.string(obj, "type", path, required=True),
        content=reader.string(obj, "command", path, required=True),
        description=reader.string(obj, "description", path),
        other_properties=_extras(obj, frozenset({"type", "command", "description"})),
    )


def command_to_dict(command: Command) -> JsonObject:
    data: JsonObject = dict(command.other_properties)
    data["type"] = command.command_type
    data["command"] = command.content
    if command.description is not None:
        data["description"] = command.description
    return data


def agent_target_from_dict(obj: Mapping[str, Any], path: str = "", *, strict: bool = True) -> AgentTarget:
    reader = _Reader(strict=strict)
    return AgentTarget(
        at_type=reader.string(obj, "type", path, required=True),
        name=reader.string(obj, "name", path, required=True),
        other_properties=_extras(obj, frozenset({"type", "name"})),
    )


def agent_target_to_dict(record: AgentTarget) -> JsonObject:
    data: JsonObject = dict(record.other_properties)
    data["type"] = record.at_type
    data["name"] = record.name
    return data


def variable_from_dict(obj: Mapping[str, Any], path: str = "", *, strict: bool = True) -> Variable:
    reader = _Reader(strict=strict)
    return Variable(
        var_type=reader.string(obj, "type", path, required=True),
        description=reader.string(obj, "description", path),
        value=reader.string(obj, "value", path),
        constant=reader.boolean(obj, "constant", path),
        external=reader.boolean(obj, "external", path),
        other_properties=_extras(obj, frozenset({"type", "description", "value", "constant", "external"})),
    )


def variable_to_dict(variable: Variable) -> JsonObject:
    data: JsonObject = dict(variable.other_properties)
    data["type"] = variable.var_type
    for key in ("description", "value", "constant", "external"):
        value = getattr(variable, key)
        if value is not None:
            data[key] = value
    return data


def variables_from_dict(obj: Mapping[str, Any], path: str = "", *, strict: bool = True) -> dict[str, Variable]:
    variables: dict[str, Variable] = {}
    for name, record in obj.items():
        record_path = _pointer(path, name)
        variables[name] = variable_from_dict(_expect_object(record, record_path), record_path, strict=strict)
    return variables


def variables_to_dict(variables: Mapping[str, Variable]) -> JsonObject:
    return {name: variable_to_dict(variable) for name, variable in variables.items()}


def data_marking_from_dict(obj: Mapping[str, Any], path: str = "", *, strict: bool = True) -> DataMarking:
    reader = _Reader(strict=strict)
    return DataMarking(
        marking_type=reader.string(obj, "type", path, required=True),
        id=reader.string(obj, "id", path),
        other_properties=_extras(obj, frozenset({"type", "id"})),
    )


def data_marking_to_dict(marking: DataMarking) -> JsonObject:
    data: JsonObject = dict(marking.other_properties)
    data["type"] = marking.marking_type
    if marking.id is not None:
        data["id"] = marking.id
    return data


def signature_from_dict(obj: Mapping[str, Any], path: str = "", *, strict: bool = True) -> Signature:
    reader = _Reader(strict=strict)
    return Signature(
        signee=reader.string(obj, "signee", path, required=True),
        other_properties=_extras(obj, frozenset({"signee"})),
    )


def signature_to_dict(signature: Signature) -> JsonObject:
    data: JsonObject = dict(signature.other_properties)
    data["signee"] = signature.signee
    return data


def extension_definition_from_dict(
    obj: Mapping[str, Any], path: str = "", *, key: str, strict: bool = True
) -> ExtensionDefinition:
    reader = _Reader(strict=strict)
    return ExtensionDefinition(
        id=key,
        name=reader.string(obj, "name", path),
        schema_ref=reader.string(obj, "schema", path),
        version=reader.string(obj, "version", path),
        other_properties=_extras(obj, frozenset({"name", "schema", "version"})),
    )


def extension_definition_to_dict(definition: ExtensionDefinition) -> JsonObject:
    data: JsonObject = dict(definition.other_properties)
    for key, value in (("name", definition.name), ("schema", definition.schema_ref), ("version", definition.version)):
        if value is not None:
            data[key] = value
    return data


def _records_to_dict(records: Mapping[str, _T] | None, convert: Callable[[_T], JsonObject]) -> JsonObject | None:
    if records is None:
        return None
    return {key: convert(record) for key, record in records.items()}


# --- Steps ---


def step_from_dict(obj: Mapping[str, Any], path: str = "", *, strict: bool = True) -> WorkflowStep:
    """Build a :class:`WorkflowStep` from its JSON object."""

    reader = _Reader(strict=strict)
    kind = reader.string(obj, "type", path, required=True)
    if kind not in STEP_KINDS:
        raise SchemaError(_pointer(path, "type"), f"unknown workflow step type {kind!r}")

    payload: Any = None
    if kind == "action":
        raw_commands = reader.sequence(obj, "commands", path, required=True)
        commands = []
        for index, raw in enumerate(raw_commands):
            command_path = _pointer(_pointer(path, "commands"), index)
            if not isinstance(raw, dict):
                raise SchemaError(command_path, "type mismatch: expected object")
            commands.append(command_from_dict(raw, command_path, strict=strict))
        payload = ActionPayload(
            commands=tuple(commands),
            agent=reader.string(obj, "agent", path, required=True),
            targets=reader.string_list(obj, "targets", path),
        )
    elif kind == "playbook-action":
        payload = PlaybookActionPayload(
            playbook_id=reader.string(obj, "playbook_id", path, required=True),
            playbook_version=reader.string(obj, "playbook_version", path),
        )
    elif kind == "parallel":
        payload = ParallelPayload(next_steps=reader.string_list(obj, "next_steps", path, required=True))
    elif kind == "if-condition":
        payload = IfConditionPayload(
            condition=reader.string(obj, "condition", path, required=True),
            on_true=reader.string(obj, "on_true", path, required=True),
            on_false=reader.string(obj, "on_false", path),
        )
    elif kind == "while-condition":
        payload = WhileConditionPayload(
            condition=reader.string(obj, "condition", path, required=True),
            on_true=reader.string(obj, "on_true", path, required=True),
        )
    elif kind == "switch-condition":
        raw_cases = reader.mapping(obj, "cases", path, required=True)
        pairs = getattr(raw_cases, "pairs", None) or list(raw_cases.items())
        cases_path = _pointer(path, "cases")
        for label, target in pairs:
            if not isinstance(target, str):
                raise SchemaError(_pointer(cases_path, label), "type mismatch: expected string")
        payload = SwitchConditionPayload(
            switch=reader.string(obj, "switch", path, required=True),
            cases=tuple(pairs),
        )

    step_variables = reader.records(
        obj, "step_variables", path, lambda record, record_path: variable_from_dict(record, record_path, strict=strict)
    )
    step_extensions = reader.mapping(obj, "step_extensions", path)

    return WorkflowStep(
        kind=kind,
        name=reader.string(obj, "name", path),
        description=reader.string(obj, "description", path),
        on_completion=reader.string(obj, "on_completion", path),
        on_success=reader.string(obj, "on_success", path),
        on_failure=reader.string(obj, "on_failure", path),
        step_variables=step_variables,
        delay=reader.integer(obj, "delay", path),
        timeout=reader.integer(obj, "timeout", path),
        step_extensions=_plain(step_extensions) if step_extensions is not None else None,
        other_properties=_extras(obj, _STEP_KEYS | _PAYLOAD_KEYS[kind]),
        payload=payload,
    )


def step_to_dict(step: WorkflowStep) -> JsonObject:
    data: JsonObject = dict(step.other_properties)
    data["type"] = step.kind
    for key in ("name", "description", "on_completion", "on_success", "on_failure", "delay", "timeout"):
        value = getattr(step, key)
        if value is not None:
            data[key] = value
    if step.step_variables is not None:
        data["step_variables"] = variables_to_dict(step.step_variables)
    if step.step_extensions is not None:
        data["step_extensions"] = dict(step.step_extensions)

    payload = step.payload
    if isinstance(payload, ActionPayload):
        data["commands"] = [command_to_dict(command) for command in payload.commands]
        data["agent"] = payload.agent
        if payload.targets is not None:
            data["targets"] = list(payload.targets)
    elif isinstance(payload, PlaybookActionPayload):
        data["playbook_id"] = payload.playbook_id
        if payload.playbook_version is not None:
            data["playbook_version"] = payload.playbook_version
    elif isinstance(payload, ParallelPayload):
        data["next_steps"] = list(payload.next_steps)
    elif isinstance(payload, IfConditionPayload):
        data["condition"] = payload.condition
        data["on_true"] = payload.on_true
        if payload.on_false is not None:
            data["on_false"] = payload.on_false
    elif isinstance(payload, WhileConditionPayload):
        data["condition"] = payload.condition
        data["on_true"] = payload.on_true
    elif isinstance(payload, SwitchConditionPayload):
        data["switch"] = payload.switch
        data["cases"] = dict(payload.cases)
    return data


# --- Playbook ---


def playbook_from_dict(obj: Mapping[str, Any], *, strict: bool = True) -> Playbook:
    """Build a :class:`Playbook` from a decoded JSON object.

    With ``strict=False`` missing mandatory properties are replaced by empty
    values instead of raising, so :func:`~cacao_bpmn.validation.validate`
    can report them.
    """

    reader = _Reader(strict=strict)
    workflow_raw = reader.mapping(obj, "workflow", "", required=True)
    workflow: dict[str, WorkflowStep] = {}
    for step_id, raw_step in workflow_raw.items():
        step_path = _pointer("/workflow", step_id)
        if not isinstance(raw_step, dict):
            raise SchemaError(step_path, "type mismatch: expected object")
        workflow[step_id] = step_from_dict(raw_step, step_path, strict=strict)

    workflow_start = reader.string(obj, "workflow_start", "", required=True)
    if strict and workflow_start not in workflow:
        raise DanglingReferenceError("/workflow_start", "workflow_start")

    raw_signatures = reader.sequence(obj, "signatures", "")
    signatures = None
    if raw_signatures is not None:
        signatures = []
        for index, raw in enumerate(raw_signatures):
            signature_path = _pointer("/signatures", index)
            if not isinstance(raw, dict):
                raise SchemaError(signature_path, "type mismatch: expected object")
            signatures.append(signature_from_dict(raw, signature_path, strict=strict))
        signatures = tuple(signatures)

    def read_agent_targets(key: str) -> dict[str, AgentTarget] | None:
        return reader.records(obj, key, "", lambda record, path: agent_target_from_dict(record, path, strict=strict))

    extension_definitions = reader.mapping(obj, "extension_definitions", "")
    if extension_definitions is not None:
        extension_definitions = {
            key: extension_definition_from_dict(
                _expect_object(record, _pointer("/extension_definitions", key)),
                _pointer("/extension_definitions", key),
                key=key,
                strict=strict,
            )
            for key, record in extension_definitions.items()
        }

    return Playbook(
        type_label=reader.string(obj, "type", "", required=True),
        spec_version=reader.string(obj, "spec_version", "", required=True),
        id=reader.string(obj, "id", "", required=True),
        name=reader.string(obj, "name", "", required=True),
        description=reader.string(obj, "description", ""),
        created=reader.string(obj, "created", "", required=True),
        modified=reader.string(obj, "modified", "", required=True),
        workflow_start=workflow_start,
        workflow=workflow,
        playbook_variables=reader.records(
            obj, "playbook_variables", "", lambda record, path: variable_from_dict(record, path, strict=strict)
        ),
        agent_definitions=read_agent_targets("agent_definitions"),
        target_definitions=read_agent_targets("target_definitions"),
        data_marking_definitions=reader.records(
            obj, "data_marking_definitions", "", lambda record, path: data_marking_from_dict(record, path, strict=strict)
        ),
        markings=reader.string_list(obj, "markings", ""),
        extension_definitions=extension_definitions,
        signatures=signatures,
        other_properties=_extras(obj, _PLAYBOOK_KEYS),
    )


def _expect_object(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, dict):
        raise SchemaError(path, "type mismatch: expected object")
    return value


def playbook_to_dict(pb: Playbook) -> JsonObject:
    data: JsonObject = dict(pb.other_properties)
    data.update(
        {
            "type": pb.type_label,
            "spec_version": pb.spec_version,
            "id": pb.id,
            "name": pb.name,
            "created": pb.created,
            "modified": pb.modified,
            "workflow_start": pb.workflow_start,
            "workflow": {step_id: step_to_dict(step) for step_id, step in pb.workflow.items()},
        }
    )
    optional: dict[str, Any] = {
        "description": pb.description,
        "playbook_variables": _records_to_dict(pb.playbook_variables, variable_to_dict),
        "agent_definitions": _records_to_dict(pb.agent_definitions, agent_target_to_dict),
        "target_definitions": _records_to_dict(pb.target_definitions, agent_target_to_dict),
        "data_marking_definitions": _records_to_dict(pb.data_marking_definitions, data_marking_to_dict),
        "markings": list(pb.markings) if pb.markings is not None else None,
        "extension_definitions": _records_to_dict(pb.extension_definitions, extension_definition_to_dict),
        "signatures": [signature_to_dict(signature) for signature in pb.signatures] if pb.signatures is not None else None,
    }
    data.update({key: value for key, value in optional.items() if value is not None})
    return data


def load_json(text: str | bytes) -> Any:
    """Decode JSON text, reporting syntax errors with their position."""

    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise DocumentSyntaxError("JSON", f"invalid UTF-8: {exc.reason}") from exc
    try:
        return json.loads(text, object_pairs_hook=_object_pairs_hook)
    except json.JSONDecodeError as exc:
        raise DocumentSyntaxError("JSON", exc.msg, exc.lineno, exc.colno) from exc


def parse_playbook(text: str | bytes, *, strict: bool = True) -> Playbook:
    """Parse a CACAO 2.0 JSON document.

    Raises
    ------
    DocumentSyntaxError
        If ``text`` is not JSON.
    SchemaError
        If a mandatory property is missing (strict mode), a modeled property
        has the wrong type, or ``workflow_start`` names an absent step.
    """

    obj = load_json(text)
    if not isinstance(obj, dict):
        raise SchemaError("", "type mismatch: expected a JSON object at the document root")
    playbook = playbook_from_dict(obj, strict=strict)
    logger.info("Parsed playbook %s with %d steps", playbook.id, len(playbook.workflow))
    return playbook


def dump_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def serialize_playbook(pb: Playbook) -> str:
    """Write ``pb`` as canonical CACAO JSON.

    Raises
    ------
    InvalidDocumentError
        If :func:`~cacao_bpmn.validation.validate` reports any violation.
    """

    from cacao_bpmn.validation.validators import validate

    violations = validate(pb)
    if violations:
        raise InvalidDocumentError(violations)
    return dump_json(playbook_to_dict(pb))


__all__ = [
    "agent_target_from_dict",
    "agent_target_to_dict",
    "canonical_json",
    "command_from_dict",
    "command_to_dict",
    "data_marking_from_dict",
    "data_marking_to_dict",
    "dump_json",
    "extension_definition_from_dict",
    "extension_definition_to_dict",
    "load_json",
    "parse_playbook",
    "playbook_from_dict",
    "playbook_to_dict",
    "serialize_playbook",
    "signature_from_dict",
    "signature_to_dict",
    "step_from_dict",
    "step_to_dict",
    "variable_from_dict",
    "variable_to_dict",
    "variables_from_dict",
    "variables_to_dict",
]
