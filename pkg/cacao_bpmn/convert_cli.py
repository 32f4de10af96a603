"""Command-line front end for converting between CACAO playbooks and BPMN."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Any, Literal, Sequence

from cacao_bpmn.analysis.constructs import count_constructs
from cacao_bpmn.bpmn.model import Definitions
from cacao_bpmn.bpmn.xml import parse_definitions, serialize_definitions
from cacao_bpmn.cacao.codec import parse_playbook, playbook_to_dict, serialize_playbook
from cacao_bpmn.cacao.model import Playbook
from cacao_bpmn.errors import (
    ConversionError,
    DocumentSyntaxError,
    InvalidDocumentError,
    UnsupportedElementError,
)
from cacao_bpmn.layout import layout
from cacao_bpmn.mapping.forward import MAPPING_STYLES, MappingOptions, map_playbook
from cacao_bpmn.mapping.reverse import ImportPolicy, map_to_cacao
from cacao_bpmn.utils.config import Config
from cacao_bpmn.utils.logging import configure_logging
from cacao_bpmn.validation.bpmn_checks import check_well_formed
from cacao_bpmn.validation.validators import Violation, validate

logger = logging.getLogger(__name__)

DocumentFormat = Literal["cacao", "bpmn"]
FORMATS: tuple[DocumentFormat, ...] = ("cacao", "bpmn")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class _Failure(Exception):
    """Ends a subcommand with an exit code after its message was printed."""

    def __init__(self, code: int):
        self.code = code
        super().__init__(code)


def sniff_format(text: str) -> DocumentFormat:
    """Detect the document format from its first non-whitespace character."""

    head = text.lstrip("\ufeff \t\r\n")[:1]
    if head == "{":
        return "cacao"
    if head == "<":
        return "bpmn"
    raise DocumentSyntaxError("input", "cannot detect the document format; use --from")


def _read_input(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    return Path(source).expanduser().read_bytes().decode("utf-8-sig")


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""

    path = path.expanduser()
    descriptor, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(descriptor, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(temporary, path)
    except BaseException:
        Path(temporary).unlink(missing_ok=True)
        raise
    logger.info("Wrote %s", path)


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        write_atomic(output, text)


def _report(violations: Sequence[Violation]) -> None:
    for violation in violations:
        print(violation, file=sys.stderr)


def _options(args: argparse.Namespace) -> MappingOptions:
    return MappingOptions(parallel_style=args.parallel_style, conditional_style=args.conditional_style)


def _load(args: argparse.Namespace) -> tuple[DocumentFormat, str]:
    text = _read_input(args.input)
    return (args.source_format or sniff_format(text)), text


def _checked_model(text: str) -> Definitions:
    """Parse BPMN input and check its model; partial diagrams are completed later."""

    defs = parse_definitions(text)
    violations = check_well_formed(replace(defs, diagram=None))
    if violations:
        _report(violations)
        raise _Failure(EXIT_INVALID)
    return defs


def _import(text: str, mode: str) -> Playbook:
    return map_to_cacao(_checked_model(text), ImportPolicy(mode=mode))


# --- Subcommands ---


def convert(args: argparse.Namespace) -> int:
    source, text = _load(args)
    target: DocumentFormat = args.target_format or ("bpmn" if source == "cacao" else "cacao")

    if source == "cacao":
        pb = parse_playbook(text)
        violations = validate(pb)
        if violations:
            _report(violations)
            return EXIT_INVALID
        if target == "cacao":
            result = serialize_playbook(pb)
        else:
            result = serialize_definitions(layout(map_playbook(pb, _options(args))))
    elif target == "bpmn":
        result = serialize_definitions(layout(_checked_model(text)))
    else:
        result = serialize_playbook(_import(text, args.import_mode))

    _emit(result, args.output)
    return EXIT_OK


def validate_document(args: argparse.Namespace) -> int:
    source, text = _load(args)
    if source == "cacao":
        violations = validate(parse_playbook(text, strict=False))
    else:
        violations = check_well_formed(parse_definitions(text))
    for violation in violations:
        print(violation)
    return EXIT_INVALID if violations else EXIT_OK


def json_diff(expected: Any, actual: Any, path: str = "") -> list[str]:
    """Return one line per JSON-pointer path where two trees differ."""

    if isinstance(expected, dict) and isinstance(actual, dict):
        lines = []
        for key in sorted(expected.keys() | actual.keys()):
            child = f"{path}/{str(key).replace('~', '~0').replace('/', '~1')}"
            if key not in actual:
                lines.append(f"{child}: missing")
            elif key not in expected:
                lines.append(f"{child}: unexpected")
            else:
                lines.extend(json_diff(expected[key], actual[key], child))
        return lines
    if isinstance(expected, list) and isinstance(actual, list) and len(expected) == len(actual):
        return [line for index, (left, right) in enumerate(zip(expected, actual)) for line in json_diff(left, right, f"{path}/{index}")]
    if expected == actual and type(expected) is type(actual):
        return []
    left, right = (json.dumps(value, sort_keys=True, ensure_ascii=False) for value in (expected, actual))
    return [f"{path or '/'}: {left} != {right}"]


def roundtrip(args: argparse.Namespace) -> int:
    source, text = _load(args)
    if source != "cacao":
        print("error: roundtrip expects a CACAO playbook", file=sys.stderr)
        return EXIT_IO
    pb = parse_playbook(text)
    xml = serialize_definitions(layout(map_playbook(pb, _options(args))))
    back = map_to_cacao(parse_definitions(xml), ImportPolicy(mode="strict"))
    differences = json_diff(playbook_to_dict(pb), playbook_to_dict(back))
    if differences:
        for line in differences:
            print(line)
        return EXIT_INVALID
    print("roundtrip: ok")
    return EXIT_OK


def inspect(args: argparse.Namespace) -> int:
    source, text = _load(args)
    pb = parse_playbook(text) if source == "cacao" else _import(text, args.import_mode)
    for entry in count_constructs(pb):
        print(entry)
    return EXIT_OK


# --- Parser ---


def _add_input(subparser: argparse.ArgumentParser) -> None:
    subparser.add_argument("input", help="Input document path, or '-' for standard input.")
    subparser.add_argument(
        "--from",
        dest="source_format",
        choices=FORMATS,
        help="Input format; detected from the first character when omitted.",
    )


def _add_styles(subparser: argparse.ArgumentParser) -> None:
    subparser.add_argument(
        "--parallel-style",
        choices=MAPPING_STYLES,
        default="gateway-pair",
        help="BPMN encoding of parallel steps (default: %(default)s).",
    )
    subparser.add_argument(
        "--conditional-style",
        choices=MAPPING_STYLES,
        default="gateway-pair",
        help="BPMN encoding of if- and switch-conditions (default: %(default)s).",
    )


def _add_import_mode(subparser: argparse.ArgumentParser) -> None:
    subparser.add_argument(
        "--import-mode",
        choices=("strict", "best-effort"),
        default=Config.IMPORT_MODE,
        help="How BPMN input is turned into a playbook (default: %(default)s).",
    )


def get_argument_parser() -> argparse.ArgumentParser:
    """Construct and return the argument parser for the converter CLI."""

    parser = argparse.ArgumentParser(
        prog="cacao-bpmn",
        description="Convert, validate and inspect CACAO 2.0 playbooks and BPMN 2.0 processes.",
    )
    parser.add_argument(
        "--log-level",
        default=Config.LOG_LEVEL,
        help="Logging verbosity (default: %(default)s). Accepts standard level names or numeric values.",
    )
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors.")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")

    convert_parser = subparsers.add_parser("convert", help="Convert a document to the other format.")
    _add_input(convert_parser)
    convert_parser.add_argument("--to", dest="target_format", choices=FORMATS, help="Output format (default: the other one).")
    convert_parser.add_argument("--output", "-o", type=Path, help="Output path; standard output when omitted.")
    _add_styles(convert_parser)
    _add_import_mode(convert_parser)
    convert_parser.set_defaults(handler=convert)

    validate_parser = subparsers.add_parser("validate", help="Print conformance violations, one per line.")
    _add_input(validate_parser)
    validate_parser.set_defaults(handler=validate_document)

    roundtrip_parser = subparsers.add_parser("roundtrip", help="Check that CACAO -> BPMN -> CACAO is lossless.")
    _add_input(roundtrip_parser)
    _add_styles(roundtrip_parser)
    roundtrip_parser.set_defaults(handler=roundtrip)

    inspect_parser = subparsers.add_parser("inspect", help="Count mapped constructs per mapping table row.")
    _add_input(inspect_parser)
    _add_import_mode(inspect_parser)
    inspect_parser.set_defaults(handler=inspect)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Run one CLI invocation and return its exit code.

    Exit codes: 0 on success, 1 for semantic or validation failures, 2 for
    usage, I/O and syntax errors.
    """

    parser = get_argument_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_IO

    try:
        configure_logging(args.log_level, quiet=args.quiet)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        return args.handler(args)
    except _Failure as failure:
        return failure.code
    except (DocumentSyntaxError, UnsupportedElementError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidDocumentError as exc:
        _report(exc.violations)
        return EXIT_INVALID
    except ConversionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point for the ``cacao-bpmn`` console script."""

    return run(argv)


if __name__ == "__main__":  # pragma: no cover - manual invocation only
    raise SystemExit(main())
