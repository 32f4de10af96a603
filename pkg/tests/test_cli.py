"""Tests for the command-line front end."""

import json
import logging
import time

import pytest

from cacao_bpmn.bpmn.xml import parse_definitions
from cacao_bpmn.convert_cli import (
    EXIT_INVALID,
    EXIT_IO,
    EXIT_OK,
    json_diff,
    main,
    run,
    sniff_format,
    write_atomic,
)
from cacao_bpmn.errors import DocumentSyntaxError
from tests.bpmn_documents import FOREIGN_CHAIN, MESSAGE_EVENT, UNSTRUCTURED
from tests.playbook_factory import fixed_id, generate_playbook

ROUNDTRIP_SECONDS = 1.0


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    level, handlers = root.level, list(root.handlers)
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def write_text(tmp_path):
    def _write(text, name="process.bpmn"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


class TestConvert:
    """Test the convert subcommand."""

    def test_playbook_to_file(self, write_json, minimal_dict, tmp_path):
        output = tmp_path / "out.bpmn"

        assert run(["convert", str(write_json(minimal_dict)), "-o", str(output)]) == EXIT_OK

        defs = parse_definitions(output.read_text(encoding="utf-8"))
        assert defs.process.id == minimal_dict["id"]
        assert defs.diagram is not None
        assert sorted(path.name for path in tmp_path.iterdir()) == ["out.bpmn", "playbook.json"]

    def test_playbook_to_stdout(self, write_json, rich_dict, capsys):
        assert run(["--quiet", "convert", str(write_json(rich_dict)), "--parallel-style", "subprocess"]) == EXIT_OK
        assert capsys.readouterr().out.startswith("<?xml version='1.0' encoding='UTF-8'?>")

    def test_canonicalize_playbook(self, write_json, minimal_dict, capsys):
        assert run(["convert", str(write_json(minimal_dict)), "--to", "cacao"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out) == minimal_dict

    def test_control_characters(self, write_json, rich_dict, tmp_path, capsys):
        contain = rich_dict["workflow"][fixed_id("action", 4)]
        contain["name"] = "\x1b[31mContain\x1b[0m host"
        contain["description"] = "rings the bell\x07"
        contain["commands"] = [{"type": "bash", "command": "printf '\x1b[31mALERT\x1b[0m'"}]
        output = tmp_path / "out.bpmn"

        assert run(["convert", str(write_json(rich_dict)), "-o", str(output)]) == EXIT_OK
        assert run(["convert", str(output), "--import-mode", "strict"]) == EXIT_OK

        step = json.loads(capsys.readouterr().out)["workflow"][fixed_id("action", 4)]
        assert step["name"] == contain["name"]
        assert step["description"] == contain["description"]
        assert step["commands"][0]["command"] == contain["commands"][0]["command"]

    def test_invalid_playbook(self, write_json, minimal_dict, capsys):
        minimal_dict["created"], minimal_dict["modified"] = minimal_dict["modified"], minimal_dict["created"]

        assert run(["convert", str(write_json(minimal_dict))]) == EXIT_INVALID
        assert "versioning-order" in capsys.readouterr().err

    def test_best_effort_import_of_partial_diagram(self, write_text, capsys):
        path = write_text(FOREIGN_CHAIN)

        assert run(["convert", str(path), "--import-mode", "best-effort"]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["name"] == "Phishing triage"
        assert len(data["workflow"]) == 5

    def test_strict_import_of_plain_bpmn(self, write_text, capsys):
        assert run(["convert", str(write_text(FOREIGN_CHAIN)), "--import-mode", "strict"]) == EXIT_INVALID
        assert "import-metadata" in capsys.readouterr().err

    def test_bpmn_layout_is_completed(self, write_text, capsys):
        assert run(["convert", str(write_text(FOREIGN_CHAIN)), "--to", "bpmn"]) == EXIT_OK

        shapes = parse_definitions(capsys.readouterr().out).diagram.shape_map()
        assert (shapes["Task_Review"].x, shapes["Task_Review"].y) == (240, 80)
        assert "EndEvent_1" in shapes

    def test_unstructured_process(self, write_text, capsys):
        assert run(["convert", str(write_text(UNSTRUCTURED)), "--import-mode", "best-effort"]) == EXIT_INVALID
        assert "unstructured-flow" in capsys.readouterr().err


class TestValidate:
    """Test the validate subcommand."""

    def test_valid_playbook(self, write_json, rich_dict, capsys):
        assert run(["validate", str(write_json(rich_dict))]) == EXIT_OK
        assert capsys.readouterr().out == ""

    def test_versioning_order(self, write_json, minimal_dict, capsys):
        minimal_dict["modified"] = "2020-01-01T00:00:00Z"

        assert run(["validate", str(write_json(minimal_dict))]) == EXIT_INVALID
        assert capsys.readouterr().out.startswith("versioning-order /modified")

    def test_impossible_date(self, write_json, minimal_dict, capsys):
        minimal_dict["created"] = "2024-02-30T09:30:00.000Z"

        assert run(["validate", str(write_json(minimal_dict))]) == EXIT_INVALID
        assert "invalid-timestamp /created" in capsys.readouterr().out

    def test_partial_diagram(self, write_text, capsys):
        assert run(["validate", str(write_text(FOREIGN_CHAIN))]) == EXIT_INVALID
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 7
        assert all(line.startswith("diagram-coverage ") for line in lines)


class TestRoundtripAndInspect:
    def test_roundtrip_ok(self, write_json, rich_dict, capsys):
        assert run(["roundtrip", str(write_json(rich_dict)), "--conditional-style", "subprocess"]) == EXIT_OK
        assert capsys.readouterr().out == "roundtrip: ok\n"

    @pytest.mark.parametrize("seed", range(0, 200, 8))
    def test_roundtrip_generated(self, write_json, seed, capsys):
        path = write_json(generate_playbook(seed))

        started = time.perf_counter()
        assert run(["roundtrip", str(path)]) == EXIT_OK
        elapsed = time.perf_counter() - started

        assert capsys.readouterr().out == "roundtrip: ok\n"
        assert elapsed < ROUNDTRIP_SECONDS

    def test_roundtrip_needs_playbook(self, write_text, capsys):
        assert run(["roundtrip", str(write_text(FOREIGN_CHAIN))]) == EXIT_IO
        assert "expects a CACAO playbook" in capsys.readouterr().err

    def test_inspect_playbook(self, write_json, rich_dict, capsys):
        assert run(["inspect", str(write_json(rich_dict))]) == EXIT_OK

        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 16
        assert lines[0] == "row 1 playbook: 1"
        assert "row 6 action: 8" in lines

    def test_inspect_bpmn(self, write_text, capsys):
        assert run(["inspect", str(write_text(FOREIGN_CHAIN)), "--import-mode", "best-effort"]) == EXIT_OK
        assert "row 6 action: 3" in capsys.readouterr().out.splitlines()


class TestUsageAndIoErrors:
    """Usage, I/O and syntax problems exit with code 2."""

    def test_unknown_flag(self, capsys):
        assert run(["convert", "x.json", "--bogus"]) == EXIT_IO
        assert "unrecognized arguments" in capsys.readouterr().err

    def test_missing_subcommand(self):
        assert main([]) == EXIT_IO

    def test_missing_file(self, tmp_path, capsys):
        assert run(["validate", str(tmp_path / "absent.json")]) == EXIT_IO
        assert "error:" in capsys.readouterr().err

    def test_undetectable_format(self, write_text, capsys):
        assert run(["validate", str(write_text("hello", "notes.txt"))]) == EXIT_IO
        assert "--from" in capsys.readouterr().err

    def test_json_syntax_error(self, write_text):
        assert run(["validate", str(write_text('{"type": ', "broken.json"))]) == EXIT_IO

    def test_unsupported_bpmn_element(self, write_text, capsys):
        assert run(["validate", str(write_text(MESSAGE_EVENT))]) == EXIT_IO
        assert "intermediateCatchEvent" in capsys.readouterr().err

    @pytest.mark.parametrize("value", ["abc", "1e400"])
    def test_bad_diagram_coordinate(self, write_text, value, capsys):
        path = write_text(FOREIGN_CHAIN.replace('x="240"', f'x="{value}"', 1))

        assert run(["validate", str(path)]) == EXIT_IO
        assert "not a finite number" in capsys.readouterr().err

    def test_forced_format(self, write_json, minimal_dict):
        assert run(["validate", "--from", "bpmn", str(write_json(minimal_dict))]) == EXIT_IO

    def test_bad_log_level(self, write_json, minimal_dict, capsys):
        assert run(["--log-level", "chatty", "validate", str(write_json(minimal_dict))]) == EXIT_IO
        assert "Unknown logging level" in capsys.readouterr().err


class TestHelpers:
    @pytest.mark.parametrize(("text", "expected"), [('{"a": 1}', "cacao"), ("\ufeff  <bpmn:definitions/>", "bpmn")])
    def test_sniff_format(self, text, expected):
        assert sniff_format(text) == expected

    def test_sniff_format_rejects_other_text(self):
        with pytest.raises(DocumentSyntaxError):
            sniff_format("   ")

    def test_json_diff(self):
        expected = {"a": 1, "b": [1, 2], "c": {"d": "x"}, "e/f": True}
        actual = {"a": 1, "b": [1, 3], "c": {}, "e/f": 1, "g": None}

        assert json_diff(expected, actual) == ["/b/1: 2 != 3", "/c/d: missing", "/e~1f: true != 1", "/g: unexpected"]
        assert json_diff(expected, expected) == []

    def test_write_atomic(self, tmp_path):
        target = tmp_path / "out.json"
        write_atomic(target, "first\n")
        write_atomic(target, "second\n")

        assert target.read_text(encoding="utf-8") == "second\n"
        assert [path.name for path in tmp_path.iterdir()] == ["out.json"]
