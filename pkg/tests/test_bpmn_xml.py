"""Tests for the BPMN XML reader and writer."""

from dataclasses import replace

import pytest

from cacao_bpmn.bpmn.model import (
    CACAO_NS,
    ExclusiveGateway,
    ExtensionBag,
    ParallelGateway,
    SubProcess,
    Task,
    iter_flow_nodes,
    xml_safe,
)
from cacao_bpmn.bpmn.xml import parse_definitions, serialize_definitions
from cacao_bpmn.errors import (
    DocumentSyntaxError,
    ImportMetadataError,
    InvalidDocumentError,
    SchemaError,
    UnsupportedElementError,
)
from tests.bpmn_documents import FOREIGN_BRANCHES, FOREIGN_CHAIN, MESSAGE_EVENT, TWO_TASKS, definitions


class TestParseDefinitions:
    """Test reading BPMN documents."""

    def test_two_tasks(self):
        defs = parse_definitions(TWO_TASKS)

        assert defs.id == "Definitions_1"
        assert defs.process.id == "Process_1"
        assert [node.id for node in defs.process.flow_nodes] == ["Task_1", "Task_2"]
        assert len(defs.process.sequence_flows) == 1
        assert defs.diagram is None

    def test_task_kinds(self):
        defs = parse_definitions(FOREIGN_CHAIN)
        kinds = {node.id: node.task_kind for node in defs.process.flow_nodes if isinstance(node, Task)}

        assert kinds == {"Task_Review": "user", "Task_Block": "service", "Task_Notify": "abstract"}

    def test_partial_diagram_is_read(self):
        defs = parse_definitions(FOREIGN_CHAIN)
        shapes = defs.diagram.shape_map()

        assert set(shapes) == {"StartEvent_1", "Task_Review"}
        assert (shapes["Task_Review"].x, shapes["Task_Review"].right) == (240, 340)

    def test_gateway_direction_is_inferred(self):
        nodes = {node.id: node for node in iter_flow_nodes(parse_definitions(FOREIGN_BRANCHES).process)}

        assert isinstance(nodes["Gateway_Split"], ExclusiveGateway)
        assert nodes["Gateway_Split"].direction == "diverging"
        assert nodes["Gateway_Merge"].direction == "converging"
        assert isinstance(nodes["Gateway_Join"], ParallelGateway)
        assert nodes["Gateway_Join"].direction == "converging"

    def test_loop_sub_process(self):
        defs = parse_definitions(FOREIGN_BRANCHES)
        loop = next(node for node in defs.process.flow_nodes if isinstance(node, SubProcess))

        assert loop.loop.condition_text == "infected"
        assert loop.loop.test_before is True
        assert [node.id for node in loop.flow_nodes] == ["Task_Poll"]

    def test_condition_expression(self):
        defs = parse_definitions(FOREIGN_BRANCHES)
        flows = {flow.id: flow for flow in defs.process.sequence_flows}

        assert flows["Flow_2"].condition_text == "verdict == 'malicious'"
        assert flows["Flow_2"].name == "true"
        assert flows["Flow_3"].condition_text is None

    def test_element_order_does_not_matter(self):
        reordered = TWO_TASKS.replace(
            '<bpmn:task id="Task_1" name="Collect logs" />\n    <bpmn:task id="Task_2" name="Archive logs" />',
            '<bpmn:task id="Task_2" name="Archive logs" />\n    <bpmn:task id="Task_1" name="Collect logs" />',
        )
        assert reordered != TWO_TASKS
        assert parse_definitions(reordered) == parse_definitions(TWO_TASKS)


class TestParseErrors:
    """Test rejection of unreadable or unsupported input."""

    def test_syntax_error(self):
        with pytest.raises(DocumentSyntaxError) as excinfo:
            parse_definitions('<?xml version="1.0"?>\n<definitions>\n<unclosed>')
        assert excinfo.value.document_format == "XML"
        assert excinfo.value.line is not None

    @pytest.mark.parametrize("value", ["abc", "1e400", "nan"])
    def test_bad_coordinate(self, value):
        text = FOREIGN_CHAIN.replace('x="240"', f'x="{value}"', 1)
        with pytest.raises(DocumentSyntaxError, match="not a finite number") as excinfo:
            parse_definitions(text)
        assert excinfo.value.line is not None

    def test_intermediate_event_is_unsupported(self):
        with pytest.raises(UnsupportedElementError, match="unsupported element: intermediateCatchEvent") as excinfo:
            parse_definitions(MESSAGE_EVENT)
        assert excinfo.value.element == "intermediateCatchEvent"

    def test_lane_set_is_unsupported(self):
        text = definitions(
            """
  <bpmn:process id="Process_1">
    <bpmn:laneSet id="LaneSet_1" />
    <bpmn:task id="Task_1" />
  </bpmn:process>"""
        )
        with pytest.raises(UnsupportedElementError, match="laneSet"):
            parse_definitions(text)

    def test_foreign_root(self):
        with pytest.raises(UnsupportedElementError, match="playbook"):
            parse_definitions("<playbook />")

    def test_no_process(self):
        with pytest.raises(SchemaError, match="no process"):
            parse_definitions(definitions(""))

    def test_flow_without_target(self):
        text = TWO_TASKS.replace(' targetRef="Task_2"', "")
        with pytest.raises(SchemaError, match="targetRef"):
            parse_definitions(text)


class TestSerializeDefinitions:
    """Test the deterministic writer."""

    @pytest.mark.parametrize("document", [TWO_TASKS, FOREIGN_BRANCHES], ids=["two-tasks", "branches"])
    def test_reparse_gives_same_model(self, document):
        defs = parse_definitions(document)
        assert parse_definitions(serialize_definitions(defs)) == defs

    def test_output_is_stable(self):
        defs = parse_definitions(FOREIGN_BRANCHES)
        first = serialize_definitions(defs)

        assert serialize_definitions(parse_definitions(first)) == first
        assert first.startswith("<?xml version='1.0' encoding='UTF-8'?>\n<bpmn:definitions")

    def test_fixed_prefixes(self):
        text = serialize_definitions(parse_definitions(TWO_TASKS))

        assert 'xmlns:bpmn="http://www.omg.org/spec/BPMN/20100524/MODEL"' in text
        assert 'xmlns:cacao="urn:cacao:bpmn:2.0"' in text
        assert 'gatewayDirection' not in text

    def test_foreign_extension_attributes_survive(self):
        text = TWO_TASKS.replace(
            '<bpmn:task id="Task_1" name="Collect logs" />',
            '<bpmn:task id="Task_1" name="Collect logs" x:owner="soc" />',
        ).replace("<bpmn:definitions ", '<bpmn:definitions xmlns:x="urn:example:tooling" ', 1)
        defs = parse_definitions(text)

        written = serialize_definitions(defs)
        task = next(node for node in parse_definitions(written).process.flow_nodes if node.id == "Task_1")

        assert task.extensions[("urn:example:tooling", "owner")] == "soc"
        assert 'xmlns:ns1="urn:example:tooling"' in written

    def test_refuses_partial_diagram(self):
        with pytest.raises(InvalidDocumentError) as excinfo:
            serialize_definitions(parse_definitions(FOREIGN_CHAIN))
        assert {violation.code for violation in excinfo.value.violations} == {"diagram-coverage"}

    def test_control_character_in_name(self):
        defs = parse_definitions(TWO_TASKS)
        first, *rest = defs.process.flow_nodes
        broken = replace(defs, process=replace(defs.process, flow_nodes=(replace(first, name="bell\x07"), *rest)))

        with pytest.raises(SchemaError, match="cannot be written as XML"):
            serialize_definitions(broken)


class TestExtensionBag:
    """Values XML cannot carry are stored JSON-encoded."""

    def test_unsafe_value_is_escaped(self):
        bag = ExtensionBag.cacao({"description": "red \x1b[31malert\x1b[0m", "switch": "__severity__"})

        assert (CACAO_NS, "description") not in bag
        assert bag[(CACAO_NS, "description-json")] == '"red \\u001b[31malert\\u001b[0m"'
        assert bag.get_cacao("description") == "red \x1b[31malert\x1b[0m"
        assert bag.get_cacao("switch") == "__severity__"

    def test_escaped_value_survives_xml(self):
        defs = parse_definitions(TWO_TASKS)
        first, *rest = defs.process.flow_nodes
        tagged = replace(first, extensions=ExtensionBag.cacao({"description": "nul\x00 and \ud800"}))
        defs = replace(defs, process=replace(defs.process, flow_nodes=(tagged, *rest)))

        reread = parse_definitions(serialize_definitions(defs))

        assert next(iter(reread.process.flow_nodes)).extensions.get_cacao("description") == "nul\x00 and \ud800"

    def test_corrupt_escaped_value(self):
        bag = ExtensionBag({(CACAO_NS, "description-json"): "[1, 2]"})
        with pytest.raises(ImportMetadataError, match="description-json"):
            bag.get_cacao("description")

    @pytest.mark.parametrize(("text", "expected"), [("plain", "plain"), ("a\x00b\ufffe", "a\ufffdb\ufffd"), ("tab\tok\n", "tab\tok\n")])
    def test_xml_safe(self, text, expected):
        assert xml_safe(text) == expected
