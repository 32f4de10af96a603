"""Tests for BPMN well-formedness checks."""

from dataclasses import replace

from cacao_bpmn.bpmn.model import (
    Definitions,
    Diagram,
    ExclusiveGateway,
    ParallelGateway,
    Process,
    SequenceFlow,
    Shape,
    SubProcess,
    Task,
    TextAnnotation,
)
from cacao_bpmn.bpmn.xml import parse_definitions
from cacao_bpmn.validation.bpmn_checks import DefinitionsChecker, check_well_formed
from tests.bpmn_documents import FOREIGN_BRANCHES, FOREIGN_CHAIN, TWO_TASKS


def chain(*flows, nodes=None):
    """A process over tasks A, B, C (or ``nodes``) with ``flows`` as (id, source, target)."""
    nodes = nodes or [Task(id=name) for name in ("A", "B", "C")]
    return Definitions(
        target_namespace="urn:test",
        process=Process(
            id="P",
            flow_nodes=tuple(nodes),
            sequence_flows=tuple(SequenceFlow(id=flow_id, source_id=s, target_id=t) for flow_id, s, t in flows),
        ),
    )


def codes(defs):
    return [violation.code for violation in check_well_formed(defs)]


class TestWellFormedDocuments:
    """Documents without defects produce no findings."""

    def test_hand_written_documents(self):
        assert check_well_formed(parse_definitions(TWO_TASKS)) == []
        assert check_well_formed(parse_definitions(FOREIGN_BRANCHES)) == []

    def test_model_without_partial_diagram(self):
        defs = parse_definitions(FOREIGN_CHAIN)
        assert check_well_formed(replace(defs, diagram=None)) == []


class TestStructuralDefects:
    """Each structural defect is reported with its own code."""

    def test_dangling_flow_target(self):
        violations = check_well_formed(chain(("F1", "A", "B"), ("F2", "B", "Z")))

        assert [(violation.code, violation.path) for violation in violations] == [("dangling-flow-target", "F2")]

    def test_duplicate_id(self):
        defs = chain(("A", "A", "B"))
        assert "duplicate-id" in codes(defs)

    def test_invalid_id(self):
        defs = chain(nodes=[Task(id="1st"), Task(id="B")])
        assert codes(defs) == ["invalid-id"]

    def test_diverging_gateway_with_one_branch(self):
        nodes = [Task(id="A"), ParallelGateway(id="G", direction="diverging"), Task(id="B")]
        violations = check_well_formed(chain(("F1", "A", "G"), ("F2", "G", "B"), nodes=nodes))

        assert [(violation.code, violation.path) for violation in violations] == [("gateway-degree", "G")]

    def test_converging_gateway_with_two_exits(self):
        nodes = [Task(id="A"), Task(id="B"), ExclusiveGateway(id="G", direction="converging"), Task(id="C"), Task(id="D")]
        flows = [("F1", "A", "G"), ("F2", "B", "G"), ("F3", "G", "C"), ("F4", "G", "D")]
        assert codes(chain(*flows, nodes=nodes)) == ["gateway-degree"]

    def test_condition_outside_split(self):
        defs = chain(("F1", "A", "B"))
        flow = replace(defs.process.sequence_flows[0], condition_text="x")
        defs = replace(defs, process=replace(defs.process, sequence_flows=(flow,)))

        assert codes(defs) == ["condition-placement"]

    def test_default_flow_must_leave_gateway(self):
        nodes = [
            ExclusiveGateway(id="G", direction="diverging", default_flow="F3"),
            Task(id="B"),
            Task(id="C"),
        ]
        flows = [("F1", "G", "B"), ("F2", "G", "C"), ("F3", "B", "C")]
        assert codes(chain(*flows, nodes=nodes)) == ["dangling-default-flow"]

    def test_cross_scope_flow(self):
        inner = SubProcess(id="S", flow_nodes=(Task(id="B"),))
        defs = chain(("F1", "A", "B"), nodes=[Task(id="A"), inner])
        assert codes(defs) == ["cross-scope-flow"]

    def test_sub_process_with_two_entries(self):
        inner = SubProcess(id="S", flow_nodes=(Task(id="B"), Task(id="C")))
        defs = chain(("F1", "A", "S"), nodes=[Task(id="A"), inner])
        assert codes(defs) == ["subprocess-entry"]

    def test_sub_process_with_detached_cycle(self):
        flows = [("F2", "B", "C"), ("F3", "D", "E"), ("F4", "E", "D")]
        inner = SubProcess(
            id="S",
            flow_nodes=tuple(Task(id=name) for name in "BCDE"),
            sequence_flows=tuple(SequenceFlow(id=flow_id, source_id=s, target_id=t) for flow_id, s, t in flows),
        )
        defs = chain(("F1", "A", "S"), nodes=[Task(id="A"), inner])

        violations = check_well_formed(defs)
        assert [violation.code for violation in violations] == ["subprocess-connectivity"]
        assert "D, E" in violations[0].message

    def test_empty_annotation(self):
        defs = chain()
        defs = replace(defs, process=replace(defs.process, annotations=(TextAnnotation(id="N", text=""),)))
        assert codes(defs) == ["empty-annotation"]


class TestDiagramChecks:
    """Diagram coverage is checked only when a diagram is present."""

    def test_missing_shape(self):
        defs = replace(chain(("F1", "A", "B"), nodes=[Task(id="A"), Task(id="B")]), diagram=Diagram())
        assert sorted(codes(defs)) == ["diagram-coverage"] * 3

    def test_shape_for_unknown_element(self):
        defs = replace(chain(nodes=[Task(id="A")]), diagram=Diagram(shapes=(
            Shape(element_id="A", x=0, y=0, width=100, height=80),
            Shape(element_id="Ghost", x=200, y=0, width=100, height=80),
        )))
        assert codes(defs) == ["dangling-diagram-element"]

    def test_partial_foreign_diagram(self):
        violations = check_well_formed(parse_definitions(FOREIGN_CHAIN))
        assert {violation.path for violation in violations} == {
            "Task_Block",
            "Task_Notify",
            "EndEvent_1",
            "Flow_1",
            "Flow_2",
            "Flow_3",
            "Flow_4",
        }


def test_results_keyed_by_check():
    checker = DefinitionsChecker(parse_definitions(TWO_TASKS))
    results = checker.run_all()

    assert set(results) == {check.__name__ for check in checker.checks()}
    assert checker.violations == []
