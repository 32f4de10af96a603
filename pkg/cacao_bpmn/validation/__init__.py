"""Conformance checks for CACAO playbooks and BPMN definitions."""

from .bpmn_checks import DefinitionsChecker, check_well_formed
from .validators import PlaybookValidator, Violation, validate

__all__ = [
    "DefinitionsChecker",
    "PlaybookValidator",
    "Violation",
    "check_well_formed",
    "validate",
]
