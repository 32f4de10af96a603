"""Exception hierarchy shared by the codecs, mappers and layout."""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from cacao_bpmn.validation.validators import Violation


class ConversionError(ValueError):
    """Base class for every failure raised by the converter."""


class DocumentSyntaxError(ConversionError):
    """A JSON or XML document could not be read at all."""

    def __init__(self, document_format: str, message: str, line: int | None = None, column: int | None = None):
        self.document_format = document_format
        self.line = line
        self.column = column
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{document_format} syntax error{location}: {message}")


class SchemaError(ConversionError):
    """A modeled property is missing or has the wrong type."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{message} at {path or '/'}")


class DanglingReferenceError(SchemaError):
    def __init__(self, path: str, prop: str):
        self.prop = prop
        super().__init__(path, f"dangling reference: {prop}")


class UnsupportedElementError(ConversionError):
    """A BPMN element outside the mapped subset was encountered."""

    def __init__(self, element: str, line: int | None = None):
        self.element = element
        self.line = line
        location = f" (line {line})" if line is not None else ""
        super().__init__(f"unsupported element: {element}{location}")


class InvalidDocumentError(ConversionError):
    """Refusal to emit a document that fails its own checks."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = tuple(violations)
        summary = "; ".join(str(violation) for violation in self.violations[:3])
        more = f" (+{len(self.violations) - 3} more)" if len(self.violations) > 3 else ""
        super().__init__(f"invalid document: {summary}{more}")


class MappingError(ConversionError):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


class UnstructuredFlowError(MappingError):
    """A gateway has no single-entry/single-exit partner."""

    def __init__(self, element_id: str, code: str = "unstructured-flow", detail: str | None = None):
        self.element_id = element_id
        super().__init__(code, detail or f"no structured region around {element_id}")


class ImportMetadataError(MappingError):
    """Strict import found converter metadata missing or corrupt."""

    def __init__(self, attribute: str, element_id: str | None = None, detail: str | None = None):
        self.attribute = attribute
        self.element_id = element_id
        where = f" on {element_id}" if element_id else ""
        super().__init__("import-metadata", detail or f"missing or corrupt {attribute}{where}")


class LayoutError(ConversionError):
    pass


__all__ = [
    "ConversionError",
    "DanglingReferenceError",
    "DocumentSyntaxError",
    "ImportMetadataError",
    "InvalidDocumentError",
    "LayoutError",
    "MappingError",
    "SchemaError",
    "UnstructuredFlowError",
    "UnsupportedElementError",
]
