"""Error types raised by the public API.

Everything domain-level derives from McumlError so callers (and the CLI)
can distinguish bad models/data/options (exit 1) from usage mistakes.
"""

from __future__ import annotations


class McumlError(Exception):
    """Base class for all domain errors."""


class SchemaError(McumlError):
    """Model JSON is malformed: wrong type, missing field, unknown enum value."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class StructureError(McumlError):
    """A structurally invalid model: one or more type invariants violated."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class FormatMismatch(McumlError):
    """Fixed-point operands carry different Q formats."""


class DivisionByZero(McumlError):
    """Fixed-point division by raw zero."""


class NegativeInput(McumlError):
    """Square root of a negative fixed-point value."""


class Unsupported(McumlError):
    """Family/option combination the generator does not emit."""


class DimensionMismatch(McumlError):
    """Input vector or dataset width disagrees with the model."""


class ParseError(McumlError):
    """CSV cell that cannot be read; names the offending row and column."""

    def __init__(self, row: int, column, message: str):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column}: {message}")


class MissingLabelColumn(McumlError):
    """Requested label column absent from the CSV header."""


class DegenerateClass(McumlError):
    """A class with fewer than two instances cannot be split."""


class LabelMismatch(McumlError):
    """Dataset class label that the model does not know."""


class MismatchedRuns(McumlError):
    """Comparison of eval reports from different models or test sets."""
