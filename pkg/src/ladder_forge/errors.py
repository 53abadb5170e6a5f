"""Exception types shared across the package."""

from __future__ import annotations


class LadderError(Exception):
    """Base class for all data errors raised by ladder_forge."""


class ParseError(LadderError, ValueError):
    """Text could not be tokenized or does not follow the format grammar."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class SchemaError(LadderError, ValueError):
    """Well-formed input that uses unknown element types, tags or attributes."""


class WiringError(LadderError, ValueError):
    """Connectivity that cannot be turned into a valid graph (dangling or ambiguous)."""


class GraphValidationError(LadderError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations[:5])
        if len(self.violations) > 5:
            summary += f"; ... ({len(self.violations)} total)"
        super().__init__(f"invalid graph: {summary}")


class LayoutError(LadderError, ValueError):
    """A valid graph that has no grid layout under the XML wiring rules."""


class DegeneratePairError(LadderError):
    """Every negative candidate is identical to the ground truth."""
