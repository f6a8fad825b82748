"""Exception hierarchy shared by the polynomial, map, inversion and CLI layers."""

from __future__ import annotations

from typing import Any, Optional, Sequence


class PolymapError(Exception):
    """Base class for every error raised by the package."""


class DimensionMismatch(PolymapError, ValueError):
    """Operands live in polynomial rings of different dimension."""

    def __init__(self, left: int, right: int, context: str = ""):
        self.left = left
        self.right = right
        where = f" in {context}" if context else ""
        super().__init__(f"dimension mismatch{where}: {left} != {right}")


class VariableIndexError(PolymapError, IndexError):
    """A variable index lies outside 0..dimension-1."""

    def __init__(self, index: int, dimension: int):
        self.index = index
        self.dimension = dimension
        super().__init__(f"variable index {index} out of range for dimension {dimension}")


class ConstantMapError(PolymapError, ValueError):
    """An operation needs a map of degree at least one."""


class InexactDivision(PolymapError, ArithmeticError):
    """Exact polynomial division left a nonzero remainder."""


class NotIdPlusH(PolymapError, ValueError):
    """A component of F - Id has a constant or linear term."""

    def __init__(self, component: int, exponents: Sequence[int], coefficient: Any):
        self.component = component
        self.exponents = tuple(exponents)
        self.coefficient = coefficient
        super().__init__(
            f"component F{component + 1} is not of the form X{component + 1} + H: "
            f"term with exponents {self.exponents} and coefficient {coefficient} has degree "
            f"{sum(self.exponents)} < 2"
        )


class SingularLinearPart(PolymapError, ValueError):
    """The linear part J(0) is not invertible, so the map cannot be."""


class NotNilpotentOfIndexTwo(PolymapError, ValueError):
    """A Druzkowski matrix does not satisfy A^2 = 0."""


class SequenceExhaustedError(PolymapError, RuntimeError):
    """A sequence record reached its iteration cap without a zero term."""

    def __init__(self, coordinate: int, cap: int):
        self.coordinate = coordinate
        self.cap = cap
        super().__init__(
            f"sequence for coordinate {coordinate + 1} did not reach zero within {cap} steps"
        )


class ResourceLimit(PolymapError, RuntimeError):
    """A polynomial outgrew the configured term ceiling."""

    def __init__(self, limit: int, observed: int, context: str = ""):
        self.limit = limit
        self.observed = observed
        self.context = context
        where = f" while {context}" if context else ""
        super().__init__(f"term ceiling {limit} exceeded{where}: {observed} terms")


class InvariantCheckFailed(PolymapError, AssertionError):
    """A polynomial reported as invariant does not satisfy P(F) = P."""


class QuasiTranslationDisagreement(PolymapError, AssertionError):
    """The Jacobian criterion and the sequence criterion disagree."""

    def __init__(self, report: Any):
        self.report = report
        super().__init__(
            f"quasi-translation criteria disagree: via_sequence={report.via_sequence}, "
            f"via_jacobian={report.via_jacobian}"
        )


class MapFormatError(PolymapError, ValueError):
    """Base class for map-file parsing and binding errors."""


class MapSyntaxError(MapFormatError):
    """Malformed map source, with position and the token that was expected."""

    def __init__(self, message: str, line: int, column: int, expected: Optional[str] = None):
        self.line = line
        self.column = column
        self.expected = expected
        detail = f"; expected {expected}" if expected else ""
        super().__init__(f"line {line}, column {column}: {message}{detail}")


class DuplicateVariable(MapFormatError):
    """A name is declared twice among variables and parameters."""


class UnknownSymbol(MapFormatError):
    """An expression refers to an undeclared name."""


class VariableInDenominator(MapFormatError):
    """A division node has a variable in its denominator."""


class UnboundParameter(MapFormatError):
    """A parameter occurring in the map has no value."""


class DivisionByZeroParameter(MapFormatError):
    """A denominator evaluates to zero under the chosen bindings."""

    def __init__(self, parameter: str):
        self.parameter = parameter
        super().__init__(f"denominator vanishes: {parameter} = 0 under the chosen bindings")


__all__ = [
    "ConstantMapError",
    "DimensionMismatch",
    "DivisionByZeroParameter",
    "DuplicateVariable",
    "InexactDivision",
    "InvariantCheckFailed",
    "MapFormatError",
    "MapSyntaxError",
    "NotIdPlusH",
    "NotNilpotentOfIndexTwo",
    "PolymapError",
    "QuasiTranslationDisagreement",
    "ResourceLimit",
    "SequenceExhaustedError",
    "SingularLinearPart",
    "UnboundParameter",
    "UnknownSymbol",
    "VariableInDenominator",
    "VariableIndexError",
]
