"""Polynomial maps K^n -> K^n and their structural predicates."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .errors import DimensionMismatch, NotIdPlusH, NotNilpotentOfIndexTwo
from .polyring import (
    Polynomial,
    PowerCache,
    add_all,
    as_rational,
    constant,
    default_names,
    evaluate,
    exact_quotient,
    format_polynomial,
    is_homogeneous,
    lower_degree,
    mul,
    neg,
    one,
    partial_derivative,
    power,
    scale,
    sub,
    substitute,
    total_degree,
    variable,
    zero,
)

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class PolynomialMap:
    """Ordered n-tuple of polynomials in n variables."""

    components: Tuple[Polynomial, ...]

    def __post_init__(self) -> None:
        components = tuple(self.components)
        object.__setattr__(self, "components", components)
        n = len(components)
        if n == 0:
            raise ValueError("a polynomial map needs at least one component")
        for component in components:
            if component.dimension != n:
                raise DimensionMismatch(component.dimension, n, "map component")

    @property
    def dimension(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> Optional[int]:
        """Maximum total degree over nonzero components; ``None`` if every component is zero."""

        found = [total_degree(c) for c in self.components if c]
        return max(found) if found else None

    def __getitem__(self, index: int) -> Polynomial:
        return self.components[index]

    def __iter__(self) -> Iterator[Polynomial]:
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def to_text(self, names: Optional[Sequence[str]] = None) -> List[str]:
        return [format_polynomial(c, names) for c in self.components]

    def __str__(self) -> str:
        return "(" + ", ".join(self.to_text()) + ")"


@dataclass(frozen=True)
class JacobianMatrix:
    """Grid of polynomials; entry (i, j) is dF_i/dX_j."""

    entries: Tuple[Tuple[Polynomial, ...], ...]

    def __post_init__(self) -> None:
        entries = tuple(tuple(row) for row in self.entries)
        object.__setattr__(self, "entries", entries)
        n = len(entries)
        if n == 0 or any(len(row) != n for row in entries):
            raise ValueError("Jacobian matrix must be square and non-empty")

    @property
    def dimension(self) -> int:
        return len(self.entries)

    @property
    def ring_dimension(self) -> int:
        return self.entries[0][0].dimension

    def __getitem__(self, index: Tuple[int, int]) -> Polynomial:
        i, j = index
        return self.entries[i][j]

    def apply(self, vector: Sequence[Polynomial]) -> Tuple[Polynomial, ...]:
        """Matrix-vector product; ``jacobian(H).apply(H)`` is JH.H."""

        if len(vector) != self.dimension:
            raise DimensionMismatch(len(vector), self.dimension, "matrix-vector product")
        return tuple(
            add_all(self.ring_dimension, (mul(entry, value) for entry, value in zip(row, vector)))
            for row in self.entries
        )

    def substitute(self, g: "PolynomialMap") -> "JacobianMatrix":
        cache = PowerCache(g.components)
        return JacobianMatrix(
            tuple(tuple(substitute(entry, g.components, cache=cache) for entry in row) for row in self.entries)
        )

    def __matmul__(self, other: "JacobianMatrix") -> "JacobianMatrix":
        if other.dimension != self.dimension:
            raise DimensionMismatch(self.dimension, other.dimension, "matrix product")
        n = self.dimension
        ring = self.ring_dimension
        return JacobianMatrix(
            tuple(
                tuple(add_all(ring, (mul(self.entries[i][k], other.entries[k][j]) for k in range(n))) for j in range(n))
                for i in range(n)
            )
        )

    def is_identity(self) -> bool:
        return all(
            entry == (1 if i == j else 0)
            for i, row in enumerate(self.entries)
            for j, entry in enumerate(row)
        )


@dataclass(frozen=True)
class Decomposition:
    """F = Id + H together with the lower degree of every nonzero H_i."""

    h: PolynomialMap
    lower_degrees: Tuple[Optional[int], ...]

    @property
    def min_lower_degree(self) -> Optional[int]:
        found = [d for d in self.lower_degrees if d is not None]
        return min(found) if found else None

    @property
    def is_zero(self) -> bool:
        return all(not c for c in self.h.components)


@dataclass(frozen=True)
class AffineCertificate:
    """The pair (f(0), L) with f = f(0) + L o normalized."""

    shift: Tuple[Fraction, ...]
    linear: np.ndarray

    def is_trivial(self) -> bool:
        n = len(self.shift)
        return not any(self.shift) and all(
            self.linear[i, j] == (1 if i == j else 0) for i in range(n) for j in range(n)
        )


def identity_map(n: int) -> PolynomialMap:
    if n < 1:
        raise ValueError(f"dimension must be positive, got {n}")
    return PolynomialMap(tuple(variable(n, i) for i in range(n)))


def compose(f: PolynomialMap, g: PolynomialMap) -> PolynomialMap:
    """``f o g``: component i is f_i with X_j replaced by g_j."""

    if f.dimension != g.dimension:
        raise DimensionMismatch(f.dimension, g.dimension, "compose")
    cache = PowerCache(g.components)
    return PolynomialMap(tuple(substitute(component, g.components, cache=cache) for component in f.components))


def subtract_maps(f: PolynomialMap, g: PolynomialMap) -> PolynomialMap:
    if f.dimension != g.dimension:
        raise DimensionMismatch(f.dimension, g.dimension, "map difference")
    return PolynomialMap(tuple(sub(a, b) for a, b in zip(f.components, g.components)))


def is_identity(f: PolynomialMap) -> bool:
    return f == identity_map(f.dimension)


def jacobian(f: PolynomialMap) -> JacobianMatrix:
    n = f.dimension
    return JacobianMatrix(tuple(tuple(partial_derivative(fi, j) for j in range(n)) for fi in f.components))


def _cofactor(rows: List[List[Polynomial]], ring: int) -> Polynomial:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return sub(mul(rows[0][0], rows[1][1]), mul(rows[0][1], rows[1][0]))
    terms = []
    for j, entry in enumerate(rows[0]):
        if not entry:
            continue
        minor = [row[:j] + row[j + 1:] for row in rows[1:]]
        term = mul(entry, _cofactor(minor, ring))
        terms.append(neg(term) if j % 2 else term)
    return add_all(ring, terms)


def _bareiss(rows: List[List[Polynomial]], ring: int) -> Polynomial:
    work = [list(row) for row in rows]
    n = len(work)
    sign = 1
    previous = one(ring)
    for k in range(n - 1):
        if not work[k][k]:
            swap = next((i for i in range(k + 1, n) if work[i][k]), None)
            if swap is None:
                return zero(ring)
            work[k], work[swap] = work[swap], work[k]
            sign = -sign
        pivot = work[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                numerator = sub(mul(pivot, work[i][j]), mul(work[i][k], work[k][j]))
                work[i][j] = exact_quotient(numerator, previous)
        previous = pivot
    result = work[n - 1][n - 1]
    return neg(result) if sign < 0 else result


def determinant(m: JacobianMatrix, method: str = "auto") -> Polynomial:
    """Exact determinant: cofactor expansion for n <= 3, fraction-free Bareiss elimination above."""

    rows = [list(row) for row in m.entries]
    if method == "auto":
        method = "cofactor" if m.dimension <= 3 else "bareiss"
    if method == "cofactor":
        return _cofactor(rows, m.ring_dimension)
    if method == "bareiss":
        return _bareiss(rows, m.ring_dimension)
    raise ValueError(f"unknown determinant method {method!r}")


def jacobian_determinant(f: PolynomialMap) -> Polynomial:
    return determinant(jacobian(f))


def is_keller(f: PolynomialMap) -> bool:
    return jacobian_determinant(f) == 1


def decompose(f: PolynomialMap) -> Decomposition:
    """Split F = Id + H; every nonzero H_i must have lower degree >= 2."""

    n = f.dimension
    parts = []
    lower: List[Optional[int]] = []
    for i, component in enumerate(f.components):
        h_i = sub(component, variable(n, i))
        for exponents, coefficient in h_i.terms.items():
            if sum(exponents) <= 1:
                raise NotIdPlusH(i, exponents, coefficient)
        parts.append(h_i)
        lower.append(lower_degree(h_i))
    return Decomposition(PolynomialMap(tuple(parts)), tuple(lower))


def is_cubic_homogeneous(f: PolynomialMap) -> bool:
    """True when F = Id + H with H nonzero and every H_i zero or homogeneous of degree 3."""

    n = f.dimension
    h = [sub(component, variable(n, i)) for i, component in enumerate(f.components)]
    return any(h) and all(is_homogeneous(h_i, 3) for h_i in h)


def constant_part(f: PolynomialMap) -> Tuple[Fraction, ...]:
    return tuple(component.constant_term() for component in f.components)


def linear_part(f: PolynomialMap) -> np.ndarray:
    """J(0): entry (i, j) is the coefficient of X_j in f_i."""

    n = f.dimension
    unit = [tuple(1 if k == j else 0 for k in range(n)) for j in range(n)]
    return linalg.as_rational_matrix([[component.coefficient(unit[j]) for j in range(n)] for component in f.components])


def affine_map(matrix: np.ndarray, shift: Sequence[object]) -> PolynomialMap:
    """The map Y -> M.Y + s."""

    n = matrix.shape[0]
    variables = [variable(n, j) for j in range(n)]
    components = []
    for i in range(n):
        parts = [scale(variables[j], matrix[i, j]) for j in range(n) if matrix[i, j] != 0]
        parts.append(constant(n, as_rational(shift[i])))
        components.append(add_all(n, parts))
    return PolynomialMap(tuple(components))


def _linear_combination(matrix: np.ndarray, vector: Sequence[Polynomial], ring: int) -> Tuple[Polynomial, ...]:
    n = matrix.shape[0]
    return tuple(
        add_all(ring, (scale(vector[j], matrix[i, j]) for j in range(n) if matrix[i, j] != 0)) for i in range(n)
    )


def normalize_affine(f: PolynomialMap) -> Tuple[PolynomialMap, AffineCertificate]:
    """Return L^-1 o (f - f(0)) and the certificate (f(0), L), L = J(0)."""

    n = f.dimension
    shift = constant_part(f)
    linear = linear_part(f)
    linear_inverse = linalg.inverse(linear)
    centred = [sub(component, constant(n, c)) for component, c in zip(f.components, shift)]
    normalized = PolynomialMap(_linear_combination(linear_inverse, centred, n))
    certificate = AffineCertificate(shift, linear)
    if not certificate.is_trivial():
        LOGGER.info("Normalized map by its affine part (shift %s)", [str(c) for c in shift])
    return normalized, certificate


def denormalize(normalized: PolynomialMap, certificate: AffineCertificate) -> PolynomialMap:
    n = normalized.dimension
    mixed = _linear_combination(certificate.linear, normalized.components, n)
    return PolynomialMap(tuple(component + constant(n, c) for component, c in zip(mixed, certificate.shift)))


def normalization_inverse(certificate: AffineCertificate) -> PolynomialMap:
    """The affine map Y -> L^-1 (Y - f(0)); an inverse of f is G_normalized o this."""

    linear_inverse = linalg.inverse(certificate.linear)
    n = len(certificate.shift)
    shift = [-sum((linear_inverse[i, j] * certificate.shift[j] for j in range(n)), Fraction(0)) for i in range(n)]
    return affine_map(linear_inverse, shift)


def druzkowski(a: object, force: bool = False) -> PolynomialMap:
    """F_i = X_i + (sum_j a_ij X_j)^3, refused unless A^2 = 0 or ``force`` is set."""

    matrix = a if isinstance(a, np.ndarray) else linalg.as_rational_matrix(a)
    if not linalg.is_square_zero(matrix):
        if not force:
            raise NotNilpotentOfIndexTwo("Druzkowski construction requires A^2 = 0")
        LOGGER.warning("Building X + (AX)^3 with A^2 != 0 on request")
    n = matrix.shape[0]
    variables = [variable(n, j) for j in range(n)]
    linear_forms = _linear_combination(matrix, variables, n)
    return PolynomialMap(tuple(variables[i] + power(linear_forms[i], 3) for i in range(n)))


@dataclass(frozen=True)
class DruzkowskiConstruction:
    """A Druzkowski map with the facts about its matrix that reports carry."""

    map: PolynomialMap
    matrix: np.ndarray
    rank: int
    square_zero: bool
    forced: bool


def druzkowski_construction(a: object, force: bool = False) -> DruzkowskiConstruction:
    matrix = a if isinstance(a, np.ndarray) else linalg.as_rational_matrix(a)
    square_zero = linalg.is_square_zero(matrix)
    built = druzkowski(matrix, force=force)
    return DruzkowskiConstruction(built, matrix, linalg.rank(matrix), square_zero, forced=not square_zero)


def evaluate_map(f: PolynomialMap, point: Sequence[object]) -> Tuple[Fraction, ...]:
    if len(point) != f.dimension:
        raise DimensionMismatch(len(point), f.dimension, "evaluate_map")
    return tuple(evaluate(component, point) for component in f.components)


__all__ = [
    "AffineCertificate",
    "Decomposition",
    "DruzkowskiConstruction",
    "JacobianMatrix",
    "PolynomialMap",
    "affine_map",
    "compose",
    "constant_part",
    "decompose",
    "denormalize",
    "determinant",
    "druzkowski",
    "druzkowski_construction",
    "evaluate_map",
    "identity_map",
    "is_cubic_homogeneous",
    "is_identity",
    "is_keller",
    "jacobian",
    "jacobian_determinant",
    "linear_part",
    "subtract_maps",
    "normalization_inverse",
    "normalize_affine",
]
