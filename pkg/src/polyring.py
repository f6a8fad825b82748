"""Sparse multivariate polynomials over the rationals.

A polynomial is an immutable mapping from exponent vectors to nonzero
``Fraction`` coefficients.  Every formula of the inversion algorithm lives in
this ring, so the module only offers exact operations: there is no floating
point anywhere.

Terms are printed and iterated in graded-lexicographic order: ascending total
degree, and inside one degree the larger exponent on an earlier variable comes
first (``X1^2*X2`` before ``X1*X2^2``).  Storage itself is an unordered dict.
"""

from __future__ import annotations

import logging
import operator
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple, Union

from .errors import DimensionMismatch, InexactDivision, ResourceLimit, VariableIndexError

LOGGER = logging.getLogger(__name__)

Exponents = Tuple[int, ...]
Scalar = Union[int, Fraction]


def as_rational(value: object) -> Fraction:
    """Coerce ints, numpy integers, strings like ``"-3/4"`` and Fractions to ``Fraction``."""

    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    try:
        return Fraction(operator.index(value))
    except TypeError as exc:
        raise TypeError(f"cannot use {value!r} as an exact rational coefficient") from exc


class Degrees(NamedTuple):
    total: int
    lower: int


class Polynomial:
    """Immutable sparse polynomial in ``dimension`` variables with rational coefficients."""

    __slots__ = ("dimension", "_terms", "_hash")

    def __init__(self, dimension: int, terms: Optional[Mapping[Sequence[int], object]] = None):
        if dimension < 1:
            raise ValueError(f"polynomial dimension must be positive, got {dimension}")

        canonical: Dict[Exponents, Fraction] = {}
        for exponents, coefficient in (terms or {}).items():
            key = tuple(int(e) for e in exponents)
            if len(key) != dimension:
                raise DimensionMismatch(len(key), dimension, "exponent vector")
            if any(e < 0 for e in key):
                raise ValueError(f"negative exponent in {key}")
            value = canonical.get(key, Fraction(0)) + as_rational(coefficient)
            if value:
                canonical[key] = value
            else:
                canonical.pop(key, None)

        self.dimension = dimension
        self._terms = canonical
        self._hash: Optional[int] = None

    @classmethod
    def _from_canonical(cls, dimension: int, terms: Dict[Exponents, Fraction]) -> "Polynomial":
        poly = cls.__new__(cls)
        poly.dimension = dimension
        poly._terms = terms
        poly._hash = None
        return poly

    @property
    def terms(self) -> Mapping[Exponents, Fraction]:
        return MappingProxyType(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(exponents) for exponents in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.dimension, Fraction(0))

    def coefficient(self, exponents: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exponents), Fraction(0))

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Polynomial):
            return self.dimension == other.dimension and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == constant(self.dimension, other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.dimension, frozenset(self._terms.items())))
        return self._hash

    def _coerce(self, other: object) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        return constant(self.dimension, as_rational(other))

    def __add__(self, other: object) -> "Polynomial":
        return add(self, self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other: object) -> "Polynomial":
        return sub(self, self._coerce(other))

    def __rsub__(self, other: object) -> "Polynomial":
        return sub(self._coerce(other), self)

    def __neg__(self) -> "Polynomial":
        return neg(self)

    def __mul__(self, other: object) -> "Polynomial":
        if isinstance(other, Polynomial):
            return mul(self, other)
        return scale(self, as_rational(other))

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "Polynomial":
        return power(self, exponent)

    def __repr__(self) -> str:
        return f"Polynomial({format_polynomial(self)!r}, dimension={self.dimension})"

    def __str__(self) -> str:
        return format_polynomial(self)


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def zero(dimension: int) -> Polynomial:
    return Polynomial(dimension)


def constant(dimension: int, value: Scalar) -> Polynomial:
    value = as_rational(value)
    if not value:
        return Polynomial(dimension)
    return Polynomial._from_canonical(dimension, {(0,) * dimension: value})


def one(dimension: int) -> Polynomial:
    return constant(dimension, 1)


def variable(dimension: int, index: int) -> Polynomial:
    """Return ``X_{index+1}`` in a ring of ``dimension`` variables (0-based index)."""

    _check_index(index, dimension)
    exponents = tuple(1 if j == index else 0 for j in range(dimension))
    return Polynomial._from_canonical(dimension, {exponents: Fraction(1)})


def monomial(dimension: int, exponents: Sequence[int], coefficient: Scalar = 1) -> Polynomial:
    return Polynomial(dimension, {tuple(exponents): coefficient})


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------

def _check_index(index: int, dimension: int) -> None:
    if not 0 <= index < dimension:
        raise VariableIndexError(index, dimension)


def _check_same_dimension(a: Polynomial, b: Polynomial, context: str) -> None:
    if a.dimension != b.dimension:
        raise DimensionMismatch(a.dimension, b.dimension, context)


def _accumulate(acc: Dict[Exponents, Fraction], terms: Mapping[Exponents, Fraction], sign: int = 1) -> None:
    for exponents, coefficient in terms.items():
        current = acc.get(exponents)
        if sign < 0:
            coefficient = -coefficient
        acc[exponents] = coefficient if current is None else current + coefficient


def _finish(dimension: int, acc: Dict[Exponents, Fraction]) -> Polynomial:
    return Polynomial._from_canonical(dimension, {k: v for k, v in acc.items() if v})


def add(a: Polynomial, b: Polynomial) -> Polynomial:
    _check_same_dimension(a, b, "add")
    if not b._terms:
        return a
    if not a._terms:
        return b
    acc = dict(a._terms)
    _accumulate(acc, b._terms)
    return _finish(a.dimension, acc)


def sub(a: Polynomial, b: Polynomial) -> Polynomial:
    _check_same_dimension(a, b, "sub")
    if not b._terms:
        return a
    acc = dict(a._terms)
    _accumulate(acc, b._terms, sign=-1)
    return _finish(a.dimension, acc)


def neg(a: Polynomial) -> Polynomial:
    return Polynomial._from_canonical(a.dimension, {k: -v for k, v in a._terms.items()})


def scale(a: Polynomial, factor: Scalar) -> Polynomial:
    factor = as_rational(factor)
    if not factor:
        return zero(a.dimension)
    if factor == 1:
        return a
    return Polynomial._from_canonical(a.dimension, {k: v * factor for k, v in a._terms.items()})


def add_all(dimension: int, polys: Iterable[Polynomial]) -> Polynomial:
    """Sum many polynomials with a single accumulator."""

    acc: Dict[Exponents, Fraction] = {}
    for poly in polys:
        if poly.dimension != dimension:
            raise DimensionMismatch(poly.dimension, dimension, "add_all")
        _accumulate(acc, poly._terms)
    return _finish(dimension, acc)


def _scalar_of(poly: Polynomial) -> Optional[Fraction]:
    if len(poly._terms) == 1:
        (exponents, coefficient), = poly._terms.items()
        if not any(exponents):
            return coefficient
    return None


def mul(a: Polynomial, b: Polynomial, max_degree: Optional[int] = None) -> Polynomial:
    """Distributive product; terms of total degree above ``max_degree`` are never formed."""

    _check_same_dimension(a, b, "mul")
    dimension = a.dimension
    if not a._terms or not b._terms:
        return zero(dimension)

    factor = _scalar_of(a)
    if factor is not None:
        return truncate_above(scale(b, factor), max_degree) if max_degree is not None else scale(b, factor)
    factor = _scalar_of(b)
    if factor is not None:
        return truncate_above(scale(a, factor), max_degree) if max_degree is not None else scale(a, factor)

    if len(a._terms) > len(b._terms):
        a, b = b, a
    inner = sorted(((sum(e), e, c) for e, c in b._terms.items()), key=operator.itemgetter(0))

    acc: Dict[Exponents, Fraction] = {}
    add_exponents = operator.add
    for exponents_a, coefficient_a in a._terms.items():
        limit = None if max_degree is None else max_degree - sum(exponents_a)
        if limit is not None and limit < 0:
            continue
        for degree_b, exponents_b, coefficient_b in inner:
            if limit is not None and degree_b > limit:
                break
            key = tuple(map(add_exponents, exponents_a, exponents_b))
            product = coefficient_a * coefficient_b
            current = acc.get(key)
            acc[key] = product if current is None else current + product
    return _finish(dimension, acc)


def power(a: Polynomial, exponent: int, max_degree: Optional[int] = None) -> Polynomial:
    """``a ** exponent`` by repeated squaring; ``power(a, 0)`` is 1."""

    if exponent < 0:
        raise ValueError(f"exponent must be non-negative, got {exponent}")
    result = one(a.dimension)
    base = a if max_degree is None else truncate_above(a, max_degree)
    while exponent:
        if exponent & 1:
            result = mul(result, base, max_degree)
        exponent >>= 1
        if exponent:
            base = mul(base, base, max_degree)
    return result


def partial_derivative(a: Polynomial, index: int) -> Polynomial:
    """Formal derivative with respect to ``X_{index+1}``."""

    _check_index(index, a.dimension)
    result: Dict[Exponents, Fraction] = {}
    for exponents, coefficient in a._terms.items():
        e = exponents[index]
        if e:
            lowered = exponents[:index] + (e - 1,) + exponents[index + 1:]
            result[lowered] = coefficient * e
    return Polynomial._from_canonical(a.dimension, result)


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------

class PowerCache:
    """Powers of a fixed tuple of images, computed once and reused.

    With ``max_degree`` set every stored power is truncated, which is exact for
    any later truncated product (degrees are non-negative). With ``max_terms``
    set, a stored power larger than that raises ``ResourceLimit``.
    """

    def __init__(
        self,
        images: Sequence[Polynomial],
        max_degree: Optional[int] = None,
        max_terms: Optional[int] = None,
    ):
        images = tuple(images)
        if not images:
            raise ValueError("PowerCache needs at least one image")
        target = images[0].dimension
        for image in images:
            if image.dimension != target:
                raise DimensionMismatch(image.dimension, target, "substitution images")
        self.images = images
        self.dimension = target
        self.max_degree = max_degree
        self.max_terms = max_terms
        first =[image if max_degree is None else truncate_above(image, max_degree) for image in images]
        self._powers: List[Dict[int, Polynomial]] = [{1: image} for image in first]

    def power(self, index: int, exponent: int) -> Polynomial:
        if exponent == 0:
            return one(self.dimension)
        table = self._powers[index]
        cached = table.get(exponent)
        if cached is not None:
            return cached
        start = max(k for k in table if k < exponent)
        result = table[start]
        for k in range(start + 1, exponent + 1):
            result = mul(result, table[1], self.max_degree)
            if self.max_terms is not None and len(result) > self.max_terms:
                raise ResourceLimit(self.max_terms, len(result), f"raising image {index + 1} to power {k}")
            table[k] = result
        LOGGER.debug("image %d: powers up to %d cached, %d terms", index + 1, exponent, len(result))
        return result

    def stored_terms(self) -> int:
        return sum(len(poly) for table in self._powers for poly in table.values())


def substitute(
    p: Polynomial,
    images: Sequence[Polynomial],
    max_degree: Optional[int] = None,
    cache: Optional[PowerCache] = None,
) -> Polynomial:
    """Exact value of ``p`` with ``X_j`` replaced by ``images[j]``.

    Terms are grouped Horner-style on one variable at a time so that each
    cached power multiplies an already collected sub-sum once.
    """

    images = tuple(images)
    if len(images) != p.dimension:
        raise DimensionMismatch(len(images), p.dimension, "substitute")
    if cache is None:
        cache = PowerCache(images, max_degree)
    elif len(cache.images) != len(images) or cache.max_degree != max_degree:
        raise ValueError("power cache does not match the requested substitution")

    target = cache.dimension
    if not p._terms:
        return zero(target)
    return _horner(list(p._terms.items()), 0, cache)


def _horner(terms: List[Tuple[Exponents, Fraction]], index: int, cache: PowerCache) -> Polynomial:
    target = cache.dimension
    if len(terms) == 1:
        exponents, coefficient = terms[0]
        result = constant(target, coefficient)
        for j in range(index, len(exponents)):
            if exponents[j]:
                result = mul(cache.power(j, exponents[j]), result, cache.max_degree)
        return result

    groups: Dict[int, List[Tuple[Exponents, Fraction]]] = {}
    for item in terms:
        groups.setdefault(item[0][index], []).append(item)

    acc: Dict[Exponents, Fraction] = {}
    for exponent, group in groups.items():
        inner = _horner(group, index + 1, cache)
        if exponent:
            inner = mul(cache.power(index, exponent), inner, cache.max_degree)
        _accumulate(acc, inner._terms)
    return _finish(target, acc)


# ---------------------------------------------------------------------------
# Degree structure
# ---------------------------------------------------------------------------

def truncate_above(p: Polynomial, degree: int) -> Polynomial:
    if degree < 0:
        raise ValueError(f"truncation degree must be non-negative, got {degree}")
    kept = {e: c for e, c in p._terms.items() if sum(e) <= degree}
    if len(kept) == len(p._terms):
        return p
    return Polynomial._from_canonical(p.dimension, kept)


def homogeneous_component(p: Polynomial, degree: int) -> Polynomial:
    if degree < 0:
        raise ValueError(f"degree must be non-negative, got {degree}")
    return Polynomial._from_canonical(p.dimension, {e: c for e, c in p._terms.items() if sum(e) == degree})


def homogeneous_components(p: Polynomial) -> Dict[int, Polynomial]:
    """Nonzero homogeneous components keyed by degree, ascending."""

    buckets: Dict[int, Dict[Exponents, Fraction]] = {}
    for exponents, coefficient in p._terms.items():
        buckets.setdefault(sum(exponents), {})[exponents] = coefficient
    return {d: Polynomial._from_canonical(p.dimension, buckets[d]) for d in sorted(buckets)}


def degrees(p: Polynomial) -> Optional[Degrees]:
    """(total degree, lower degree), or ``None`` for the zero polynomial, which has no degree."""

    if not p._terms:
        return None
    sums = [sum(e) for e in p._terms]
    return Degrees(max(sums), min(sums))


def total_degree(p: Polynomial) -> Optional[int]:
    found = degrees(p)
    return None if found is None else found.total


def lower_degree(p: Polynomial) -> Optional[int]:
    found = degrees(p)
    return None if found is None else found.lower


def is_homogeneous(p: Polynomial, degree: Optional[int] = None) -> bool:
    sums = {sum(e) for e in p._terms}
    if degree is not None:
        return sums <= {degree}
    return len(sums) <= 1


def variables_used(p: Polynomial) -> Set[int]:
    used: Set[int] = set()
    for exponents in p._terms:
        used.update(j for j, e in enumerate(exponents) if e)
    return used


def evaluate(p: Polynomial, point: Sequence[object]) -> Fraction:
    if len(point) != p.dimension:
        raise DimensionMismatch(len(point), p.dimension, "evaluate")
    values = [as_rational(x) for x in point]
    total = Fraction(0)
    for exponents, coefficient in p._terms.items():
        term = coefficient
        for value, e in zip(values, exponents):
            if e:
                term *= value ** e
        total += term
    return total


# ---------------------------------------------------------------------------
# Ordering, division, printing
# ---------------------------------------------------------------------------

def _print_key(exponents: Exponents) -> Tuple[int, Tuple[int, ...]]:
    return sum(exponents), tuple(-e for e in exponents)


def sorted_terms(p: Polynomial) -> List[Tuple[Exponents, Fraction]]:
    """Terms in graded-lexicographic print order."""

    return sorted(p._terms.items(), key=lambda item: _print_key(item[0]))


def leading_term(p: Polynomial) -> Tuple[Exponents, Fraction]:
    """Largest term for the graded-lex monomial order (X1 > X2 > ...)."""

    if not p._terms:
        raise ValueError("the zero polynomial has no leading term")
    exponents = max(p._terms, key=lambda e: (sum(e), e))
    return exponents, p._terms[exponents]


def exact_quotient(a: Polynomial, b: Polynomial) -> Polynomial:
    """Quotient ``a / b`` when ``b`` divides ``a``; raises ``InexactDivision`` otherwise."""

    _check_same_dimension(a, b, "exact_quotient")
    if not b._terms:
        raise ZeroDivisionError("division by the zero polynomial")
    divisor = _scalar_of(b)
    if divisor is not None:
        return scale(a, 1 / divisor)

    lead_exponents, lead_coefficient = leading_term(b)
    quotient: Dict[Exponents, Fraction] = {}
    remainder = a
    while remainder._terms:
        exponents, coefficient = leading_term(remainder)
        shift = tuple(x - y for x, y in zip(exponents, lead_exponents))
        if any(s < 0 for s in shift):
            raise InexactDivision(f"{format_polynomial(b)} does not divide {format_polynomial(a)}")
        factor = coefficient / lead_coefficient
        quotient[shift] = quotient.get(shift, Fraction(0)) + factor
        step = Polynomial._from_canonical(a.dimension, {shift: factor})
        remainder = sub(remainder, mul(step, b))
    return _finish(a.dimension, quotient)


def default_names(dimension: int, prefix: str = "X") -> List[str]:
    return [f"{prefix}{j + 1}" for j in range(dimension)]


def format_polynomial(p: Polynomial, names: Optional[Sequence[str]] = None) -> str:
    """Deterministic text form, lowest degree first, e.g. ``Y1 - Y2^2`` or ``1 + 3/2*X1^2*X2``."""

    names = list(names) if names is not None else default_names(p.dimension)
    if len(names) != p.dimension:
        raise DimensionMismatch(len(names), p.dimension, "format_polynomial names")
    if not p._terms:
        return "0"

    pieces: List[str] = []
    for position, (exponents, coefficient) in enumerate(sorted_terms(p)):
        factors = [name if e == 1 else f"{name}^{e}" for name, e in zip(names, exponents) if e]
        magnitude = abs(coefficient)
        if not factors:
            body = str(magnitude)
        elif magnitude == 1:
            body = "*".join(factors)
        else:
            body = "*".join([str(magnitude)] + factors)

        if position == 0:
            pieces.append(f"-{body}" if coefficient < 0 else body)
        else:
            pieces.append(f" - {body}" if coefficient < 0 else f" + {body}")
    return "".join(pieces)


__all__ = [
    "Degrees",
    "Exponents",
    "Polynomial",
    "PowerCache",
    "add",
    "add_all",
    "as_rational",
    "constant",
    "default_names",
    "degrees",
    "evaluate",
    "exact_quotient",
    "format_polynomial",
    "homogeneous_component",
    "homogeneous_components",
    "is_homogeneous",
    "leading_term",
    "lower_degree",
    "monomial",
    "mul",
    "neg",
    "one",
    "partial_derivative",
    "power",
    "scale",
    "sorted_terms",
    "sub",
    "substitute",
    "total_degree",
    "truncate_above",
    "variable",
    "variables_used",
    "zero",
]
