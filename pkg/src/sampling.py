"""Seeded random rationals, parameter bindings, matrices and maps."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import linalg
from .polymap import PolynomialMap, affine_map, compose
from .polyring import Polynomial, add_all, scale, substitute, variable

LOGGER = logging.getLogger(__name__)


@dataclass
class SamplingConfig:
    """Configuration of random draws; mirrors the ``binding`` section of ``config.yaml``."""

    seed: int = 7
    value_range: int = 9
    nonzero: bool = False

    def __post_init__(self) -> None:
        if self.value_range < 1:
            raise ValueError(f"value_range must be at least 1, got {self.value_range}")


class RationalSampler:
    """Draw exact objects from one ``numpy`` generator so that a seed fixes every result."""

    def __init__(self, config: Optional[SamplingConfig] = None):
        self.config = config or SamplingConfig()
        self._rng = np.random.default_rng(self.config.seed)

    # -- scalars ------------------------------------------------------------

    def integer(self, low: int, high: int) -> int:
        """Uniform integer in the closed range [low, high]."""

        return int(self._rng.integers(low, high + 1))

    def rational(self, nonzero: bool = False) -> Fraction:
        """Numerator uniform in [-R, R], denominator uniform in [1, R]; zero numerators redrawn on request."""

        r = self.config.value_range
        numerator = self.integer(-r, r)
        while nonzero and numerator == 0:
            numerator = self.integer(-r, r)
        return Fraction(numerator, self.integer(1, r))

    def small_integer(self, bound: int = 3, nonzero: bool = False) -> int:
        value = self.integer(-bound, bound)
        while nonzero and value == 0:
            value = self.integer(-bound, bound)
        return value

    def draw_bindings(
        self, parameters: Sequence[str], denominator_parameters: Iterable[str] = ()
    ) -> Dict[str, Fraction]:
        """One value per parameter, in declaration order; denominator parameters are never zero."""

        guarded = set(denominator_parameters)
        drawn = {name: self.rational(nonzero=self.config.nonzero or name in guarded) for name in parameters}
        LOGGER.info("Drew bindings with seed %d and range %d", self.config.seed, self.config.value_range)
        return drawn

    # -- matrices -----------------------------------------------------------

    def _unimodular(self, n: int) -> np.ndarray:
        lower = linalg.identity_matrix(n)
        upper = linalg.identity_matrix(n)
        for i in range(n):
            for j in range(i):
                lower[i, j] = Fraction(self.small_integer(1))
                upper[j, i] = Fraction(self.small_integer(1))
        return lower @ upper

    def _square_zero_block(self, n: int, rank: Optional[int]) -> np.ndarray:
        if n < 1:
            raise ValueError(f"matrix size must be positive, got {n}")
        if rank is None:
            rank = self.integer(1, n // 2) if n >= 2 else 0
        if not 0 <= rank <= n // 2:
            raise ValueError(f"a square-zero {n}x{n} matrix has rank at most {n // 2}, got {rank}")
        block = linalg.zero_matrix(n)
        split = n - rank
        for i in range(rank):
            block[i, split + i] = Fraction(self.small_integer(2, nonzero=True))
            for j in range(split + i + 1, n):
                block[i, j] = Fraction(self.small_integer(1))
        return block

    def square_zero_matrix(self, n: int, rank: Optional[int] = None) -> np.ndarray:
        """Integer A with A @ A = 0, conjugated from a strictly block upper-triangular form.

        X + (AX)^3 need not be a Keller map for such an A; see ``keller_square_zero_matrix``.
        """

        block = self._square_zero_block(n, rank)
        basis = self._unimodular(n)
        matrix = basis @ block @ linalg.inverse(basis)
        if not linalg.is_square_zero(matrix):
            raise AssertionError("conjugated block is not square-zero")
        return matrix

    def _orthogonal_rank_one(self, n: int) -> np.ndarray:
        # A = v w^T with w orthogonal to v and to its cube (v_j^3), so that
        # A^2 = 0 and diag((AX)^2) A is nilpotent.
        v = [self.small_integer(2) for _ in range(3)]
        cube = [x ** 3 for x in v]
        w = [
            v[1] * cube[2] - v[2] * cube[1],
            v[2] * cube[0] - v[0] * cube[2],
            v[0] * cube[1] - v[1] * cube[0],
        ]
        matrix = linalg.zero_matrix(n)
        for i in range(3):
            for j in range(3):
                matrix[i, j] = Fraction(v[i] * w[j])
        return matrix

    def keller_square_zero_matrix(self, n: int, rank: Optional[int] = None) -> np.ndarray:
        """A with A @ A = 0 for which X + (AX)^3 has Jacobian determinant 1.

        Either a strictly triangular block under a random permutation of the
        coordinates, or (n >= 3, ``rank`` unset) a rank-one v w^T with w
        orthogonal to v and to (v_1^3, ..., v_n^3).
        """

        if rank is None and n >= 3 and self.integer(0, 1):
            matrix = self._orthogonal_rank_one(n)
        else:
            matrix = self._square_zero_block(n, rank)
        order = self._rng.permutation(n)
        matrix = matrix[np.ix_(order, order)]
        if not linalg.is_square_zero(matrix):
            raise AssertionError("permuted block is not square-zero")
        return matrix

    # -- polynomials and maps -----------------------------------------------

    def polynomial(
        self,
        dimension: int,
        max_degree: int,
        n_terms: int,
        min_degree: int = 0,
        coefficient_bound: int = 3,
    ) -> Polynomial:
        """Sum of up to ``n_terms`` random monomials with degrees in [min_degree, max_degree]."""

        terms: Dict[tuple, Fraction] = {}
        for _ in range(n_terms):
            degree = self.integer(min_degree, max_degree)
            exponents = [0] * dimension
            for _ in range(degree):
                exponents[self.integer(0, dimension - 1)] += 1
            coefficient = self.small_integer(coefficient_bound, nonzero=True)
            key = tuple(exponents)
            terms[key] = terms.get(key, Fraction(0)) + coefficient
        return Polynomial(dimension, terms)

    def id_plus_h(self, dimension: int, max_degree: int = 3, n_terms: int = 2, min_degree: int = 2) -> PolynomialMap:
        """X + H with every term of H of degree in [min_degree, max_degree]; not invertible in general."""

        return PolynomialMap(
            tuple(
                variable(dimension, i) + self.polynomial(dimension, max_degree, n_terms, min_degree)
                for i in range(dimension)
            )
        )

    def cubic_map(self, dimension: int, n_terms: int = 2) -> PolynomialMap:
        return self.id_plus_h(dimension, 3, n_terms, 3)

    def triangular_map(self, dimension: int, max_degree: int = 3, n_terms: int = 2) -> PolynomialMap:
        """X_i + h_i(X_{i+1}, ..., X_n): always invertible with Jacobian determinant 1."""

        components = []
        for i in range(dimension):
            later = dimension - i - 1
            if later == 0:
                components.append(variable(dimension, i))
                continue
            h = self.polynomial(later, max_degree, n_terms, min_degree=2)
            images = [variable(dimension, j) for j in range(i + 1, dimension)]
            components.append(variable(dimension, i) + substitute(h, images))
        return PolynomialMap(tuple(components))

    def quasi_translation(self, dimension: int, max_degree: int = 3, n_terms: int = 2) -> PolynomialMap:
        """X + v * q(l_1(X), ..., l_k(X)) with every l_j orthogonal to v, hence JH.H = 0."""

        v = [self.small_integer(2) for _ in range(dimension)]
        if not any(v):
            v[self.integer(0, dimension - 1)] = 1
        norm = sum(x * x for x in v)
        forms: List[Polynomial] = []
        for _ in range(max(dimension - 1, 1)):
            u = [self.small_integer(2) for _ in range(dimension)]
            dot = sum(a * b for a, b in zip(u, v))
            weights = [norm * a - dot * b for a, b in zip(u, v)]
            forms.append(add_all(dimension, (scale(variable(dimension, j), w) for j, w in enumerate(weights) if w)))
        q = self.polynomial(len(forms), max_degree, n_terms, min_degree=2)
        p = substitute(q, forms)
        return PolynomialMap(tuple(variable(dimension, i) + scale(p, v[i]) for i in range(dimension)))

    def nonconstant_jacobian_map(self, dimension: int) -> PolynomialMap:
        """Triangular map with a_i X_i^2 on the diagonal; det J = prod(1 + 2 a_i X_i) with a_1 != 0."""

        base = self.triangular_map(dimension)
        components = []
        for i, component in enumerate(base.components):
            a = self.small_integer(2, nonzero=(i == 0))
            square = variable(dimension, i) * variable(dimension, i)
            components.append(component + scale(square, a))
        return PolynomialMap(tuple(components))

    def affine_conjugate(self, f: PolynomialMap) -> PolynomialMap:
        """c + M o f for a random unimodular M and shift c; breaks the Id + H shape but not invertibility."""

        n = f.dimension
        outer = affine_map(self._unimodular(n), [self.small_integer(2) for _ in range(n)])
        return compose(outer, f)


__all__ = ["RationalSampler", "SamplingConfig"]
