"""Exact rational matrices stored as numpy object arrays of ``Fraction``."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import SingularLinearPart
from .polyring import as_rational


def as_rational_matrix(rows: Iterable[Sequence[object]]) -> np.ndarray:
    """Square object array of Fractions; raises ``ValueError`` for ragged or non-square input."""

    data = [[as_rational(value) for value in row] for row in rows]
    n = len(data)
    if n == 0 or any(len(row) != n for row in data):
        raise ValueError("matrix must be square and non-empty")
    matrix = np.empty((n, n), dtype=object)
    for i, row in enumerate(data):
        for j, value in enumerate(row):
            matrix[i, j] = value
    return matrix


def identity_matrix(n: int) -> np.ndarray:
    return as_rational_matrix([[1 if i == j else 0 for j in range(n)] for i in range(n)])


def zero_matrix(n: int) -> np.ndarray:
    return as_rational_matrix([[0] * n for _ in range(n)])


def is_zero_matrix(matrix: np.ndarray) -> bool:
    return all(value == 0 for value in matrix.flat)


def is_square_zero(matrix: np.ndarray) -> bool:
    """True iff ``A @ A`` vanishes exactly."""

    return is_zero_matrix(matrix @ matrix)


def _row_echelon(matrix: np.ndarray) -> Tuple[np.ndarray, int]:
    work = matrix.copy()
    rows, cols = work.shape
    pivot_row = 0
    for col in range(cols):
        pivot = next((r for r in range(pivot_row, rows) if work[r, col] != 0), None)
        if pivot is None:
            continue
        if pivot != pivot_row:
            work[[pivot_row, pivot]] = work[[pivot, pivot_row]]
        for r in range(pivot_row + 1, rows):
            if work[r, col] != 0:
                factor = work[r, col] / work[pivot_row, col]
                work[r, col:] = work[r, col:] - factor * work[pivot_row, col:]
        pivot_row += 1
        if pivot_row == rows:
            break
    return work, pivot_row


def rank(matrix: np.ndarray) -> int:
    return _row_echelon(matrix)[1]


def inverse(matrix: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse taking the first nonzero pivot in column order."""

    n = matrix.shape[0]
    augmented = np.concatenate([matrix.copy(), identity_matrix(n)], axis=1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if augmented[r, col] != 0), None)
        if pivot is None:
            raise SingularLinearPart(f"linear part is singular (no pivot in column {col + 1})")
        if pivot != col:
            augmented[[col, pivot]] = augmented[[pivot, col]]
        augmented[col, :] = augmented[col, :] / augmented[col, col]
        for r in range(n):
            if r != col and augmented[r, col] != 0:
                augmented[r, :] = augmented[r, :] - augmented[r, col] * augmented[col, :]
    return augmented[:, n:]


def parse_matrix_text(text: str, source: Optional[str] = None) -> np.ndarray:
    """Read ``n`` followed by ``n`` rows of ``n`` rationals; ``#`` starts a comment."""

    label = source or "<matrix>"
    lines = [line.split("#", 1)[0].strip() for line in text.splitlines()]
    lines = [line for line in lines if line]
    if not lines:
        raise ValueError(f"{label}: empty matrix file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise ValueError(f"{label}: first line must be the matrix size, got {lines[0]!r}") from exc
    rows = [line.split() for line in lines[1:]]
    if len(rows) != n or any(len(row) != n for row in rows):
        raise ValueError(f"{label}: expected {n} rows of {n} entries")
    try:
        return as_rational_matrix([[Fraction(value) for value in row] for row in rows])
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"{label}: invalid rational entry ({exc})") from exc


def read_matrix_file(path: Path) -> np.ndarray:
    with Path(path).open("r", encoding="utf-8") as handle:
        return parse_matrix_text(handle.read(), str(path))


__all__ = [
    "as_rational_matrix",
    "identity_matrix",
    "inverse",
    "is_square_zero",
    "is_zero_matrix",
    "parse_matrix_text",
    "rank",
    "read_matrix_file",
    "zero_matrix",
]
