"""Exact linear algebra on small integer matrices.

Ranks use Bareiss fraction-free elimination (all intermediates stay
integers); solves and reduced echelon forms use ``fractions.Fraction``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np


def _rows(mat) -> list[list[int]]:
    return [[int(v) for v in row] for row in np.asarray(mat, dtype=object).tolist()] if len(
        mat
    ) else []


def rank(mat) -> int:
    """Rank over the rationals via Bareiss elimination."""
    a = _rows(mat)
    if not a:
        return 0
    n_rows, n_cols = len(a), len(a[0])
    r = 0
    prev = 1
    for c in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        for i in range(r + 1, n_rows):
            for j in range(c + 1, n_cols):
                # exact division is guaranteed by Sylvester's identity
                a[i][j] = (a[r][c] * a[i][j] - a[i][c] * a[r][j]) // prev
            a[i][c] = 0
        prev = a[r][c]
        r += 1
        if r == n_rows:
            break
    return r


def rref(mat, pivot_candidates: Sequence[int] | None = None):
    """Reduced row echelon form over Fractions.

    Pivots are chosen left to right among ``pivot_candidates`` (default: all
    columns).  Returns ``(R, pivots, T)`` with ``T @ mat == R`` and ``T``
    invertible.
    """
    a = [[Fraction(v) for v in row] for row in _rows(mat)]
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    t = [[Fraction(int(i == j)) for j in range(n_rows)] for i in range(n_rows)]
    cols = range(n_cols) if pivot_candidates is None else pivot_candidates
    pivots: list[int] = []
    r = 0
    for c in cols:
        if r == n_rows:
            break
        pivot = next((i for i in range(r, n_rows) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        t[r], t[pivot] = t[pivot], t[r]
        inv = 1 / a[r][c]
        a[r] = [v * inv for v in a[r]]
        t[r] = [v * inv for v in t[r]]
        for i in range(n_rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
                t[i] = [x - f * y for x, y in zip(t[i], t[r])]
        pivots.append(c)
        r += 1
    return a, pivots, t


def solve_exact(mat, rhs) -> list[Fraction] | None:
    """Solution of ``mat @ y = rhs`` if one exists (unique when full column rank)."""
    a = _rows(mat)
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    aug = [row + [int(v)] for row, v in zip(a, rhs)]
    red, pivots, _ = rref(aug, range(n_cols))
    y = [Fraction(0)] * n_cols
    for r, c in enumerate(pivots):
        y[c] = red[r][n_cols]
    for r in range(len(pivots), n_rows):
        if red[r][n_cols] != 0:
            return None
    return y


def integer_combination(basis, vec) -> list[int] | None:
    """Integer coefficients y with ``basis @ y == vec``, or None."""
    y = solve_exact(basis, vec)
    if y is None or any(v.denominator != 1 for v in y):
        return None
    return [int(v) for v in y]


def same_lattice(a, b) -> bool:
    """True iff the columns of ``a`` and ``b`` generate the same integer lattice."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape[0] != b.shape[0]:
        return False
    for x, y in ((a, b), (b, a)):
        for j in range(y.shape[1]):
            if integer_combination(x, y[:, j]) is None:
                return False
    return True


def same_column_space(a, b) -> bool:
    """Equality of column spaces over the rationals."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    ra = rank(a)
    return ra == rank(b) == rank(np.hstack([a, b]))


def int_matmul(a, b) -> np.ndarray:
    return np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)


def format_matrix(mat) -> str:
    """Rows of space-separated values, right-aligned."""
    rows = [[str(v) for v in row] for row in np.asarray(mat, dtype=object).tolist()]
    if not rows:
        return ""
    width = max(len(v) for row in rows for v in row) if rows[0] else 1
    return "\n".join(" ".join(v.rjust(width) for v in row) for row in rows)
