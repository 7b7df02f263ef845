"""Determinants and adjugates of small symbolic matrices.

Sizes here are at most the patch dimension (m <= 8), so cofactor expansion
with memoised minors is exact, deterministic and cheap enough.  Structural
zeros are skipped, which keeps the sparse matrices that occur in practice
(block-diagonal symplectic matrices, Gram matrices of coordinate forms)
small.
"""

from __future__ import annotations

from typing import Sequence

from . import expr as E
from .expr import ScalarExpr

Matrix = list[list[ScalarExpr]]


def as_matrix(rows: Sequence[Sequence]) -> Matrix:
    mat = [[E.as_expr(x) for x in row] for row in rows]
    n = len(mat)
    if any(len(row) != n for row in mat):
        raise ValueError("expected a square matrix")
    return mat


def _minor_det(mat: Matrix, rows: tuple[int, ...], cols: tuple[int, ...], memo: dict) -> ScalarExpr:
    """Determinant of the submatrix on ``rows`` x ``cols`` (expansion along the first row)."""
    if not rows:
        return E.ONE
    key = (rows, cols)
    hit = memo.get(key)
    if hit is not None:
        return hit
    r, rest = rows[0], rows[1:]
    terms = []
    for pos, c in enumerate(cols):
        entry = mat[r][c]
        if entry.is_zero():
            continue
        sub = _minor_det(mat, rest, cols[:pos] + cols[pos + 1:], memo)
        if sub.is_zero():
            continue
        term = E.mul(entry, sub)
        terms.append(E.neg(term) if pos % 2 else term)
    value = E.total(terms)
    memo[key] = value
    return value


def det(rows: Sequence[Sequence]) -> ScalarExpr:
    mat = as_matrix(rows)
    n = len(mat)
    return _minor_det(mat, tuple(range(n)), tuple(range(n)), {})


def adjugate(rows: Sequence[Sequence]) -> Matrix:
    """Transpose of the cofactor matrix, so ``A @ adj(A) = det(A) I``."""
    mat = as_matrix(rows)
    n = len(mat)
    memo: dict = {}
    adj = [[E.ZERO] * n for _ in range(n)]
    for i in range(n):
        rows_i = tuple(r for r in range(n) if r != i)
        for j in range(n):
            cols_j = tuple(c for c in range(n) if c != j)
            minor = _minor_det(mat, rows_i, cols_j, memo)
            adj[j][i] = E.neg(minor) if (i + j) % 2 else minor
    return adj


def inverse(rows: Sequence[Sequence]) -> tuple[Matrix, ScalarExpr]:
    """Symbolic inverse ``adj(A) / det(A)``; returns ``(inverse, det)``."""
    mat = as_matrix(rows)
    n = len(mat)
    dt = _minor_det(mat, tuple(range(n)), tuple(range(n)), {})
    adj = adjugate(mat)
    return [[E.div(adj[i][j], dt) for j in range(n)] for i in range(n)], dt


def matmul(a: Sequence[Sequence[ScalarExpr]], b: Sequence[Sequence[ScalarExpr]]) -> Matrix:
    n, inner, p = len(a), len(b), len(b[0]) if b else 0
    return [[E.total(E.mul(a[i][t], b[t][j]) for t in range(inner)) for j in range(p)]
            for i in range(n)]


def identity(n: int) -> Matrix:
    return [[E.ONE if i == j else E.ZERO for j in range(n)] for i in range(n)]
