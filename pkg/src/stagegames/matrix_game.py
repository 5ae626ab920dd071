"""Value and optimal mixed strategies of finite zero-sum matrix games.

The row player maximizes.  After shifting the matrix so every entry is at
least 1, the column player's problem

    maximize  sum(w)   subject to  B w <= 1,  w >= 0

has the all-slack basis as a feasible start.  Its optimum ``z`` gives the
value ``1/z`` of the shifted game, ``w/z`` is optimal for the column player,
and the slack reduced costs (the dual solution) scaled by ``1/z`` are optimal
for the row player.  Pivoting uses Bland's rule, which cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NumericalFailure

PIVOT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MatrixGameSolution:
    value: float
    x_opt: np.ndarray
    y_opt: np.ndarray

    def __iter__(self):
        return iter((self.value, self.x_opt, self.y_opt))


def _simplex(B: np.ndarray):
    m, n = B.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = B
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = 1.0
    T[m, :n] = -1.0
    basis = list(range(n, n + m))
    max_pivots = 50 * (m + n) + 100
    for _ in range(max_pivots):
        neg = np.flatnonzero(T[m, :-1] < -PIVOT_TOL)
        if neg.size == 0:
            break
        j = neg[0]
        col = T[:m, j]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            # B > 0 makes the feasible region bounded
            raise NumericalFailure("simplex found an unbounded direction")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        r = min(ties, key=lambda k: basis[k])
        T[r] /= T[r, j]
        pivot_row = T[r].copy()
        T -= np.outer(T[:, j], pivot_row)
        T[r] = pivot_row
        basis[r] = j
    else:
        raise NumericalFailure(f"simplex did not terminate within {max_pivots} pivots")

    z = T[m, -1]
    w = np.zeros(n)
    for r, b in enumerate(basis):
        if b < n:
            w[b] = T[r, -1]
    u = T[m, n:n + m].copy()
    return z, w, u


def _normalize(p):
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _pure_saddle(A):
    """Indices of a pure saddle point (smallest ones) or ``None``."""
    row_min = A.min(axis=1)
    col_max = A.max(axis=0)
    lower = row_min.max()
    upper = col_max.min()
    if lower == upper:
        return int(np.argmax(row_min)), int(np.argmin(col_max)), float(lower)
    return None


def val(A) -> MatrixGameSolution:
    """Solve the matrix game ``A`` (row player maximizes ``x^T A y``)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or 0 in A.shape:
        raise DimensionMismatch(f"expected a non-empty matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericalFailure("matrix has non-finite entries")
    m, n = A.shape
    saddle = _pure_saddle(A)
    if saddle is not None:
        i, j, v = saddle
        x = np.zeros(m)
        y = np.zeros(n)
        x[i] = 1.0
        y[j] = 1.0
        return MatrixGameSolution(v, x, y)
    shift = 1.0 - A.min()
    z, w, u = _simplex(A + shift)
    if not z > 0:
        raise NumericalFailure("degenerate simplex optimum")
    return MatrixGameSolution(float(1.0 / z - shift), _normalize(u), _normalize(w))


def val_batch(As, strategies: bool = False):
    """Values of a stack of games ``As[k]`` of shape ``(K, m, n)``.

    Pure saddles are detected for the whole stack at once; only the
    remaining games go through the simplex.  With ``strategies=True`` the
    optimal ``x`` (K, m) and ``y`` (K, n) are returned as well.
    """
    As = np.asarray(As, dtype=float)
    K, m, n = As.shape
    row_min = As.min(axis=2)
    col_max = As.max(axis=1)
    lower = row_min.max(axis=1)
    upper = col_max.min(axis=1)
    values = lower.copy()
    mixed = np.flatnonzero(lower != upper)
    if strategies:
        X = np.zeros((K, m))
        Y = np.zeros((K, n))
        pure = np.flatnonzero(lower == upper)
        X[pure, row_min[pure].argmax(axis=1)] = 1.0
        Y[pure, col_max[pure].argmin(axis=1)] = 1.0
    for k in mixed:
        sol = val(As[k])
        values[k] = sol.value
        if strategies:
            X[k] = sol.x_opt
            Y[k] = sol.y_opt
    if strategies:
        return values, X, Y
    return values


def val_oracle_2x2(A) -> float:
    """Closed-form value of a 2x2 game (independent of :func:`val`)."""
    (a, b), (c, d) = np.asarray(A, dtype=float)
    maximin = max(min(a, b), min(c, d))
    minimax = min(max(a, c), max(b, d))
    if maximin == minimax:
        return float(maximin)
    return float((a * d - b * c) / (a + d - b - c))
