"""Stage transitions ``Id + h q`` and ``exp(h q)``, and the gap between them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveStep, StepTooLarge, ValidationError
from .game import Game

# Taylor degree for ||A||_1 <= 1/2: remainder 2 * 0.5**14 / 14! < 2e-15
_TAYLOR_DEGREE = 13
_SCALE_TARGET = 0.5


def expm(A: np.ndarray) -> np.ndarray:
    """Matrix exponential of a square matrix, or of a stack ``(..., S, S)``.

    Scaling and squaring: ``A / 2**s`` is brought below norm 1/2, its
    truncated Taylor series is evaluated by Horner's rule, and the result
    is squared ``s`` times.
    """
    A = np.asarray(A, dtype=float)
    S = A.shape[-1]
    norm = np.abs(A).sum(axis=-1).max(initial=0.0)
    s = 0 if norm <= _SCALE_TARGET else int(math.ceil(math.log2(norm / _SCALE_TARGET)))
    X = A / 2.0 ** s
    eye = np.broadcast_to(np.eye(S), A.shape)
    E = eye + X / _TAYLOR_DEGREE
    for d in range(_TAYLOR_DEGREE - 1, 0, -1):
        E = eye + (X @ E) / d
    for _ in range(s):
        E = E @ E
    return E


@dataclass(frozen=True, eq=False)
class StageTransition:
    """Row-stochastic matrices ``matrices[i, j]`` for one stage of length ``h``."""

    matrices: np.ndarray
    scheme: str
    h: float

    def mixed(self, x, y) -> np.ndarray:
        return np.einsum("i,j,ijab->ab", x, y, self.matrices)


def _check_linear_step(game: Game, h: float) -> None:
    if not h > 0:
        raise NonPositiveStep(f"step must be positive, got {h}")
    if h * game.q_max > 1.0 + 1e-12:
        raise StepTooLarge(f"h={h} times q_max={game.q_max} exceeds 1; Id + h q is not stochastic")


def linear_transition(game: Game, h: float) -> StageTransition:
    _check_linear_step(game, h)
    P = np.eye(game.S) + h * game.kernel
    # rounding can leave -1e-17 on a diagonal at h = 1/q_max
    np.clip(P, 0.0, None, out=P)
    return StageTransition(P, "linear", float(h))


def exp_transition(game: Game, h: float) -> StageTransition:
    if not h > 0:
        raise NonPositiveStep(f"step must be positive, got {h}")
    P = expm(h * game.kernel)
    np.clip(P, 0.0, None, out=P)
    return StageTransition(P, "exponential", float(h))


def transition(game: Game, h: float, scheme: str) -> StageTransition:
    if scheme == "linear":
        return linear_transition(game, h)
    if scheme in ("exp", "exponential"):
        return exp_transition(game, h)
    raise ValidationError(f"unknown scheme {scheme!r}")


def scheme_gap(game: Game, h: float) -> float:
    """``max_{i,j,w} sum_w' |(Id + h q - exp(h q))[w, w']|``."""
    _check_linear_step(game, h)
    diff = np.eye(game.S) + h * game.kernel - expm(h * game.kernel)
    return float(np.abs(diff).sum(axis=-1).max())


def scheme_gap_bound(game: Game, h: float) -> float:
    """Series remainder bound ``e^{h r} - 1 - h r`` with ``r`` the largest row L1 norm of ``q``."""
    r = float(np.abs(game.kernel).sum(axis=-1).max())
    x = h * r
    return math.expm1(x) - x
