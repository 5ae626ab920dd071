"""Perfect-observation games with stage duration.

Backward induction of the Shapley operator over a partition, the stationary
discounted equation, and the residual of the limit differential equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, OutOfRange, TruncationUnreachable, ValidationError
from .game import Game, Partition, WeightFunction
from .kernels import StageTransition, transition
from .matrix_game import val_batch

DEFAULT_EPS_TRUNC = 1e-6
MAX_STAGES = 5_000_000


@dataclass(frozen=True, eq=False)
class ValueField:
    """Values ``values[n, w]`` at partition times ``times[n]``, linear in between.

    The last row is the truncation seed (identically zero). ``strategies``
    holds the optimal stage mixed actions ``(x[n, w], y[n, w])`` for every
    solved stage when they were requested.
    """

    times: np.ndarray
    values: np.ndarray
    scheme: str
    eps_trunc: float
    strategies: tuple | None = field(default=None, repr=False)

    def __call__(self, t: float) -> np.ndarray:
        ts = self.times
        if not ts[0] <= t <= ts[-1]:
            raise OutOfRange(f"t={t} outside [{ts[0]}, {ts[-1]}]")
        n = min(int(np.searchsorted(ts, t, side="right")) - 1, ts.size - 2)
        a = (ts[n + 1] - t) / (ts[n + 1] - ts[n])
        return a * self.values[n] + (1 - a) * self.values[n + 1]

    @property
    def stages(self) -> int:
        return self.times.size - 1


def truncated_times(partition: Partition, k: WeightFunction, eps_trunc: float,
                    max_stages: int = MAX_STAGES) -> np.ndarray:
    """Partition times up to the first ``t_N`` with ``tail(t_N) <= eps_trunc``."""
    out = []
    for t in partition.iter_times():
        out.append(t)
        if k.tail(t) <= eps_trunc:
            return np.array(out)
        if len(out) > max_stages:
            break
    raise TruncationUnreachable(
        f"tail weight stayed above {eps_trunc} over {len(out)} partition times")


def stage_payoff(game: Game, k: WeightFunction, t0: float, t1: float, scheme: str) -> np.ndarray:
    """Stage payoff tensor ``(m, n, S)`` on ``[t0, t1]``.

    ``h k(t0) g`` for the linear scheme, ``int_{t0}^{t1} k dt * g`` for the
    exponential one.
    """
    if scheme == "linear":
        weight = (t1 - t0) * k(t0)
    else:
        weight = k.tail(t0) - k.tail(t1)
    return weight * game.payoff


def stage_transition(game: Game, h: float, scheme: str) -> StageTransition:
    """Transition for a step ``h`` rounded to 13 significant digits.

    Steps computed as differences of partition times differ in the last
    bits; rounding lets equal steps share one cached transition.
    """
    return transition(game, float(f"{h:.13g}"), scheme)


def shapley_apply(game: Game, payoff: np.ndarray, trans: StageTransition | np.ndarray,
                  f: np.ndarray, strategies: bool = False):
    """``Val_{I x J}[payoff(i, j, w) + <P(i, j)(w, .), f>]`` for every state ``w``."""
    P = trans.matrices if isinstance(trans, StageTransition) else np.asarray(trans)
    payoff = np.asarray(payoff, dtype=float)
    f = np.asarray(f, dtype=float)
    shape = (game.m, game.n, game.S)
    if payoff.shape != shape or P.shape != shape + (game.S,) or f.shape != (game.S,):
        raise DimensionMismatch(
            f"payoff {payoff.shape}, transition {P.shape}, f {f.shape} do not fit game {shape}")
    games = payoff + P @ f
    return val_batch(np.moveaxis(games, 2, 0), strategies=strategies)


def solve_duration_value(game: Game, partition: Partition, k: WeightFunction,
                         scheme: str = "linear", eps_trunc: float = DEFAULT_EPS_TRUNC,
                         strategies: bool = False) -> ValueField:
    """Value ``v(t_n, w)`` of the game with stage durations ``h_n`` and weight ``k``.

    Backward induction ``v_n = psi_n(v_{n+1})`` from the first time whose
    tail weight is below ``eps_trunc``, seeded with zero there.
    """
    if scheme == "exp":
        scheme = "exponential"
    times = truncated_times(partition, k, eps_trunc)
    N = times.size
    values = np.zeros((N, game.S))
    X = np.zeros((N - 1, game.S, game.m)) if strategies else None
    Y = np.zeros((N - 1, game.S, game.n)) if strategies else None
    cache: dict[float, StageTransition] = {}
    for i in range(N - 2, -1, -1):
        h = float(f"{times[i + 1] - times[i]:.13g}")
        trans = cache.get(h)
        if trans is None:
            trans = cache[h] = stage_transition(game, h, scheme)
        payoff = stage_payoff(game, k, times[i], times[i + 1], scheme)
        if strategies:
            values[i], X[i], Y[i] = shapley_apply(game, payoff, trans, values[i + 1], True)
        else:
            values[i] = shapley_apply(game, payoff, trans, values[i + 1])
    return ValueField(times, values, scheme, eps_trunc, (X, Y) if strategies else None)


def solve_discounted_fixed_point(game: Game, lam: float, tol: float = 1e-10,
                                 max_iter: int = 1_000_000) -> np.ndarray:
    """Solution of ``lam v(w) = Val[lam g(i, j, w) + <q(i, j)(w, .), v>]``.

    With ``c = max(1, q_max)`` the equation is equivalent to
    ``v = Val[lam g + (q + c Id) v] / (lam + c)``, a contraction of modulus
    ``c / (lam + c)``; it is iterated until the update is below
    ``tol * min(lam, 1) / (lam + c)``, which bounds the returned residual by ``tol``.
    """
    if not lam > 0:
        raise ValidationError("lambda must be positive")
    c = max(1.0, game.q_max)
    P = game.kernel + c * np.eye(game.S)
    payoff = lam * game.payoff
    stop = tol * min(lam, 1.0) / (lam + c)
    v = np.zeros(game.S)
    for _ in range(max_iter):
        v_new = shapley_apply(game, payoff, P, v) / (lam + c)
        if np.abs(v_new - v).max() < stop:
            return v_new
        v = v_new
    raise TruncationUnreachable("fixed-point iteration did not converge")


def discounted_residual(game: Game, lam: float, v) -> np.ndarray:
    """``lam v - Val[lam g + <q, v>]`` per state."""
    v = np.asarray(v, dtype=float)
    return lam * v - shapley_apply(game, lam * game.payoff, game.kernel, v)


def limit_equation_residual(game: Game, k: WeightFunction, v: ValueField, t: float) -> np.ndarray:
    """Residual of ``0 = dv/dt + Val[k(t) g + <q, v(t, .)>]`` at time ``t``.

    The time derivative is the forward difference over the partition step
    containing ``t`` (the slope of the linear interpolant).
    """
    ts = v.times
    if not ts[0] <= t < ts[-1]:
        raise OutOfRange(f"t={t} needs a following partition time inside [{ts[0]}, {ts[-1]})")
    n = int(np.searchsorted(ts, t, side="right")) - 1
    slope = (v.values[n + 1] - v.values[n]) / (ts[n + 1] - ts[n])
    vt = v(t)
    hamiltonian = shapley_apply(game, k(t) * game.payoff, game.kernel, vt)
    return slope + hamiltonian
