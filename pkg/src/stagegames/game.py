"""Game model: finite games with rate kernels, partitions and weight functions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    GameFormatError,
    InvalidPartition,
    InvalidWeightFunction,
    KernelRowSum,
    NegativeOffDiagonal,
    NonDivergentTail,
    NonPositiveStep,
    NotADistribution,
    NotRowStochastic,
    PositiveDiagonal,
    ValidationError,
)

STRUCT_TOL = 1e-12
INTEGRAL_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Game:
    """Finite zero-sum game with payoff ``g[i, j, w]`` and kernel ``q[i, j, w, w']``.

    Build instances through :func:`make_game` or :func:`validate_game`; the
    constructor itself does not check the kernel.
    """

    states: tuple
    actions1: tuple
    actions2: tuple
    payoff: np.ndarray
    kernel: np.ndarray
    q_max: float
    g_norm: float

    @property
    def S(self) -> int:
        return len(self.states)

    @property
    def m(self) -> int:
        return len(self.actions1)

    @property
    def n(self) -> int:
        return len(self.actions2)

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "actions1": list(self.actions1),
            "actions2": list(self.actions2),
            "payoff": self.payoff.tolist(),
            "kernel": self.kernel.tolist(),
        }


def kernel_from_matrix(P) -> np.ndarray:
    """Kernel ``q = P - Id`` of a row-stochastic matrix or tensor ``P[i, j]``."""
    P = np.asarray(P, dtype=float)
    if P.ndim < 2 or P.shape[-2] != P.shape[-1]:
        raise DimensionMismatch(f"transition must end in square (S, S) blocks, got {P.shape}")
    if not np.all(np.isfinite(P)):
        raise NotRowStochastic("transition has non-finite entries")
    if np.any(P < 0):
        raise NotRowStochastic("transition has negative entries")
    dev = np.abs(P.sum(axis=-1) - 1.0).max(initial=0.0)
    if dev > STRUCT_TOL:
        raise NotRowStochastic(f"transition rows deviate from 1 by {dev:.3g}")
    return P - np.eye(P.shape[-1])


def make_game(payoff, kernel=None, *, transition=None, states=None,
              actions1=None, actions2=None) -> Game:
    """Validate arrays and return a :class:`Game`.

    Exactly one of ``kernel`` and ``transition`` must be given; a transition
    tensor is converted with :func:`kernel_from_matrix`.
    """
    if (kernel is None) == (transition is None):
        raise GameFormatError("exactly one of 'kernel' and 'transition' is required")
    if kernel is None:
        kernel = kernel_from_matrix(transition)
    g = np.asarray(payoff, dtype=float)
    q = np.asarray(kernel, dtype=float)
    if g.ndim != 3:
        raise DimensionMismatch(f"payoff must be 3-d [i][j][state], got shape {g.shape}")
    m, n, S = g.shape
    if q.shape != (m, n, S, S):
        raise DimensionMismatch(f"kernel shape {q.shape} does not match payoff shape {g.shape}")
    if min(m, n, S) < 1:
        raise DimensionMismatch("states and action sets must be non-empty")
    states = tuple(range(S)) if states is None else tuple(states)
    actions1 = tuple(range(m)) if actions1 is None else tuple(actions1)
    actions2 = tuple(range(n)) if actions2 is None else tuple(actions2)
    if (len(states), len(actions1), len(actions2)) != (S, m, n):
        raise DimensionMismatch(
            f"declared sizes {(len(states), len(actions1), len(actions2))} "
            f"do not match tensors {(S, m, n)}")
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(q))):
        raise GameFormatError("payoff and kernel must be finite")

    rows = np.abs(q.sum(axis=-1))
    if rows.max() > STRUCT_TOL:
        i, j, w = np.unravel_index(rows.argmax(), rows.shape)
        raise KernelRowSum(f"kernel row (i={i}, j={j}, state={w}) sums to {q[i, j, w].sum():.3g}")
    diag = np.diagonal(q, axis1=2, axis2=3)
    if np.any(diag > 0):
        raise PositiveDiagonal("kernel has a positive diagonal entry")
    off = ~np.eye(S, dtype=bool)
    if np.any(q[..., off] < 0):
        raise NegativeOffDiagonal("kernel has a negative off-diagonal entry")

    return Game(states, actions1, actions2, _frozen(g), _frozen(q),
                q_max=float(-diag.min(initial=0.0)) + 0.0,
                g_norm=float(np.abs(g).max()))


def validate_game(raw: Mapping) -> Game:
    """Build a :class:`Game` from a JSON-style mapping (see the README for the schema)."""
    if not isinstance(raw, Mapping):
        raise GameFormatError("game description must be a JSON object")
    if "payoff" not in raw:
        raise GameFormatError("missing 'payoff'")
    if ("kernel" in raw) == ("transition" in raw):
        raise GameFormatError("exactly one of 'kernel' and 'transition' must be present")
    try:
        return make_game(raw["payoff"], raw.get("kernel"), transition=raw.get("transition"),
                         states=raw.get("states"), actions1=raw.get("actions1"),
                         actions2=raw.get("actions2"))
    except ValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"ragged or non-numeric tensor: {exc}") from exc


def load_game(path) -> Game:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameFormatError(f"{path}: invalid JSON ({exc})") from exc
    return validate_game(raw)


def save_game(game: Game, path) -> None:
    Path(path).write_text(json.dumps(game.to_dict()))


def as_distribution(p, tol: float = STRUCT_TOL) -> np.ndarray:
    """Check that ``p`` is a probability vector (mixed action or belief)."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise NotADistribution(f"expected a non-empty vector, got shape {p.shape}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > tol:
        raise NotADistribution(f"not a probability vector: {p}")
    return p


# ---------------------------------------------------------------------------
# Partitions


@dataclass(frozen=True)
class TailRule:
    """How a partition continues after its explicit prefix.

    ``constant``: every further step equals ``step``.
    ``geometric``: on an unbounded horizon the steps are ``step * ratio**j``;
    on a finite horizon each step covers the fraction ``1 - ratio`` of the
    remaining time, so the times accumulate at the horizon.
    """

    kind: str
    step: float | None = None
    ratio: float | None = None


@dataclass(frozen=True, eq=False)
class Partition:
    """Strictly increasing times ``0 = t_1 < t_2 < ...`` covering ``[0, horizon)``.

    A finite-horizon partition without a tail rule ends with one closing step
    onto the horizon, which is then emitted as a terminal time.
    """

    prefix: np.ndarray
    horizon: float
    tail: TailRule | None
    sup_h: float

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.horizon)

    @property
    def terminates(self) -> bool:
        return self.bounded and self.tail is None

    def iter_times(self) -> Iterator[float]:
        t = self.prefix
        yield from (float(x) for x in t)
        last = float(t[-1])
        if self.tail is None:
            # only finite horizons reach here
            yield self.horizon
            return
        j = 1
        if self.tail.kind == "constant":
            while True:
                yield last + j * self.tail.step
                j += 1
        r = self.tail.ratio
        if self.bounded:
            remaining = self.horizon - last
            while True:
                t_next = self.horizon - remaining * r ** j
                if t_next <= last:
                    # spacing fell below float resolution near the horizon
                    return
                yield t_next
                last = t_next
                j += 1
        else:
            step = self.tail.step
            while True:
                last = last + step
                yield last
                step *= r

    def times(self, count: int) -> np.ndarray:
        out = []
        for t in self.iter_times():
            if len(out) == count:
                break
            out.append(t)
        return np.array(out)

    def steps(self, count: int) -> np.ndarray:
        return np.diff(self.times(count + 1))

    def __repr__(self):
        return (f"Partition(prefix={len(self.prefix)} times, horizon={self.horizon}, "
                f"tail={self.tail}, sup_h={self.sup_h:g})")


def make_partition(times: Sequence[float], tail: TailRule | None = None,
                   horizon: float = math.inf) -> Partition:
    """Partition from explicit times plus an optional tail rule."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise InvalidPartition("times must be a non-empty 1-d sequence")
    if t[0] != 0.0:
        raise InvalidPartition(f"first time must be 0, got {t[0]}")
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise NonPositiveStep("times must be strictly increasing")
    horizon = float(horizon)
    if not horizon > 0:
        raise InvalidPartition("horizon must be positive")
    bounded = math.isfinite(horizon)
    if bounded and t[-1] >= horizon:
        raise InvalidPartition("all prefix times must lie before the horizon")
    sup = float(steps.max(initial=0.0))

    if tail is None:
        if not bounded:
            raise NonDivergentTail("an unbounded partition needs a tail rule")
        sup = max(sup, horizon - float(t[-1]))
    elif tail.kind == "constant":
        if bounded:
            raise InvalidPartition("a constant tail would overshoot a finite horizon")
        if tail.step is None or not tail.step > 0:
            raise NonPositiveStep("constant tail step must be positive")
        sup = max(sup, float(tail.step))
    elif tail.kind == "geometric":
        r = tail.ratio
        if r is None or not r > 0:
            raise NonPositiveStep("geometric tail ratio must be positive")
        if bounded:
            if r >= 1:
                raise InvalidPartition("a finite-horizon geometric tail needs ratio < 1")
            sup = max(sup, (horizon - float(t[-1])) * (1 - r))
        else:
            if tail.step is None or not tail.step > 0:
                raise NonPositiveStep("geometric tail step must be positive")
            if r < 1:
                raise NonDivergentTail(
                    f"geometric tail with ratio {r} has summable steps; times stay bounded")
            sup = math.inf if r > 1 else max(sup, float(tail.step))
    else:
        raise InvalidPartition(f"unknown tail rule {tail.kind!r}")
    return Partition(_frozen(t), horizon, tail, sup)


def uniform_partition(h: float | None = None, horizon: float = math.inf,
                      n: int | None = None) -> Partition:
    """Uniform partition with step ``h`` (or ``n`` equal steps of a finite horizon)."""
    horizon = float(horizon)
    if n is not None:
        if not math.isfinite(horizon):
            raise InvalidPartition("n steps need a finite horizon")
        if n < 1:
            raise NonPositiveStep("n must be at least 1")
        h = horizon / n
    if h is None or not h > 0:
        raise NonPositiveStep(f"step must be positive, got {h}")
    if not math.isfinite(horizon):
        return make_partition([0.0], TailRule("constant", step=float(h)))
    if h > horizon:
        raise InvalidPartition(f"step {h} exceeds horizon {horizon}")
    count = n if n is not None else math.ceil(horizon / h - 1e-9)
    return make_partition(np.arange(count) * h, None, horizon)


def parse_partition(text: str) -> Partition:
    """Parse ``uniform:h`` or ``uniform:h:T`` (CLI syntax)."""
    parts = text.split(":")
    if parts[0] != "uniform" or len(parts) not in (2, 3):
        raise InvalidPartition(f"cannot parse partition {text!r}; expected uniform:h[:T]")
    try:
        h = float(parts[1])
        horizon = float(parts[2]) if len(parts) == 3 else math.inf
    except ValueError as exc:
        raise InvalidPartition(f"cannot parse partition {text!r}") from exc
    return uniform_partition(h, horizon)


# ---------------------------------------------------------------------------
# Weight functions


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Nonincreasing ``k >= 0`` on ``[0, horizon]`` with unit integral."""

    kind: str
    horizon: float
    rate: float | None = None
    table_t: np.ndarray | None = field(default=None, repr=False)
    table_k: np.ndarray | None = field(default=None, repr=False)
    _cum: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def exponential(cls, lam: float) -> "WeightFunction":
        if not lam > 0:
            raise InvalidWeightFunction("discount rate must be positive")
        return cls("exponential", math.inf, rate=float(lam))

    @classmethod
    def uniform(cls, T: float) -> "WeightFunction":
        if not (T > 0 and math.isfinite(T)):
            raise InvalidWeightFunction("uniform weight needs a finite positive horizon")
        return cls("uniform", float(T))

    @classmethod
    def custom(cls, ts, ks, normalize: bool = False) -> "WeightFunction":
        """Piecewise-linear weight through samples ``(ts, ks)`` on ``[0, ts[-1]]``."""
        ts = np.asarray(ts, dtype=float)
        ks = np.asarray(ks, dtype=float)
        if ts.ndim != 1 or ts.shape != ks.shape or ts.size < 2:
            raise InvalidWeightFunction("need matching 1-d sample arrays of length >= 2")
        if ts[0] != 0 or np.any(np.diff(ts) <= 0):
            raise InvalidWeightFunction("sample times must start at 0 and increase")
        if normalize:
            ks = ks / np.sum(np.diff(ts) * (ks[1:] + ks[:-1]) / 2)
        seg = np.diff(ts) * (ks[1:] + ks[:-1]) / 2
        cum = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        w = cls("custom", float(ts[-1]), table_t=_frozen(ts), table_k=_frozen(ks), _cum=_frozen(cum))
        w.check()
        return w

    @classmethod
    def sampled(cls, fn, T: float, samples: int = 4097, normalize: bool = True) -> "WeightFunction":
        ts = np.linspace(0.0, T, samples)
        return cls.custom(ts, np.array([fn(t) for t in ts], dtype=float), normalize=normalize)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "exponential":
            out = self.rate * np.exp(-self.rate * t)
        elif self.kind == "uniform":
            out = np.where(t <= self.horizon, 1.0 / self.horizon, 0.0)
        else:
            out = np.interp(t, self.table_t, self.table_k, right=0.0)
        return out if out.ndim else float(out)

    def tail(self, t):
        """``int_t^horizon k(s) ds``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "exponential":
            out = np.exp(-self.rate * t)
        elif self.kind == "uniform":
            out = np.clip((self.horizon - t) / self.horizon, 0.0, 1.0)
        else:
            ts, ks, cum = self.table_t, self.table_k, self._cum
            tc = np.clip(t, 0.0, self.horizon)
            idx = np.clip(np.searchsorted(ts, tc, side="right") - 1, 0, ts.size - 2)
            k_t = np.interp(tc, ts, ks)
            out = cum[idx + 1] + (ts[idx + 1] - tc) * (k_t + ks[idx + 1]) / 2
        return out if out.ndim else float(out)

    integral_tail = tail

    def integral(self, a, b):
        return np.asarray(self.tail(a)) - np.asarray(self.tail(b))

    @property
    def sup_norm(self) -> float:
        return float(self(0.0))

    def check(self, samples: int = 1024) -> None:
        end = self.horizon if math.isfinite(self.horizon) else 50.0 / self.rate
        ts = np.linspace(0.0, end, samples)
        k = np.asarray(self(ts))
        if np.any(k < 0):
            raise InvalidWeightFunction("weight function takes negative values")
        if np.any(np.diff(k) > STRUCT_TOL):
            raise InvalidWeightFunction("weight function is not nonincreasing")
        total = float(self.tail(0.0))
        if abs(total - 1.0) > INTEGRAL_TOL:
            raise InvalidWeightFunction(f"weight integrates to {total!r}, not 1")


def parse_weight(text: str) -> WeightFunction:
    """Parse ``exp:LAMBDA`` or ``unif:T`` (CLI syntax)."""
    kind, _, arg = text.partition(":")
    try:
        value = float(arg)
    except ValueError as exc:
        raise InvalidWeightFunction(f"cannot parse weight {text!r}") from exc
    if kind == "exp":
        return WeightFunction.exponential(value)
    if kind == "unif":
        return WeightFunction.uniform(value)
    raise InvalidWeightFunction(f"unknown weight kind {kind!r}; expected exp:L or unif:T")
