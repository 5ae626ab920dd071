"""Discount-factor families indexed by stage duration.

A family ``alpha_h`` with ``alpha_h / h -> lam`` weights stage ``i`` by
``w_i = prod_{j<i} (1 - alpha_{h_j}) * h_i``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDiscount, NonDivergentTail, RateMismatch, ValidationError
from .game import Partition

SURVIVAL_FLOOR = 1e-12
MAX_TERMS = 10_000_000

KINDS = ("exponential", "linear", "capped")


@dataclass(frozen=True)
class DiscountFamily:
    kind: str
    lam: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown discount family {self.kind!r}; expected one of {KINDS}")
        if not self.lam > 0:
            raise ValidationError("asymptotic discount rate must be positive")

    def alpha(self, h):
        h = np.asarray(h, dtype=float)
        if self.kind == "exponential":
            a = -np.expm1(-self.lam * h)
        elif self.kind == "linear":
            a = self.lam * h
        else:
            a = np.where(h > 1.0 / self.lam, 0.0, self.lam * h)
        return a if a.ndim else float(a)


def parse_family(name: str, lam: float) -> DiscountFamily:
    aliases = {"exp": "exponential", "lin": "linear"}
    return DiscountFamily(aliases.get(name, name), lam)


def _check_alpha(alpha):
    if np.any(np.asarray(alpha) >= 1.0):
        raise DegenerateDiscount("a discount factor reaches 1; the stage weights vanish")


def stage_weights(family: DiscountFamily, partition: Partition, N: int) -> np.ndarray:
    """First ``N`` weights ``w_i = prod_{j<i} (1 - alpha_{h_j}) h_i``."""
    h = partition.steps(N)
    if h.size < N:
        raise NonDivergentTail(f"partition has only {h.size} steps")
    alpha = family.alpha(h)
    _check_alpha(alpha)
    survival = np.cumprod(np.concatenate([[1.0], 1.0 - alpha[:-1]]))
    return survival * h


def _iter_weights(family: DiscountFamily, partition: Partition, floor: float):
    """Yield ``(h_i, survival_i, w_i)`` until the survival product drops below ``floor``."""
    times = partition.iter_times()
    t_prev = next(times)
    survival = 1.0
    for count, t in enumerate(times):
        if count >= MAX_TERMS:
            break
        h = t - t_prev
        t_prev = t
        a = family.alpha(h)
        _check_alpha(a)
        yield h, survival, survival * h
        survival *= 1.0 - a
        if survival < floor:
            return
    raise NonDivergentTail(
        f"survival product stayed above {floor} (steps too small or partition ended)")


def weight_sum_identity_check(lam: float, partition: Partition, eps: float = SURVIVAL_FLOOR) -> float:
    """``|sum_i w_i - 1/lam|`` for the linear family, summed until the survival drops below ``eps``.

    The partial sums telescope to ``(1 - survival) / lam``.  Summing until
    the survival is below ``eps / 2`` keeps the result under ``eps / lam``
    with room for rounding in the final sum.
    """
    family = DiscountFamily("linear", lam)
    total = math.fsum(w for _, _, w in _iter_weights(family, partition, eps / 2))
    return abs(total - 1.0 / lam)


def product_lower_bound_gap(lam: float, steps, exact: bool = False) -> np.ndarray:
    """``prod_{i<=n} (1 - lam h_i) - (1 - lam sum_{i<=n} h_i)`` for every prefix ``n``.

    Nonnegative whenever every ``lam h_i`` lies in ``[0, 1]``.  In floating
    point the second-order gap can drop below rounding, so ``exact=True``
    evaluates it in rational arithmetic on the given floats and only rounds
    the final (nonnegative) differences.
    """
    steps = np.asarray(steps, dtype=float)
    if not exact:
        return np.cumprod(1.0 - lam * steps) - (1.0 - lam * np.cumsum(steps))
    lam_q = Fraction(lam)
    prod, total, out = Fraction(1), Fraction(0), []
    for h in steps:
        h = Fraction(float(h))
        prod *= 1 - lam_q * h
        total += h
        out.append(float(prod - (1 - lam_q * total)))
    return np.array(out)


def family_equivalence_gap(famA: DiscountFamily, famB: DiscountFamily, partition: Partition,
                           C: float = 1.0, floor: float = SURVIVAL_FLOOR) -> float:
    """Worst case of ``|sum_i (s^A_i - s^B_i) g_i|`` over streams with ``|g_i| <= C h_i``.

    ``s`` are the survival products.  The worst stream is
    ``g_i = C h_i sign(s^A_i - s^B_i)``, so the gap is
    ``C sum_i |w^A_i - w^B_i|``; the sum stops once both survivals fall below ``floor``.
    """
    if famA.lam != famB.lam:
        raise RateMismatch(f"families declare different rates {famA.lam} and {famB.lam}")
    times = partition.iter_times()
    t_prev = next(times)
    sA = sB = 1.0
    terms = []
    for count, t in enumerate(times):
        if count >= MAX_TERMS:
            raise NonDivergentTail("survival products did not fall below the floor")
        h = t - t_prev
        t_prev = t
        aA, aB = famA.alpha(h), famB.alpha(h)
        _check_alpha(aA)
        _check_alpha(aB)
        terms.append(abs(sA - sB) * h)
        sA *= 1.0 - aA
        sB *= 1.0 - aB
        if sA < floor and sB < floor:
            break
    else:
        raise NonDivergentTail("partition ended before the survival products vanished")
    return C * math.fsum(terms)
