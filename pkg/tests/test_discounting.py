import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stagegames import (DiscountFamily, family_equivalence_gap, make_partition,
                        product_lower_bound_gap, stage_weights, uniform_partition,
                        weight_sum_identity_check)
from stagegames.discounting import parse_family
from stagegames.errors import DegenerateDiscount, NonDivergentTail, RateMismatch, ValidationError
from stagegames.game import TailRule


def random_partition(rng, max_h=0.5):
    prefix = np.concatenate([[0.0], np.cumsum(rng.uniform(1e-3, max_h, size=rng.integers(0, 40)))])
    return make_partition(prefix, tail=TailRule("constant", float(rng.uniform(0.05, max_h))))


@pytest.mark.parametrize("kind", ["exponential", "linear", "capped"])
def test_rate_is_asymptotic_slope(kind):
    fam = DiscountFamily(kind, 1.7)
    assert fam.alpha(1e-6) / 1e-6 == pytest.approx(1.7, rel=1e-4)


def test_capped_family_vanishes_for_long_steps():
    fam = DiscountFamily("capped", 2.0)
    assert fam.alpha(0.4) == 0.8
    assert fam.alpha(0.6) == 0.0


def test_family_validation():
    with pytest.raises(ValidationError):
        DiscountFamily("hyperbolic", 1.0)
    with pytest.raises(ValidationError):
        DiscountFamily("linear", 0.0)
    assert parse_family("exp", 1.0).kind == "exponential"
    assert parse_family("lin", 1.0).kind == "linear"


def test_linear_weights_unit_steps():
    w = stage_weights(DiscountFamily("linear", 0.5), uniform_partition(1.0), 60)
    np.testing.assert_allclose(w, 0.5 ** np.arange(60), rtol=1e-15)
    assert math.fsum(w) == pytest.approx(2.0, abs=1e-15)


def test_first_weight_is_first_step(rng):
    part = random_partition(rng)
    for kind in ("exponential", "linear", "capped"):
        assert stage_weights(DiscountFamily(kind, 1.0), part, 1)[0] == part.steps(1)[0]


def test_exponential_weights_telescope(rng):
    for _ in range(20):
        part = random_partition(rng)
        lam = float(rng.uniform(0.1, 3))
        t = part.times(200)
        w = stage_weights(DiscountFamily("exponential", lam), part, 199)
        np.testing.assert_allclose(w / np.diff(t), np.exp(-lam * t[:-1]), rtol=1e-12, atol=1e-300)


def test_degenerate_discount():
    with pytest.raises(DegenerateDiscount):
        stage_weights(DiscountFamily("linear", 2.0), uniform_partition(0.5), 3)
    with pytest.raises(DegenerateDiscount):
        weight_sum_identity_check(1.0, uniform_partition(1.0))


def test_identity_unit_steps():
    assert weight_sum_identity_check(0.5, uniform_partition(1.0), 1e-12) <= 1e-12 / 0.5


def test_identity_random_partitions(rng):
    for _ in range(30):
        assert weight_sum_identity_check(1.0, random_partition(rng), 1e-12) <= 1e-12


def test_identity_needs_divergent_partition():
    finite = uniform_partition(0.1, 1.0)
    with pytest.raises(NonDivergentTail):
        weight_sum_identity_check(1.0, finite)


def test_normalized_linear_weights_sum_to_one(rng):
    part = random_partition(rng)
    lam = 0.7
    w = stage_weights(DiscountFamily("linear", lam), part, 3000)
    assert lam * math.fsum(w) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 1.0), st.lists(st.floats(0.0, 1.0), min_size=1, max_size=40))
def test_product_lower_bound_exact(lam, steps):
    steps = [min(h, 1.0 / lam) for h in steps]
    assert np.all(product_lower_bound_gap(lam, steps, exact=True) >= 0)
    # the floating-point evaluation agrees to rounding
    np.testing.assert_allclose(product_lower_bound_gap(lam, steps),
                               product_lower_bound_gap(lam, steps, exact=True), atol=1e-14)


def test_family_gap_examples():
    part = uniform_partition(0.1)
    lin, ex = DiscountFamily("linear", 1.0), DiscountFamily("exponential", 1.0)
    assert family_equivalence_gap(lin, lin, part) == 0.0
    assert family_equivalence_gap(DiscountFamily("capped", 1.0), lin, part) == 0.0
    with pytest.raises(RateMismatch):
        family_equivalence_gap(lin, DiscountFamily("exponential", 2.0), part)


def test_family_gap_decreases_first_order():
    lin, ex = DiscountFamily("linear", 1.0), DiscountFamily("exponential", 1.0)
    hs = [0.1, 0.05, 0.025, 0.0125]
    gaps = [family_equivalence_gap(lin, ex, uniform_partition(h)) for h in hs]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[2] < 0.05
    slope = np.polyfit(np.log(hs[1:]), np.log(gaps[1:]), 1)[0]
    assert slope >= 0.9


def test_family_gap_scales_with_stream_bound():
    lin, ex = DiscountFamily("linear", 1.0), DiscountFamily("exponential", 1.0)
    part = uniform_partition(0.1)
    assert family_equivalence_gap(lin, ex, part, C=3.0) == pytest.approx(
        3 * family_equivalence_gap(lin, ex, part), rel=1e-15)
