import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jumpput.exceptions import (
    BadJumpMeasure,
    NegativeIntensity,
    NegativePrice,
    NegativeRate,
    NonPositiveHorizon,
    NonPositiveSigma,
    NonPositiveStrike,
)
from jumpput.jump_measure import JumpMeasure
from jumpput.model import ModelParams, Payoff, payoff_eval, validate


def test_point_mass_at_one_gives_mu_equal_r():
    # [TRIVIAL] xi = 1 so mu = r + lambda - lambda = r
    p = validate(ModelParams(0.05, 0.2, 0.1, 100.0, 1.0, JumpMeasure.point(1.0)))
    assert p.xi == 1.0
    assert p.mu == pytest.approx(0.05, abs=1e-15)


def test_zero_rate_zero_intensity_gives_zero_drift():
    # [TRIVIAL]
    assert validate(ModelParams(0.0, 0.2, 0.0, 100.0, 1.0)).mu == 0.0


def test_lognormal_mean_1_2_gives_mu_0_03():
    # [DERIVED] mu = 0.05 + 0.1 - 0.1 * 1.2 by hand
    s = 0.25
    jm = JumpMeasure.lognormal(math.log(1.2) - 0.5 * s**2, s)
    p = validate(ModelParams(0.05, 0.2, 0.1, 100.0, 1.0, jm))
    assert p.xi == pytest.approx(1.2, rel=1e-14)
    assert p.mu == pytest.approx(0.03, abs=1e-14)


def test_killing_rate():
    assert ModelParams(0.05, 0.2, 0.3, 100.0, 1.0).killing == pytest.approx(0.35)


@pytest.mark.parametrize("kwargs, exc", [
    (dict(sigma=0.0), NonPositiveSigma),
    (dict(sigma=-0.1), NonPositiveSigma),
    (dict(K=0.0), NonPositiveStrike),
    (dict(T0=0.0), NonPositiveHorizon),
    (dict(r=-0.01), NegativeRate),
    (dict(lam=-1.0), NegativeIntensity),
    (dict(sigma=float("nan")), NonPositiveSigma),
])
def test_validate_rejects_out_of_range(kwargs, exc):
    base = dict(r=0.05, sigma=0.2, lam=0.1, K=100.0, T0=1.0)
    base.update(kwargs)
    with pytest.raises(exc):
        validate(ModelParams(**base))


def test_validate_rejects_non_measure():
    with pytest.raises(BadJumpMeasure):
        validate(ModelParams(0.05, 0.2, 0.1, 100.0, 1.0, jump="lognormal"))


def test_validate_is_idempotent():
    p = ModelParams(0.05, 0.2, 0.3, 100.0, 0.5, JumpMeasure.lognormal(-0.045, 0.3))
    once = validate(p)
    assert validate(once) == once
    assert validate(once).mu == once.mu


@pytest.mark.parametrize("x, expected", [(0.0, 100.0), (100.0, 0.0), (60.0, 40.0)])
def test_payoff_examples(x, expected):
    # [TRIVIAL]
    assert payoff_eval(x, 100.0) == expected
    assert Payoff(100.0)(x) == expected


def test_payoff_negative_price():
    with pytest.raises(NegativePrice):
        payoff_eval(-1.0, 100.0)
    with pytest.raises(NegativePrice):
        payoff_eval(np.array([1.0, -1e-9]), 100.0)


def test_payoff_vectorized_returns_array():
    out = payoff_eval(np.array([0.0, 50.0, 150.0]), 100.0)
    np.testing.assert_array_equal(out, [100.0, 50.0, 0.0])


@given(st.lists(st.integers(0, 50_000), min_size=3, max_size=40, unique=True),
       st.floats(1.0, 300.0))
def test_payoff_shape_on_sampled_grid(ticks, K):
    x = np.sort(np.array(ticks)) / 100.0
    v = payoff_eval(x, K)
    slopes = np.diff(v) / np.diff(x)
    assert np.all(slopes >= -1.0 - 1e-12)
    assert np.all(slopes <= 1e-12)
    # secant slopes of a convex function are nondecreasing
    assert np.all(np.diff(slopes) >= -1e-9)
    mid = payoff_eval(0.5 * (x[:-1] + x[1:]), K)
    assert np.all(mid <= 0.5 * (v[:-1] + v[1:]) + 1e-12)
