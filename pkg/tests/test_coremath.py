import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgetc.coremath import (
    ConfidenceParams,
    FeasibleInterval,
    LossArgs,
    argmin_loss_on_interval,
    default_probability,
    default_probability_array,
    feasible_interval,
    g_conf,
    gamma_conf,
    hardness_ratio,
    loss,
    loss_minus,
    loss_plus,
    tau_max,
    zone_threshold,
    zone_threshold_array,
)
from dgetc.errors import ParameterError
from oracles import GRID, feasible_oracle, grid_losses, ref_loss, sufficient_conditions_hold

gains = st.floats(-1, 1, allow_nan=False, allow_subnormal=False)


def test_loss_examples():
    assert loss_plus(0, 0, 0.5) == 0
    assert loss_plus(1, 0, 1) == -0.5
    assert loss_plus(1, 1, 0.5) == 0
    assert loss_minus(0, 0, 0.3) == 0
    assert loss_minus(0, 1, 0) == -0.5
    assert loss_minus(1, 1, 0.5) == 0
    assert loss(1, 0, 1) == -0.5
    assert loss(-0.5, 1, 0) == -0.5
    assert loss(0, 0, 0) == 0
    assert loss(*LossArgs(1.0, 0.0, 1.0)) == -0.5


@given(gains, gains, st.floats(0, 1))
def test_loss_identity(a, b, p):
    assert loss_plus(a, b, p) + loss_minus(a, b, p) == pytest.approx((1 - 2 * p) * (a - b), abs=1e-12)
    assert loss(a, b, p) == pytest.approx(float(ref_loss(a, b, p)), abs=1e-15)


def test_default_loss_nonpositive_when_gains_sum_nonnegative():
    rng = np.random.default_rng(0)
    a, b = rng.uniform(-1, 1, (2, 100_000))
    keep = a + b >= 0
    for x, y in zip(a[keep], b[keep]):
        v = loss(x, y, default_probability(x, y))
        assert v <= 1e-15
        if x > 0 and y > 0:
            assert v == pytest.approx(-((x - y) ** 2) / (2 * (x + y)), abs=1e-12)


def test_tau_max():
    assert tau_max(8, 1) == 6
    assert tau_max(1, 2) == 1
    with pytest.raises(ParameterError):
        tau_max(1, 1)
    values = [tau_max(T, 3) for T in range(1, 2000)]
    assert values == sorted(values)


def test_g_conf_reference_value():
    e = math.e
    expected = math.sqrt(12) * (1 + 2 * e**-0.5 + 9 / math.sqrt(3) * e ** (-1 / 3))
    assert g_conf(ConfidenceParams(1, e, 1.0, 1.0, 1.0)) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(20.5638, abs=1e-4)


def test_g_conf_monotone():
    base = dict(d=3, T=1000, c=1.0)
    gs = [g_conf(ConfidenceParams(delta=dl, sigma=0.1, **base)) for dl in (0.01, 0.1, 0.5, 1.0)]
    assert all(x > y for x, y in zip(gs, gs[1:]))
    gs = [g_conf(ConfidenceParams(delta=0.1, sigma=s, **base)) for s in (0.01, 0.1, 1.0)]
    assert all(x < y for x, y in zip(gs, gs[1:]))


def test_gamma_conf():
    assert gamma_conf(ConfidenceParams(1, 1, 1.0, 1.0, 1.0)) == pytest.approx(3 * math.sqrt(3 * math.log(2)))
    vals = [gamma_conf(ConfidenceParams(2, T, 0.1, 0.5, 1.0)) for T in (10, 100, 1000)]
    assert vals == sorted(vals)
    # linear in sqrt(2 sigma^2 + c^2) at fixed logs
    g1 = gamma_conf(ConfidenceParams(2, 50, 0.1, 1.0, 1.0))
    g2 = gamma_conf(ConfidenceParams(2, 50, 0.1, 2.0, 2.0))
    assert g2 == pytest.approx(2 * g1)


@pytest.mark.parametrize(
    "kwargs",
    [dict(d=0), dict(T=0), dict(delta=0.0), dict(delta=1.5), dict(sigma=0.0), dict(c=-1.0)],
)
def test_confidence_params_validation(kwargs):
    base = dict(d=2, T=10, delta=0.1, sigma=0.1, c=1.0)
    base.update(kwargs)
    with pytest.raises(ParameterError):
        ConfidenceParams(**base)


def test_feasible_interval_examples():
    iv = feasible_interval(-0.5, 1.0, 0.2)
    assert not iv.empty
    assert iv.lo == 0.0 and iv.hi == pytest.approx(6 / 35, abs=1e-15)
    assert feasible_interval(1.0, 1.0, 0.1).empty
    iv = feasible_interval(0.0, 0.0, 0.0)
    assert (iv.lo, iv.hi) == (0.0, 1.0)


def test_argmin_examples():
    p, v = argmin_loss_on_interval(-0.5, 1.0, feasible_interval(-0.5, 1.0, 0.2))
    assert p == 0.0 and v == pytest.approx(-0.5)
    assert argmin_loss_on_interval(0.0, 0.0, FeasibleInterval(False, 0.0, 1.0)) == (0.0, 0.0)
    p, v = argmin_loss_on_interval(1.0, 1.0, FeasibleInterval(False, 0.0, 1.0))
    assert p == pytest.approx(0.5) and v == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ParameterError):
        argmin_loss_on_interval(1.0, 1.0, FeasibleInterval(True))


@settings(max_examples=300, deadline=None)
@given(gains, gains, st.floats(0, 0.8))
def test_feasible_interval_against_oracles(a, b, thr):
    iv = feasible_interval(a, b, thr)
    ref = feasible_oracle(a, b, thr)
    member = grid_losses([a], [b])[0] <= -thr
    if ref is None:
        assert iv.empty or iv.width < 1e-9
        return
    assert not iv.empty
    assert iv.lo == pytest.approx(ref[0], abs=1e-9)
    assert iv.hi == pytest.approx(ref[1], abs=1e-9)
    away = (GRID < iv.lo - 1e-9) | (GRID > iv.hi + 1e-9)
    inside = (GRID > iv.lo + 1e-9) & (GRID < iv.hi - 1e-9)
    assert not member[away].any()
    assert member[inside].all()
    p, v = argmin_loss_on_interval(a, b, iv)
    assert iv.lo <= p <= iv.hi
    probe = np.random.default_rng(0).uniform(iv.lo, iv.hi, 1000)
    assert v <= ref_loss(a, b, probe).min() + 1e-12


def test_default_probability():
    assert default_probability(1, 0) == 1
    assert default_probability(2, 1) == pytest.approx(2 / 3)
    assert default_probability(-0.1, -0.2) == 0.5
    a = np.array([1.0, 2.0, -0.1])
    b = np.array([0.0, 1.0, -0.2])
    assert default_probability_array(a, b) == pytest.approx([1.0, 2 / 3, 0.5])


def test_zone_threshold_examples():
    assert zone_threshold(0, 1) == 1
    assert zone_threshold(1, 1) == math.inf
    assert zone_threshold(1, 0) == 1
    assert zone_threshold(-0.6, 0.5) == math.inf  # gains sum negative


def test_zone_threshold_array_matches_scalar():
    rng = np.random.default_rng(1)
    a, b = rng.uniform(-1, 1, (2, 5000))
    a[:10] = b[:10]
    arr = zone_threshold_array(a, b)
    ref = np.array([zone_threshold(x, y) for x, y in zip(a, b)])
    assert np.array_equal(np.isinf(arr), np.isinf(ref))
    assert np.allclose(arr, ref, rtol=1e-14, atol=0)


@settings(max_examples=500, deadline=None)
@given(gains, gains)
def test_zone_threshold_properties(a, b):
    if a + b < 0:
        return
    z = zone_threshold(a, b)
    h = hardness_ratio(a, b)
    if math.isfinite(z) and math.isfinite(h):
        assert z <= h * (1 + 1e-12)
    if math.isfinite(z):
        # slightly above the threshold the sufficient linear conditions on p are satisfiable
        assert sufficient_conditions_hold(a, b, 1.0 / math.sqrt(z * (1 + 1e-6)))


def test_hardness_ratio():
    assert hardness_ratio(0.5, -0.5) == pytest.approx(4.0)
    assert hardness_ratio(1.0, 1.0) == math.inf
    assert hardness_ratio(0.0, 0.0) == math.inf
    assert hardness_ratio(-1.0, -2.0) == math.inf
