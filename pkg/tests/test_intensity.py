import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from firstgap import intensity
from firstgap.errors import DivergenceError, DomainError, UnsupportedFamilyError
from firstgap.intensity import (Floor, constant, cumulative, eval_rate,
                                exp_decay, from_json, log_growth,
                                log_power_decay, power_decay,
                                rescale_unit_gap, splice, to_json)


def test_eval_rate_examples():
    assert eval_rate(constant(2.0), 5.0) == 2.0
    assert eval_rate(power_decay(1.0, 1.0), 4.0) == 0.25
    assert eval_rate(exp_decay(1.0, 1.0), 1.0) == pytest.approx(math.exp(-1), abs=1e-12)


def test_eval_rate_negative_time():
    with pytest.raises(DomainError):
        eval_rate(constant(1.0), -0.5)


def test_eval_rate_floor():
    rf = power_decay(2.0, 1.5)  # default floor at t0=1 with the t=1 value
    assert eval_rate(rf, 0.2) == eval_rate(rf, 1.0) == 2.0
    assert eval_rate(rf, 8.0) == pytest.approx(2.0 * 8.0 ** -1.5)


def test_cumulative_examples():
    assert cumulative(constant(2.0), 1.0, 3.0) == pytest.approx(4.0, abs=1e-12)
    assert cumulative(exp_decay(1.0, 1.0), 0.0, math.inf) == pytest.approx(1.0)
    # floored power decay: unit rate on [0,1], then t**-2 on [1,10]
    rf = power_decay(1.0, 2.0)
    assert cumulative(rf, 0.0, 10.0) == pytest.approx(1.9, abs=1e-10)


def test_cumulative_domain_and_divergence():
    with pytest.raises(DomainError):
        cumulative(constant(1.0), 3.0, 1.0)
    with pytest.raises(DivergenceError) as err:
        cumulative(constant(1.0), 0.0, math.inf)
    assert err.value.lower_bound > 1e5
    # explicit truncation turns the divergent request into a finite one
    assert cumulative(constant(1.0), 0.0, math.inf, truncation=50.0) == pytest.approx(50.0)


def test_cumulative_quadrature_matches_closed_form():
    rf = log_growth(2.0, 0.7)
    for a, b in [(0.0, 3.0), (1.0, 25.0), (10.0, 11.5)]:
        hinted = cumulative(rf, a, b)
        raw, _ = __import__("scipy.integrate", fromlist=["quad"]).quad(
            lambda t: eval_rate(rf, t), a, b, points=[rf.floor.t0], limit=200)
        assert hinted == pytest.approx(raw, rel=1e-8)


_FAMILIES = st.sampled_from(["constant", "power", "exp", "logpow", "loggrowth"])


def _build(family: str, a: float, b: float):
    if family == "constant":
        return constant(a)
    if family == "power":
        return power_decay(a, b)
    if family == "exp":
        return exp_decay(a, b)
    if family == "logpow":
        return log_power_decay(a, b)
    return log_growth(a, b)


@settings(max_examples=40, deadline=None)
@given(_FAMILIES,
       st.floats(0.2, 3.0), st.floats(0.2, 2.0),
       st.floats(0.0, 40.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_additivity(family, a, b, base, u, v):
    rf = _build(family, a, b)
    lo = base
    mid = base + u * 5.0
    hi = mid + v * 5.0
    whole = cumulative(rf, lo, hi)
    split_sum = cumulative(rf, lo, mid) + cumulative(rf, mid, hi)
    assert whole == pytest.approx(split_sum, rel=1e-8, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(_FAMILIES, st.floats(0.2, 3.0), st.floats(0.2, 2.0),
       st.floats(0.25, 4.0), st.floats(0.1, 20.0))
def test_rescale_cumulative_identity(family, a, b, ell, t):
    rf = _build(family, a, b)
    scaled = rescale_unit_gap(rf, ell)
    assert cumulative(scaled, 0.0, t) == pytest.approx(
        cumulative(rf, 0.0, t * ell), rel=1e-10, abs=1e-10)


def test_rescale_examples():
    assert rescale_unit_gap(constant(1.0), 2.0).params["mu"] == pytest.approx(2.0)
    rf = rescale_unit_gap(power_decay(1.0, 1.0), 2.0)
    assert rf.family == intensity.POWER_DECAY
    assert rf.params["a"] == pytest.approx(1.0)  # a * ell**(1-b) with b=1
    assert eval_rate(rf, 10.0) == pytest.approx(1.0 / 10.0)
    same = rescale_unit_gap(rf, 1.0)
    assert same is rf
    with pytest.raises(DomainError):
        rescale_unit_gap(rf, 0.0)


def test_splice_examples():
    rf = power_decay(1.0, 1.0)
    self_spliced = splice(rf, rf, 5.0)
    for a, b in [(0.0, 3.0), (2.0, 9.0), (4.9, 5.1)]:
        assert cumulative(self_spliced, a, b) == pytest.approx(
            cumulative(rf, a, b), rel=1e-10)
    two = splice(constant(1.0), constant(2.0), 1.0)
    assert cumulative(two, 0.0, 2.0) == pytest.approx(3.0)
    lg = splice(constant(1.0), log_growth(1.0, 0.5), 10.0)
    assert eval_rate(lg, 100.0) == pytest.approx(0.5 * math.log(100.0))
    assert eval_rate(lg, 5.0) == 1.0


def test_symbolic_traits():
    assert intensity.rate_limit(constant(3.0)) == 3.0
    assert intensity.rate_limit(power_decay(1.0, 1.0)) == 0.0
    assert math.isinf(intensity.rate_limit(log_growth(1.0, 0.5)))
    assert intensity.log_ratio_limit(log_growth(1.0, 2.0)) == 2.0
    assert intensity.total_mass(exp_decay(2.0, 4.0)) == pytest.approx(0.5)
    assert math.isinf(intensity.total_mass(constant(1.0)))
    # rescale scales the log-ratio limit by ell
    assert intensity.log_ratio_limit(
        rescale_unit_gap(intensity.critical_log_growth(1.0, 0.0), 2.0)) == 2.0


def test_json_round_trip():
    docs = [
        {"family": "constant", "params": {"mu": 1.5}},
        {"family": "power_decay", "params": {"a": 1.0, "b": 2.0}},
        {"family": "log_growth", "params": {"a": 2.0, "b": 0.5},
         "floor": {"T0": 4.0, "value": 0.3}},
        {"family": "spliced", "params": {"T": 2.0},
         "head": {"family": "constant", "params": {"mu": 1.0}},
         "tail": {"family": "exp_decay", "params": {"a": 1.0, "b": 1.0}}},
    ]
    for doc in docs:
        rf = from_json(doc)
        again = from_json(to_json(rf))
        for t in (0.3, 1.7, 9.0):
            assert eval_rate(again, t) == pytest.approx(eval_rate(rf, t), rel=1e-12)
        assert cumulative(again, 0.0, 7.0) == pytest.approx(
            cumulative(rf, 0.0, 7.0), rel=1e-10)


def test_custom_not_serializable():
    rf = intensity.custom(lambda t: 1.0 + 0.1 * t)
    with pytest.raises(UnsupportedFamilyError):
        to_json(rf)


def test_invalid_parameters():
    with pytest.raises(DomainError):
        constant(0.0)
    with pytest.raises(DomainError):
        power_decay(-1.0, 1.0)
    with pytest.raises(DomainError):
        intensity.iterated_log_boundary(1, 1.0)


def test_floor_override():
    rf = power_decay(1.0, 2.0, floor=Floor(t0=2.0, value=0.5))
    assert eval_rate(rf, 1.5) == 0.5
    assert cumulative(rf, 0.0, 2.0) == pytest.approx(1.0)
