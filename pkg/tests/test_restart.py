import math

import numpy as np
import pytest

from firstgap import dde, intensity, montecarlo, restart
from firstgap.errors import BudgetExceededError, DomainError
from firstgap.finiteness import Verdict
from firstgap.restart import (classify_restart, constant_service,
                              custom_service, inverse_work, power_service,
                              random_length_bounds, simulate_total_times,
                              time_change, total_time_tail, work_done)

ASF = Verdict.ALMOST_SURELY_FINITE
PPI = Verdict.POSITIVE_PROBABILITY_INFINITE


def test_service_rate_round_trip():
    for sr in (constant_service(2.0), power_service(1.0, 1.0),
               power_service(0.5, 2.0),
               custom_service(lambda t: 1.0 + math.sin(t) ** 2)):
        for t in (0.5, 1.0, 4.0):
            assert inverse_work(sr, work_done(sr, t)) == pytest.approx(t, rel=1e-9)


def test_time_change_identity():
    rf = time_change(1.0, constant_service(1.0))
    assert rf.family == intensity.CONSTANT
    assert rf.params["mu"] == pytest.approx(1.0)


def test_time_change_linear_service():
    # r(t)=t: R(t)=t^2/2, mu(u) = 1/sqrt(2u)
    rf = time_change(1.0, power_service(1.0, 1.0))
    for u in (0.5, 2.0, 8.0):
        assert intensity.eval_rate(rf, u) == pytest.approx(
            1.0 / math.sqrt(2.0 * u), rel=1e-12)
    assert intensity.cumulative(rf, 0.0, 2.0) == pytest.approx(2.0, rel=1e-12)


def test_time_change_power_law_constant():
    # mu(u) = c u^{-b/(b+1)} with c = mu*/(a^{1/(b+1)} (b+1)^{b/(b+1)})
    mu_star, a, b = 2.0, 3.0, 2.0
    rf = time_change(mu_star, power_service(a, b))
    c = mu_star / (a ** (1.0 / (b + 1.0)) * (b + 1.0) ** (b / (b + 1.0)))
    for u in (1.0, 5.0, 20.0):
        assert intensity.eval_rate(rf, u) == pytest.approx(
            c * u ** (-b / (b + 1.0)), rel=1e-12)
    equiv = rf.children["equivalent"]
    assert equiv.params["a"] == pytest.approx(c)
    assert equiv.params["b"] == pytest.approx(b / (b + 1.0))


def test_classify_restart_examples():
    assert classify_restart(1.0, power_service(1.0, 0.5), 1.0).verdict is ASF
    assert classify_restart(5.0, constant_service(1.0), 1.0).verdict is ASF
    # service decaying fast enough that the failure/progress ratio diverges
    slow = custom_service(
        lambda t: 1.0 / ((t + math.e) * math.log(t + math.e)),
        inv_r_logR_limit=math.inf)
    assert classify_restart(1.0, slow, 1.0).verdict is PPI


def test_classify_restart_consistency_with_log_threshold():
    for a, b in [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)]:
        sr = power_service(a, b)
        direct = classify_restart(1.0, sr, 1.0)
        via_rate = __import__("firstgap.finiteness", fromlist=["x"]).log_threshold_classify(
            time_change(1.0, sr), 1.0)
        assert direct.verdict == via_rate.verdict == ASF


def test_total_time_tail_examples():
    sr = constant_service(1.0)
    assert total_time_tail(1.0, sr, 1.0, 1.0) == 1.0
    assert total_time_tail(1.0, sr, 1.0, 0.2) == 1.0
    assert total_time_tail(1.0, sr, 1.0, 1.5) == pytest.approx(
        0.4481808382, abs=1e-8)


def test_total_time_tail_budget():
    sr = power_service(1.0, 2.0)  # R(t) = t^3/3 grows fast
    with pytest.raises(BudgetExceededError) as err:
        total_time_tail(1.0, sr, 1.0, 1e4, max_horizon=100.0)
    assert err.value.max_affordable is not None
    assert err.value.max_affordable < 1e4


def test_random_length_bounds():
    rf = intensity.constant(1.0)
    lo, hi = random_length_bounds(rf, 1.0, 0.5, 0.5, 0.3)
    assert lo == pytest.approx(0.5 * dde.initial_tail(rf, 0.5, 0.3), rel=1e-9)
    assert hi == pytest.approx(dde.initial_tail(rf, 1.0, 0.3), rel=1e-9)
    assert lo <= hi
    # degenerate limit: bounds collapse onto the deterministic tail
    lo2, hi2 = random_length_bounds(rf, 1.0, 1e-6, 1.0, 0.3)
    assert lo2 == pytest.approx(hi2, rel=1e-3)
    with pytest.raises(DomainError):
        random_length_bounds(rf, 1.0, 1.5, 0.5, 0.3)


def test_random_length_bounds_ordering_property():
    rf = intensity.power_decay(1.0, 0.5)
    for t in (0.5, 2.0, 5.0):
        lo, hi = random_length_bounds(rf, 2.0, 0.7, 0.8, t)
        assert lo <= hi


def test_per_path_coupling_exact():
    # direct wall-clock restart walk equals R^{-1}(first_gap(mapped) + ell)
    mu_star, ell, horizon = 1.0, 1.0, 40.0
    sr = power_service(1.0, 1.0)
    seed, n = 424242, 500
    xs = simulate_total_times(mu_star, sr, ell, horizon, n, seed)
    total_work = work_done(sr, horizon)
    for i in range(n):
        stream = montecarlo.path_stream(seed, i)
        epochs = montecarlo._unit_epochs(stream, mu_star * horizon) / mu_star
        mapped = np.array([work_done(sr, float(t)) for t in epochs])
        d = montecarlo.first_gap(mapped, ell, total_work)
        expected = math.nan if d is None else inverse_work(sr, d + ell)
        if math.isnan(expected):
            assert math.isnan(xs[i])
        else:
            assert xs[i] == pytest.approx(expected, abs=1e-10)


def test_distribution_match_small():
    mu_star, ell = 1.0, 1.0
    sr = power_service(1.0, 1.0)
    n = 20000
    xs = simulate_total_times(mu_star, sr, ell, 50.0, n, seed=7)
    xs = np.where(np.isnan(xs), np.inf, xs)
    for t in (1.6, 2.0, 2.5, 3.0):
        p = total_time_tail(mu_star, sr, ell, t)
        phat = float(np.mean(xs > t))
        se = max(math.sqrt(p * (1 - p) / n), 1e-6)
        assert abs(phat - p) <= 4.0 * se


def test_input_validation():
    with pytest.raises(DomainError):
        power_service(1.0, -1.0)
    with pytest.raises(DomainError):
        constant_service(0.0)
    with pytest.raises(DomainError):
        time_change(0.0, constant_service(1.0))
    with pytest.raises(DomainError):
        simulate_total_times(1.0, constant_service(1.0), 1.0, 10.0, 0, 1)
