"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import io
import math
import time

import numpy as np
import pytest

from firstgap import (asymptotics, bernoulli, cli, dde, finiteness, intensity,
                      montecarlo, restart)
from firstgap.finiteness import Criterion, Verdict

ASF = Verdict.ALMOST_SURELY_FINITE
PPI = Verdict.POSITIVE_PROBABILITY_INFINITE


def _bisect_root(fn, lo, hi, iters=200):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) * flo <= 0:
            hi = mid
        else:
            lo = mid
            flo = fn(lo)
    return 0.5 * (lo + hi)


def test_criterion_1_homogeneous_rate_extraction():
    start = time.perf_counter()
    curve = dde.solve_tail(intensity.constant(2.0), 1.0, 30.0, 1.0 / 256)
    elapsed = time.perf_counter() - start
    target = 2.0 * math.exp(-2.0)
    gamma = _bisect_root(lambda x: x * math.exp(-x) - target, 1e-9, 1.0)
    mask = (curve.grid >= 15.0) & (curve.grid <= 30.0)
    slope = float(np.polyfit(curve.grid[mask], curve.neg_log[mask], 1)[0])
    assert abs(slope - gamma) <= 0.01 * gamma
    assert elapsed < 5.0
    print(f"\nPASS criterion 1: slope {slope:.6f} vs gamma {gamma:.6f} "
          f"(rel err {abs(slope - gamma) / gamma:.2e}), {elapsed:.2f}s")


def test_criterion_2_renewal_constant():
    # closed-form oracle: numerator e^{-1}, denominator 1/2, c = 2/e
    c_oracle = 2.0 / math.e
    assert asymptotics.renewal_constant(1.0, 1.0) == pytest.approx(c_oracle, rel=1e-8)
    curve = dde.solve_tail(intensity.constant(1.0), 1.0, 25.0, 1.0 / 256)
    mask = (curve.grid >= 15.0) & (curve.grid <= 25.0)
    scaled = np.exp(curve.grid[mask] - curve.neg_log[mask])
    worst = float(np.abs(scaled / c_oracle - 1.0).max())
    assert worst <= 0.02
    print(f"\nPASS criterion 2: P e^t within {worst:.2e} of c = {c_oracle:.6f}")


def test_criterion_3_monte_carlo_vs_dde():
    start = time.perf_counter()
    rf = intensity.constant(1.0)
    config = montecarlo.SimulationConfig(rf=rf, ell=1.0, horizon=12.0,
                                         n_paths=10 ** 5, seed=20260809)
    grid = np.linspace(0.0, 10.0, 48)
    emp = montecarlo.empirical_tail(config, grid)
    elapsed = time.perf_counter() - start
    curve = dde.solve_tail(rf, 1.0, 10.5, 1.0 / 256)
    exact = np.array([dde.tail_at(curve, float(t)) for t in grid])
    stderr = np.maximum(emp.stderr, np.sqrt(exact * (1 - exact) / config.n_paths))
    z = np.abs(emp.estimates - exact) / np.maximum(stderr, 1e-300)
    assert float(z.max()) <= 3.0
    assert elapsed < 30.0
    print(f"\nPASS criterion 3: 48 grid points, worst z = {z.max():.2f}, "
          f"{elapsed:.1f}s")


def test_criterion_4_discrete_oracle_equivalence():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        ell = int(rng.integers(1, 5))
        n = 18 - ell
        ps = rng.uniform(0.05, 0.95, size=n + ell - 1)
        prof = bernoulli.explicit_profile(ps)
        dist = bernoulli.exact_distribution(prof, ell, n)
        worst = max(worst, abs(dist.tail[n] - bernoulli.brute_force_tail(prof, ell, n)))
    assert worst <= 1e-12
    print(f"\nPASS criterion 4: 200 random profiles, worst |diff| = {worst:.2e}")


def test_criterion_5_discrete_homogeneous_rate():
    dist = bernoulli.exact_distribution(bernoulli.constant_profile(0.5), 2, 520)
    slope = float(dist.neg_log_tail[500] - dist.neg_log_tail[499])
    z_oracle = _bisect_root(lambda z: 0.25 * z * z + 0.5 * z - 1.0, 1.0, 2.0)
    assert z_oracle == pytest.approx(math.sqrt(5.0) - 1.0, abs=1e-12)
    assert abs(slope - math.log(z_oracle)) <= 0.005 * math.log(z_oracle)
    print(f"\nPASS criterion 5: DP log-slope {slope:.6f} vs log z "
          f"{math.log(z_oracle):.6f}")


def test_criterion_6_finiteness_battery():
    cases = [
        (intensity.exp_decay(1.0, 1.0), ASF, Criterion.TOTAL_MASS_FINITE),
        (intensity.constant(1.0), ASF, None),
        (intensity.log_growth(1.0, 0.5), ASF, None),
        (intensity.log_growth(1.0, 2.0), PPI, None),
    ]
    for rf, want, want_crit in cases:
        got = finiteness.integral_test(rf, 1.0)
        assert got.verdict is want, rf
        if want_crit is not None:
            assert got.criterion is want_crit
    assert finiteness.iterated_log_classify(4, 1.0, 1.0).verdict is ASF
    assert finiteness.iterated_log_classify(4, 1.5, 1.0).verdict is PPI
    # discrete analogues agree after discretization
    battery = [(intensity.exp_decay(1.0, 1.0), ASF),
               (intensity.constant(1.0), ASF),
               (intensity.log_growth(1.0, 0.5), ASF),
               (intensity.log_growth(1.0, 2.0), PPI),
               (intensity.iterated_log_boundary(4, 1.0), ASF),
               (intensity.iterated_log_boundary(4, 1.5), PPI)]
    for rf, want in battery:
        assert bernoulli.run_sum_test(bernoulli.discretize(rf), 1).verdict is want
    print("\nPASS criterion 6: finiteness battery and discrete analogues agree")


def test_criterion_7_long_tail_asymptotics():
    # discrete: PowerLaw{b=0.5}, ell=1 at n = 10^6
    n = 10 ** 6
    dist = bernoulli.exact_distribution(bernoulli.power_law_profile(0.5), 1, n)
    ratio_d = float(dist.neg_log_tail[n]) / (2.0 * math.sqrt(n))
    assert 0.9 <= ratio_d <= 1.1
    # continuous: LogGrowth{b=0.5, a=1}, ell=1 out to t = 10^4
    rf = intensity.log_growth(1.0, 0.5)
    curve = dde.solve_tail(rf, 1.0, 1.0e4, 1.0 / 16)
    lead = lambda t: math.sqrt(t) * math.log(t)
    ratio_c = dde.neg_log_at(curve, 1.0e4) / lead(1.0e4)
    assert 0.7 <= ratio_c <= 1.3
    # drift toward 1 measured against the long-tail integral functional
    c0 = asymptotics.default_long_tail_origin(rf)
    drift = [dde.neg_log_at(curve, t) / asymptotics.long_tail_f(rf, 1.0, c0, t)
             for t in (1.0e2, 1.0e3, 1.0e4)]
    assert abs(drift[2] - 1.0) < abs(drift[1] - 1.0) < abs(drift[0] - 1.0)
    print(f"\nPASS criterion 7: discrete ratio {ratio_d:.4f}; continuous ratio "
          f"{ratio_c:.4f}; drift {[round(r, 3) for r in drift]} -> 1")


def test_criterion_8_short_tail_sandwich():
    rf = intensity.power_decay(1.0, 1.0)
    curve = dde.solve_tail(rf, 1.0, 100.5, 1.0 / 64)
    ratios = []
    for t in (20.0, 50.0, 100.0):
        f = dde.neg_log_at(curve, t)
        lo, hi = asymptotics.sandwich_bounds(rf, t, 0.1)
        assert lo <= f <= hi, (t, lo, f, hi)
        r = f / (t * math.log(t))
        assert 0.5 <= r <= 1.5
        ratios.append(r)
    assert abs(ratios[2] - 1.0) <= abs(ratios[1] - 1.0) <= abs(ratios[0] - 1.0)
    print(f"\nPASS criterion 8: sandwich contains neg_log at t=20/50/100; "
          f"ratios {[round(r, 4) for r in ratios]} drift toward 1")


def test_criterion_9_scaling_identity():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(20):
        pick = int(rng.integers(0, 4))
        ell = float(rng.choice([0.5, 1.0, 2.0, 3.0]))
        if pick == 0:
            rf = intensity.constant(float(rng.uniform(0.3, 3.0)))
        elif pick == 1:
            rf = intensity.power_decay(float(rng.uniform(0.5, 2.0)),
                                       float(rng.uniform(0.3, 1.5)))
        elif pick == 2:
            rf = intensity.exp_decay(float(rng.uniform(0.5, 2.0)),
                                     float(rng.uniform(0.2, 1.0)))
        else:
            rf = intensity.log_growth(float(rng.uniform(0.5, 2.0)),
                                      float(rng.uniform(0.2, 0.45)))
        horizon, step = 6.0 * ell, ell / 64
        c1 = dde.solve_tail(rf, ell, horizon, step)
        c2 = dde.solve_tail(intensity.rescale_unit_gap(rf, ell), 1.0,
                            horizon / ell, step / ell)
        for t in np.linspace(0.4 * ell, 0.95 * horizon, 7):
            worst = max(worst, abs(dde.neg_log_at(c1, float(t))
                                   - dde.neg_log_at(c2, float(t) / ell)))
    assert worst <= 1e-6
    print(f"\nPASS criterion 9: 20 random rescales, worst neg_log diff = {worst:.2e}")


def test_criterion_10_restart_round_trip():
    mu_star, ell = 1.0, 1.0
    sr = restart.power_service(1.0, 1.0)
    horizon = 60.0
    # per-path coupling, exact within 1e-10
    n_couple = 2000
    xs = restart.simulate_total_times(mu_star, sr, ell, horizon, n_couple, seed=77)
    total_work = restart.work_done(sr, horizon)
    worst = 0.0
    for i in range(n_couple):
        stream = montecarlo.path_stream(77, i)
        epochs = montecarlo._unit_epochs(stream, mu_star * horizon) / mu_star
        d = montecarlo.first_gap(sr.work(epochs), ell, total_work)
        if d is None:
            assert math.isnan(xs[i])
        else:
            worst = max(worst, abs(xs[i] - restart.inverse_work(sr, d + ell)))
    assert worst <= 1e-10
    # distribution match at 10^5 paths on a 20-point grid
    n = 10 ** 5
    sims = restart.simulate_total_times(mu_star, sr, ell, horizon, n, seed=123)
    sims = np.where(np.isnan(sims), np.inf, sims)
    grid = np.linspace(1.45, 3.5, 20)
    worst_z = 0.0
    for t in grid:
        p = restart.total_time_tail(mu_star, sr, ell, float(t))
        phat = float(np.mean(sims > t))
        se = max(math.sqrt(p * (1 - p) / n),
                 math.sqrt(phat * (1 - phat) / n), 1e-300)
        worst_z = max(worst_z, abs(phat - p) / se)
    assert worst_z <= 3.0
    print(f"\nPASS criterion 10: coupling exact (worst {worst:.1e}); "
          f"distribution worst z = {worst_z:.2f}")


def test_criterion_11_determinism(capsys):
    args = ["simulate", "--family", "constant", "--mu", "1", "--ell", "1",
            "--horizon", "8", "--paths", "3000", "--seed", "99", "--grid", "12"]
    assert cli.main(args) == 0
    out1 = capsys.readouterr().out
    assert cli.main(args) == 0
    out2 = capsys.readouterr().out
    assert out1.encode() == out2.encode()
    # partitioned parallel runs merge to the single-worker estimates
    rf = intensity.constant(1.0)
    config = montecarlo.SimulationConfig(rf=rf, ell=1.0, horizon=8.0,
                                         n_paths=3000, seed=99)
    whole = montecarlo.collect_first_gaps(config)
    merged = np.concatenate([montecarlo.collect_first_gaps(config, 0, 1000),
                             montecarlo.collect_first_gaps(config, 1000, 3000)])
    assert np.array_equal(whole, merged)
    with capsys.disabled():
        print("\nPASS criterion 11: byte-identical CSV and partition-invariant merge")
