"""Command-line front end.

Subcommands: ``tail``, ``simulate``, ``classify``, ``asympt``, ``discrete``,
``restart``, ``selftest``.  Output is machine-readable (CSV or JSON with
sorted keys) and byte-identical across repeated invocations with the same
configuration, seeds included.

Exit codes: 0 success, 2 invalid configuration, 3 numerical-integrity
failure, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import asymptotics, bernoulli, dde, finiteness, intensity, montecarlo, restart
from .errors import (BudgetExceededError, DivergenceError, DomainError,
                     NumericalIntegrityError, PreconditionError,
                     UnsupportedFamilyError)

_CONFIG_ERRORS = (DomainError, PreconditionError, UnsupportedFamilyError,
                  DivergenceError, KeyError, ValueError, json.JSONDecodeError)


def _rational(text: str) -> float:
    """Accept '1/64' style steps so grid nodes align with interval seams."""
    return float(Fraction(text))


def _rate_from_args(args) -> intensity.RateFunction:
    if getattr(args, "rate_json", None):
        return intensity.from_json(json.loads(args.rate_json))
    if not args.family:
        raise DomainError("either --family or --rate-json is required")
    family = intensity.canonical_family(args.family)
    floor = None
    if args.floor_t0 is not None and args.floor_value is not None:
        floor = intensity.Floor(args.floor_t0, args.floor_value)
    if family == intensity.CONSTANT:
        if args.mu is None:
            raise DomainError("--mu is required for the constant family")
        return intensity.constant(args.mu)
    if family == intensity.POWER_DECAY:
        return intensity.power_decay(args.a, args.b, floor=floor)
    if family == intensity.EXP_DECAY:
        return intensity.exp_decay(args.a, args.b)
    if family == intensity.LOG_POWER_DECAY:
        return intensity.log_power_decay(args.a, args.b, floor=floor)
    if family == intensity.LOG_GROWTH:
        return intensity.log_growth(args.a, args.b, floor=floor)
    if family == intensity.CRITICAL_LOG_GROWTH:
        return intensity.critical_log_growth(args.a, args.b, floor=floor)
    if family == intensity.ITERATED_LOG:
        return intensity.iterated_log_boundary(args.n, args.b, args.ell, floor=floor)
    raise DomainError(f"family {args.family!r} needs --rate-json")


def _add_rate_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--family", help="rate-function family name")
    sub.add_argument("--mu", type=float, help="constant family rate")
    sub.add_argument("--a", type=float, help="family parameter a")
    sub.add_argument("--b", type=float, help="family parameter b")
    sub.add_argument("--n", type=int, help="iterated-log depth")
    sub.add_argument("--floor-t0", type=float, help="floor start time")
    sub.add_argument("--floor-value", type=float, help="floor rate value")
    sub.add_argument("--rate-json", help="full nested JSON rate description")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="firstgap",
        description="First-gap times of inhomogeneous Poisson processes, "
                    "success runs in Bernoulli trials, restart completion times")
    p.add_argument("--output", choices=("csv", "json"), default=None,
                   help="output format (default per subcommand)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("tail", help="solve the gap-time tail on a grid")
    _add_rate_flags(s)
    s.add_argument("--ell", type=float, required=True, help="gap length")
    s.add_argument("--horizon", type=float, required=True)
    s.add_argument("--step", type=_rational, required=True,
                   help="grid step; rationals like 1/64 accepted")

    s = sub.add_parser("simulate", help="Monte Carlo empirical tail")
    _add_rate_flags(s)
    s.add_argument("--ell", type=float, required=True)
    s.add_argument("--horizon", type=float, required=True)
    s.add_argument("--paths", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--grid", required=True,
                   help="point count on [0, horizon-ell], or comma list of times")
    s.add_argument("--method", choices=("inversion", "thinning"),
                   default="inversion")

    s = sub.add_parser("classify", help="finiteness verdict for the first gap")
    _add_rate_flags(s)
    s.add_argument("--ell", type=float, required=True)
    s.add_argument("--test", choices=("auto", "integral", "logthreshold"),
                   default="auto")

    s = sub.add_parser("asympt", help="logarithmic tail asymptotics")
    _add_rate_flags(s)
    s.add_argument("--ell", type=float, required=True)

    s = sub.add_parser("discrete", help="exact success-run distribution")
    s.add_argument("--profile", required=True,
                   help="JSON profile, e.g. '{\"family\":\"constant\",\"params\":{\"p\":0.5}}'")
    s.add_argument("--ell", type=int, required=True, help="run length")
    s.add_argument("--n-max", type=int, required=True)

    s = sub.add_parser("restart", help="total task time under restarts")
    s.add_argument("--mu-star", type=float, required=True, help="failure rate")
    s.add_argument("--rate-family", choices=("constant", "power"),
                   default="constant", help="service-rate family")
    s.add_argument("--rate-a", type=float, default=1.0)
    s.add_argument("--rate-b", type=float, default=0.0)
    s.add_argument("--task-size", type=float, required=True)
    s.add_argument("--t", type=float, required=True,
                   help="wall-clock time for P(X > t)")
    s.add_argument("--max-horizon", type=float, default=1e4)

    sub.add_parser("selftest", help="run the built-in oracle checks")
    return p


def _profile_from_json(doc: dict) -> bernoulli.BernoulliProfile:
    fam = doc["family"].strip().lower().replace("-", "_")
    params = doc.get("params", {})
    if fam == "constant":
        return bernoulli.constant_profile(float(params["p"]))
    if fam in ("power_law", "powerlaw"):
        return bernoulli.power_law_profile(float(params["b"]))
    if fam in ("stretched_exp", "stretchedexp"):
        return bernoulli.stretched_exp_profile(float(params["a"]),
                                               float(params["b"]))
    if fam == "explicit":
        return bernoulli.explicit_profile(params["values"])
    if fam == "discretized":
        return bernoulli.discretize(intensity.from_json(doc["rate"]))
    raise DomainError(f"unknown profile family {doc['family']!r}")


def _emit_json(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")


def _cmd_tail(args) -> int:
    rf = _rate_from_args(args)
    curve = dde.solve_tail(rf, args.ell, args.horizon, args.step)
    if (args.output or "csv") == "csv":
        dde.write_csv(curve, sys.stdout)
    else:
        _emit_json({"t": curve.grid.tolist(),
                    "neglogP": curve.neg_log.tolist(),
                    "notes": list(curve.notes)})
    for note in curve.notes:
        print(f"note: {note}", file=sys.stderr)
    return 0


def _cmd_simulate(args) -> int:
    rf = _rate_from_args(args)
    if "," in args.grid:
        grid = np.array([float(x) for x in args.grid.split(",")])
    else:
        grid = np.linspace(0.0, args.horizon - args.ell, int(args.grid))
    config = montecarlo.SimulationConfig(
        rf=rf, ell=args.ell, horizon=args.horizon, n_paths=args.paths,
        seed=args.seed, method=args.method)
    tail = montecarlo.empirical_tail(config, grid)
    if (args.output or "csv") == "csv":
        montecarlo.write_csv(tail, sys.stdout)
    else:
        _emit_json({"t": tail.times.tolist(),
                    "Phat": tail.estimates.tolist(),
                    "stderr": tail.stderr.tolist(),
                    "censored_frac": tail.censored_fraction})
    return 0


def _cmd_classify(args) -> int:
    rf = _rate_from_args(args)
    if args.test == "integral":
        verdict = finiteness.integral_test(rf, args.ell)
    elif args.test == "logthreshold":
        verdict = finiteness.log_threshold_classify(rf, args.ell)
    else:
        try:
            verdict = finiteness.log_threshold_classify(rf, args.ell)
            if verdict.verdict is finiteness.Verdict.INCONCLUSIVE:
                verdict = finiteness.integral_test(rf, args.ell)
        except UnsupportedFamilyError:
            verdict = finiteness.integral_test(rf, args.ell)
    _emit_json(verdict.to_json())
    return 0


def _cmd_asympt(args) -> int:
    rf = _rate_from_args(args)
    form = asymptotics.asymptotic_form(rf, args.ell)
    _emit_json(form.to_json())
    return 0


def _cmd_discrete(args) -> int:
    profile = _profile_from_json(json.loads(args.profile))
    dist = bernoulli.exact_distribution(profile, args.ell, args.n_max)
    if (args.output or "csv") == "csv":
        bernoulli.write_csv(dist, sys.stdout)
    else:
        _emit_json({"n": list(range(1, dist.n_max + 1)),
                    "mass": dist.masses[1:].tolist(),
                    "tail": dist.tail[1:].tolist()})
    return 0


def _cmd_restart(args) -> int:
    if args.rate_family == "constant":
        sr = restart.constant_service(args.rate_a)
    else:
        sr = restart.power_service(args.rate_a, args.rate_b)
    p = restart.total_time_tail(args.mu_star, sr, args.task_size, args.t,
                                max_horizon=args.max_horizon)
    verdict = restart.classify_restart(args.mu_star, sr, args.task_size)
    _emit_json({"P_total_time_exceeds_t": p, "t": args.t,
                "verdict": verdict.verdict.value,
                "transformed_horizon": restart.work_done(sr, args.t) - args.task_size})
    return 0


def _cmd_selftest(args) -> int:
    failures = 0

    def check(name: str, ok: bool) -> None:
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        failures += 0 if ok else 1

    rng = np.random.default_rng(20240)
    worst = 0.0
    for _ in range(25):
        n_p = int(rng.integers(4, 12))
        ps = rng.uniform(0.05, 0.95, size=n_p)
        ell = int(rng.integers(1, 4))
        n = max(1, n_p - ell)
        prof = bernoulli.explicit_profile(ps)
        dist = bernoulli.exact_distribution(prof, ell, n)
        worst = max(worst, abs(dist.tail[n] - bernoulli.brute_force_tail(prof, ell, n)))
    check(f"run-length recursion vs enumeration (max |diff| = {worst:.3g})",
          worst < 1e-12)

    worst = 0.0
    for mu in (0.25, 0.5, 1.0, 2.0, 4.0):
        g = asymptotics.gamma_root(mu, 1.0)
        worst = max(worst, abs(g * math.exp(-g) - mu * math.exp(-mu)))
    check(f"gamma root residuals (max = {worst:.3g})", worst < 1e-13)

    rf = intensity.constant(1.0)
    curve = dde.solve_tail(rf, 1.0, 2.0, 1.0 / 64)
    worst = max(abs(dde.tail_at(curve, t) - dde.initial_tail(rf, 1.0, t))
                for t in (0.0, 0.25, 0.5, 0.75))
    check(f"tail solver vs closed initial form (max |diff| = {worst:.3g})",
          worst < 1e-9)

    rf2 = intensity.power_decay(1.0, 1.0)
    scaled = intensity.rescale_unit_gap(rf2, 2.0)
    worst = max(abs(intensity.cumulative(scaled, 0.0, t)
                    - intensity.cumulative(rf2, 0.0, 2.0 * t))
                for t in (0.5, 1.0, 5.0))
    check(f"rescaled cumulative identity (max |diff| = {worst:.3g})",
          worst < 1e-10)

    return 0 if failures == 0 else 3


_HANDLERS = {
    "tail": _cmd_tail, "simulate": _cmd_simulate, "classify": _cmd_classify,
    "asympt": _cmd_asympt, "discrete": _cmd_discrete, "restart": _cmd_restart,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return _HANDLERS[args.command](args)
    except _CONFIG_ERRORS as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except NumericalIntegrityError as exc:
        print(f"error: numerical integrity: {exc}", file=sys.stderr)
        return 3
    except BudgetExceededError as exc:
        print(f"error: budget exceeded: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
