"""Waiting time for the first run of ones in non-stationary Bernoulli trials.

The discrete analogue of the first-gap problem: independent trials with
success probabilities ``p_i`` and ``D = min{n : xi_n = ... = xi_{n+ell-1} = 1}``.
The exact distribution follows a linear-time recursion

    P(D = n+1) = q_n * P(D > n - ell) * prod_{j=n+1}^{n+ell} p_j

with ``P(D > m) = 1`` for ``m <= 0`` and base ``P(D = 1) = p_1 ... p_ell``.
The DP switches to log-space arithmetic once the tail nears the float noise
floor, so long-tailed profiles remain computable out to millions of trials;
see ``exact_distribution`` for the short-tailed limitation.

Note on the finiteness test: the run-sum literature sometimes states the
criterion with the roles of convergence and divergence swapped; here the
rule mirrors the continuous case, which the proof sketch supports: the run
occurs almost surely when ``sum q_i`` converges or the run-sum series
``I = sum q_i prod_{j=i+1}^{i+ell} p_j`` diverges, and is infinite with
positive probability when ``I`` converges while ``sum q_i`` diverges.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import asymptotics, finiteness, intensity
from .asymptotics import AsymptoticForm, Regime
from .errors import (DomainError, NumericalIntegrityError, PreconditionError,
                     UnsupportedFamilyError)
from .finiteness import ClassificationVerdict, Criterion, Verdict
from .intensity import RateFunction, eval_rate

# Plain-float tails lose absolute accuracy around eps * (sum of all earlier
# tails), long before the underflow threshold: each near-total cancellation
# step leaves an ulp of the previous tail behind.  Switch to log-space once
# the tail is within a safety factor of that noise floor (or, regardless,
# near underflow).
_NOISE_MARGIN = 1e-10
_UNDERFLOW_SWITCH = 1e-280

CONSTANT = "constant"
POWER_LAW = "power_law"
STRETCHED_EXP = "stretched_exp"
DISCRETIZED = "discretized"
EXPLICIT = "explicit"


@dataclass(frozen=True, eq=False)
class BernoulliProfile:
    """Success probabilities ``p_i`` in (0, 1), ``i = 1, 2, ...``."""

    family: str
    params: dict
    prob: Callable[[int], float]
    length: Optional[int] = None      # explicit profiles only
    base: Optional[RateFunction] = None

    def __repr__(self) -> str:
        parts = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"BernoulliProfile({self.family}{{{parts}}})"


def probability(profile: BernoulliProfile, i: int) -> float:
    if i < 1:
        raise DomainError(f"trial index must be >= 1, got {i}")
    if profile.length is not None and i > profile.length:
        raise DomainError(
            f"explicit profile defined only up to i={profile.length}, got {i}")
    return profile.prob(i)


def probabilities(profile: BernoulliProfile, n: int) -> np.ndarray:
    """Vector ``p_1 .. p_n``."""
    if profile.family == CONSTANT:
        return np.full(n, profile.params["p"])
    if profile.family == POWER_LAW:
        b = profile.params["b"]
        idx = np.arange(1, n + 1, dtype=float)
        idx[0] = 2.0  # keep p_1 < 1; finitely many terms never move the tail class
        return idx ** (-b)
    if profile.family == STRETCHED_EXP:
        a, b = profile.params["a"], profile.params["b"]
        idx = np.arange(1, n + 1, dtype=float)
        return np.exp(-a * idx ** (-b))
    return np.array([probability(profile, i) for i in range(1, n + 1)])


def constant_profile(p: float) -> BernoulliProfile:
    if not 0.0 < p < 1.0:
        raise DomainError(f"success probability must lie in (0, 1), got {p}")
    return BernoulliProfile(CONSTANT, {"p": p}, lambda i: p)


def power_law_profile(b: float) -> BernoulliProfile:
    """``p_i = i**-b`` (``p_1`` reuses the i=2 value to stay below 1)."""
    if b <= 0:
        raise DomainError(f"power-law exponent must be positive, got {b}")
    return BernoulliProfile(
        POWER_LAW, {"b": b},
        lambda i: (2.0 if i == 1 else float(i)) ** (-b))


def stretched_exp_profile(a: float, b: float) -> BernoulliProfile:
    """``p_i = exp(-a * i**-b)``: probabilities increasing to one."""
    if a <= 0 or b <= 0:
        raise DomainError(f"require a, b > 0, got a={a}, b={b}")
    return BernoulliProfile(
        STRETCHED_EXP, {"a": a, "b": b},
        lambda i: math.exp(-a * float(i) ** (-b)))


def explicit_profile(ps) -> BernoulliProfile:
    ps = [float(p) for p in ps]
    if not ps:
        raise DomainError("explicit profile must be nonempty")
    if any(not 0.0 < p < 1.0 for p in ps):
        raise DomainError("explicit probabilities must lie strictly in (0, 1)")
    return BernoulliProfile(EXPLICIT, {"values": tuple(ps)},
                            lambda i: ps[i - 1], length=len(ps))


def discretize(rf: RateFunction) -> BernoulliProfile:
    """Bridge from the continuous model: ``p_i = exp(-mu(i))``.

    A constant rate maps onto a constant profile; everything else keeps a
    reference to the rate function so classification can delegate.
    """
    if rf.family == intensity.CONSTANT:
        return constant_profile(math.exp(-rf.params["mu"]))

    def p(i: int) -> float:
        mu = eval_rate(rf, float(i))
        if mu == 0.0:
            raise PreconditionError(
                f"rate vanishes at i={i}; success probability would be 1")
        return min(max(math.exp(-mu), 1e-300), 1.0 - 1e-16)

    return BernoulliProfile(DISCRETIZED, {"rate_family": rf.family},
                            p, base=rf)


@dataclass(frozen=True)
class RunDistribution:
    """Masses ``P(D = n)`` and tails ``P(D > n)``.

    ``tail[n] = tail[n-1] - mass[n]`` holds exactly by construction.  The
    float ``tail`` underflows to zero for deeply short-tailed profiles;
    ``neg_log_tail`` stays valid throughout.
    """

    ell: int
    n_max: int
    masses: np.ndarray        # index n = 1..n_max at [n]; [0] unused = 0
    tail: np.ndarray          # index n = 0..n_max
    neg_log_tail: np.ndarray  # -log P(D > n), same indexing as tail


def _short_tailed_profile(profile: BernoulliProfile) -> bool:
    """Success probabilities tending to one (run-tail decays superexponentially)."""
    if profile.family == STRETCHED_EXP:
        return True
    if profile.family == DISCRETIZED and profile.base is not None:
        return intensity.rate_limit(profile.base) == 0.0
    return False


def exact_distribution(profile: BernoulliProfile, ell: int,
                       n_max: int) -> RunDistribution:
    """Linear-time recursion for run waiting times out to ``n_max``.

    Short-tailed profiles (``p_i -> 1``) are computable only while the tail
    stays above the float noise floor: past it, any forward recursion
    drifts onto a parasitic slow branch, so the recursion stops with a
    :class:`NumericalIntegrityError` rather than returning drifting values.
    Long-tailed and homogeneous profiles switch to log-space arithmetic
    there and continue exactly.
    """
    if ell < 1:
        raise DomainError(f"run length must be a positive integer, got {ell}")
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    short_tailed = _short_tailed_profile(profile)
    p = probabilities(profile, n_max + ell - 1).tolist()

    masses = np.zeros(n_max + 1)
    tail = np.empty(n_max + 1)
    neg_log = np.empty(n_max + 1)
    tail[0], neg_log[0] = 1.0, 0.0

    base = 1.0
    for j in range(ell):
        base *= p[j]
    tail[1] = 1.0 - base
    masses[1] = 1.0 - tail[1]
    if tail[1] <= 0.0:
        raise PreconditionError("tail vanished at n=1; profile too close to 1")
    neg_log[1] = -math.log(tail[1])

    log_mode = False
    tail_mass_seen = 1.0  # running sum of tails: scale of the float noise floor
    for n in range(1, n_max):
        window = 1.0
        for j in range(n, n + ell):  # p_{n+1} .. p_{n+ell} (0-based offsets)
            window *= p[j]
        q_n = 1.0 - p[n - 1]
        delayed = n - ell
        if not log_mode:
            delayed_tail = tail[delayed] if delayed >= 0 else 1.0
            m = q_n * delayed_tail * window
            t = tail[n] - m
            masses[n + 1] = tail[n] - t  # the stored difference, bit-exact
            tail[n + 1] = t
            tail_mass_seen += t
            if t < max(_UNDERFLOW_SWITCH, _NOISE_MARGIN * tail_mass_seen):
                if short_tailed:
                    raise NumericalIntegrityError(
                        f"tail fell below the float noise floor at n={n + 1} "
                        f"(P(D>n) ~ {t:.3g}); for probabilities tending to 1 "
                        "the recursion cannot be continued reliably")
                log_mode = True
                neg_log[n + 1] = neg_log[n] - math.log1p(-m / tail[n])
            else:
                neg_log[n + 1] = -math.log(t)
        else:
            delayed_neg = neg_log[delayed] if delayed >= 0 else 0.0
            log_m = math.log(q_n) - delayed_neg + math.log(window)
            arg = log_m + neg_log[n]  # log(mass / tail), <= 0 in exact arithmetic
            if arg > 1e-6:
                raise NumericalIntegrityError(
                    f"run recursion lost relative accuracy at n={n} "
                    "(per-step mass exceeds the remaining tail); short-tailed "
                    "profiles are only computable while the tail stays above "
                    "the float noise floor")
            # clamp away from 1 to keep log1p finite
            ratio = min(math.exp(min(arg, 0.0)), 1.0 - 1e-16)
            neg_log[n + 1] = neg_log[n] - math.log1p(-ratio)
            tail[n + 1] = math.exp(-neg_log[n + 1])
            masses[n + 1] = tail[n] - tail[n + 1]
    return RunDistribution(ell=ell, n_max=n_max, masses=masses, tail=tail,
                           neg_log_tail=neg_log)


def brute_force_tail(profile: BernoulliProfile, ell: int, n: int) -> float:
    """Enumerate all outcomes of the first ``n + ell - 1`` trials.

    Independent oracle for the recursion; sums the probability of every
    outcome with no run of ``ell`` ones starting at positions ``1..n``.
    """
    if ell < 1:
        raise DomainError(f"run length must be a positive integer, got {ell}")
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    if n == 0:
        return 1.0
    m = n + ell - 1
    if m > 24:
        raise DomainError(f"enumeration bound exceeded: n + ell - 1 = {m} > 24")
    p = probabilities(profile, m)
    idx = np.arange(1 << m, dtype=np.uint32)
    prob = np.ones(1 << m)
    for j in range(m):
        bit = (idx >> j) & 1
        prob *= np.where(bit.astype(bool), p[j], 1.0 - p[j])
    run_mask = np.uint32((1 << ell) - 1)
    has_run = np.zeros(1 << m, dtype=bool)
    for s in range(n):
        mask = np.uint32(run_mask << s)
        has_run |= (idx & mask) == mask
    return float(prob[~has_run].sum())


def run_sum_test(profile: BernoulliProfile, ell: int) -> ClassificationVerdict:
    """Discrete finiteness test (see the module note on its orientation)."""
    if ell < 1:
        raise DomainError(f"run length must be a positive integer, got {ell}")
    fam, p = profile.family, profile.params
    if fam == CONSTANT:
        return ClassificationVerdict(
            Verdict.ALMOST_SURELY_FINITE, Criterion.INTEGRAL_DIVERGES,
            {"note": "run-sum terms are constant and positive"})
    if fam == POWER_LAW:
        b = p["b"]
        if b * ell <= 1.0:
            return ClassificationVerdict(
                Verdict.ALMOST_SURELY_FINITE, Criterion.LOG_THRESHOLD,
                {"neg_log_p_ratio": b, "threshold": 1.0 / ell})
        return ClassificationVerdict(
            Verdict.POSITIVE_PROBABILITY_INFINITE, Criterion.LOG_THRESHOLD,
            {"neg_log_p_ratio": b, "threshold": 1.0 / ell,
             "note": "q_i -> 1 so the separator sum diverges"})
    if fam == STRETCHED_EXP:
        a, b = p["a"], p["b"]
        if b > 1.0:
            return ClassificationVerdict(
                Verdict.ALMOST_SURELY_FINITE, Criterion.TOTAL_MASS_FINITE,
                {"note": f"sum q_i ~ {a:g} * sum i**-{b:g} converges"})
        return ClassificationVerdict(
            Verdict.ALMOST_SURELY_FINITE, Criterion.INTEGRAL_DIVERGES,
            {"neg_log_p_ratio": 0.0, "threshold": 1.0 / ell})
    if fam == DISCRETIZED and profile.base is not None:
        return finiteness.integral_test(profile.base, float(ell))
    if fam == EXPLICIT:
        ps = np.asarray(p["values"])
        qs = 1.0 - ps
        n = ps.size
        terms = [qs[i] * float(np.prod(ps[i + 1:min(i + 1 + ell, n)]))
                 for i in range(n - ell)]
        return ClassificationVerdict(
            Verdict.INCONCLUSIVE, Criterion.INTEGRAL_CONVERGES,
            {"partial_q_sum": float(qs.sum()),
             "partial_run_sum": float(sum(terms)),
             "length": int(n),
             "note": "finite evidence only for explicit profiles"})
    raise UnsupportedFamilyError(f"no symbolic data for profile family {fam!r}")


def z_root(p: float, ell: int) -> float:
    """Geometric decay base for the homogeneous run tail
    ``P(D > n) ~ c z**-n``: the root of ``(1-p) z sum_{i<ell} (pz)**i = 1``
    beyond 1 (strictly increasing left side, so the root is unique).
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"success probability must lie in (0, 1), got {p}")
    if ell < 1:
        raise DomainError(f"run length must be a positive integer, got {ell}")

    def g(z: float) -> float:
        return (1.0 - p) * z * sum((p * z) ** i for i in range(ell)) - 1.0

    hi = max(2.0, 1.0 / p)
    while g(hi) < 0:
        hi *= 2.0
    return float(brentq(g, 1.0, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200))


def discrete_asymptotic_form(profile: BernoulliProfile, ell: int) -> AsymptoticForm:
    """Logarithmic forms for the built-in discrete families."""
    if ell < 1:
        raise DomainError(f"run length must be a positive integer, got {ell}")
    fam, p = profile.family, profile.params
    if fam == STRETCHED_EXP:
        b = p["b"]
        coeff = b / ell
        return AsymptoticForm(
            Regime.SHORT_TAIL, f"{coeff:g}*n*log(n)",
            lambda n: coeff * n * math.log(n),
            coefficient=coeff, index_params=(0.0, 1.0))
    if fam == POWER_LAW:
        b = p["b"]
        if b * ell >= 1.0:
            raise UnsupportedFamilyError(
                f"power-law profile with b*ell = {b * ell:g} >= 1 lies outside "
                "the long-tail hypotheses")
        expo = 1.0 - b * ell
        coeff = 1.0 / expo
        return AsymptoticForm(
            Regime.LONG_TAIL, f"n**{expo:g}/{expo:g}",
            lambda n: n ** expo / expo, coefficient=coeff)
    if fam == CONSTANT:
        rate = math.log(z_root(p["p"], ell))
        return AsymptoticForm(
            Regime.EXPONENTIAL, f"{rate:g}*n",
            lambda n: rate * n, coefficient=rate)
    raise UnsupportedFamilyError(f"no asymptotic form for profile family {fam!r}")


def write_csv(dist: RunDistribution, fh: io.TextIOBase) -> None:
    """CSV rows ``n,mass,tail`` at 17 significant digits."""
    fh.write("n,mass,tail\n")
    for n in range(1, dist.n_max + 1):
        fh.write(f"{n},{dist.masses[n]:.17g},{dist.tail[n]:.17g}\n")
