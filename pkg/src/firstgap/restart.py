"""Task completion under restart-from-scratch failures.

A task of size ``ell`` (work units) runs at service rate ``r(t)`` and is
restarted from zero at every failure epoch.  With failures homogeneous at
rate ``mu_star``, mapping the clock through the accumulated work
``R(t) = int_0^t r`` turns the failure process into an inhomogeneous one
with rate ``mu(u) = mu_star / r(R^{-1}(u))``; the total task time is then
``X = R^{-1}(D + ell)`` where ``D`` is the first-gap time of the mapped
process.  Everything here reduces to that time change plus the gap-time
machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import dde, finiteness, intensity, montecarlo
from .errors import BudgetExceededError, DomainError, UnsupportedFamilyError
from .finiteness import ClassificationVerdict, Criterion, Verdict
from .intensity import RateFunction


@dataclass(frozen=True, eq=False)
class ServiceRate:
    """Strictly positive service rate with its accumulated-work transform.

    ``work`` is ``R(t)``, ``inverse`` its monotone inverse; both closed-form
    for the built-in families, quadrature/root-solve for custom rates.
    ``inv_r_logR_limit`` is the caller-declared limit of
    ``1 / (r(t) log R(t))`` used by the symbolic restart classifier.
    """

    family: str
    params: dict
    rate: Callable[[float], float]
    work: Callable[[float], float]
    inverse: Callable[[float], float]
    inv_r_logR_limit: Optional[float] = None
    rate_limit: Optional[float] = None

    def to_json(self) -> dict:
        if self.family == "custom":
            raise UnsupportedFamilyError("custom service rates are not serializable")
        return {"family": self.family, "params": dict(self.params)}


def constant_service(a: float) -> ServiceRate:
    if a <= 0:
        raise DomainError(f"service rate must be positive, got {a}")
    return ServiceRate(
        "constant", {"a": a},
        rate=lambda t: a, work=lambda t: a * t, inverse=lambda u: u / a,
        inv_r_logR_limit=0.0, rate_limit=a)


def power_service(a: float, b: float) -> ServiceRate:
    """``r(t) = a * t**b`` with ``b > -1`` (``R`` stays finite near zero)."""
    if a <= 0:
        raise DomainError(f"service coefficient must be positive, got {a}")
    if b <= -1:
        raise DomainError(f"power service requires b > -1, got {b}")
    if b == 0:
        return constant_service(a)
    c = a / (b + 1.0)
    limit = 0.0 if b > 0 else math.inf
    return ServiceRate(
        "power", {"a": a, "b": b},
        rate=lambda t: a * t ** b,
        work=lambda t: c * t ** (b + 1.0),
        inverse=lambda u: (u / c) ** (1.0 / (b + 1.0)),
        inv_r_logR_limit=limit,
        rate_limit=math.inf if b > 0 else 0.0)


def custom_service(rate: Callable[[float], float],
                   work: Callable[[float], float] | None = None,
                   inverse: Callable[[float], float] | None = None,
                   inv_r_logR_limit: float | None = None,
                   rate_limit: float | None = None) -> ServiceRate:
    if work is None:
        def work(t: float, _r=rate) -> float:
            val, _ = quad(_r, 0.0, t, limit=200)
            return val
    if inverse is None:
        def inverse(u: float, _w=work) -> float:
            if u <= 0:
                return 0.0
            hi = 1.0
            while _w(hi) < u:
                hi *= 2.0
            return brentq(lambda t: _w(t) - u, 0.0, hi, xtol=1e-14, rtol=1e-12)
    return ServiceRate("custom", {}, rate=rate, work=work, inverse=inverse,
                       inv_r_logR_limit=inv_r_logR_limit, rate_limit=rate_limit)


def service_from_json(doc: dict) -> ServiceRate:
    fam = doc["family"].strip().lower()
    params = doc.get("params", {})
    if fam == "constant":
        return constant_service(float(params["a"]))
    if fam == "power":
        return power_service(float(params["a"]), float(params["b"]))
    raise DomainError(f"unknown service-rate family {fam!r}")


def work_done(sr: ServiceRate, t: float) -> float:
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    return float(sr.work(t))


def inverse_work(sr: ServiceRate, u: float) -> float:
    if u < 0:
        raise DomainError(f"work must be nonnegative, got {u}")
    return float(sr.inverse(u))


def time_change(mu_star: float, sr: ServiceRate) -> RateFunction:
    """Failure rate seen on the work clock: ``mu(u) = mu_star / r(R^{-1}(u))``.

    The cumulative mass is exact: ``M(a, b) = mu_star (R^{-1}(b) - R^{-1}(a))``.
    Power-law services reduce to a power-decay rate, recorded as an
    equivalent family for the symbolic classifiers.
    """
    if mu_star <= 0:
        raise DomainError(f"failure rate must be positive, got {mu_star}")
    children: dict = {"service": sr}
    limit = ratio = None
    if sr.family == "constant":
        return intensity.constant(mu_star / sr.params["a"])
    if sr.family == "power":
        a, b = sr.params["a"], sr.params["b"]
        kappa = b / (b + 1.0)
        c = mu_star / (a ** (1.0 / (b + 1.0)) * (b + 1.0) ** kappa)
        if b > 0:
            children["equivalent"] = intensity.power_decay(c, kappa)
            limit, ratio = 0.0, 0.0
        else:
            limit, ratio = math.inf, math.inf  # polynomial growth beats log t
    elif sr.inv_r_logR_limit is not None:
        ratio = mu_star * sr.inv_r_logR_limit
        if sr.rate_limit is not None:
            if sr.rate_limit == 0.0:
                limit = math.inf
            elif math.isinf(sr.rate_limit):
                limit = 0.0
            else:
                limit = mu_star / sr.rate_limit

    def formula(u: float) -> float:
        try:
            r = sr.rate(sr.inverse(u))
        except ZeroDivisionError:
            return math.inf
        return mu_star / r if r > 0 else math.inf

    return RateFunction(
        family=intensity.TIME_CHANGED, params={"mu_star": mu_star},
        formula=formula,
        cumulative_hint=lambda x, y: mu_star * (sr.inverse(y) - sr.inverse(x)),
        children=children,
        limit_at_infinity=limit, log_ratio_limit=ratio, mass=math.inf)


def classify_restart(mu_star: float, sr: ServiceRate,
                     ell: float) -> ClassificationVerdict:
    """Completion-time finiteness from the limit of
    ``mu_star / (r(t) log R(t))`` against ``1/ell``; falls back to the
    time-changed rate's own tests when no symbolic limit is declared.
    """
    if mu_star <= 0 or ell <= 0:
        raise DomainError("mu_star and ell must be positive")
    if sr.inv_r_logR_limit is not None:
        ratio = mu_star * sr.inv_r_logR_limit
        threshold = 1.0 / ell
        if ratio < threshold:
            return ClassificationVerdict(
                Verdict.ALMOST_SURELY_FINITE, Criterion.LOG_THRESHOLD,
                {"ratio_limit": ratio, "threshold": threshold})
        if ratio > threshold:
            return ClassificationVerdict(
                Verdict.POSITIVE_PROBABILITY_INFINITE, Criterion.LOG_THRESHOLD,
                {"ratio_limit": ratio, "threshold": threshold})
        return ClassificationVerdict(
            Verdict.INCONCLUSIVE, Criterion.LOG_THRESHOLD,
            {"ratio_limit": ratio, "threshold": threshold,
             "note": "critical service rate"})
    rf = time_change(mu_star, sr)
    try:
        return finiteness.log_threshold_classify(rf, ell)
    except UnsupportedFamilyError:
        return finiteness.integral_test(rf, ell)


def _gap_tail_value(rf: RateFunction, ell: float, t: float,
                    step: float | None = None) -> float:
    if t <= 0:
        return 1.0
    if t < ell:
        return dde.initial_tail(rf, ell, t)
    step = ell / 64.0 if step is None else step
    curve = dde.solve_tail(rf, ell, t + step, step)
    return dde.tail_at(curve, t)


def total_time_tail(mu_star: float, sr: ServiceRate, ell: float, t: float,
                    max_horizon: float = 1e4,
                    step: float | None = None) -> float:
    """``P(X > t)`` for the total task time ``X = R^{-1}(D + ell)``.

    Exact reduction: ``P(X > t) = P(D > R(t) - ell)``, which is 1 whenever
    ``R(t) <= ell`` (the task cannot finish that early).  ``max_horizon``
    caps the transformed solve horizon, since ``R(t)`` can grow much faster
    than ``t``.
    """
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    if ell <= 0:
        raise DomainError(f"task size must be positive, got {ell}")
    target = work_done(sr, t) - ell
    if target <= 0:
        return 1.0
    if target > max_horizon:
        reachable = inverse_work(sr, max_horizon + ell)
        raise BudgetExceededError(
            f"transformed horizon R(t) - ell = {target:.6g} exceeds the "
            f"budget {max_horizon:.6g}; largest affordable t is "
            f"{reachable:.6g}", max_affordable=reachable)
    rf = time_change(mu_star, sr)
    return _gap_tail_value(rf, ell, target, step)


def random_length_bounds(rf: RateFunction, ell_star: float, epsilon: float,
                         mass_above: float, t: float,
                         step: float | None = None) -> tuple[float, float]:
    """Bracket ``P(D > t)`` when the task size is random but bounded.

    For ``L <= ell_star`` a.s. with ``P(L > ell_star - epsilon) =
    mass_above``, the deterministic-size tails at ``ell_star - epsilon``
    and ``ell_star`` bracket the randomized tail.
    """
    if not 0.0 < epsilon < ell_star:
        raise DomainError(
            f"require 0 < epsilon < ell_star, got epsilon={epsilon}, "
            f"ell_star={ell_star}")
    if not 0.0 < mass_above <= 1.0:
        raise DomainError(f"mass_above must lie in (0, 1], got {mass_above}")
    lower = mass_above * _gap_tail_value(rf, ell_star - epsilon, t, step)
    upper = _gap_tail_value(rf, ell_star, t, step)
    return lower, upper


def simulate_total_times(mu_star: float, sr: ServiceRate, ell: float,
                         horizon: float, n_paths: int, seed: int) -> np.ndarray:
    """Direct wall-clock simulation of total task times.

    Walks the homogeneous failure epochs and completes the task the first
    time ``ell`` work units fit before the next failure; unresolved paths
    (completion past the horizon) come back as NaN.  Streams are the same
    counter-based per-path generators used everywhere else.
    """
    if mu_star <= 0 or ell <= 0 or horizon <= 0:
        raise DomainError("mu_star, ell and horizon must be positive")
    if n_paths < 1:
        raise DomainError("n_paths must be at least 1")
    total_work = work_done(sr, horizon)
    out = np.empty(n_paths)
    for i in range(n_paths):
        stream = montecarlo.path_stream(seed, i)
        epochs = montecarlo._unit_epochs(stream, mu_star * horizon) / mu_star
        prev_work = 0.0
        x: float | None = None
        for tf in epochs:
            w = work_done(sr, float(tf))
            if w - prev_work >= ell:
                x = inverse_work(sr, prev_work + ell)
                break
            prev_work = w
        if x is None:
            x = (inverse_work(sr, prev_work + ell)
                 if prev_work + ell <= total_work else math.nan)
        out[i] = x
    return out
