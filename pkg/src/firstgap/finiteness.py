"""Classify whether the first gap ever occurs.

Three regimes: if the total mass ``M(0, inf)`` is finite the process dies
out and the gap trivially occurs; otherwise the gap occurs almost surely
exactly when

    I = int_0^inf exp(-M(t, t+ell)) mu(t) dt

diverges, while ``I < inf`` (with infinite total mass) leaves a positive
probability that no gap ever appears.  Divergence of ``I`` is decided
symbolically per family; floating-point quadrature alone never upgrades a
verdict, so families without symbolic data come back ``Inconclusive`` with
the truncated integrals as evidence.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

from scipy.integrate import IntegrationWarning, quad

from . import intensity
from .errors import DomainError, PreconditionError, UnsupportedFamilyError
from .intensity import RateFunction, cumulative, eval_rate


class Verdict(enum.Enum):
    ALMOST_SURELY_FINITE = "AlmostSurelyFinite"
    POSITIVE_PROBABILITY_INFINITE = "PositiveProbabilityInfinite"
    INCONCLUSIVE = "Inconclusive"


class Criterion(enum.Enum):
    TOTAL_MASS_FINITE = "TotalMassFinite"
    INTEGRAL_DIVERGES = "IntegralDiverges"
    INTEGRAL_CONVERGES = "IntegralConverges"
    LOG_THRESHOLD = "LogThreshold"
    ITERATED_LOG = "IteratedLog"
    COMPARISON = "Comparison"


@dataclass(frozen=True)
class ClassificationVerdict:
    verdict: Verdict
    criterion: Criterion
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"verdict": self.verdict.value,
                "criterion": self.criterion.value,
                "evidence": dict(self.evidence)}


def _finite(criterion: Criterion, **evidence) -> ClassificationVerdict:
    return ClassificationVerdict(Verdict.ALMOST_SURELY_FINITE, criterion, evidence)


def _infinite(criterion: Criterion, **evidence) -> ClassificationVerdict:
    return ClassificationVerdict(
        Verdict.POSITIVE_PROBABILITY_INFINITE, criterion, evidence)


def _inconclusive(criterion: Criterion, **evidence) -> ClassificationVerdict:
    return ClassificationVerdict(Verdict.INCONCLUSIVE, criterion, evidence)


def _gap_integral_diverges(rf: RateFunction, ell: float) -> Optional[bool]:
    """Symbolic divergence of I per family; ``None`` when unknown."""
    fam = rf.family
    if fam == intensity.CONSTANT:
        return True
    if fam in (intensity.POWER_DECAY, intensity.EXP_DECAY,
               intensity.LOG_POWER_DECAY):
        # mu -> 0, so the integrand is eventually ~ mu; with infinite mass
        # it diverges and with finite mass the total-mass branch already fired
        return True
    if fam == intensity.LOG_GROWTH:
        b = rf.params["b"]
        # integrand ~ a**ell * t**(-b*ell) * log t, divergent iff b*ell <= 1
        return b * ell <= 1.0
    if fam == intensity.CRITICAL_LOG_GROWTH:
        b = rf.params["b"]
        if ell < 1.0:
            return True
        if ell > 1.0:
            return False
        # integrand ~ a * log(t)**(1+b) / t, divergent iff b >= -2
        return b >= -2.0
    if fam == intensity.ITERATED_LOG:
        fam_ell = rf.params["ell"]
        if not math.isclose(ell, fam_ell, rel_tol=1e-12):
            return ell < fam_ell
        return rf.params["b"] <= 1.0
    if fam == intensity.SPLICED:
        return _gap_integral_diverges(rf.children["tail"], ell)
    if fam == intensity.RESCALED:
        return _gap_integral_diverges(rf.children["base"],
                                      ell * rf.params["ell"])
    if fam == intensity.TIME_CHANGED:
        equiv = rf.children.get("equivalent")
        if equiv is not None:
            return _gap_integral_diverges(equiv, ell)
        ratio = rf.log_ratio_limit
        if ratio is None:
            return None
        if ratio < 1.0 / ell:
            return True
        if ratio > 1.0 / ell:
            return False
        return None
    return None


def _gap_integral_value(rf: RateFunction, ell: float,
                        upper: float = math.inf) -> float:
    def g(t: float) -> float:
        return math.exp(-cumulative(rf, t, t + ell)) * eval_rate(rf, t)

    split = 10.0 * max(1.0, ell, rf.floor.t0 if rf.floor else 1.0)
    with warnings.catch_warnings():
        # truncated evidence integrals are often non-convergent by design
        warnings.simplefilter("ignore", IntegrationWarning)
        if upper <= split:
            val, _ = quad(g, 0.0, upper, limit=400)
            return val
        head, _ = quad(g, 0.0, split, limit=400)
        tail, _ = quad(g, split, upper, limit=400)
    return head + tail


def integral_test(rf: RateFunction, ell: float,
                  truncation: float = 1e6) -> ClassificationVerdict:
    """Total-mass and gap-integral test.

    Indecision is a verdict, not an error: families without symbolic data
    return ``Inconclusive`` carrying the truncated integrals.
    """
    if ell <= 0:
        raise DomainError(f"gap length must be positive, got {ell}")
    if truncation <= 0:
        raise DomainError(f"truncation must be positive, got {truncation}")
    mass = intensity.total_mass(rf)
    if mass is not None and math.isfinite(mass):
        return _finite(Criterion.TOTAL_MASS_FINITE, total_mass=mass)
    diverges = _gap_integral_diverges(rf, ell)
    if diverges is True:
        return _finite(Criterion.INTEGRAL_DIVERGES,
                       truncated_integral=_gap_integral_value(rf, ell, min(truncation, 1e4)))
    if diverges is False and mass == math.inf:
        value = _gap_integral_value(rf, ell)
        return _infinite(Criterion.INTEGRAL_CONVERGES,
                         integral=value,
                         p_infinite_upper_bound=1.0 / (1.0 + value))
    truncated = _gap_integral_value(rf, ell, truncation)
    try:
        truncated_mass = cumulative(rf, 0.0, truncation)
    except Exception:  # pragma: no cover - custom hints may reject large spans
        truncated_mass = float("nan")
    return _inconclusive(Criterion.INTEGRAL_CONVERGES,
                         truncated_integral=truncated,
                         truncated_mass=truncated_mass,
                         truncation=truncation)


def log_threshold_classify(rf: RateFunction, ell: float) -> ClassificationVerdict:
    """Compare the symbolic limit of ``mu(t)/log t`` against ``1/ell``."""
    if ell <= 0:
        raise DomainError(f"gap length must be positive, got {ell}")
    ratio = intensity.log_ratio_limit(rf)
    if ratio is None:
        raise UnsupportedFamilyError(
            f"family {rf.family!r} has no symbolic mu/log limit; "
            "fall back to integral_test")
    threshold = 1.0 / ell
    if ratio < threshold:
        return _finite(Criterion.LOG_THRESHOLD, ratio_limit=ratio,
                       threshold=threshold)
    if ratio > threshold:
        return _infinite(Criterion.LOG_THRESHOLD, ratio_limit=ratio,
                         threshold=threshold)
    return _inconclusive(Criterion.LOG_THRESHOLD, ratio_limit=ratio,
                         threshold=threshold,
                         note="critical rate; defer to iterated_log_classify")


def iterated_log_classify(n: int, b: float, ell: float = 1.0) -> ClassificationVerdict:
    """Exact boundary rule for the iterated-logarithm families.

    For ``n >= 4`` the gap occurs a.s. iff the last coefficient ``b <= 1``;
    the two low-order families (``n = 2, 3``) share the same threshold on
    their final coefficient.  Never inconclusive.
    """
    if n < 2:
        raise DomainError(f"iterated-log classification requires n >= 2, got {n}")
    if ell <= 0:
        raise DomainError(f"gap length must be positive, got {ell}")
    if b <= 1.0:
        return _finite(Criterion.ITERATED_LOG, n=n, b=b)
    return _infinite(Criterion.ITERATED_LOG, n=n, b=b)


_DOMINATION_GRID_SIZE = 64


def compare(rf: RateFunction, reference: RateFunction, direction: str,
            reference_verdict: ClassificationVerdict,
            t_max: float = 1e6) -> ClassificationVerdict:
    """Propagate a comparison verdict through pointwise domination.

    Domination is spot-verified on a log-spaced grid, not proven.  Under
    ``<=`` an almost-surely-finite reference pushes down; under ``>=`` a
    positive-probability-infinite reference pushes up.
    """
    if direction not in ("<=", ">="):
        raise DomainError(f"direction must be '<=' or '>=', got {direction!r}")
    start = 0.1
    ts = [start * (t_max / start) ** (i / (_DOMINATION_GRID_SIZE - 1))
          for i in range(_DOMINATION_GRID_SIZE)]
    for t in ts:
        lhs, rhs = eval_rate(rf, t), eval_rate(reference, t)
        ok = lhs <= rhs * (1 + 1e-12) if direction == "<=" else lhs >= rhs * (1 - 1e-12)
        if not ok:
            raise PreconditionError(
                f"domination mu {direction} mu' violated at t={t:.6g} "
                f"({lhs:.6g} vs {rhs:.6g})")
    if direction == "<=" and reference_verdict.verdict is Verdict.ALMOST_SURELY_FINITE:
        return _finite(Criterion.COMPARISON,
                       reference_criterion=reference_verdict.criterion.value)
    if direction == ">=" and reference_verdict.verdict is Verdict.POSITIVE_PROBABILITY_INFINITE:
        return _infinite(Criterion.COMPARISON,
                         reference_criterion=reference_verdict.criterion.value)
    return _inconclusive(Criterion.COMPARISON,
                         note="reference verdict does not propagate this way")
