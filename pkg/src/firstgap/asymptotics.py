"""Tail regimes, decay rates and logarithmic asymptotic forms.

When the rate tends to a positive constant ``mu`` the tail decays like
``c * exp(-gamma t)`` where ``gamma`` solves ``gamma exp(-gamma ell) =
mu exp(-mu ell)`` on the other side of ``1/ell`` from ``mu``; ``c`` comes
from the renewal argument.  Rates tending to zero give short tails with
``-log P(D > t)`` superlinear; rates growing (necessarily about as slowly
as ``log t``) give long tails with ``-log P(D > t)`` sublinear, obtained by
integrating ``exp(-ell mu(s)) mu(s)``.

All asymptotic statements here are logarithmic: ratios of ``-log P`` drift
to 1, typically at a logarithmic pace, so tests compare with deliberately
loose tolerances.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

from scipy.integrate import quad
from scipy.optimize import brentq

from . import finiteness, intensity
from .errors import DomainError, PreconditionError, UnsupportedFamilyError
from .intensity import RateFunction, cumulative, eval_rate


class Regime(enum.Enum):
    EXPONENTIAL = "Exponential"
    SHORT_TAIL = "ShortTail"
    LONG_TAIL = "LongTail"


class Moment(enum.Enum):
    FINITE = "Finite"
    INFINITE = "Infinite"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class AsymptoticForm:
    """``-log P(D > t) ~ rate_fn(t)`` in the logarithmic sense."""

    regime: Regime
    formula: str
    rate_fn: Callable[[float], float]
    coefficient: float
    index_params: Optional[tuple] = None  # (rho, alpha) regular-variation data
    constant_c: Optional[float] = None    # exact prefactor, homogeneous only

    def to_json(self) -> dict:
        doc = {"regime": self.regime.value, "f_formula": self.formula,
               "coefficient": self.coefficient}
        if self.regime is Regime.EXPONENTIAL:
            doc["gamma"] = self.coefficient
        if self.constant_c is not None:
            doc["c"] = self.constant_c
        if self.index_params is not None:
            doc["index_params"] = list(self.index_params)
        return doc


def gamma_root(mu: float, ell: float) -> float:
    """Decay rate for the homogeneous tail: the root of
    ``gamma * exp(-gamma*ell) = mu * exp(-mu*ell)`` with ``gamma != mu``,
    except ``gamma = mu`` at the unimodal peak ``mu = 1/ell``.
    """
    if mu <= 0 or ell <= 0:
        raise DomainError(f"require mu, ell > 0, got mu={mu}, ell={ell}")
    peak = 1.0 / ell
    if math.isclose(mu, peak, rel_tol=1e-12):
        return float(mu)
    target = mu * math.exp(-mu * ell)
    phi = lambda x: x * math.exp(-x * ell) - target
    if mu > peak:
        lo, hi = 1e-300, peak
    else:
        lo, hi = peak, 2.0 * peak
        while phi(hi) > 0:
            hi *= 2.0
    gamma = brentq(phi, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200)
    if abs(gamma * math.exp(-gamma * ell) - target) > 1e-12 * target:
        raise ArithmeticError("gamma root failed its residual check")
    return float(gamma)


def renewal_constant(mu: float, ell: float) -> float:
    """Prefactor ``c`` in ``P(D > t) ~ c exp(-gamma t)`` for constant rate."""
    gamma = gamma_root(mu, ell)
    num, _ = quad(lambda t: (math.exp(-mu * t) - math.exp(-mu * ell))
                  * math.exp(gamma * t), 0.0, ell, epsrel=1e-12, epsabs=1e-14)
    den, _ = quad(lambda s: s * mu * math.exp((gamma - mu) * s), 0.0, ell,
                  epsrel=1e-12, epsabs=1e-14)
    return num / den


def tail_class(rf: RateFunction) -> Regime:
    """Regime from the symbolic limit of the rate at infinity."""
    lim = intensity.rate_limit(rf)
    if lim is None:
        raise UnsupportedFamilyError(
            f"family {rf.family!r} has no symbolic rate limit")
    if math.isinf(lim):
        return Regime.LONG_TAIL
    if lim == 0.0:
        return Regime.SHORT_TAIL
    return Regime.EXPONENTIAL


def short_tail_form(rf: RateFunction, ell: float) -> AsymptoticForm:
    """Closed asymptotic forms for the decaying-rate families."""
    if ell <= 0:
        raise DomainError(f"gap length must be positive, got {ell}")
    if rf.family == intensity.TIME_CHANGED and "equivalent" in rf.children:
        return short_tail_form(rf.children["equivalent"], ell)
    if rf.family == intensity.RESCALED:
        return short_tail_form(rf.children["base"], ell * rf.params["ell"])
    fam, p = rf.family, rf.params
    if fam == intensity.LOG_POWER_DECAY:
        b = p["b"]
        coeff = b / ell
        return AsymptoticForm(
            Regime.SHORT_TAIL, f"{coeff:g}*t*log(log(t))",
            lambda t: coeff * t * math.log(math.log(t)),
            coefficient=coeff, index_params=(0.0, 1.0))
    if fam == intensity.POWER_DECAY:
        b = p["b"]
        coeff = b / ell
        return AsymptoticForm(
            Regime.SHORT_TAIL, f"{coeff:g}*t*log(t)",
            lambda t: coeff * t * math.log(t),
            coefficient=coeff, index_params=(0.0, 1.0))
    if fam == intensity.EXP_DECAY:
        b = p["b"]
        coeff = b / (2.0 * ell)
        return AsymptoticForm(
            Regime.SHORT_TAIL, f"{coeff:g}*t**2",
            lambda t: coeff * t * t,
            coefficient=coeff, index_params=(1.0, 2.0))
    raise UnsupportedFamilyError(
        f"no short-tail closed form for family {fam!r}")


def long_tail_f(rf: RateFunction, ell: float, c0: float, t: float) -> float:
    """``f(t) = int_{c0}^t exp(-ell*mu(s)) mu(s) ds`` with
    ``-log P(D > t) ~ f(t)``; closed form for the log-growth family,
    quadrature otherwise.  Requires a long-tailed, almost-surely-finite rate.
    """
    if c0 <= 0:
        raise DomainError(f"lower limit c0 must be positive, got {c0}")
    if t < c0:
        raise DomainError(f"require t >= c0, got t={t} < c0={c0}")
    if tail_class(rf) is not Regime.LONG_TAIL:
        raise PreconditionError("rate is not long-tailed")
    verdict = finiteness.integral_test(rf, ell)
    if verdict.verdict is not finiteness.Verdict.ALMOST_SURELY_FINITE:
        raise PreconditionError(
            f"first gap not almost surely finite ({verdict.verdict.value})")
    if rf.family == intensity.LOG_GROWTH and rf.floor is not None \
            and c0 >= rf.floor.t0:
        a, b = rf.params["a"], rf.params["b"]
        q = b * ell
        al = a ** ell

        def prim(s: float) -> float:
            w = s ** (1.0 - q) / (1.0 - q)
            return al * (b * w * (math.log(s) - 1.0 / (1.0 - q))
                         - math.log(a) * w)

        return prim(t) - prim(c0)
    val, _ = quad(lambda s: math.exp(-ell * eval_rate(rf, s)) * eval_rate(rf, s),
                  c0, t, limit=400)
    return val


def default_long_tail_origin(rf: RateFunction) -> float:
    """Default lower integration limit: past the floor and past ``e``."""
    t0 = rf.floor.t0 if rf.floor is not None else 0.0
    return max(t0, math.e)


def long_tail_form(rf: RateFunction, ell: float) -> AsymptoticForm:
    """Leading closed asymptotic forms for the growing-rate families."""
    if rf.family == intensity.RESCALED:
        return long_tail_form(rf.children["base"], ell * rf.params["ell"])
    fam, p = rf.family, rf.params
    if fam == intensity.LOG_GROWTH:
        a, b = p["a"], p["b"]
        if b * ell >= 1.0:
            raise PreconditionError(
                f"log-growth with b*ell = {b * ell} >= 1 is not almost surely finite")
        coeff = b * a ** ell / (1.0 - b * ell)
        expo = 1.0 - b * ell
        return AsymptoticForm(
            Regime.LONG_TAIL, f"{coeff:g}*t**{expo:g}*log(t)",
            lambda t: coeff * t ** expo * math.log(t), coefficient=coeff)
    if fam == intensity.CRITICAL_LOG_GROWTH:
        a, b = p["a"], p["b"]
        if not math.isclose(ell, 1.0):
            raise UnsupportedFamilyError(
                "critical log-growth forms are stated for unit gaps; rescale first")
        if b < -2.0:
            raise DomainError(
                f"critical log-growth with b={b} < -2 is not almost surely finite")
        if b == -2.0:
            return AsymptoticForm(
                Regime.LONG_TAIL, f"{a:g}*log(log(t))",
                lambda t: a * math.log(math.log(t)), coefficient=a)
        coeff = a / (2.0 + b)
        return AsymptoticForm(
            Regime.LONG_TAIL, f"{coeff:g}*log(t)**{2.0 + b:g}",
            lambda t: coeff * math.log(t) ** (2.0 + b), coefficient=coeff)
    raise UnsupportedFamilyError(f"no long-tail closed form for family {fam!r}")


def asymptotic_form(rf: RateFunction, ell: float) -> AsymptoticForm:
    """Dispatch on the tail regime; exponential rates get ``gamma`` and,
    for genuinely constant rates, the exact prefactor ``c``.
    """
    regime = tail_class(rf)
    if regime is Regime.EXPONENTIAL:
        mu = intensity.rate_limit(rf)
        gamma = gamma_root(mu, ell)
        c = renewal_constant(mu, ell) if rf.family == intensity.CONSTANT else None
        return AsymptoticForm(
            Regime.EXPONENTIAL, f"{gamma:g}*t",
            lambda t: gamma * t, coefficient=gamma, constant_c=c)
    if regime is Regime.SHORT_TAIL:
        return short_tail_form(rf, ell)
    return long_tail_form(rf, ell)


def sandwich_bounds(rf: RateFunction, t: float, epsilon: float,
                    k: int = 0) -> tuple[float, float]:
    """Bracket ``-log P(D > t)`` for a unit gap (rescale first).

    The lower bound comes from requiring a point in each ``[i, i+1)`` up to
    ``t`` (the product of ``1 - e^{-M(i, i+1)}``, which also dominates the
    cruder ``prod min(1, M)`` version); the upper bound from planting a
    point in each short interval ``[h i, h i + epsilon)`` with
    ``h = 1 - epsilon``.
    """
    if not 0.0 < epsilon < 0.5:
        raise DomainError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    lower = 0.0
    for i in range(k, int(math.floor(t)) + 1):
        m = cumulative(rf, float(i), float(i + 1))
        lower -= math.log1p(-math.exp(-m))
    h = 1.0 - epsilon
    upper = 0.0
    for i in range(0, int(math.ceil(t / h)) + 1):
        m = cumulative(rf, h * i, h * i + epsilon)
        upper -= math.log1p(-math.exp(-m))
    return lower, upper


def moment_finite(p: float, a: float) -> Moment:
    """Moment order ``p`` against the critical index ``a`` of the rate
    ``log t + log log t - log a`` (unit gap): finite below, infinite above,
    indeterminate at equality.
    """
    if p <= 0 or a <= 0:
        raise DomainError(f"require p, a > 0, got p={p}, a={a}")
    if p < a:
        return Moment.FINITE
    if p > a:
        return Moment.INFINITE
    return Moment.INDETERMINATE
