"""Failure-rate functions and their cumulative intensity.

A :class:`RateFunction` bundles a pointwise rate ``mu(t) >= 0`` with an
optional closed-form cumulative ``M(a, b) = integral of mu over (a, b)``,
parametric-family metadata used by the symbolic classifiers, and an optional
"floor": parametric families such as ``a * t**-b`` or ``b*log(t) - log(a)``
are only meaningful for large ``t``, so below a configurable time ``T0`` the
formula is replaced by a fixed positive constant.  Tail asymptotics are
insensitive to any modification on a bounded initial segment, so the floor is
free of asymptotic consequences.

Cumulative masses fall back to adaptive Gauss-Kronrod quadrature
(``scipy.integrate.quad``) at 1e-10 relative / 1e-14 absolute tolerance when
no closed form is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from scipy.integrate import quad

from .errors import DivergenceError, DomainError, UnsupportedFamilyError

QUAD_RELTOL = 1e-10
QUAD_ABSTOL = 1e-14

# family tags
CONSTANT = "constant"
POWER_DECAY = "power_decay"
EXP_DECAY = "exp_decay"
LOG_POWER_DECAY = "log_power_decay"
LOG_GROWTH = "log_growth"
CRITICAL_LOG_GROWTH = "critical_log_growth"
ITERATED_LOG = "iterated_log"
SPLICED = "spliced"
TIME_CHANGED = "time_changed"
RESCALED = "rescaled"
CUSTOM = "custom"


@dataclass(frozen=True)
class Floor:
    """Replace the family formula by ``value`` for times below ``t0``."""

    t0: float
    value: float


@dataclass(frozen=True, eq=False)
class RateFunction:
    """Evaluable failure intensity with cumulative mass and family metadata.

    Instances are immutable after construction and safe to share across
    threads.  ``formula`` is the raw family formula; :func:`eval_rate`
    applies the floor.  Symbolic fields (``limit_at_infinity``,
    ``log_ratio_limit``, ``mass``) may be ``None`` when unknown.
    """

    family: str
    params: dict
    formula: Callable[[float], float]
    cumulative_hint: Optional[Callable[[float, float], float]] = None
    floor: Optional[Floor] = None
    children: dict = field(default_factory=dict)
    limit_at_infinity: Optional[float] = None  # lim mu(t), may be inf
    log_ratio_limit: Optional[float] = None    # lim mu(t)/log(t), may be inf
    mass: Optional[float] = None               # M(0, inf), may be inf

    def __repr__(self) -> str:
        parts = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"RateFunction({self.family}{{{parts}}})"


def eval_rate(rf: RateFunction, t: float) -> float:
    """Rate ``mu(t)``; the floor constant below the family's ``T0``."""
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    if rf.floor is not None and t < rf.floor.t0:
        return rf.floor.value
    return float(rf.formula(t))


def _quad_mass(rf: RateFunction, a: float, b: float) -> float:
    pts = []
    if rf.floor is not None and a < rf.floor.t0 < b:
        pts.append(rf.floor.t0)
    val, _ = quad(lambda t: eval_rate(rf, t), a, b,
                  epsrel=QUAD_RELTOL, epsabs=QUAD_ABSTOL,
                  points=pts or None, limit=200)
    return val


def cumulative(rf: RateFunction, a: float, b: float,
               truncation: float | None = None) -> float:
    """Cumulative mass ``M(a, b)``.

    ``b`` may be ``inf`` when the family proves the tail integrable or a
    ``truncation`` bound is supplied; a divergent tail raises
    :class:`DivergenceError` carrying the mass accumulated up to the
    truncation point.
    """
    if a < 0 or a > b:
        raise DomainError(f"require 0 <= a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0
    if math.isinf(b):
        m = total_mass(rf)
        if m is not None and math.isfinite(m):
            return m - cumulative(rf, 0.0, a)
        if truncation is not None:
            return cumulative(rf, a, truncation)
        lower = cumulative(rf, a, a + 1e6)
        raise DivergenceError(
            f"M({a}, inf) diverges for family {rf.family!r} "
            f"(mass over ({a}, {a + 1e6:g}) already {lower:.6g})",
            lower_bound=lower)
    if rf.cumulative_hint is not None:
        return float(rf.cumulative_hint(a, b))
    return _quad_mass(rf, a, b)


def total_mass(rf: RateFunction) -> Optional[float]:
    """Symbolic ``M(0, inf)``: a finite value, ``inf``, or ``None`` if unknown."""
    return rf.mass


def rate_limit(rf: RateFunction) -> Optional[float]:
    """Symbolic ``lim mu(t)`` as ``t -> inf`` (``inf`` allowed), or ``None``."""
    return rf.limit_at_infinity


def log_ratio_limit(rf: RateFunction) -> Optional[float]:
    """Symbolic ``lim mu(t)/log(t)`` (``inf`` allowed), or ``None``."""
    return rf.log_ratio_limit


# ---------------------------------------------------------------------------
# Built-in families.
# Each constructor wires the formula, a floor-aware closed-form cumulative
# where one exists, and the symbolic limits used by the classifiers.
# ---------------------------------------------------------------------------

def _floored_segments(floor: Optional[Floor],
                      segment: Callable[[float, float], float]):
    """Build M(a, b) from a formula primitive on [T0, inf) plus the floor."""

    def hint(a: float, b: float) -> float:
        if floor is None:
            return segment(a, b)
        t0 = floor.t0
        m = 0.0
        if a < t0:
            m += floor.value * (min(b, t0) - a)
        if b > t0:
            m += segment(max(a, t0), b)
        return m

    return hint


def constant(mu: float) -> RateFunction:
    """Homogeneous rate ``mu(t) = mu``."""
    if mu <= 0:
        raise DomainError(f"constant rate must be positive, got {mu}")
    return RateFunction(
        family=CONSTANT, params={"mu": mu},
        formula=lambda t, mu=mu: mu,
        cumulative_hint=lambda a, b, mu=mu: mu * (b - a),
        limit_at_infinity=mu, log_ratio_limit=0.0, mass=math.inf)


def power_decay(a: float, b: float, floor: Floor | None = None) -> RateFunction:
    """``mu(t) = a * t**-b`` beyond the floor (default ``T0 = 1``)."""
    if a <= 0 or b <= 0:
        raise DomainError(f"power_decay requires a, b > 0, got a={a}, b={b}")
    if floor is None:
        floor = Floor(t0=1.0, value=a)

    def segment(x: float, y: float) -> float:
        if b == 1.0:
            return a * (math.log(y) - math.log(x))
        return a * (y ** (1.0 - b) - x ** (1.0 - b)) / (1.0 - b)

    if b > 1.0:
        mass = floor.value * floor.t0 + a * floor.t0 ** (1.0 - b) / (b - 1.0)
    else:
        mass = math.inf
    return RateFunction(
        family=POWER_DECAY, params={"a": a, "b": b},
        formula=lambda t: a * t ** (-b),
        cumulative_hint=_floored_segments(floor, segment),
        floor=floor, limit_at_infinity=0.0, log_ratio_limit=0.0, mass=mass)


def exp_decay(a: float, b: float) -> RateFunction:
    """``mu(t) = a * exp(-b t)``; total mass ``a / b``."""
    if a <= 0 or b <= 0:
        raise DomainError(f"exp_decay requires a, b > 0, got a={a}, b={b}")
    return RateFunction(
        family=EXP_DECAY, params={"a": a, "b": b},
        formula=lambda t: a * math.exp(-b * t),
        cumulative_hint=lambda x, y: a * (math.exp(-b * x) - math.exp(-b * y)) / b,
        limit_at_infinity=0.0, log_ratio_limit=0.0, mass=a / b)


def log_power_decay(a: float, b: float, floor: Floor | None = None) -> RateFunction:
    """``mu(t) = a * log(t)**-b`` beyond the floor (default ``T0 = e``).

    No elementary primitive exists, so cumulative masses use quadrature.
    """
    if a <= 0 or b <= 0:
        raise DomainError(f"log_power_decay requires a, b > 0, got a={a}, b={b}")
    if floor is None:
        floor = Floor(t0=math.e, value=a)
    return RateFunction(
        family=LOG_POWER_DECAY, params={"a": a, "b": b},
        formula=lambda t: a * math.log(t) ** (-b),
        floor=floor, limit_at_infinity=0.0, log_ratio_limit=0.0, mass=math.inf)


def log_growth(a: float, b: float, floor: Floor | None = None) -> RateFunction:
    """``mu(t) = b*log(t) - log(a)`` beyond the floor.

    The default floor starts where the formula is safely positive:
    ``T0 = max(e, e * a**(1/b))``, where the formula value is at least ``b``.
    """
    if a <= 0 or b <= 0:
        raise DomainError(f"log_growth requires a, b > 0, got a={a}, b={b}")
    log_a = math.log(a)
    if floor is None:
        t0 = max(math.e, math.e * a ** (1.0 / b))
        floor = Floor(t0=t0, value=b * math.log(t0) - log_a)

    def segment(x: float, y: float) -> float:
        prim = lambda t: b * (t * math.log(t) - t) - t * log_a
        return prim(y) - prim(x)

    return RateFunction(
        family=LOG_GROWTH, params={"a": a, "b": b},
        formula=lambda t: b * math.log(t) - log_a,
        cumulative_hint=_floored_segments(floor, segment),
        floor=floor, limit_at_infinity=math.inf, log_ratio_limit=b,
        mass=math.inf)


def critical_log_growth(a: float, b: float, floor: Floor | None = None) -> RateFunction:
    """``mu(t) = log(t) - b*log(log(t)) - log(a)``: growth at the critical
    ``log t`` rate with a log-log correction.

    The sign convention makes ``b = -1`` the rate whose first-gap time has a
    power tail and ``b = -2`` the boundary where only logarithmic moments
    remain.  Default floor: the earliest ``t >= e**e`` where the formula
    reaches 1.
    """
    if a <= 0:
        raise DomainError(f"critical_log_growth requires a > 0, got {a}")
    log_a = math.log(a)
    f = lambda t: math.log(t) - b * math.log(math.log(t)) - log_a
    if floor is None:
        t0 = math.exp(math.e)
        while f(t0) < 1.0:
            t0 *= 2.0
        floor = Floor(t0=t0, value=f(t0))
    return RateFunction(
        family=CRITICAL_LOG_GROWTH, params={"a": a, "b": b},
        formula=f, floor=floor,
        limit_at_infinity=math.inf, log_ratio_limit=1.0, mass=math.inf)


def _iterated_log(t: float, n: int) -> float:
    for _ in range(n):
        t = math.log(t)
    return t


def iterated_log_boundary(n: int, b: float, ell: float = 1.0,
                          floor: Floor | None = None) -> RateFunction:
    """Rates on the finite/infinite boundary built from iterated logarithms.

    For ``n >= 4``: ``ell * mu(t) = log t + 2 log_2 t + log_3 t + ... +
    log_{n-1} t + b log_n t``.  For ``n = 2``: ``log t + (1+b) log_2 t``;
    for ``n = 3``: ``log t + 2 log_2 t + b log_3 t``.
    """
    if n < 2:
        raise DomainError(f"iterated_log_boundary requires n >= 2, got {n}")
    if ell <= 0:
        raise DomainError(f"ell must be positive, got {ell}")

    def f(t: float) -> float:
        if n == 2:
            v = math.log(t) + (1.0 + b) * _iterated_log(t, 2)
        elif n == 3:
            v = math.log(t) + 2.0 * _iterated_log(t, 2) + b * _iterated_log(t, 3)
        else:
            v = math.log(t) + 2.0 * _iterated_log(t, 2)
            for k in range(3, n):
                v += _iterated_log(t, k)
            v += b * _iterated_log(t, n)
        return v / ell

    if floor is None:
        # smallest point where log_n is zero and every earlier term positive
        t0 = 1.0
        for _ in range(n - 1):
            t0 = math.exp(t0)
        floor = Floor(t0=t0, value=f(t0))
    return RateFunction(
        family=ITERATED_LOG, params={"n": n, "b": b, "ell": ell},
        formula=f, floor=floor,
        limit_at_infinity=math.inf, log_ratio_limit=1.0 / ell, mass=math.inf)


def custom(evaluator: Callable[[float], float],
           cumulative_hint: Callable[[float, float], float] | None = None,
           limit_at_infinity: float | None = None,
           log_ratio_limit: float | None = None,
           mass: float | None = None) -> RateFunction:
    """Wrap an arbitrary rate; symbolic limits may be declared by the caller."""
    return RateFunction(
        family=CUSTOM, params={}, formula=evaluator,
        cumulative_hint=cumulative_hint,
        limit_at_infinity=limit_at_infinity,
        log_ratio_limit=log_ratio_limit, mass=mass)


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def rescale_unit_gap(rf: RateFunction, ell: float) -> RateFunction:
    """Rescale time by the gap length: ``mu'(t) = ell * mu(t * ell)``.

    The first-gap time for ``(rf, ell)`` at ``t`` matches the one for
    ``(rf', 1)`` at ``t / ell``.  Families whose algebra closes under the
    rescale keep their tag; others wrap the original.
    """
    if ell <= 0:
        raise DomainError(f"gap length must be positive, got {ell}")
    if ell == 1.0:
        return rf
    if rf.family == CONSTANT:
        return constant(ell * rf.params["mu"])
    if rf.family == POWER_DECAY:
        a, b = rf.params["a"], rf.params["b"]
        fl = rf.floor
        new_floor = Floor(fl.t0 / ell, ell * fl.value)
        return power_decay(a * ell ** (1.0 - b), b, floor=new_floor)
    if rf.family == EXP_DECAY:
        a, b = rf.params["a"], rf.params["b"]
        return exp_decay(a * ell, b * ell)
    if rf.family == LOG_GROWTH:
        # ell*(b log(t*ell) - log a) = (ell*b) log t - log(a**ell * ell**(-b*ell))
        a, b = rf.params["a"], rf.params["b"]
        fl = rf.floor
        new_a = a ** ell * ell ** (-b * ell)
        return log_growth(new_a, b * ell, floor=Floor(fl.t0 / ell, ell * fl.value))

    scaled_floor = None
    if rf.floor is not None:
        scaled_floor = Floor(rf.floor.t0 / ell, ell * rf.floor.value)
    hint = None
    if rf.cumulative_hint is not None or rf.family != CUSTOM:
        hint = lambda a, b: cumulative(rf, a * ell, b * ell)
    lim = rf.limit_at_infinity
    if lim is not None and math.isfinite(lim):
        lim = ell * lim
    ratio = rf.log_ratio_limit
    if ratio is not None and math.isfinite(ratio):
        ratio = ell * ratio
    return RateFunction(
        family=RESCALED, params={"ell": ell},
        formula=lambda t: ell * eval_rate(rf, t * ell),
        cumulative_hint=hint, floor=scaled_floor,
        children={"base": rf},
        limit_at_infinity=lim, log_ratio_limit=ratio, mass=rf.mass)


def splice(head: RateFunction, tail: RateFunction, T: float) -> RateFunction:
    """Rate equal to ``head`` on ``[0, T]`` and ``tail`` on ``(T, inf)``."""
    if T < 0:
        raise DomainError(f"splice point must be nonnegative, got {T}")

    def formula(t: float) -> float:
        return eval_rate(head, t) if t <= T else eval_rate(tail, t)

    def hint(a: float, b: float) -> float:
        m = 0.0
        if a <= T:
            m += cumulative(head, a, min(b, T))
        if b > T:
            m += cumulative(tail, max(a, T), b)
        return m

    tail_mass = total_mass(tail)
    if tail_mass is None:
        mass = None
    elif math.isinf(tail_mass):
        mass = math.inf
    else:
        mass = cumulative(head, 0.0, T) + (tail_mass - cumulative(tail, 0.0, T))
    return RateFunction(
        family=SPLICED, params={"T": T},
        formula=formula, cumulative_hint=hint,
        children={"head": head, "tail": tail},
        limit_at_infinity=tail.limit_at_infinity,
        log_ratio_limit=tail.log_ratio_limit, mass=mass)


# ---------------------------------------------------------------------------
# JSON schema:
#   {"family": "...", "params": {...}, "floor": {"T0": ..., "value": ...}}
# Spliced, rescaled and time-changed functions nest recursively under
# "head"/"tail", "base" and "service".
# ---------------------------------------------------------------------------

_SIMPLE_BUILDERS = {
    CONSTANT: lambda p, fl: constant(p["mu"]),
    POWER_DECAY: lambda p, fl: power_decay(p["a"], p["b"], floor=fl),
    EXP_DECAY: lambda p, fl: exp_decay(p["a"], p["b"]),
    LOG_POWER_DECAY: lambda p, fl: log_power_decay(p["a"], p["b"], floor=fl),
    LOG_GROWTH: lambda p, fl: log_growth(p["a"], p["b"], floor=fl),
    CRITICAL_LOG_GROWTH: lambda p, fl: critical_log_growth(p["a"], p["b"], floor=fl),
    ITERATED_LOG: lambda p, fl: iterated_log_boundary(
        int(p["n"]), p["b"], p.get("ell", 1.0), floor=fl),
}

_ALIASES = {
    "powerdecay": POWER_DECAY, "expdecay": EXP_DECAY,
    "logpowerdecay": LOG_POWER_DECAY, "loggrowth": LOG_GROWTH,
    "criticalloggrowth": CRITICAL_LOG_GROWTH,
    "iteratedlog": ITERATED_LOG, "iteratedlogboundary": ITERATED_LOG,
    "timechanged": TIME_CHANGED,
}


def canonical_family(name: str) -> str:
    key = name.strip().lower().replace("-", "").replace("_", "")
    for fam in (CONSTANT, POWER_DECAY, EXP_DECAY, LOG_POWER_DECAY, LOG_GROWTH,
                CRITICAL_LOG_GROWTH, ITERATED_LOG, SPLICED, TIME_CHANGED,
                RESCALED, CUSTOM):
        if key == fam.replace("_", ""):
            return fam
    if key in _ALIASES:
        return _ALIASES[key]
    raise DomainError(f"unknown rate-function family {name!r}")


def to_json(rf: RateFunction) -> dict:
    """Serializable description; inverse of :func:`from_json`."""
    doc: dict = {"family": rf.family, "params": dict(rf.params)}
    if rf.floor is not None:
        doc["floor"] = {"T0": rf.floor.t0, "value": rf.floor.value}
    if rf.family == SPLICED:
        doc["head"] = to_json(rf.children["head"])
        doc["tail"] = to_json(rf.children["tail"])
    elif rf.family == RESCALED:
        doc["base"] = to_json(rf.children["base"])
    elif rf.family == TIME_CHANGED:
        doc["service"] = rf.children["service"].to_json()
    elif rf.family == CUSTOM:
        raise UnsupportedFamilyError("custom rate functions are not serializable")
    return doc


def from_json(doc: dict) -> RateFunction:
    family = canonical_family(doc["family"])
    params = doc.get("params", {})
    fl = None
    if "floor" in doc and doc["floor"] is not None:
        fl = Floor(t0=float(doc["floor"]["T0"]), value=float(doc["floor"]["value"]))
    if family in _SIMPLE_BUILDERS:
        return _SIMPLE_BUILDERS[family](params, fl)
    if family == SPLICED:
        return splice(from_json(doc["head"]), from_json(doc["tail"]),
                      float(params["T"]))
    if family == RESCALED:
        return rescale_unit_gap(from_json(doc["base"]), float(params["ell"]))
    if family == TIME_CHANGED:
        from . import restart
        sr = restart.service_from_json(doc["service"])
        return restart.time_change(float(params["mu_star"]), sr)
    raise UnsupportedFamilyError(f"cannot build family {family!r} from JSON")
