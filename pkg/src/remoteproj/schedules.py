"""Weakness-parameter sequences and analyzers.

A schedule is a pure function ``n -> t_n`` in ``[0, 1]`` for ``n >= 0``. Besides
evaluation this module offers the window test used for weak convergence, the
partial sums bracketing condition (T), and the extremal witness recursion that
probes (T) from the boundary case ``a_m * S_m = t_m``.
"""
from dataclasses import dataclass
import math

import numpy as np

KINDS = ("constant", "power", "harmonic_log", "explicit", "alternating")

# parameter names per kind, in CLI order
_PARAMS = {
    "constant": ("value",),
    "power": ("exponent",),
    "harmonic_log": (),
    "explicit": ("values",),
    "alternating": ("high", "low"),
}


class InvalidSchedule(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    kind: str
    value: float = None
    exponent: float = None
    values: tuple = None
    high: float = None
    low: float = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSchedule(f"unknown schedule kind {self.kind!r}")
        for name in _PARAMS[self.kind]:
            if getattr(self, name) is None:
                raise InvalidSchedule(f"{self.kind} schedule requires {name!r}")
        if self.kind == "constant":
            _unit_interval(self.value, "value")
        elif self.kind == "power":
            if not (math.isfinite(self.exponent) and self.exponent > 0):
                raise InvalidSchedule("power exponent must be positive")
        elif self.kind == "explicit":
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise InvalidSchedule("explicit schedule needs at least one value")
            for v in vals:
                _unit_interval(v, "values")
            object.__setattr__(self, "values", vals)
        elif self.kind == "alternating":
            _unit_interval(self.high, "high")
            _unit_interval(self.low, "low")

    # convenience constructors
    @classmethod
    def constant(cls, c):
        return cls("constant", value=float(c))

    @classmethod
    def power(cls, theta):
        return cls("power", exponent=float(theta))

    @classmethod
    def harmonic_log(cls):
        return cls("harmonic_log")

    @classmethod
    def explicit(cls, values):
        return cls("explicit", values=tuple(values))

    @classmethod
    def alternating(cls, high, low):
        return cls("alternating", high=float(high), low=float(low))

    def __call__(self, n):
        return t_at(self, n)

    def values_upto(self, count):
        """``t_0, ..., t_{count-1}`` as an array."""
        if self.kind == "constant":
            return np.full(count, self.value)
        if self.kind in ("power", "harmonic_log"):
            # scalar libm path so every entry is bit-identical to t_at
            return np.fromiter((t_at(self, i) for i in range(count)), np.float64, count)
        if self.kind == "explicit":
            out = np.full(count, self.values[-1])
            k = min(count, len(self.values))
            out[:k] = self.values[:k]
            return out
        return np.where(np.arange(count) % 2 == 0, self.high, self.low)

    def to_dict(self):
        d = {"kind": self.kind}
        for name in _PARAMS[self.kind]:
            v = getattr(self, name)
            d[name] = list(v) if name == "values" else v
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind", None)
        if kind not in KINDS:
            raise InvalidSchedule(f"unknown schedule kind {kind!r}")
        if set(d) != set(_PARAMS[kind]):
            raise InvalidSchedule(f"{kind} schedule expects keys {list(_PARAMS[kind])}, got {sorted(d)}")
        if "values" in d:
            d["values"] = tuple(d["values"])
        return cls(kind, **d)

    @classmethod
    def parse(cls, spec):
        """Parse ``kind[:p1,p2,...]``, e.g. ``power:0.5`` or ``explicit:0.9,0.1``."""
        kind, _, rest = spec.partition(":")
        kind = kind.strip()
        if kind not in KINDS:
            raise InvalidSchedule(f"unknown schedule kind {kind!r}")
        try:
            nums = [float(p) for p in rest.split(",")] if rest.strip() else []
        except ValueError:
            raise InvalidSchedule(f"malformed schedule parameters in {spec!r}") from None
        names = _PARAMS[kind]
        if kind == "explicit":
            return cls.explicit(nums)
        if len(nums) != len(names):
            raise InvalidSchedule(f"{kind} takes {len(names)} parameter(s), got {len(nums)}")
        return cls(kind, **dict(zip(names, nums)))

    def __str__(self):
        parts = []
        for name in _PARAMS[self.kind]:
            v = getattr(self, name)
            if name == "values":
                parts.extend(repr(x) for x in v)
            else:
                parts.append(repr(v))
        return self.kind + (":" + ",".join(parts) if parts else "")


def _unit_interval(v, what):
    if v is None or not (0.0 <= float(v) <= 1.0):
        raise InvalidSchedule(f"{what} must lie in [0, 1]")


def t_at(schedule, n):
    if n < 0:
        raise ValueError("schedule index must be nonnegative")
    k = schedule.kind
    if k == "constant":
        return schedule.value
    if k == "power":
        return min(1.0, (n + 1.0) ** -schedule.exponent)
    if k == "harmonic_log":
        return min(1.0, 1.0 / ((n + 2.0) * math.log(n + 2.0)))
    if k == "explicit":
        vals = schedule.values
        return vals[n] if n < len(vals) else vals[-1]
    return schedule.high if n % 2 == 0 else schedule.low


@dataclass(frozen=True)
class WindowCheck:
    holds: bool
    first_violation: int = None


def check_window_condition(schedule, delta, K, horizon):
    """Check that every window ``t_n, ..., t_{n+K}`` with ``n <= horizon - K``
    has an entry strictly above ``delta``."""
    if delta <= 0 or K < 0 or horizon < K + 1:
        raise ValueError("need delta > 0, K >= 0 and horizon >= K + 1")
    t = schedule.values_upto(horizon + 1)
    maxima = np.lib.stride_tricks.sliding_window_view(t, K + 1).max(axis=1)
    bad = np.flatnonzero(maxima <= delta)
    if bad.size:
        return WindowCheck(False, int(bad[0]))
    return WindowCheck(True)


@dataclass(frozen=True)
class PartialSums:
    sum_sq: float
    sum_over_n: float


def partial_sum_diagnostics(schedule, M):
    """Partial sums of ``t_n**2`` and ``t_n/(n+1)`` over ``n < M``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    t = schedule.values_upto(M)
    n1 = np.arange(1, M + 1, dtype=np.float64)
    return PartialSums(math.fsum(t * t), math.fsum(t / n1))


def classify_condition_t(schedule):
    """Label (T) only where the implication chain settles it in closed form.

    Returns ``"holds"`` when ``sum t_n/n`` diverges, ``"fails"`` when
    ``sum t_n**2`` converges, and ``None`` otherwise.
    """
    k = schedule.kind
    if k == "constant":
        return "holds" if schedule.value > 0 else "fails"
    if k == "power":
        # sum (n+1)^(-1-theta) always converges; only the square test is decisive
        return "fails" if schedule.exponent > 0.5 else None
    if k == "harmonic_log":
        return "fails"
    if k == "explicit":
        return "holds" if schedule.values[-1] > 0 else "fails"
    return "holds" if max(schedule.high, schedule.low) > 0 else "fails"


@dataclass
class WitnessSequence:
    """Arrays indexed ``m = 1..M`` stored at positions ``0..M-1``."""

    t: np.ndarray
    a: np.ndarray
    partial_sums: np.ndarray
    b: np.ndarray
    sumsq: np.ndarray

    def __len__(self):
        return len(self.a)

    def sumsq_at(self, m):
        return float(self.sumsq[m - 1])


def build_extremal_witness(schedule, M):
    """Nonnegative ``a_m`` solving ``a_m (S_{m-1} + a_m) = t_m`` (or 0 when ``t_m = 0``).

    Witness index ``m`` uses the schedule's ``t_{m-1}``. ``b_m`` is NaN where
    ``t_m = 0``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    t = schedule.values_upto(M)
    a = np.zeros(M)
    S = np.zeros(M)
    sqrt = math.sqrt
    s = 0.0
    tl = t.tolist()
    for i in range(M):
        ti = tl[i]
        if ti > 0.0:
            # cancellation-free form of (-s + sqrt(s^2 + 4t)) / 2
            ai = 2.0 * ti / (s + sqrt(s * s + 4.0 * ti))
            a[i] = ai
            s += ai
        S[i] = s
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(t > 0, a / np.where(t > 0, t, 1.0) * S, np.nan)
    return WitnessSequence(t=t, a=a, partial_sums=S, b=b, sumsq=np.cumsum(a * a))
