"""Checks of the convergence machinery on recorded traces.

All checks are pure functions of a :class:`~remoteproj.engine.Trace`. Weak
convergence is only observable through finitely many linear functionals, so
:func:`detect_convergence` reports a proxy, not a decision.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .hilbert import as_vector, norm

ENERGY_TOL = 1e-9
ENERGY_SUM_TOL = 1e-6
SIN_STEP_TOL = 1e-8
SIN_SUM_TOL = 1e-6
CAUCHY_RTOL = 1e-6
RATE_RTOL = 1e-6
#: random probe directions used by the ball-containment check
CONTAINMENT_PROBES = 32


class MissingReference(ValueError):
    pass


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    max_violation: float


def _require_ref(trace):
    if trace.a_ref is None:
        raise MissingReference("trace has no reference point a_ref")
    return trace.a_ref


def check_energy(trace):
    """Energy inequality ``|x_n - a|^2 >= |x_{n+1} - a|^2 + |y_n|^2`` per step,
    plus ``sum |y_n|^2 <= |x_0 - a|^2``.

    ``max_violation`` is the largest amount by which either side is exceeded
    (0 when nothing is violated).
    """
    _require_ref(trace)
    norms = trace.norms()
    if len(trace) == 0:
        return CheckResult(True, 0.0)
    steps = trace.columns["step_norm"]
    per_step = norms[1:] ** 2 + steps ** 2 - norms[:-1] ** 2
    total = math.fsum(steps ** 2) - norms[0] ** 2
    worst = max(float(per_step.max()), total, 0.0)
    ok = bool(per_step.max() <= ENERGY_TOL) and total <= ENERGY_SUM_TOL
    return CheckResult(ok, worst)


def check_fejer(trace, v=None):
    """``|x_{n+1} - v| <= |x_n - v|`` on the retained iterates (every step when
    the stride is 1). ``v`` defaults to the trace reference point."""
    v = trace.reference if v is None else as_vector(v, trace.x0.size)
    d = np.linalg.norm(trace.iterates - v, axis=1)
    if len(d) < 2:
        return CheckResult(True, 0.0)
    inc = np.diff(d)
    return CheckResult(bool(inc.max() <= ENERGY_TOL), max(float(inc.max()), 0.0))


def check_law_of_cosines(trace):
    """Residual of ``|x_n|^2 = |x_{n+1}|^2 + |y_n|^2 + 2 |x_{n+1}| |y_n| sin eps_n``."""
    _require_ref(trace)
    if len(trace) == 0:
        return CheckResult(True, 0.0)
    norms = trace.norms()
    c = trace.columns
    rhs = norms[1:] ** 2 + c["step_norm"] ** 2 + 2 * norms[1:] * c["step_norm"] * c["sin_eps"]
    worst = float(np.abs(norms[:-1] ** 2 - rhs).max())
    return CheckResult(worst <= SIN_STEP_TOL, worst)


@dataclass(frozen=True)
class SinSummability:
    ok: bool
    partial_sums: np.ndarray
    bound: float
    max_step_violation: float


def check_sin_summability(trace, R_floor):
    """Per-step ``|y_n| sin eps_n <= (|x_n|^2 - |x_{n+1}|^2) / (2R)`` and the
    telescoped bound on the partial sums."""
    _require_ref(trace)
    if R_floor <= 0:
        raise ValueError("R_floor must be positive")
    norms = trace.norms()
    if len(trace) and norms[1:].min() < R_floor * (1 - 1e-12):
        raise ValueError(f"R_floor={R_floor!r} exceeds the tail norm {norms[1:].min()!r}")
    c = trace.columns
    if len(trace) == 0:
        return SinSummability(True, np.array([]), 0.0, 0.0)
    terms = c["step_norm"] * c["sin_eps"]
    allowed = (norms[:-1] ** 2 - norms[1:] ** 2) / (2 * R_floor)
    step_excess = float((terms - allowed).max())
    sums = np.cumsum(terms)
    bound = (norms[0] ** 2 - norms.min() ** 2) / (2 * R_floor)
    ok = step_excess <= SIN_STEP_TOL and float(sums[-1]) <= bound + SIN_SUM_TOL
    return SinSummability(bool(ok), sums, float(bound), max(step_excess, 0.0))


def probe_ball_containment(family, a, r, seed=0):
    """Check ``a + r u`` lies in every set for ``2 dim`` axis directions and
    ``CONTAINMENT_PROBES`` seeded random unit directions ``u``."""
    dim = a.size
    rng = np.random.default_rng(seed)
    rand = rng.standard_normal((CONTAINMENT_PROBES, dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    dirs = np.vstack([np.eye(dim), -np.eye(dim), rand])
    for c in family:
        for u in dirs:
            p = a + r * u
            if c.distance(p) > 1e-9 * (1.0 + norm(p)):
                return False
    return True


@dataclass
class RateBoundReport:
    center: np.ndarray
    radius: float
    steps: np.ndarray
    bound: np.ndarray
    actual: np.ndarray
    violations: list = field(default_factory=list)
    tolerance: float = 0.0

    @property
    def ok(self):
        return not self.violations


class ContainmentError(ValueError):
    pass


def rate_bound_sequence(schedule, count, r, R):
    """``B_n = 2 R prod_{k<n} sqrt(1 - t_k^2 r^2 / R^2)`` for ``n = 0..count-1``.

    Once a factor would be negative the product is pinned to zero.
    """
    if R == 0:
        return np.zeros(count)
    t = schedule.values_upto(max(count - 1, 0))
    f = 1.0 - (t * r / R) ** 2
    neg = np.flatnonzero(f < 0)
    f = np.sqrt(np.clip(f, 0.0, None))
    prod = np.concatenate(([1.0], np.cumprod(f)))
    if neg.size:
        prod[neg[0] + 1:] = 0.0
    return 2.0 * R * prod[:count]


def check_rate_bound(trace, family, a, r, schedule, seed=0):
    """Compare ``|x_n - w|`` with the ball-interior rate bound, ``w`` the final
    iterate, on every retained iterate."""
    a = as_vector(a, trace.x0.size)
    if r <= 0:
        raise ValueError("r must be positive")
    if not all(c.contains_ball(a, r) for c in family):
        raise ContainmentError("B(a, r) is not certified inside every set")
    if not probe_ball_containment(family, a, r, seed=seed):
        raise ContainmentError("boundary probe of B(a, r) left some set")
    R = norm(trace.x0 - a)
    n = trace.iterate_steps
    B = rate_bound_sequence(schedule, int(n[-1]) + 1, r, R)[n]
    A = np.linalg.norm(trace.iterates - trace.x_final, axis=1)
    tol = RATE_RTOL * (1.0 + R)
    bad = [int(k) for k in n[A > B + tol]]
    return RateBoundReport(center=a, radius=float(r), steps=n, bound=B, actual=A,
                           violations=bad, tolerance=tol)


@dataclass
class ConvergenceVerdict:
    norm_cauchy: bool
    weak_proxy: list
    oscillations: list
    residual_floor: float
    tail_diameter: float
    label: str = "weak convergence is a finite-functional proxy"


def _diameter(P, chunk=64):
    """Largest pairwise distance among the rows of ``P`` (direct differences,
    no Gram-matrix cancellation)."""
    worst = 0.0
    for i in range(0, len(P), chunk):
        D = P[i:i + chunk, None, :] - P[None, :, :]
        worst = max(worst, float(np.einsum("ijk,ijk->ij", D, D).max()))
    return math.sqrt(worst)


def _padded_tail(trace, tail_fraction):
    """Tail of the retained iterates. A run stopped early sits in every set (or
    has stalled), so the remaining steps up to the horizon repeat the final
    iterate and are represented by it."""
    its, ns = trace.iterates, trace.iterate_steps
    last = trace.horizon if trace.stop_reason != "horizon" else int(ns[-1])
    start = last - tail_fraction * last
    keep = ns >= start
    if not keep.any():
        keep[-1] = True
    return its[keep], ns[keep]


def detect_convergence(trace, test_functionals=(), tail_fraction=0.25):
    if not 0 < tail_fraction <= 0.5:
        raise ValueError("tail_fraction must lie in (0, 1/2]")
    if trace.iterates is None or len(trace.iterates) == 0:
        raise ValueError("trace retains no iterates")
    tail, ns = _padded_tail(trace, tail_fraction)
    scale = 1.0 + norm(trace.x0)
    diam = _diameter(tail)
    cauchy = diam <= CAUCHY_RTOL * scale
    weak, osc = [], []
    for u in test_functionals:
        u = as_vector(u, trace.x0.size)
        vals = tail @ u
        o = float(vals.max() - vals.min())
        osc.append(o)
        # pairwise closeness bounds every functional's oscillation
        weak.append(bool(cauchy or o <= CAUCHY_RTOL * scale * norm(u)))
    floor = float(np.linalg.norm(tail - trace.reference, axis=1).min())
    return ConvergenceVerdict(bool(cauchy), weak, osc, floor, diam)
