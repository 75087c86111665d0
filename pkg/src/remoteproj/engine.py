"""Remote projections, the Weak Greedy Algorithm, and their traces.

Family indices are 0-based throughout.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .hilbert import as_vector, norm
from .schedules import t_at
from .sets import UNIT_TOL

TIE_TOL = 1e-12
WEAKNESS_TOL = 1e-9
#: consecutive sub-tolerance steps before a run is declared converged
CONVERGED_RUN = 10
STOP_REASONS = ("converged", "horizon", "in_intersection")

POLICY_KINDS = ("remotest", "threshold_first", "scripted", "cyclic", "quasi_periodic", "random")
_POLICY_PARAMS = {
    "remotest": (),
    "threshold_first": (),
    "scripted": ("indices",),
    "cyclic": ("size",),
    "quasi_periodic": ("indices", "window", "size"),
    "random": ("seed",),
}


class InvalidPolicy(ValueError):
    pass


class NonFiniteIterate(FloatingPointError):
    pass


def first_incomplete_window(indices, window, size):
    """Start of the first length-``window`` stretch of ``indices`` missing some
    of ``0..size-1``, or ``None`` if every window is complete."""
    counts = np.zeros(size, dtype=np.int64)
    idx = list(indices)
    if len(idx) < window:
        return None if len(set(idx)) == size else 0
    for i in idx[:window]:
        counts[i] += 1
    missing = int(np.count_nonzero(counts == 0))
    if missing:
        return 0
    for start in range(1, len(idx) - window + 1):
        out, new = idx[start - 1], idx[start + window - 1]
        counts[out] -= 1
        if counts[out] == 0:
            missing += 1
        if counts[new] == 0:
            missing -= 1
        counts[new] += 1
        if missing:
            return start
    return None


@dataclass(frozen=True)
class SelectionPolicy:
    kind: str = "remotest"
    indices: tuple = None
    window: int = None
    size: int = None
    seed: int = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise InvalidPolicy(f"unknown policy kind {self.kind!r}")
        for name in _POLICY_PARAMS[self.kind]:
            if getattr(self, name) is None:
                raise InvalidPolicy(f"{self.kind} policy requires {name!r}")
        if self.indices is not None:
            idx = tuple(int(i) for i in self.indices)
            if any(i < 0 for i in idx):
                raise InvalidPolicy("policy indices must be nonnegative")
            object.__setattr__(self, "indices", idx)
        if self.kind == "cyclic" and self.size < 1:
            raise InvalidPolicy("cyclic size must be positive")
        if self.kind == "quasi_periodic":
            if self.window < 1 or self.size < 1:
                raise InvalidPolicy("quasi_periodic window and size must be positive")
            if any(i >= self.size for i in self.indices):
                raise InvalidPolicy("quasi_periodic index exceeds the declared family size")
            bad = first_incomplete_window(self.indices, self.window, self.size)
            if bad is not None:
                raise InvalidPolicy(f"window of length {self.window} at {bad} misses some index")

    @classmethod
    def remotest(cls):
        return cls("remotest")

    @classmethod
    def threshold_first(cls):
        return cls("threshold_first")

    @classmethod
    def scripted(cls, indices):
        return cls("scripted", indices=tuple(indices))

    @classmethod
    def cyclic(cls, size):
        return cls("cyclic", size=int(size))

    @classmethod
    def quasi_periodic(cls, indices, window, size):
        return cls("quasi_periodic", indices=tuple(indices), window=int(window), size=int(size))

    @classmethod
    def random(cls, seed):
        return cls("random", seed=int(seed))

    @property
    def dictated(self):
        return self.kind not in ("remotest", "threshold_first")

    @property
    def script_length(self):
        return len(self.indices) if self.indices is not None else None

    def to_dict(self):
        d = {"kind": self.kind}
        for name in _POLICY_PARAMS[self.kind]:
            v = getattr(self, name)
            d[name] = list(v) if name == "indices" else v
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind", None)
        if kind not in POLICY_KINDS:
            raise InvalidPolicy(f"unknown policy kind {kind!r}")
        if set(d) != set(_POLICY_PARAMS[kind]):
            raise InvalidPolicy(f"{kind} policy expects keys {list(_POLICY_PARAMS[kind])}, got {sorted(d)}")
        if "indices" in d:
            d["indices"] = tuple(d["indices"])
        return cls(kind, **d)


@dataclass(frozen=True, slots=True)
class StepRecord:
    n: int
    alpha: int
    dist_chosen: float
    dist_max: float
    t_required: float
    t_effective: float
    step_norm: float
    x_norm: float
    sin_eps: float
    flagged: bool = False


TRACE_COLUMNS = ("n", "alpha", "dist_chosen", "dist_max", "t_required",
                 "t_effective", "step_norm", "x_norm", "sin_eps")


@dataclass
class Trace:
    x0: np.ndarray
    a_ref: np.ndarray
    steps: list
    iterates: np.ndarray
    iterate_steps: np.ndarray
    x_final: np.ndarray
    stop_reason: str
    tol: float
    horizon: int
    final_dist_max: float = None

    @property
    def reference(self):
        return np.zeros_like(self.x0) if self.a_ref is None else self.a_ref

    @property
    def flag_count(self):
        return sum(1 for s in self.steps if s.flagged)

    @cached_property
    def columns(self):
        cols = {c: np.array([getattr(s, c) for s in self.steps]) for c in TRACE_COLUMNS}
        cols["flagged"] = np.array([s.flagged for s in self.steps], dtype=bool)
        return cols

    def norms(self):
        """``|x_n - a_ref|`` for ``n = 0..N``."""
        return np.concatenate(([norm(self.x0 - self.reference)], self.columns["x_norm"]))

    def __len__(self):
        return len(self.steps)


def _default_stride(dim):
    return 1 if dim < 64 else 10


class _DistanceTable:
    """Vectorized distances from a point to every set of a family."""

    _NORMAL_KINDS = ("hyperplane", "affine_hyperplane", "halfspace", "slab")

    def __init__(self, family):
        self.size = len(family)
        groups = {}
        for i, c in enumerate(family):
            groups.setdefault(c.kind, []).append(i)
        self.normal_groups = []
        for kind in self._NORMAL_KINDS:
            if kind in groups:
                ids = np.array(groups.pop(kind))
                G = np.array([family[i].normal for i in ids])
                lo = np.array([getattr(family[i], "lower", getattr(family[i], "offset", 0.0)) for i in ids])
                hi = np.array([getattr(family[i], "upper", getattr(family[i], "offset", 0.0)) for i in ids])
                self.normal_groups.append((kind, ids, G, lo, hi))
        self.lines = None
        if "line" in groups:
            ids = np.array(groups.pop("line"))
            self.lines = (ids, np.array([family[i].direction for i in ids]))
        self.balls = None
        if "ball" in groups:
            ids = np.array(groups.pop("ball"))
            self.balls = (ids, np.array([family[i].center for i in ids]),
                          np.array([family[i].radius for i in ids]))
        self.others = [(i, family[i]) for ids in groups.values() for i in ids]

    def __call__(self, x):
        d = np.empty(self.size)
        for kind, ids, G, lo, hi in self.normal_groups:
            s = G @ x
            if kind == "hyperplane":
                d[ids] = np.abs(s)
            elif kind == "affine_hyperplane":
                d[ids] = np.abs(s - lo)
            elif kind == "halfspace":
                d[ids] = np.maximum(s - hi, 0.0)
            else:
                d[ids] = np.maximum(np.maximum(s - hi, lo - s), 0.0)
        if self.lines is not None:
            ids, V = self.lines
            p = V @ x
            xx = float(x @ x)
            dl = np.sqrt(np.maximum(xx - p * p, 0.0))
            # |x|^2 - p^2 cancels for lines nearly through x; redo those exactly
            for j in np.flatnonzero(dl <= 1e-6 * np.sqrt(xx)):
                r = x - p[j] * V[j]
                dl[j] = np.sqrt(r @ r)
            d[ids] = dl
        if self.balls is not None:
            ids, A, r = self.balls
            D = x - A
            d[ids] = np.maximum(np.sqrt(np.einsum("ij,ij->i", D, D)) - r, 0.0)
        for i, c in self.others:
            d[i] = c.distance(x)
        return d


def _selector(policy, size):
    """Return ``choose(n, d, dmax, t) -> index`` for the policy."""
    kind = policy.kind
    if kind == "remotest":
        def choose(n, d, dmax, t):
            return int(np.flatnonzero(d >= dmax - TIE_TOL)[0])
    elif kind == "threshold_first":
        def choose(n, d, dmax, t):
            return int(np.flatnonzero(d >= t * dmax - TIE_TOL)[0])
    elif kind == "cyclic":
        if policy.size != size:
            raise InvalidPolicy(f"cyclic size {policy.size} does not match family size {size}")

        def choose(n, d, dmax, t):
            return n % size
    elif kind == "random":
        rng = np.random.default_rng(policy.seed)

        def choose(n, d, dmax, t):
            return int(rng.integers(size))
    else:
        if kind == "quasi_periodic" and policy.size != size:
            raise InvalidPolicy(f"quasi_periodic size {policy.size} does not match family size {size}")
        bad = [i for i in policy.indices if i >= size]
        if bad:
            raise IndexError(f"scripted index {bad[0]} out of range for a family of {size}")
        idx = policy.indices

        def choose(n, d, dmax, t):
            return idx[n]
    return choose


class _Recorder:
    def __init__(self, x0, a_ref, stride):
        self.ref = np.zeros_like(x0) if a_ref is None else a_ref
        self.stride = stride
        self.steps = []
        self.iterates = [x0.copy()]
        self.iterate_steps = [0]
        self.small_run = 0

    def record(self, n, alpha, x, x_next, dist_chosen, dist_max, t_req, tol):
        if not np.all(np.isfinite(x_next)):
            raise NonFiniteIterate(f"non-finite iterate at step {n}")
        y = x - x_next
        step = norm(y)
        xr = x_next - self.ref
        xnorm = norm(xr)
        sin_eps = 0.0
        if step > 0 and xnorm > 0:
            sin_eps = min(1.0, max(0.0, float(y @ xr) / (step * xnorm)))
        t_eff = dist_chosen / dist_max if dist_max > 0 else 1.0
        flagged = dist_chosen < t_req * dist_max - WEAKNESS_TOL
        self.steps.append(StepRecord(n, alpha, dist_chosen, dist_max, t_req, t_eff,
                                     step, xnorm, sin_eps, flagged))
        if (n + 1) % self.stride == 0:
            self.iterates.append(x_next.copy())
            self.iterate_steps.append(n + 1)
        self.small_run = self.small_run + 1 if step < tol else 0
        return self.small_run >= CONVERGED_RUN

    def finish(self, x0, a_ref, x_final, stop_reason, tol, horizon, final_dmax):
        if self.iterate_steps[-1] != len(self.steps):
            self.iterates.append(x_final.copy())
            self.iterate_steps.append(len(self.steps))
        return Trace(x0=x0, a_ref=a_ref, steps=self.steps, iterates=np.array(self.iterates),
                     iterate_steps=np.array(self.iterate_steps), x_final=x_final,
                     stop_reason=stop_reason, tol=tol, horizon=horizon,
                     final_dist_max=final_dmax)


def run_remote(family, schedule, x0, policy=None, horizon=1000, tol=1e-10,
               a_ref=None, stride=None):
    """Iterate ``x_{n+1} = P_{alpha(n)} x_n`` over a finite family of sets.

    Self-selecting policies (``remotest``, ``threshold_first``) always meet the
    weakness inequality for ``schedule``; dictated policies are followed as
    given and steps that miss it are flagged in the trace.
    """
    if not family:
        raise ValueError("family must be nonempty")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    policy = policy or SelectionPolicy.remotest()
    dim = family[0].dim
    if any(c.dim != dim for c in family):
        raise ValueError("family members have different ambient dimensions")
    x0 = as_vector(x0, dim)
    a_ref = None if a_ref is None else as_vector(a_ref, dim)
    if policy.script_length is not None:
        horizon = min(horizon, policy.script_length)
    choose = _selector(policy, len(family))
    table = _DistanceTable(family)
    rec = _Recorder(x0, a_ref, stride or _default_stride(dim))

    x = x0.copy()
    stop = "horizon"
    for n in range(horizon):
        d = table(x)
        dmax = float(d.max())
        if dmax <= tol:
            stop = "in_intersection"
            break
        t = t_at(schedule, n)
        alpha = choose(n, d, dmax, t)
        x_next = family[alpha].project(x)
        done = rec.record(n, alpha, x, x_next, float(d[alpha]), dmax, t, tol)
        x = x_next
        if done:
            stop = "converged"
            break
    final_dmax = float(table(x).max())
    if stop == "horizon" and final_dmax <= tol:
        stop = "in_intersection"
    return rec.finish(x0, a_ref, x, stop, tol, horizon, final_dmax)


def run_wga(dictionary, schedule, x0, horizon=1000, tol=1e-10, policy=None, stride=None):
    """Weak Greedy Algorithm ``x_{n+1} = x_n - <x_n, g_n> g_n``.

    The default selector is greedy (largest ``|<x_n, g>|``, lowest index on
    ties); other policies are resolved exactly as in :func:`run_remote`.
    """
    G = np.array([as_vector(g) for g in dictionary])
    if G.ndim != 2 or len(G) == 0:
        raise ValueError("dictionary must be a nonempty list of vectors")
    if np.max(np.abs(np.linalg.norm(G, axis=1) - 1.0)) > UNIT_TOL:
        raise ValueError("dictionary elements must have unit norm")
    dim = G.shape[1]
    x0 = as_vector(x0, dim)
    policy = policy or SelectionPolicy.remotest()
    if policy.script_length is not None:
        horizon = min(horizon, policy.script_length)
    choose = _selector(policy, len(G))
    rec = _Recorder(x0, None, stride or _default_stride(dim))

    x = x0.copy()
    stop = "horizon"
    for n in range(horizon):
        c = G @ x
        ac = np.abs(c)
        cmax = float(ac.max())
        if cmax <= tol or norm(x) <= tol:
            stop = "in_intersection"
            break
        t = t_at(schedule, n)
        alpha = choose(n, ac, cmax, t)
        x_next = x - c[alpha] * G[alpha]
        done = rec.record(n, alpha, x, x_next, float(ac[alpha]), cmax, t, tol)
        x = x_next
        if done:
            stop = "converged"
            break
    final = float(np.abs(G @ x).max())
    if stop == "horizon" and (final <= tol or norm(x) <= tol):
        stop = "in_intersection"
    return rec.finish(x0, np.zeros(dim), x, stop, tol, horizon, final)


def effective_weakness(trace):
    """A-posteriori weakness ``dist_chosen / dist_max`` of every non-terminal step."""
    cols = trace.columns
    if len(trace) == 0:
        return np.array([])
    live = cols["dist_max"] > trace.tol
    return cols["t_effective"][live]


def window_maxima(values, window):
    """Max of each length-``window`` stretch of ``values`` (empty if too short)."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) < window:
        return np.array([])
    return np.lib.stride_tricks.sliding_window_view(values, window).max(axis=1)
