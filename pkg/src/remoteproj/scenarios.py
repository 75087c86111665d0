"""Deterministic experiment constructors.

Each constructor returns a :class:`ScenarioConfig`: the family, schedule,
selection policy, start point and horizon of one run, plus an ``extras``
record carrying whatever the scenario's own checks need. Configs round-trip
through JSON exactly (floats are written with ``repr``).
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .engine import SelectionPolicy, first_incomplete_window, run_remote
from .hilbert import as_vector, norm, unit
from .schedules import Schedule
from .sets import Ball, HalfSpace, Hyperplane, Line, Slab, set_from_dict

COS_CAP = math.sqrt(3.0) / 2.0


class InvalidConfig(ValueError):
    pass


@dataclass
class ScenarioConfig:
    name: str
    family: list
    schedule: Schedule
    policy: SelectionPolicy
    x0: np.ndarray
    horizon: int
    a_ref: np.ndarray = None
    extras: dict = field(default_factory=dict)

    KEYS = ("name", "family", "schedule", "policy", "x0", "horizon", "a_ref", "extras")

    def __post_init__(self):
        if not self.family:
            raise InvalidConfig("family must be nonempty")
        dim = self.family[0].dim
        self.x0 = as_vector(self.x0, dim)
        if self.a_ref is not None:
            self.a_ref = as_vector(self.a_ref, dim)
        if any(c.dim != dim for c in self.family):
            raise InvalidConfig("family members have different dimensions")
        if int(self.horizon) < 1:
            raise InvalidConfig("horizon must be >= 1")
        self.horizon = int(self.horizon)

    @property
    def dim(self):
        return self.x0.size

    def run(self, tol=1e-10, stride=None):
        return run_remote(self.family, self.schedule, self.x0, self.policy,
                          horizon=self.horizon, tol=tol, a_ref=self.a_ref, stride=stride)

    def to_dict(self):
        return {
            "name": self.name,
            "family": [c.to_dict() for c in self.family],
            "schedule": self.schedule.to_dict(),
            "policy": self.policy.to_dict(),
            "x0": self.x0.tolist(),
            "horizon": self.horizon,
            "a_ref": None if self.a_ref is None else self.a_ref.tolist(),
            "extras": self.extras,
        }

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.KEYS)
        missing = {"name", "family", "schedule", "policy", "x0", "horizon"} - set(d)
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        if missing:
            raise InvalidConfig(f"missing config keys: {sorted(missing)}")
        return cls(
            name=str(d["name"]),
            family=[set_from_dict(c) for c in d["family"]],
            schedule=Schedule.from_dict(d["schedule"]),
            policy=SelectionPolicy.from_dict(d["policy"]),
            x0=d["x0"],
            horizon=d["horizon"],
            a_ref=d.get("a_ref"),
            extras=dict(d.get("extras") or {}),
        )


# -- the two symmetric sets in the plane ------------------------------------

def stripe_example(horizon=100):
    """Line ``{s = 0}`` and stripe ``{s - 2 <= t <= s + 2}`` from ``(-4, 4)``.

    Remotest projections stop at ``(0, 1)`` although the nearest common point
    is ``(0, 2)``.
    """
    g = np.array([1.0, -1.0]) / math.sqrt(2.0)
    # <y, g> = (s - t)/sqrt(2), so |t - s| <= 2 reads -sqrt(2) <= <y, g> <= sqrt(2)
    family = [Hyperplane(np.array([1.0, 0.0])),
              Slab(g, -math.sqrt(2.0), math.sqrt(2.0))]
    return ScenarioConfig(
        name="stripe_example", family=family, schedule=Schedule.constant(1.0),
        policy=SelectionPolicy.remotest(), x0=np.array([-4.0, 4.0]), horizon=horizon,
        a_ref=np.zeros(2), extras={"reference_point": [0.0, 2.0]})


# -- lines through a spherical cap -------------------------------------------

def _tail_sq_bound(schedule, m):
    """Certified upper bound on ``sum_{n>=m} tau_n^2`` with
    ``tau_n = max(t_n, h_n)``, ``h_n = 1/((n+2) ln(n+2))``, via the integral
    test for decreasing terms and ``max(p, q)^2 <= p^2 + q^2``."""
    h2 = 1.0 / ((m + 2) * math.log(m + 2)) ** 2
    h_int = 1.0 / ((m + 2) * math.log(m + 2) ** 2)
    k = schedule.kind
    if k == "constant":
        t_part = 0.0
    elif k == "power":
        th = schedule.exponent
        t_part = (m + 1.0) ** (-2 * th) + (m + 1.0) ** (1 - 2 * th) / (2 * th - 1)
    elif k == "harmonic_log":
        t_part = h2 + h_int
    else:  # explicit ending in 0: finitely many nonzero terms
        t_part = math.fsum(v * v for v in schedule.values[m:])
    return t_part + h2 + h_int


def cap_lines_admissible(schedule):
    k = schedule.kind
    return ((k == "power" and schedule.exponent > 0.5)
            or (k == "constant" and schedule.value == 0.0)
            or k == "harmonic_log"
            or (k == "explicit" and schedule.values[-1] == 0.0))


def cap_tau(schedule, count):
    n = np.arange(count, dtype=np.float64)
    return np.maximum(schedule.values_upto(count), 1.0 / ((n + 2.0) * np.log(n + 2.0)))


def cap_start_index(schedule):
    """Smallest ``m`` whose certified tail bound is below 1/4."""
    m = 0
    while _tail_sq_bound(schedule, m) >= 0.25:
        m += 1
    return m


def _cap_frame(d, seed):
    """Seeded orthonormal frame; column 0 is the pole, column 1 the oscillation axis."""
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def cap_walk(pole, a, b, tau, m, count):
    """Points ``s_m, ..., s_{m+count-1}`` in the cap with ``s_m = a`` and
    ``<s_n, s_{n+1}> = sqrt(1 - tau_n^2)``.

    Each step rotates ``s_n`` by ``arcsin(tau_n)`` in the plane of ``s_n`` and
    the geodesic toward the current target; the target switches between ``b``
    and ``a`` whenever the next point would leave the cap.
    """
    walk = [a.copy()]
    targets = (b, a)
    which = 0
    s = a.copy()
    for n in range(m, m + count - 1):
        tn = float(tau[n])
        c = math.sqrt(1.0 - tn * tn)
        for _ in range(2):
            tgt = targets[which]
            u = tgt - (tgt @ s) * s
            nu = norm(u)
            if nu > 1e-12:
                u /= nu
                nxt = c * s + tn * u
                if nxt @ pole >= COS_CAP - 1e-12:
                    break
            which = 1 - which
        else:
            raise RuntimeError("cap walk could not stay inside the cap")
        s = nxt / norm(nxt)
        walk.append(s)
    return np.array(walk)


def cap_lines(t=None, horizon=10_000, d=8, walk_seed=7):
    """Lines through a spherical cap on which remote projections keep a norm
    floor and oscillate, for a schedule with square-summable weakness.

    The family is ``L(a), L(b), L(s_m), ..., L(s_{horizon+1})``; the first
    ``m`` steps alternate between ``L(a)`` and ``L(b)`` ending on ``L(a)``,
    then step ``n`` projects onto ``L(s_{n+1})``.
    """
    t = Schedule.power(1.0) if t is None else t
    if not cap_lines_admissible(t):
        raise ValueError(f"schedule {t} is not square summable in closed form")
    if d < 3:
        raise ValueError("cap_lines needs dimension d >= 3")
    m = cap_start_index(t)
    if horizon < m:
        raise ValueError(f"horizon {horizon} is shorter than the start index m={m}")
    Q = _cap_frame(d, walk_seed)
    pole, w1 = Q[:, 0], Q[:, 1]
    a = COS_CAP * pole + 0.5 * w1
    b = COS_CAP * pole - 0.5 * w1
    tau = cap_tau(t, horizon + 2)
    walk = cap_walk(pole, a, b, tau, m, horizon + 2 - m)
    family = [Line(unit(a)), Line(unit(b))] + [Line(s) for s in walk]
    # index 0 is L(a), 1 is L(b), 2 + (k - m) is L(s_k)
    script = [0 if (m - 1 - j) % 2 == 0 else 1 for j in range(m)]
    script += [2 + (n + 1 - m) for n in range(m, horizon)]
    return ScenarioConfig(
        name="cap_lines", family=family, schedule=t, policy=SelectionPolicy.scripted(script),
        x0=pole.copy(), horizon=horizon, a_ref=np.zeros(d),
        extras={
            "m": m,
            "tau": tau.tolist(),
            "pole": pole.tolist(),
            "tangent": w1.tolist(),
            "tail_tau_sq_bound": _tail_sq_bound(t, m),
            "walk_seed": walk_seed,
        })


# -- sets containing a common ball -------------------------------------------

def ball_interior(n_sets=6, d=3, r=0.5, seed=0, schedule=None, horizon=500, policy=None):
    """Random half-spaces ``<y, g_i> <= c_i`` with ``r <= c_i <= 1.5 r``, so each
    contains ``B(0, r)``; start at norm ``8 r`` outside at least one of them."""
    if n_sets < 2 or r <= 0:
        raise ValueError("need n_sets >= 2 and r > 0")
    schedule = Schedule.constant(1.0) if schedule is None else schedule
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n_sets, d))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    c = r * (1.0 + 0.5 * rng.random(n_sets))
    family = [HalfSpace(g, ci) for g, ci in zip(G, c)]
    while True:
        x0 = rng.standard_normal(d)
        x0 *= 8 * r / norm(x0)
        if np.any(G @ x0 > c):
            break
    return ScenarioConfig(
        name="ball_interior", family=family, schedule=schedule,
        policy=policy or SelectionPolicy.threshold_first(), x0=x0, horizon=horizon,
        a_ref=np.zeros(d), extras={"ball_center": [0.0] * d, "ball_radius": float(r), "seed": seed})


# -- quasi-periodic index sequences ------------------------------------------

def quasi_periodic_indices(K, M, length, rng):
    """Random index list over ``0..K-1`` in which every window of ``M``
    consecutive entries contains every index.

    Earliest-deadline scheduling: index ``i`` must reappear within ``M`` of its
    last occurrence; a random candidate is accepted only if all deadlines stay
    meetable afterwards.
    """
    if M < K:
        raise ValueError("window M must be at least K")
    deadline = np.full(K, M - 1)
    slots = np.arange(K)
    out = []
    for p in range(length):
        for i in rng.permutation(K):
            trial = deadline.copy()
            trial[i] = p + M
            # the j-th earliest deadline must leave room for j placements after p
            if np.all(np.sort(trial) >= p + 1 + slots):
                deadline = trial
                out.append(int(i))
                break
        else:
            raise RuntimeError("quasi-periodic scheduler got stuck")
    return out


def _random_member(kind, d, rng, symmetric):
    g = unit(rng.standard_normal(d))
    if kind == "halfspace":
        c = 0.0 if rng.random() < 0.5 else 0.1 * float(rng.random())
        return HalfSpace(g, c)
    if kind == "slab":
        if symmetric:
            # half of them degenerate to hyperplanes, so runs do not stop after finitely many steps
            w = 0.0 if rng.random() < 0.5 else 0.2 + rng.random()
            return Slab(g, -w, w)
        return Slab(g, -0.1 * float(rng.random()), 0.1 * float(rng.random()))
    if symmetric:
        return Ball(np.zeros(d), 0.5 + rng.random())
    # nearly tangent at 0
    center = 2.0 * rng.standard_normal(d)
    return Ball(center, norm(center) * (1.0 + 0.01 * rng.random()))


def quasi_periodic(K=3, M=None, d=4, seed=0, horizon=500, symmetric=False):
    """``K`` random primitives sharing the point 0, visited along a quasi-periodic
    index list with window ``M``.

    The symmetric variant uses only balls and slabs centered at 0.
    """
    M = K if M is None else M
    if K < 2 or M < K:
        raise ValueError("need K >= 2 and M >= K")
    rng = np.random.default_rng(seed)
    kinds = ("ball", "slab") if symmetric else ("halfspace", "slab", "ball")
    family = [_random_member(kinds[rng.integers(len(kinds))], d, rng, symmetric) for _ in range(K)]
    x0 = rng.standard_normal(d)
    x0 *= 10.0 / norm(x0)
    indices = quasi_periodic_indices(K, M, horizon, rng)
    if first_incomplete_window(indices, M, K) is not None:
        raise RuntimeError("quasi-periodic construction produced an incomplete window")
    return ScenarioConfig(
        name="quasi_periodic", family=family, schedule=Schedule.constant(0.0),
        policy=SelectionPolicy.quasi_periodic(indices, M, K), x0=x0, horizon=horizon,
        a_ref=np.zeros(d), extras={"K": K, "M": M, "symmetric": symmetric, "seed": seed})


# -- documented only ----------------------------------------------------------

def nonuniform_quasi_symmetry():
    """Countably many quasi-symmetric half-spaces plus a hyperplane on which
    remotest projections fail to converge in norm.

    Needs the explicit greedy-divergence dictionary of an external
    construction whose vector counts and norms are not restated here, so no
    finite realization is provided.
    """
    raise NotImplementedError("documented only: depends on an external dictionary construction")


def weak_divergence():
    """Closed convex cones on which remote projections with weakness bounded
    below fail to converge weakly.

    Built from a local cone construction whose quantitative parameters are external,
    so no finite realization is provided.
    """
    raise NotImplementedError("documented only: depends on an external cone construction")


SCENARIOS = {
    "stripe_example": "two symmetric plane sets; remotest projections stop at (0,1), not at P_C x0 = (0,2)",
    "cap_lines": "lines through a spherical cap; square-summable weakness keeps a norm floor and oscillates",
    "ball_interior": "half-spaces around a common ball; the product rate bound dominates the error",
    "quasi_periodic": "quasi-periodic projections onto sets sharing 0; effective weakness >= 1/(6M) per window",
    "quasi_periodic_symmetric": "quasi-periodic projections onto balls and slabs centered at 0; norm convergence",
    "nonuniform_quasi_symmetry": "(documented only) quasi-symmetric sets without uniformity; norm divergence",
    "weak_divergence": "(documented only) weakness bounded below without weak convergence",
}


def build(name, horizon=None, dim=None, seed=None, t=None):
    """Construct a built-in scenario by name, applying whichever overrides it takes."""
    kw = {}
    if name == "stripe_example":
        if horizon is not None:
            kw["horizon"] = horizon
        cfg = stripe_example(**kw)
        if t is not None:
            cfg.schedule = t
        return cfg
    if name == "cap_lines":
        return cap_lines(t=t, horizon=10_000 if horizon is None else horizon,
                         d=8 if dim is None else dim, walk_seed=7 if seed is None else seed)
    if name == "ball_interior":
        return ball_interior(d=2 if dim is None else dim, seed=0 if seed is None else seed,
                             schedule=t, horizon=500 if horizon is None else horizon)
    if name in ("quasi_periodic", "quasi_periodic_symmetric"):
        sym = name.endswith("symmetric")
        cfg = quasi_periodic(K=3, M=3, d=4 if dim is None else dim, seed=0 if seed is None else seed,
                             horizon=(2000 if sym else 500) if horizon is None else horizon,
                             symmetric=sym)
        cfg.name = name
        if t is not None:
            cfg.schedule = t
        return cfg
    if name == "nonuniform_quasi_symmetry":
        return nonuniform_quasi_symmetry()
    if name == "weak_divergence":
        return weak_divergence()
    raise KeyError(f"unknown scenario {name!r}")
