"""Closed convex primitives with exact metric projections.

Every set exposes ``project`` (the nearest-point map) and ``distance``. Sets are
immutable; families of them are plain lists and their intersection is never
formed explicitly.
"""
from dataclasses import dataclass
import math

import numpy as np

from .hilbert import as_vector, norm

UNIT_TOL = 1e-12
ORTHO_TOL = 1e-10
MEMBER_RTOL = 1e-9

#: reflection factors probed by the quasi-symmetry estimator: 1, 1/2, ..., 2**-30
THETA_GRID = tuple(2.0 ** -k for k in range(31))


class InvalidSet(ValueError):
    pass


def _unit_vector(v, what):
    v = as_vector(v)
    if abs(norm(v) - 1.0) > UNIT_TOL:
        raise InvalidSet(f"{what} must have unit norm (got {norm(v)!r})")
    return v


def _finite(c, what):
    c = float(c)
    if not math.isfinite(c):
        raise InvalidSet(f"{what} must be finite")
    return c


class ConvexSet:
    """Base class; subclasses are frozen dataclasses with a ``kind`` tag."""

    kind = None

    @property
    def dim(self):
        raise NotImplementedError

    def project(self, x):
        raise NotImplementedError

    def distance(self, x):
        x = np.asarray(x, dtype=np.float64)
        return norm(x - self.project(x))

    def contains(self, x):
        return contains(self, x)

    def contains_ball(self, a, r):
        """Closed-form certificate that ``B(a, r)`` lies inside the set."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    def _check(self, x):
        return as_vector(x, self.dim)


@dataclass(frozen=True, eq=False)
class Hyperplane(ConvexSet):
    """``{y : <y, g> = 0}``"""

    normal: np.ndarray
    kind = "hyperplane"

    def __post_init__(self):
        object.__setattr__(self, "normal", _unit_vector(self.normal, "normal"))

    @property
    def dim(self):
        return self.normal.size

    def project(self, x):
        x = self._check(x)
        return x - (x @ self.normal) * self.normal

    def distance(self, x):
        return abs(float(self._check(x) @ self.normal))

    def contains_ball(self, a, r):
        return False

    def to_dict(self):
        return {"kind": self.kind, "normal": self.normal.tolist()}


@dataclass(frozen=True, eq=False)
class AffineHyperplane(ConvexSet):
    """``{y : <y, g> = c}``"""

    normal: np.ndarray
    offset: float
    kind = "affine_hyperplane"

    def __post_init__(self):
        object.__setattr__(self, "normal", _unit_vector(self.normal, "normal"))
        object.__setattr__(self, "offset", _finite(self.offset, "offset"))

    @property
    def dim(self):
        return self.normal.size

    def project(self, x):
        x = self._check(x)
        return x - (x @ self.normal - self.offset) * self.normal

    def distance(self, x):
        return abs(float(self._check(x) @ self.normal) - self.offset)

    def contains_ball(self, a, r):
        return False

    def to_dict(self):
        return {"kind": self.kind, "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True, eq=False)
class HalfSpace(ConvexSet):
    """``{y : <y, g> <= c}``"""

    normal: np.ndarray
    offset: float
    kind = "halfspace"

    def __post_init__(self):
        object.__setattr__(self, "normal", _unit_vector(self.normal, "normal"))
        object.__setattr__(self, "offset", _finite(self.offset, "offset"))

    @property
    def dim(self):
        return self.normal.size

    def project(self, x):
        x = self._check(x)
        excess = x @ self.normal - self.offset
        if excess <= 0:
            return x.copy()
        return x - excess * self.normal

    def distance(self, x):
        return max(float(self._check(x) @ self.normal) - self.offset, 0.0)

    def contains_ball(self, a, r):
        return float(as_vector(a) @ self.normal) + r <= self.offset + UNIT_TOL

    def to_dict(self):
        return {"kind": self.kind, "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True, eq=False)
class Slab(ConvexSet):
    """``{y : lower <= <y, g> <= upper}``"""

    normal: np.ndarray
    lower: float
    upper: float
    kind = "slab"

    def __post_init__(self):
        object.__setattr__(self, "normal", _unit_vector(self.normal, "normal"))
        object.__setattr__(self, "lower", _finite(self.lower, "lower"))
        object.__setattr__(self, "upper", _finite(self.upper, "upper"))
        if self.lower > self.upper:
            raise InvalidSet("slab requires lower <= upper")

    @property
    def dim(self):
        return self.normal.size

    def project(self, x):
        x = self._check(x)
        s = x @ self.normal
        if s > self.upper:
            return x - (s - self.upper) * self.normal
        if s < self.lower:
            return x - (s - self.lower) * self.normal
        return x.copy()

    def distance(self, x):
        s = float(self._check(x) @ self.normal)
        return max(s - self.upper, self.lower - s, 0.0)

    def contains_ball(self, a, r):
        s = float(as_vector(a) @ self.normal)
        return self.lower + r <= s + UNIT_TOL and s + r <= self.upper + UNIT_TOL

    def to_dict(self):
        return {"kind": self.kind, "normal": self.normal.tolist(),
                "lower": self.lower, "upper": self.upper}


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float
    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        r = _finite(self.radius, "radius")
        if r <= 0:
            raise InvalidSet("ball radius must be positive")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self):
        return self.center.size

    def project(self, x):
        x = self._check(x)
        v = x - self.center
        d = norm(v)
        if d <= self.radius:
            return x.copy()
        return self.center + (self.radius / d) * v

    def distance(self, x):
        return max(norm(self._check(x) - self.center) - self.radius, 0.0)

    def contains_ball(self, a, r):
        return norm(as_vector(a, self.dim) - self.center) + r <= self.radius + UNIT_TOL

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Line(ConvexSet):
    """``span{v}`` for a unit vector ``v``."""

    direction: np.ndarray
    kind = "line"

    def __post_init__(self):
        object.__setattr__(self, "direction", _unit_vector(self.direction, "direction"))

    @property
    def dim(self):
        return self.direction.size

    def project(self, x):
        x = self._check(x)
        return (x @ self.direction) * self.direction

    def contains_ball(self, a, r):
        return self.dim == 1

    def to_dict(self):
        return {"kind": self.kind, "direction": self.direction.tolist()}


@dataclass(frozen=True, eq=False)
class Subspace(ConvexSet):
    """Linear span of the orthonormal rows of ``basis``."""

    basis: np.ndarray
    kind = "subspace"

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.basis, dtype=np.float64))
        if B.ndim != 2 or B.size == 0 or not np.all(np.isfinite(B)):
            raise InvalidSet("subspace basis must be a finite non-empty matrix")
        if B.shape[0] > B.shape[1]:
            raise InvalidSet("subspace basis has more rows than the ambient dimension")
        if np.max(np.abs(B @ B.T - np.eye(B.shape[0]))) > ORTHO_TOL:
            raise InvalidSet("subspace basis rows must be orthonormal")
        object.__setattr__(self, "basis", B)

    @property
    def dim(self):
        return self.basis.shape[1]

    def project(self, x):
        x = self._check(x)
        return self.basis.T @ (self.basis @ x)

    def contains_ball(self, a, r):
        return self.basis.shape[0] == self.dim

    def to_dict(self):
        return {"kind": self.kind, "basis": self.basis.tolist()}


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    """Coordinatewise bounds; ``None`` in JSON stands for an infinite bound."""

    lower: np.ndarray
    upper: np.ndarray
    kind = "box"

    def __post_init__(self):
        lo = np.array([-np.inf if v is None else v for v in np.ravel(self.lower)], dtype=np.float64)
        hi = np.array([np.inf if v is None else v for v in np.ravel(self.upper)], dtype=np.float64)
        if lo.shape != hi.shape or lo.size == 0:
            raise InvalidSet("box bounds must be non-empty and of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise InvalidSet("box requires lower <= upper coordinatewise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.size

    def project(self, x):
        return np.clip(self._check(x), self.lower, self.upper)

    def contains_ball(self, a, r):
        a = as_vector(a, self.dim)
        return bool(np.all(self.lower + r <= a + UNIT_TOL) and np.all(a + r <= self.upper + UNIT_TOL))

    def to_dict(self):
        def enc(arr):
            return [None if not math.isfinite(v) else float(v) for v in arr]
        return {"kind": self.kind, "lower": enc(self.lower), "upper": enc(self.upper)}


KINDS = {cls.kind: cls for cls in
         (Hyperplane, AffineHyperplane, HalfSpace, Slab, Ball, Line, Subspace, Box)}


def set_from_dict(d):
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in KINDS:
        raise InvalidSet(f"unknown set kind {kind!r}")
    cls = KINDS[kind]
    expected = set(cls.__dataclass_fields__)
    if set(d) != expected:
        raise InvalidSet(f"{kind} expects keys {sorted(expected)}, got {sorted(d)}")
    return cls(**d)


def project(cset, x):
    return cset.project(x)


def distance(cset, x):
    return cset.distance(x)


def contains(cset, x):
    x = np.asarray(x, dtype=np.float64)
    return cset.distance(x) <= MEMBER_RTOL * (1.0 + norm(x))


@dataclass
class QuasiSymmetryReport:
    center: np.ndarray
    radius: float
    theta_hat: float = None
    witness: np.ndarray = None
    samples: int = 0

    @property
    def fails(self):
        return self.theta_hat is None


def _reflection_ok(cset, a, v, theta):
    # violation measured per unit of theta, so the probe floor is scale free
    p = a - theta * v
    return cset.distance(p) <= MEMBER_RTOL * theta * (1.0 + norm(v))


def sample_ball_section(cset, a, r, sample_count, rng):
    """Points of ``cset ∩ B(a, r)``: members of a uniform ball sample plus the
    projections of the non-members (which stay in the ball since ``a`` is in
    the set and projection is 1-Lipschitz)."""
    d = cset.dim
    g = rng.standard_normal((sample_count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = r * rng.random(sample_count) ** (1.0 / d)
    pts = a + radii[:, None] * g
    out = []
    for p in pts:
        out.append(p if contains(cset, p) else cset.project(p))
    return np.array(out)


def estimate_quasi_symmetry(cset, a, r, sample_count=1000, seed=0):
    """Largest grid factor ``theta`` with ``a - theta (x - a)`` in the set for
    every sampled ``x`` in ``cset ∩ B(a, r)``.

    Returns a report whose ``theta_hat`` is ``None`` (and ``witness`` is set)
    when even ``2**-30`` fails.
    """
    a = as_vector(a, cset.dim)
    if r <= 0:
        raise ValueError("radius must be positive")
    if not contains(cset, a):
        raise ValueError("center is not a point of the set")
    rng = np.random.default_rng(seed)
    xs = sample_ball_section(cset, a, r, sample_count, rng)
    if len(xs) == 0:
        raise ValueError("no samples found in the ball section")
    vs = xs - a
    report = QuasiSymmetryReport(center=a, radius=float(r), samples=len(xs))
    # feasibility is monotone in theta by convexity, so scan from the top
    for theta in THETA_GRID:
        if all(_reflection_ok(cset, a, v, theta) for v in vs):
            report.theta_hat = theta
            return report
    floor = THETA_GRID[-1]
    worst = max(range(len(vs)), key=lambda i: cset.distance(a - floor * vs[i]) / (1.0 + norm(vs[i])))
    report.witness = xs[worst]
    return report
