import numpy as np
import pytest

from remoteproj.hilbert import norm, unit
from remoteproj.sets import Ball, Box, HalfSpace, Hyperplane, Line, Slab, Subspace, AffineHyperplane


def random_family_through_zero(rng, d, size=None, tight=False):
    """Half-spaces, slabs and balls that all contain the origin.

    With ``tight`` the origin sits on (or very near) every boundary, so the
    intersection is thin and runs rarely terminate early.
    """
    size = size or int(rng.integers(2, 8))
    slack = 1e-3 if tight else 1.0
    fam = []
    for _ in range(size):
        kind = rng.integers(3)
        g = unit(rng.standard_normal(d))
        if kind == 0:
            fam.append(HalfSpace(g, 0.0 if tight else float(rng.random()) * (rng.random() < 0.7)))
        elif kind == 1:
            fam.append(Slab(g, -slack * float(rng.random()), slack * float(rng.random())))
        else:
            c = rng.standard_normal(d)
            fam.append(Ball(c, norm(c) * (1.0 + (0.0 if tight else 0.5 * rng.random()))))
    return fam


def random_set(rng, d, kind):
    g = unit(rng.standard_normal(d))
    if kind == "hyperplane":
        return Hyperplane(g)
    if kind == "affine_hyperplane":
        return AffineHyperplane(g, float(rng.standard_normal()))
    if kind == "halfspace":
        return HalfSpace(g, float(rng.standard_normal()))
    if kind == "slab":
        lo = float(rng.standard_normal())
        return Slab(g, lo, lo + float(rng.random()))
    if kind == "ball":
        return Ball(rng.standard_normal(d), 0.1 + float(rng.random()))
    if kind == "line":
        return Line(g)
    if kind == "subspace":
        k = int(rng.integers(1, d + 1))
        Q, _ = np.linalg.qr(rng.standard_normal((d, k)))
        return Subspace(Q.T)
    lo = rng.standard_normal(d)
    return Box(lo, lo + rng.random(d))


ALL_KINDS = ("hyperplane", "affine_hyperplane", "halfspace", "slab", "ball", "line", "subspace", "box")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
