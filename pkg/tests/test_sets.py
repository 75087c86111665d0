import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ALL_KINDS, random_set
from remoteproj.hilbert import norm
from remoteproj.sets import (Ball, Box, HalfSpace, Hyperplane, InvalidSet, Line, Slab, Subspace,
                             contains, distance, estimate_quasi_symmetry, project, set_from_dict)

SQ2 = math.sqrt(2.0)
STRIPE = Slab(np.array([1.0, -1.0]) / SQ2, -SQ2, SQ2)
LINE_S0 = Hyperplane(np.array([1.0, 0.0]))


def test_stripe_projection_value():
    np.testing.assert_allclose(project(STRIPE, [-4.0, 4.0]), [-1.0, 1.0], atol=1e-12)


def test_stripe_distance_values():
    assert distance(STRIPE, [-4.0, 4.0]) == pytest.approx(3 * SQ2, abs=1e-12)
    assert distance(LINE_S0, [-4.0, 4.0]) == pytest.approx(4.0, abs=1e-12)
    assert 3 * SQ2 > 4


def test_trivial_projections():
    np.testing.assert_array_equal(project(Hyperplane([1.0, 0.0]), [1.0, 1.0]), [0.0, 1.0])
    np.testing.assert_array_equal(project(Line([1.0, 0.0]), [3.0, 4.0]), [3.0, 0.0])
    assert distance(Ball(np.zeros(2), 1.0), [2.0, 0.0]) == 1.0


def test_box_projection_clips():
    b = Box([0.0, None], [1.0, 2.0])
    np.testing.assert_array_equal(project(b, [-1.0, -50.0]), [0.0, -50.0])
    np.testing.assert_array_equal(project(b, [3.0, 3.0]), [1.0, 2.0])


@pytest.mark.parametrize("bad", [
    lambda: Hyperplane([1.0, 1.0]),
    lambda: Slab([1.0, 0.0], 1.0, 0.0),
    lambda: Ball([0.0, 0.0], 0.0),
    lambda: Subspace([[1.0, 0.0], [1.0, 0.0]]),
    lambda: Box([1.0], [0.0]),
    lambda: HalfSpace([1.0, 0.0], float("inf")),
])
def test_malformed_sets_raise(bad):
    with pytest.raises(InvalidSet):
        bad()


def test_dimension_mismatch_raises():
    with pytest.raises(ValueError):
        project(LINE_S0, [1.0, 2.0, 3.0])


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_json_round_trip(kind, rng):
    c = random_set(rng, 4, kind)
    c2 = set_from_dict(json.loads(json.dumps(c.to_dict())))
    x = rng.standard_normal(4)
    assert type(c2) is type(c)
    # subspace bases are re-orthonormalized on load, so allow an ulp
    np.testing.assert_allclose(c.project(x), c2.project(x), rtol=0, atol=1e-14)


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(InvalidSet):
        set_from_dict({"kind": "line", "direction": [1.0, 0.0], "extra": 1})
    with pytest.raises(InvalidSet):
        set_from_dict({"kind": "cone"})


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(ALL_KINDS), seed=st.integers(0, 2**32 - 1), d=st.integers(1, 7))
def test_projection_properties(kind, seed, d):
    rng = np.random.default_rng(seed)
    c = random_set(rng, d, kind)
    x, z = 3 * rng.standard_normal((2, d))
    p = c.project(x)
    assert contains(c, p)
    # idempotence
    np.testing.assert_allclose(c.project(p), p, atol=1e-10)
    # nonexpansive
    assert norm(c.project(x) - c.project(z)) <= norm(x - z) + 1e-9
    assert distance(c, x) == pytest.approx(norm(x - p), abs=1e-10)
    # variational inequality against other points of the set
    for y in (c.project(w) for w in 3 * rng.standard_normal((5, d))):
        lhs = (x - p) @ (y - p)
        assert lhs <= 1e-9 * (1 + norm(x - p) * norm(y - p))
        # |x - a|^2 >= |Px - a|^2 + dist^2 for a in the set
        assert norm(x - y) ** 2 >= norm(p - y) ** 2 + distance(c, x) ** 2 - 1e-9


def test_quasi_symmetry_subspace():
    rep = estimate_quasi_symmetry(Subspace(np.eye(3)[:2]), np.zeros(3), 2.0, 300, seed=1)
    assert rep.theta_hat == 1.0


@pytest.mark.parametrize("cset", [STRIPE, LINE_S0], ids=["stripe", "line"])
def test_quasi_symmetry_stripe_example_sets(cset):
    rep = estimate_quasi_symmetry(cset, np.zeros(2), 5.0, 500, seed=3)
    assert rep.theta_hat == 1.0 and not rep.fails


def test_quasi_symmetry_halfspace_fails():
    g = np.array([0.6, 0.8])
    rep = estimate_quasi_symmetry(HalfSpace(g, 0.0), np.zeros(2), 1.0, 500, seed=0)
    assert rep.fails
    assert rep.witness @ g < 0


def test_quasi_symmetry_offcenter_ball():
    # B((1/2, 0), 1) about a = 0: x = (1, 0) reflects to (-theta, 0), inside iff theta <= 1/2
    ball = Ball([0.5, 0.0], 1.0)
    rep = estimate_quasi_symmetry(ball, np.zeros(2), 1.0, 800, seed=2)
    assert rep.theta_hat == 0.5
    assert contains(ball, [-0.5, 0.0]) and not contains(ball, [-0.51, 0.0])


def test_quasi_symmetry_errors():
    with pytest.raises(ValueError):
        estimate_quasi_symmetry(HalfSpace([1.0, 0.0], -1.0), np.zeros(2), 1.0, 10)
    with pytest.raises(ValueError):
        estimate_quasi_symmetry(STRIPE, np.zeros(2), 0.0, 10)


@pytest.mark.parametrize("cset,a,r,expected", [
    (HalfSpace([1.0, 0.0], 1.0), [0.0, 0.0], 1.0, True),
    (HalfSpace([1.0, 0.0], 1.0), [0.0, 0.0], 1.01, False),
    (Slab([0.0, 1.0], -1.0, 1.0), [5.0, 0.0], 1.0, True),
    (Ball([1.0, 0.0], 2.0), [0.0, 0.0], 1.0, True),
    (Ball([1.0, 0.0], 2.0), [0.0, 0.0], 1.5, False),
    (Hyperplane([1.0, 0.0]), [0.0, 0.0], 0.1, False),
    (Box([-1.0, -1.0], [1.0, None]), [0.0, 0.0], 1.0, True),
])
def test_ball_containment_certificates(cset, a, r, expected):
    assert cset.contains_ball(np.array(a), r) is expected
