import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_family_through_zero
from remoteproj.engine import (InvalidPolicy, SelectionPolicy, effective_weakness,
                               first_incomplete_window, run_remote, run_wga, window_maxima)
from remoteproj.hilbert import unit
from remoteproj.schedules import Schedule
from remoteproj.sets import Ball, HalfSpace, Hyperplane, Slab

SQ2 = math.sqrt(2.0)
STRIPE_FAMILY = [Hyperplane([1.0, 0.0]), Slab(np.array([1.0, -1.0]) / SQ2, -SQ2, SQ2)]
ONE = Schedule.constant(1.0)


def test_stripe_trace():
    tr = run_remote(STRIPE_FAMILY, ONE, [-4.0, 4.0], a_ref=[0.0, 2.0])
    assert [s.alpha for s in tr.steps] == [1, 0]
    np.testing.assert_allclose(tr.iterates[1], [-1.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(tr.x_final, [0.0, 1.0], atol=1e-12)
    assert tr.stop_reason == "in_intersection"
    assert tr.steps[0].dist_chosen == pytest.approx(3 * SQ2)
    assert tr.steps[0].dist_max == pytest.approx(3 * SQ2)
    np.testing.assert_array_equal(effective_weakness(tr), [1.0, 1.0])


def test_wga_examples():
    e1, e2 = np.eye(2)
    tr = run_wga([e1, e2], ONE, 2 * e1 + e2)
    assert [s.alpha for s in tr.steps] == [0, 1]
    np.testing.assert_array_equal(tr.x_final, [0.0, 0.0])
    tr = run_wga([e1], ONE, e2)
    assert len(tr) == 0 and tr.stop_reason == "in_intersection"
    np.testing.assert_array_equal(tr.x_final, e2)


def test_wga_rejects_nonunit():
    with pytest.raises(ValueError):
        run_wga([np.array([1.0, 1.0])], ONE, [1.0, 0.0])


def test_remotest_ties_pick_lowest_index():
    fam = [HalfSpace([1.0, 0.0], 0.0), HalfSpace([0.0, 1.0], 0.0)]
    tr = run_remote(fam, ONE, [1.0, 1.0], horizon=1)
    assert tr.steps[0].alpha == 0


def test_threshold_first_meets_inequality():
    fam = [HalfSpace([1.0, 0.0], 0.0), HalfSpace([0.0, 1.0], 0.0)]
    tr = run_remote(fam, Schedule.constant(0.5), [1.0, 3.0],
                    policy=SelectionPolicy.threshold_first(), horizon=1)
    # first index with dist >= 0.5 * 3 is index 1; index 0 has dist 1 < 1.5
    assert tr.steps[0].alpha == 1
    tr = run_remote(fam, Schedule.constant(0.3), [1.0, 3.0],
                    policy=SelectionPolicy.threshold_first(), horizon=1)
    assert tr.steps[0].alpha == 0 and not tr.steps[0].flagged


def test_scripted_flags_weak_steps():
    fam = [HalfSpace([1.0, 0.0], 0.0), HalfSpace([0.0, 1.0], 0.0)]
    tr = run_remote(fam, ONE, [1.0, 3.0], policy=SelectionPolicy.scripted([0, 1]))
    assert tr.steps[0].flagged and not tr.steps[1].flagged
    assert tr.flag_count == 1
    assert len(tr) == 2


def test_scripted_out_of_range():
    with pytest.raises(IndexError):
        run_remote(STRIPE_FAMILY, ONE, [-4.0, 4.0], policy=SelectionPolicy.scripted([5]))


def test_cyclic_order():
    fam = [HalfSpace(unit(v), -1.0) for v in ([1.0, 0.0], [0.0, 1.0], [-1.0, 0.0])]
    tr = run_remote(fam, Schedule.constant(0.0), [5.0, 5.0], policy=SelectionPolicy.cyclic(3), horizon=6)
    assert [s.alpha for s in tr.steps][:3] == [0, 1, 2]


def test_random_policy_seeded():
    rng = np.random.default_rng(4)
    fam = random_family_through_zero(rng, 5, 6)
    x0 = 5 * rng.standard_normal(5)
    a = run_remote(fam, Schedule.constant(0.0), x0, policy=SelectionPolicy.random(3), horizon=50)
    b = run_remote(fam, Schedule.constant(0.0), x0, policy=SelectionPolicy.random(3), horizon=50)
    assert [s.alpha for s in a.steps] == [s.alpha for s in b.steps]


def test_quasi_periodic_policy_validation():
    SelectionPolicy.quasi_periodic([0, 1, 2, 0, 1, 2], 3, 3)
    assert first_incomplete_window([0, 1, 2, 2, 2, 0, 1], 3, 3) == 1
    with pytest.raises(InvalidPolicy):
        SelectionPolicy.quasi_periodic([0, 1, 2, 2, 2, 0, 1], 3, 3)
    with pytest.raises(InvalidPolicy):
        SelectionPolicy.quasi_periodic([0, 1, 3], 3, 3)


def test_policy_round_trip():
    for p in (SelectionPolicy.remotest(), SelectionPolicy.scripted([1, 0]), SelectionPolicy.cyclic(4),
              SelectionPolicy.random(9), SelectionPolicy.quasi_periodic([0, 1, 0, 1], 2, 2)):
        assert SelectionPolicy.from_dict(p.to_dict()) == p
    with pytest.raises(InvalidPolicy):
        SelectionPolicy.from_dict({"kind": "cyclic", "size": 2, "seed": 1})


def test_zero_step_trace():
    tr = run_remote([Ball([0.0, 0.0], 1.0)], ONE, [0.1, 0.1], a_ref=[0.0, 0.0])
    assert len(tr) == 0 and tr.stop_reason == "in_intersection"
    np.testing.assert_array_equal(tr.x_final, [0.1, 0.1])


def test_converged_stop():
    # two disjoint-looking nearly parallel sets give tiny steps eventually; use a fixed point
    fam = [HalfSpace([1.0, 0.0], 0.0), HalfSpace([-1.0, 0.0], 0.0)]
    tr = run_remote(fam, ONE, [1.0, 0.0], tol=1e-10)
    assert tr.stop_reason == "in_intersection"


def test_mismatched_dimensions():
    with pytest.raises(ValueError):
        run_remote([Hyperplane([1.0, 0.0]), Hyperplane([1.0, 0.0, 0.0])], ONE, [1.0, 0.0])
    with pytest.raises(ValueError):
        run_remote(STRIPE_FAMILY, ONE, [1.0, 0.0, 0.0])


def test_stride_keeps_endpoints():
    rng = np.random.default_rng(0)
    fam = random_family_through_zero(rng, 3, 5)
    tr = run_remote(fam, Schedule.constant(0.5), 10 * rng.standard_normal(3), horizon=40, stride=7)
    assert tr.iterate_steps[0] == 0
    assert tr.iterate_steps[-1] == len(tr)
    np.testing.assert_array_equal(tr.iterates[-1], tr.x_final)


def test_window_maxima():
    np.testing.assert_array_equal(window_maxima([1, 3, 2, 0], 2), [3, 3, 2])
    assert window_maxima([1.0], 3).size == 0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 8), t=st.floats(0.0, 1.0))
def test_trace_invariants(seed, d, t):
    rng = np.random.default_rng(seed)
    fam = random_family_through_zero(rng, d)
    x0 = 10 * rng.standard_normal(d)
    tr = run_remote(fam, Schedule.constant(t), x0, horizon=60, a_ref=np.zeros(d))
    cols = tr.columns
    if len(tr):
        assert np.all(cols["t_effective"] <= 1 + 1e-9) and np.all(cols["t_effective"] >= 0)
        assert np.all((cols["sin_eps"] >= 0) & (cols["sin_eps"] <= 1))
        assert tr.flag_count == 0
        assert np.all(cols["dist_chosen"] >= t * cols["dist_max"] - 1e-9)
    norms = tr.norms()
    assert np.all(np.diff(norms) <= 1e-9)
    assert math.fsum(cols["step_norm"] ** 2) <= norms[0] ** 2 + 1e-6


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_wga_matches_hyperplanes(seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((7, 4))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    x0 = rng.standard_normal(4)
    s = Schedule.power(0.5)
    a = run_wga(G, s, x0, horizon=40)
    b = run_remote([Hyperplane(g) for g in G], s, x0, horizon=40)
    assert [r.alpha for r in a.steps] == [r.alpha for r in b.steps]
    np.testing.assert_allclose(a.iterates, b.iterates, atol=1e-10, rtol=0)
