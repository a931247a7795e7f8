import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enrichfix.errors import DomainError, InputError
from enrichfix.regions import Ball, Box, FiniteSet, LabeledUnion, WholeSpace, region_from_dict
from enrichfix.sampling import (SamplingPlan, sample_chains, sample_cyclic_pairs, sample_fix_pairs, sample_pairs,
                                sample_points)
from enrichfix.validation import as_point, as_points, check_scalar_in

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_box_contains_and_boundary_samples():
    box = Box([0.0, -1.0], [1.0, 1.0])
    rng = np.random.default_rng(0)
    X = box.sample_boundary(rng, 500)
    assert box.contains(X).all()
    on_face = np.isclose(X, box.lo).any(axis=1) | np.isclose(X, box.hi).any(axis=1)
    assert on_face.all()
    assert not box.contains([[1.5, 0.0]])[0]


@settings(max_examples=50)
@given(st.lists(finite, min_size=2, max_size=2))
def test_box_projection_lands_inside_and_is_idempotent(x):
    box = Box([-1.0, 0.0], [1.0, 2.0])
    p = box.project(np.array([x]))
    assert box.contains(p).all()
    np.testing.assert_array_equal(box.project(p), p)


@settings(max_examples=50)
@given(st.lists(finite, min_size=3, max_size=3))
def test_ball_projection(x):
    ball = Ball([0.0, 0.0, 0.0], 2.0)
    p = ball.project(np.array([x]))
    assert np.linalg.norm(p) <= 2.0 + 1e-12


def test_whole_space_is_not_sampleable():
    w = WholeSpace(2)
    assert not w.sampleable and np.isinf(w.diameter)
    assert w.contains([[1e300, -1e300]]).all()


def test_labeled_union_labels_and_dict_roundtrip():
    u = LabeledUnion([Box([0.0], [1.0]), Box([-1.0], [0.0])])
    assert u.labels == [1, 2]
    again = region_from_dict(u.to_dict())
    assert again.to_dict() == u.to_dict()
    with pytest.raises(InputError):
        LabeledUnion([Box([0.0], [1.0]), Box([0.0, 0.0], [1.0, 1.0])])


def test_check_contains_raises_domain_error():
    with pytest.raises(DomainError):
        Box([0.0], [1.0]).check_contains([[1.1]])
    Box([0.0], [1.0]).check_contains([[1.0 + 1e-13]])  # boundary slack


def test_same_seed_same_samples_and_streams_differ():
    box = Box([0.0, 0.0], [1.0, 1.0])
    plan = SamplingPlan(n_samples=100, seed=3)
    a = sample_pairs(box, 100, plan.rng(0))
    b = sample_pairs(box, 100, plan.rng(0))
    c = sample_pairs(box, 100, plan.rng(1))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("dist", ["mixed", "uniform", "boundary", "grid"])
def test_samplers_stay_in_region(dist):
    box = Box([0.5], [2.0])
    rng = SamplingPlan().rng()
    assert box.contains(sample_points(box, 50, rng, dist)).all()
    pairs = sample_pairs(box, 64, rng, dist)
    assert pairs.shape == (64, 2, 1) and box.contains(pairs.reshape(-1, 1)).all()
    chains = sample_chains(box, 20, 3, rng, dist)
    assert chains.shape == (20, 3, 1)


def test_mixed_pairs_include_close_pairs():
    box = Box([0.0], [1.0])
    pairs = sample_pairs(box, 2000, SamplingPlan().rng(), "mixed")
    gaps = np.abs(pairs[:, 0, 0] - pairs[:, 1, 0])
    assert (gaps < 1e-4).sum() > 50


def test_fix_and_cyclic_pairs():
    box = Box([0.0], [1.0])
    fix = sample_fix_pairs(box, np.array([[0.5]]), 30, SamplingPlan().rng())
    assert np.all(fix[:, 1, 0] == 0.5)
    u = LabeledUnion([Box([0.0], [1.0]), Box([-1.0], [0.0])])
    cyc = sample_cyclic_pairs(u, 100, SamplingPlan().rng())
    assert cyc.shape == (100, 2, 1)


def test_plan_validation():
    with pytest.raises(InputError):
        SamplingPlan(n_samples=0)
    with pytest.raises(InputError):
        SamplingPlan(distribution="sobol")
    with pytest.raises(InputError):
        SamplingPlan(seed=2**64)
    assert SamplingPlan(seed=2**64 - 1).rng().random() < 1


def test_validation_helpers():
    np.testing.assert_array_equal(as_point(3.0), [3.0])
    assert as_points([1.0, 2.0, 3.0]).shape == (3, 1)
    assert as_points([1.0, 2.0, 3.0], dim=3).shape == (1, 3)
    with pytest.raises(InputError):
        as_point([np.nan])
    with pytest.raises(InputError):
        as_points([[1.0, 2.0]], dim=3)
    with pytest.raises(InputError):
        check_scalar_in("lam", 0.0, 0.0, 1.0, low_open=True)
    assert check_scalar_in("lam", 1.0, 0.0, 1.0) == 1.0
    assert FiniteSet([[1.0], [2.0]]).contains([[2.0]])[0]
