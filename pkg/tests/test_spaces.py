import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from enrichfix.errors import InputError
from enrichfix.regions import Box
from enrichfix.sampling import SamplingPlan
from enrichfix.spaces import (ConvexStructure, Metric, Norm, check_metric_axioms, check_subordination,
                              quasinorm_modulus, w_check, w_eval)

vec = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=3)


@settings(max_examples=60)
@given(vec, st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0]))
def test_p_norms_match_loop_oracle(v, p):
    kind = "quasi-p" if p < 1 else "p"
    assert Norm(kind, p=p)(v) == pytest.approx(oracles.pnorm(v, p), rel=1e-12, abs=1e-300)


@settings(max_examples=60)
@given(vec, vec)
def test_norm_triangle_inequality(u, v):
    n = Norm()
    assert n(np.add(u, v)) <= n(u) + n(v) + 1e-9


@settings(max_examples=60)
@given(vec, vec)
def test_quasi_triangle_with_modulus(u, v):
    n = Norm("quasi-p", p=0.5)
    assert n(np.add(u, v)) <= n.modulus * (n(u) + n(v)) * (1 + 1e-12) + 1e-12


def test_batch_and_weighted_sup():
    n = Norm("weighted-sup", weights=(1.0, 2.0))
    np.testing.assert_allclose(n(np.array([[1.0, 1.0], [3.0, 0.0]])), [2.0, 3.0])
    with pytest.raises(InputError):
        Norm("quasi-p", p=1.5)
    with pytest.raises(InputError):
        Norm("p", p=0.5)


def test_modulus_values():
    emp, analytic = quasinorm_modulus(Norm("quasi-p", p=0.5), SamplingPlan(n_samples=20_000))
    assert analytic == 2.0 and 1.9 < emp <= 2.0 + 1e-9
    emp, analytic = quasinorm_modulus(Norm(), SamplingPlan(n_samples=5_000))
    assert analytic == 1.0 and emp <= 1.0 + 1e-12
    with pytest.raises(InputError):
        quasinorm_modulus(Norm(), SamplingPlan(n_samples=10))


def test_metric_axioms_hold_for_catalog_metrics():
    box = Box([-2.0, -2.0], [2.0, 2.0])
    for m in (Metric(), Metric("scaled", factor=0.5), Metric("truncated", cap=1.0)):
        assert check_metric_axioms(m, box, SamplingPlan(n_samples=2000)).passed


def test_linear_structure_is_convex_for_the_norm_metric():
    box = Box([-1.0, -1.0], [1.0, 1.0])
    assert w_check(ConvexStructure(), Metric(), box, SamplingPlan(n_samples=5000)).passed
    assert w_check(ConvexStructure(), Metric("scaled", factor=0.5), box, SamplingPlan(n_samples=5000)).passed


def test_truncated_metric_is_not_takahashi_convex_with_linear_w():
    # u = y, x = y + 2, lam = 1/2: d(u, W) = 1 but lam d(u, x) + (1 - lam) d(u, y) = 1/2
    m = Metric("truncated", cap=1.0)
    y = np.array([0.0])
    W = w_eval(ConvexStructure(), y + 2, y, 0.5)
    assert m(y, W) > 0.5 * m(y, y + 2) + 0.5 * m(y, y)
    rep = w_check(ConvexStructure(), m, Box([-5.0], [5.0]), SamplingPlan(n_samples=5000))
    assert not rep.passed and rep.witness is not None


def test_w_eval_rejects_weights_outside_unit_interval():
    with pytest.raises(InputError):
        w_eval(ConvexStructure(), [0.0], [1.0], 1.5)
    np.testing.assert_allclose(w_eval(ConvexStructure(), [0.0], [1.0], 1.0), [0.0])  # weight sits on x


def test_subordination():
    box = Box([0.0], [10.0])
    plan = SamplingPlan(n_samples=2000)
    assert check_subordination(Metric("truncated", cap=1.0), Norm(), box, plan).passed
    assert check_subordination(Metric("scaled", factor=0.5), Norm(), box, plan).passed
    assert not check_subordination(Metric("scaled", factor=2.0), Norm(), box, plan).passed
