import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from enrichfix.certify import C, certify, optimize_banach_certificate
from enrichfix.comparison import CComparisonCert, ComparisonFn
from enrichfix.errors import CertificateError, DivergenceError, InputError
from enrichfix.mappings import Affine, PresicMapping, PresicWeights, Reciprocal1D, Reflection1D, map_eval, translation
from enrichfix.regions import Box, LabeledUnion
from enrichfix.solver import (SolveConfig, bound_aposteriori, bound_apriori, convex_metric_solve, cyclic_solve,
                              krasnoselskij_solve, maia_solve, presic_solve, solve_with_certificate)
from enrichfix.spaces import ConvexStructure, Metric, Norm, Space


def test_bound_arithmetic():
    assert bound_apriori(0.5, 3, 1.0) == 0.25
    assert bound_aposteriori(0.5, 0.0) == 0.0
    assert bound_apriori(1e-300, 1, 1.0) < 1e-290
    with pytest.raises(CertificateError):
        bound_apriori(1.0, 1, 1.0)
    with pytest.raises(CertificateError):
        bound_aposteriori(1.2, 1.0)


def test_config_validation():
    with pytest.raises(InputError):
        SolveConfig(tol=0.0)
    with pytest.raises(InputError):
        SolveConfig(max_iter=0)
    with pytest.raises(InputError):
        SolveConfig(stop="never")


def test_reflection_half_step_is_exact():
    rep, trace = krasnoselskij_solve(Reflection1D(), 0.5, [0.0])
    assert rep.converged and rep.iterations == 1 and trace.points[1, 0] == 0.5


def test_start_at_fixed_point_converges_at_iteration_zero():
    rep, trace = krasnoselskij_solve(Reciprocal1D(), 0.3, [1.0])
    assert rep.converged and rep.iterations == 0 and len(trace) == 1


def test_reciprocal_against_scalar_oracle():
    rep, trace = krasnoselskij_solve(Reciprocal1D(), 0.4, [0.5])
    ref = oracles.kras_float(lambda x: 1.0 / x, 0.4, 0.5, 1e-12)
    np.testing.assert_array_equal(trace.points[:, 0], ref)
    assert abs(rep.final_point[0] - 1.0) <= 1e-10 and rep.iterations <= 100


def test_lambda_one_with_b0_is_picard_iteration():
    T = Affine([[0.5, 0.1], [0.0, 0.3]], [1.0, -1.0])
    space = Space(region=Box([-5.0, -5.0], [5.0, 5.0]))
    cert = certify(C.ENRICHED_BANACH, T, space, {"b": 0.0, "theta": 0.6})
    assert cert.lam == 1.0
    rep, trace = solve_with_certificate(cert, T, [3.0, 3.0], space=space)
    x = np.array([3.0, 3.0])
    for row in trace.points[1:]:
        x = map_eval(T, x)
        np.testing.assert_array_equal(row, x)


def test_geometric_residual_decay_and_fixed_point_of_T():
    T = Reciprocal1D()
    space = Space(region=T.domain)
    cert = optimize_banach_certificate(T, space)
    rep, trace = solve_with_certificate(cert, T, [2.0], space=space)
    s = trace.steps
    assert np.all(s[1:] <= (cert.factor + 1e-9) * s[:-1] + 1e-15)
    lam = cert.lam
    assert abs(1.0 / rep.final_point[0] - rep.final_point[0]) <= SolveConfig().tol / lam
    assert rep.bound_violations == 0


def test_kannan_bounds_halve_per_step():
    T = Affine([[-0.5]], domain=Box([-1.0], [1.0]))
    cert = certify(C.ENRICHED_KANNAN, T, Space(region=T.domain), {"k": 0.5, "a": 1 / 3})
    assert cert.factor == pytest.approx(0.5)
    _, trace = solve_with_certificate(cert, T, [1.0], space=Space(region=T.domain))
    assert len(trace) == 2  # averaged map is constant 0
    assert trace.apriori[1] == pytest.approx(trace.apriori[0] / 2)


def test_refuses_failed_certificate():
    T = translation(1)
    cert = optimize_banach_certificate(T, Space(region=Box([-1.0], [1.0])))
    with pytest.raises(CertificateError):
        solve_with_certificate(cert, T, [0.0])


def test_divergence_from_residual_growth_keeps_partial_trace():
    with pytest.raises(DivergenceError) as info:
        krasnoselskij_solve(Affine([[3.0]]), 0.5, [1.0], SolveConfig(max_iter=10_000))
    assert info.value.trace is not None and len(info.value.trace) >= 100


def test_divergence_on_domain_escape():
    T = Affine([[1.0]], [1.0], domain=Box([-10.0], [10.0]), check_self_map=False)
    with pytest.raises(DivergenceError) as info:
        krasnoselskij_solve(T, 1.0, [0.0])
    assert len(info.value.trace) >= 10


def test_max_iter_caps_trace_length():
    rep, trace = krasnoselskij_solve(Reciprocal1D(), 0.01, [0.5], SolveConfig(max_iter=5))
    assert not rep.converged and len(trace) <= 6


def test_bound_target_stop():
    T = Affine([[0.5]])
    cert = certify(C.ENRICHED_BANACH, T, Space(region=Box([-1.0], [1.0])), {"b": 0.0, "theta": 0.5})
    rep, trace = solve_with_certificate(cert, T, [1.0], SolveConfig(tol=1e-6, stop="bound-target"),
                                        Space(region=Box([-1.0], [1.0])))
    assert trace.apriori[-1] <= 1e-6 and rep.bound_violations == 0


def test_trace_csv_has_frozen_columns():
    T = Reflection1D()
    cert = optimize_banach_certificate(T, Space(region=T.domain))
    _, trace = solve_with_certificate(cert, T, [0.2], space=Space(region=T.domain))
    rows = list(csv.reader(io.StringIO(trace.to_csv())))
    assert rows[0] == ["n", "coord_0", "residual", "bound_apriori", "bound_aposteriori"]
    assert rows[1][0] == "0" and rows[1][4] == ""  # no a posteriori bound before the first step
    assert len(rows) == 3


def test_convex_metric_with_linear_w_reproduces_krasnoselskij():
    T = Reciprocal1D()
    # W puts its weight on x, so W(x, Tx; 1 - lam) = (1 - lam) x + lam Tx
    rep_w, tr_w = convex_metric_solve(T, ConvexStructure(), Metric(), 0.6, [0.5])
    rep_k, tr_k = krasnoselskij_solve(T, 0.4, [0.5])
    np.testing.assert_array_equal(tr_w.points, tr_k.points)


def test_convex_metric_scaled_residuals_and_refusal():
    T = Reciprocal1D()
    _, tr_n = convex_metric_solve(T, ConvexStructure(), Metric(), 0.6, [0.5])
    _, tr_s = convex_metric_solve(T, ConvexStructure(), Metric("scaled", factor=0.5), 0.6, [0.5])
    n = min(len(tr_n), len(tr_s))
    np.testing.assert_array_equal(tr_n.points[:n], tr_s.points[:n])
    np.testing.assert_allclose(tr_s.steps[:n - 1], 0.5 * tr_n.steps[:n - 1])
    with pytest.raises(InputError):
        convex_metric_solve(T, ConvexStructure(), Metric("truncated", cap=1.0), 0.6, [0.5], region=Box([-5.0], [5.0]))


def test_convex_metric_bounds_with_certificate():
    T = Reflection1D()
    space = Space(region=T.domain)
    cert = certify(C.CONVEX_METRIC_ENRICHED, T, space, {"lam": 0.75, "c": 0.5})
    assert cert.passed
    rep, _ = convex_metric_solve(T, ConvexStructure(), Metric(), 0.75, [0.0], cert=cert)
    assert rep.converged and rep.bound_violations == 0 and abs(rep.final_point[0] - 0.5) < 1e-11


def test_maia_with_subordinate_metrics():
    T = Reflection1D()
    cert = optimize_banach_certificate(T, Space(region=T.domain))
    rep, trace = maia_solve(T, Norm(), Metric("scaled", factor=0.5), None, [0.0], cert=cert)
    assert rep.iterations == 1 and rep.bound_violations == 0
    A = Affine([[0.5]], [2.0], domain=Box([0.0], [10.0]))
    cA = certify(C.ENRICHED_BANACH, A, Space(region=A.domain), {"b": 0.0, "theta": 0.5})
    rep, trace = maia_solve(A, Norm(), Metric("truncated", cap=1.0), None, [10.0], cert=cA)
    assert rep.converged and abs(rep.final_point[0] - 4.0) < 1e-10 and rep.bound_violations == 0
    with pytest.raises(InputError):
        maia_solve(A, Norm(), Metric("scaled", factor=2.0), 0.5, [10.0])


def test_maia_with_norm_metric_equals_certificate_solve():
    T = Reciprocal1D()
    space = Space(region=T.domain)
    cert = optimize_banach_certificate(T, space)
    r1, t1 = maia_solve(T, Norm(), Metric(), None, [0.5], cert=cert)
    r2, t2 = solve_with_certificate(cert, T, [0.5], space=space)
    np.testing.assert_array_equal(t1.points, t2.points)
    np.testing.assert_allclose(t1.apriori, t2.apriori)


def test_cyclic_from_either_region_and_refusal():
    T = Affine([[-0.5]])
    regions = LabeledUnion([Box([0.0], [1.0]), Box([-1.0], [0.0])])
    phi, cc = ComparisonFn("linear", 0.5), CComparisonCert(0.5)
    for x0 in ([1.0], [-1.0]):
        rep, _ = cyclic_solve(T, regions, phi, cc, 0.0, x0)
        assert abs(rep.final_point[0]) <= 1e-10 and rep.bound_violations == 0
        assert rep.extra["sound_violations"] == 0
    with pytest.raises(InputError):
        cyclic_solve(Affine([[0.5]]), regions, phi, cc, 0.0, [1.0])


def test_cyclic_single_region_is_plain_phi_contraction():
    T = Affine([[0.5]])
    rep, trace = cyclic_solve(T, LabeledUnion([Box([-1.0], [1.0])]), ComparisonFn("linear", 0.5),
                              CComparisonCert(0.5), 0.0, [1.0])
    assert rep.converged
    # s starts at k=1: the bound columns miss the k=0 term here, the t + s(t) forms do not
    np.testing.assert_allclose(trace.apriori[:5], [0.5 / 2**n for n in range(5)], atol=1e-13)
    assert rep.bound_violations > 0
    assert rep.extra["sound_violations"] == 0


def test_presic_methods_agree_and_k1_reduces():
    T = PresicMapping(2, [0.25, 0.25], domain=Box([-1.0], [1.0]))
    cert = certify(C.ENRICHED_PRESIC, T, Space(region=T.domain), {"b": [0.0, 0.0], "theta": [0.25, 0.25]})
    d, _ = presic_solve(T, cert, [1.0])
    k, _ = presic_solve(T, cert, [[1.0], [0.5]], method="k-step", weights=PresicWeights([0.25, 0.25, 0.5]))
    assert abs(d.final_point[0] - k.final_point[0]) <= 10 * SolveConfig().tol
    with pytest.raises(InputError):
        presic_solve(T, cert, [[1.0]], method="k-step")
    with pytest.raises(InputError):
        presic_solve(T, cert, [1.0], method="simplex")

    T1 = PresicMapping(1, [1.0], scale=0.5, offset=[1.0], domain=Box([-4.0], [4.0]))
    c1 = certify(C.ENRICHED_PRESIC, T1, Space(region=T1.domain), {"b": [1.0], "theta": [1.5]})
    w = PresicWeights([0.5, 0.5])
    _, tk = presic_solve(T1, c1, [[3.0]], method="k-step", weights=w)
    _, tr = krasnoselskij_solve(T1.diagonal(), 0.5, [3.0])
    np.testing.assert_array_equal(tk.points, tr.points)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.floats(0.05, 0.95), st.floats(0.1, 1.0))
def test_affine_contraction_bounds_always_hold(x0, a, lam):
    T = Affine([[a]], [1.0])
    space = Space(region=Box([-10.0], [10.0]))
    cert = certify(C.ENRICHED_BANACH, T, space, {"b": 0.0, "theta": a})
    rep, trace = solve_with_certificate(cert, T, [x0], SolveConfig(lam=None), space)
    assert rep.bound_violations == 0
    assert rep.final_point[0] == pytest.approx(1.0 / (1.0 - a), abs=1e-9)
