import numpy as np
import pytest

import oracles
from enrichfix.certify import (C, DEFAULT_B_GRID, SCHEMAS, certificate_from_dict, certify, check_pointwise,
                               contraction_factor, derive_lambda, lambda_policy, optimize_banach_certificate,
                               recheck, validate_constants)
from enrichfix.comparison import ComparisonFn, PsiFn
from enrichfix.errors import CertificateError, InputError, SchemaError
from enrichfix.mappings import Affine, NegateScale1D, Reciprocal1D, Reflection1D, ex_ac2, translation
from enrichfix.regions import Box, LabeledUnion
from enrichfix.reports import dumps, read_report, write_report
from enrichfix.sampling import SamplingPlan
from enrichfix.spaces import Space


def space_of(T):
    return Space(region=T.domain)


def test_schema_mismatch_and_infeasible_constants():
    with pytest.raises(SchemaError):
        validate_constants(C.ENRICHED_BANACH, {"b": 1.0})
    with pytest.raises(SchemaError):
        validate_constants(C.ENRICHED_BANACH, {"b": 1.0, "theta": 2.0})
    with pytest.raises(SchemaError):
        validate_constants(C.ENRICHED_KANNAN, {"k": 1.0, "a": 0.5})
    with pytest.raises(SchemaError):
        validate_constants(C.ENRICHED_CRR, {"k": 0.0, "a": 0.5, "b": 0.3})
    with pytest.raises(SchemaError):
        validate_constants(C.ENRICHED_PRESIC, {"b": [0.0], "theta": [0.5, 0.5]})
    with pytest.raises(SchemaError):
        validate_constants(C.ENRICHED_PHI, {"b": 0.0, "phi": "linear"})
    assert set(SCHEMAS) == set(C)


def test_factors_per_class():
    assert contraction_factor(C.ENRICHED_KANNAN, {"k": 2.0, "a": 1 / 3}) == pytest.approx(0.5)
    crr = contraction_factor(C.ENRICHED_CRR, {"k": 2.0, "a": 0.0, "b": 1 / 3})
    assert crr == pytest.approx(contraction_factor(C.ENRICHED_KANNAN, {"k": 2.0, "a": 1 / 3}))
    assert contraction_factor(C.ENRICHED_CHATTERJEA, {"k": 0.0, "b": 0.25}) == pytest.approx(1 / 3)
    assert contraction_factor(C.ENRICHED_BANACH, {"b": 1.0, "theta": 0.5}) == 0.25
    assert contraction_factor(C.NE, {}) is None


def test_lambda_policies():
    assert lambda_policy(C.ENRICHED_BANACH, {"b": 3.0, "theta": 1.0}) == 0.25
    assert lambda_policy(C.ENRICHED_KANNAN, {"k": 1.0, "a": 0.2}) == 0.5
    assert lambda_policy(C.SPC, {"k": 0.6}) == pytest.approx(0.4)
    np.testing.assert_allclose(lambda_policy(C.ENRICHED_PRESIC, {"b": [0.5, 0.5], "theta": [0.5, 0.5]}),
                               [0.25, 0.25, 0.5])


def test_reciprocal_ene_threshold_matches_closed_form():
    T = Reciprocal1D()
    b_star = oracles.reciprocal_min_b()
    plan = SamplingPlan(n_samples=20_000)
    assert certify(C.ENRICHED_NONEXPANSIVE, T, space_of(T), {"b": b_star}, plan).passed
    below = certify(C.ENRICHED_NONEXPANSIVE, T, space_of(T), {"b": b_star - 0.05}, plan)
    assert not below.passed
    (x,), (y,) = below.witness
    assert abs(b_star - 0.05 - oracles.reciprocal_lipschitz(x, y)) > b_star - 0.05 + 1


def test_witness_reverifies_pointwise():
    T = Reciprocal1D()
    cert = certify(C.NE, T, space_of(T))
    assert not cert.passed
    assert check_pointwise(C.NE, T, {}, cert.witness, space_of(T)) < 0
    margins = recheck(cert, T, space_of(T))
    assert margins["witness_margin"] < 0
    assert margins["argmin_margin"] == pytest.approx(cert.min_margin)


def test_optimizer_matches_analytic_optimum_for_reciprocal():
    T = Reciprocal1D()
    cert = optimize_banach_certificate(T, space_of(T))
    b_opt, c_opt = oracles.reciprocal_banach_opt()
    assert cert.passed
    assert cert.factor == pytest.approx(c_opt, abs=0.01)
    assert cert.factor >= c_opt - 1e-9  # sampling cannot beat the true optimum
    assert abs(cert.constants["b"] - b_opt) < 0.1


def test_optimizer_fails_on_translation():
    T = translation(1)
    cert = optimize_banach_certificate(T, Space(region=Box([-1.0], [1.0])))
    assert not cert.passed and cert.witness is not None and cert.lam is None
    assert recheck(cert, T, Space(region=Box([-1.0], [1.0])))["witness_factor"] >= 1 - 1e-9
    with pytest.raises(CertificateError):
        derive_lambda(cert)


def test_grid_contains_required_points():
    for b in (0.0, 0.5, 1.0, 1.5, 4.0):
        assert b in DEFAULT_B_GRID
    assert DEFAULT_B_GRID.min() == 0 and DEFAULT_B_GRID.max() == pytest.approx(1e3)


def test_fix_classes_need_a_fixed_point_set():
    T = Affine([[0.5]])
    with pytest.raises(InputError):
        certify(C.QNE, T, Space(region=Box([-1.0], [1.0])))
    assert certify(C.QNE, T, Space(region=Box([-1.0], [1.0])), fix_set=[[0.0]]).passed


def test_kannan_chatterjea_crr_enrichment():
    # with k = 1/2 the averaged map of x -> -x/2 is constant, so the left sides vanish
    T = NegateScale1D()
    sp = space_of(T)
    assert certify(C.ENRICHED_KANNAN, T, sp, {"k": 0.5, "a": 0.25}).passed
    assert not certify(C.ENRICHED_KANNAN, T, sp, {"k": 0.0, "a": 0.25}).passed
    assert certify(C.ENRICHED_CRR, T, sp, {"k": 0.5, "a": 0.0, "b": 0.1}).passed
    assert certify(C.ENRICHED_CHATTERJEA, T, sp, {"k": 0.5, "b": 0.1}).passed


def test_phi_and_psi_classes():
    T = Affine([[0.5]], domain=Box([-1.0], [1.0]))
    sp = space_of(T)
    assert certify(C.ENRICHED_PHI, T, sp, {"b": 0.0, "phi": ComparisonFn("linear", 0.5)}).passed
    assert not certify(C.ENRICHED_PHI, T, sp, {"b": 0.0, "phi": ComparisonFn("linear", 0.25)}).passed
    # |Tx - Ty| = d/2 <= exp(-d) d exactly when d <= ln 2
    assert certify(C.ENRICHED_PSI, T, Space(region=Box([-0.3], [0.3])), {"b": 0.0, "psi": PsiFn()}).passed
    assert not certify(C.ENRICHED_PSI, T, Space(region=Box([-0.5], [0.5])), {"b": 0.0, "psi": PsiFn()}).passed


def test_cyclic_class_requires_labeled_union():
    T = Affine([[-0.5]])
    with pytest.raises(InputError):
        certify(C.CYCLIC_ENRICHED_PHI, T, Space(region=Box([-1.0], [1.0])),
                {"b": 0.0, "phi": ComparisonFn("linear", 0.5)})
    u = LabeledUnion([Box([0.0], [1.0]), Box([-1.0], [0.0])])
    assert certify(C.CYCLIC_ENRICHED_PHI, T, Space(region=u), {"b": 0.0, "phi": ComparisonFn("linear", 0.5)}).passed


def test_same_seed_same_certificate():
    T = ex_ac2()
    consts = {"b": 1.0, "theta": 1.9, "L": 3.0}
    a = certify(C.ENRICHED_ALMOST, T, space_of(T), consts, SamplingPlan(seed=9))
    b = certify(C.ENRICHED_ALMOST, T, space_of(T), consts, SamplingPlan(seed=9))
    assert dumps(a.to_dict()) == dumps(b.to_dict())


def test_certificate_roundtrip(tmp_path):
    T = Reflection1D()
    cert = certify(C.ENRICHED_PHI, T, space_of(T), {"b": 1.0, "phi": ComparisonFn("rational")})
    path = write_report(tmp_path / "c.txt", cert.to_dict())
    back = certificate_from_dict(read_report(path))
    assert back.to_dict() == read_report(path)
    assert back.constants["phi"] == ComparisonFn("rational")


def test_feasibility_margin():
    T = Reflection1D()
    cert = certify(C.ENRICHED_BANACH, T, space_of(T), {"b": 1.0, "theta": 0.5})
    assert cert.passed and cert.feasibility_margin == pytest.approx(1.0)
