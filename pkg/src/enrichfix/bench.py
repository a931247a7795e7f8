"""Built-in benchmark suites: the worked examples, bound soundness and the class atlas.

Each case is a function ``(seed, samples) -> CaseResult``.  Cases are
independent, so a suite runs them on a thread pool and reports in a fixed
order; nothing time-dependent enters the results.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .atlas import averaging_algebra_check, catalog, classify, diagram_check, p5_equivalence_check, saturation_probe
from .certify import C, certify, optimize_banach_certificate
from .comparison import (CComparisonCert, ComparisonFn, check_comparison, default_t_grid, phi_iterate,
                         series_sum)
from .errors import InputError
from .mappings import Affine, PresicMapping, PresicWeights, Reciprocal1D, Reflection1D, ex_ac2, translation
from .regions import Box, LabeledUnion
from .sampling import SamplingPlan
from .solver import SolveConfig, cyclic_solve, krasnoselskij_solve, presic_solve, solve_with_certificate
from .spaces import Norm, Space, quasinorm_modulus


@dataclass
class CaseResult:
    name: str
    passed: bool
    iterations: int | None = None
    max_bound_slack: float | None = None
    bound_violations: int | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _plan(seed, samples, default=10_000):
    return SamplingPlan(n_samples=samples or default, seed=seed)


def _near(a, b, tol):
    return bool(np.all(np.abs(np.asarray(a, float) - np.asarray(b, float)) <= tol))


# -- reference examples -----------------------------------------------------

def case_reflection(seed, samples):
    T = Reflection1D()
    space = Space(region=T.domain)
    plan = _plan(seed, samples)
    opt = optimize_banach_certificate(T, space, plan=plan)
    ne = certify(C.NE, T, space, plan=plan)
    banach = certify(C.ENRICHED_BANACH, T, space, {"b": 0.0, "theta": 0.999}, plan)
    starts = plan.rng(21).uniform(0.0, 1.0, 10)
    iters, errs = [], []
    for x0 in starts:
        rep, _ = solve_with_certificate(opt, T, [x0], space=space)
        iters.append(rep.iterations)
        errs.append(abs(rep.final_point[0] - 0.5))
    ok = (opt.passed and opt.constants["b"] == 1.0 and opt.constants["theta"] <= 1e-10 and ne.passed
          and not banach.passed and banach.witness is not None and set(iters) == {1} and max(errs) <= 1e-12)
    return CaseResult("reflection", ok, max(iters), details={
        "b": opt.constants["b"], "theta": opt.constants["theta"], "ne": ne.passed,
        "banach_b0_witness": banach.witness, "max_error": max(errs)})


def case_reciprocal(seed, samples):
    T = Reciprocal1D()
    space = Space(region=T.domain)
    plan = _plan(seed, samples, 100_000)
    ene = certify(C.ENRICHED_NONEXPANSIVE, T, space, {"b": 1.5}, plan)
    ne = certify(C.NE, T, space, plan=plan)
    rep, _ = krasnoselskij_solve(T, 0.4, [0.5])
    near_half = ne.witness is not None and all(abs(p[0] - 0.5) <= 0.05 for p in ne.witness)
    ok = (ene.passed and ene.min_margin >= 0 and not ne.passed and near_half
          and abs(rep.final_point[0] - 1.0) <= 1e-10 and rep.iterations <= 100)
    return CaseResult("reciprocal", ok, rep.iterations, details={
        "ene_min_margin": ene.min_margin, "ne_witness": ne.witness, "limit": rep.final_point})


def case_almost(seed, samples):
    T = ex_ac2()
    space = Space(region=T.domain)
    plan = _plan(seed, samples, 100_000)
    cert = certify(C.ENRICHED_ALMOST, T, space, {"b": 1.0, "theta": 1.9, "L": 3.0}, plan)
    member = classify(T, space, fix_set=[[0.5], [1.0]], plan=_plan(seed, samples))
    runs = [krasnoselskij_solve(T, 0.5, [x0])[0] for x0 in (0.3, 1.2)]
    exact = runs[0].final_point[0] == 0.5 and runs[1].final_point[0] == 1.0
    ok = (cert.passed and not member.passed("NE") and member.verdicts["QNE"].status == "fail"
          and exact and all(r.iterations == 1 for r in runs))
    return CaseResult("almost-contraction", ok, max(r.iterations for r in runs), details={
        "certificate": cert.passed, "NE": member.verdicts["NE"].status, "QNE": member.verdicts["QNE"].status,
        "limits": [r.final_point for r in runs]})


def case_cyclic(seed, samples):
    T = Affine([[-0.5]])
    regions = LabeledUnion([Box([0.0], [1.0]), Box([-1.0], [0.0])])
    phi = ComparisonFn("linear", 0.5)
    rep, _ = cyclic_solve(T, regions, phi, CComparisonCert(0.5), 0.0, [1.0], plan=_plan(seed, samples))
    ok = (rep.converged and abs(rep.final_point[0]) <= 1e-10 and rep.bound_violations == 0
          and rep.extra["sound_violations"] == 0)
    return CaseResult("cyclic", ok, rep.iterations, rep.max_bound_slack, rep.bound_violations, details={
        "second_form_violations": rep.extra["second_form_violations"],
        "sound_violations": rep.extra["sound_violations"]})


def case_presic(seed, samples):
    T = PresicMapping(2, [0.25, 0.25], domain=Box([-1.0], [1.0]))
    cert = certify(C.ENRICHED_PRESIC, T, Space(region=T.domain), {"b": [0.0, 0.0], "theta": [0.25, 0.25]},
                   _plan(seed, samples))
    diag, _ = presic_solve(T, cert, [1.0])
    kstep, _ = presic_solve(T, cert, [[1.0], [0.5]], method="k-step", weights=PresicWeights([0.25, 0.25, 0.5]))
    ok = (cert.passed and abs(diag.final_point[0]) <= 1e-10 and abs(kstep.final_point[0]) <= 1e-10
          and _near(diag.final_point, kstep.final_point, 1e-9) and diag.extra["diagonal_residual"] <= 1e-10)
    return CaseResult("presic", ok, max(diag.iterations, kstep.iterations), details={
        "diagonal_limit": diag.final_point, "k_step_limit": kstep.final_point})


def case_quasi_banach(seed, samples):
    norm = Norm("quasi-p", p=0.5)
    emp, analytic = quasinorm_modulus(norm, _plan(seed, samples, 100_000))
    T = Affine(np.eye(2) / 3.0, [1.0, 1.0])
    space = Space(norm=norm, region=Box([-3.0, -3.0], [3.0, 3.0]))
    cert = certify(C.QUASI_BANACH_ENRICHED, T, space, {"b": 0.0, "theta": 1.0 / 3.0}, _plan(seed, samples))
    rep, _ = solve_with_certificate(cert, T, [0.0, 0.0], space=space)
    ok = (emp <= 2.0 + 1e-9 and analytic == 2.0 and cert.passed and _near(rep.final_point, [1.5, 1.5], 1e-10))
    return CaseResult("quasi-banach", ok, rep.iterations, details={
        "modulus_empirical": emp, "modulus_analytic": analytic, "limit": rep.final_point})


def case_comparison(seed, samples):
    grid = default_t_grid()
    checks = {k: check_comparison(ComparisonFn(k), grid).passed for k in ("rational", "linear", "split", "identity")}
    s = series_sum(ComparisonFn("linear", 0.5), 1.0, CComparisonCert(0.5))
    it = phi_iterate(ComparisonFn("rational"), 1.0, 1000)
    ok = (checks["rational"] and checks["linear"] and checks["split"] and not checks["identity"]
          and abs(s - 1.0) <= 1e-12 and abs(it - 1.0 / 1001.0) <= 1e-15)
    return CaseResult("comparison", ok, details={"checks": checks, "series_sum": s, "phi_iterate": it})


# -- bounds -------------------------------------------------------------------

def _bound_case(name, cert, T, space, starts):
    worst, viol, iters = None, 0, 0
    for x0 in starts:
        rep, _ = solve_with_certificate(cert, T, x0, space=space)
        viol += rep.bound_violations
        iters = max(iters, rep.iterations)
        if rep.max_bound_slack is not None:
            worst = rep.max_bound_slack if worst is None else max(worst, rep.max_bound_slack)
    return CaseResult(name, cert.passed and viol == 0, iters, worst, viol)


def random_affine_contraction(rng, dim=5, norm2=0.8) -> Affine:
    """Random affine map on R^dim whose linear part has spectral norm exactly ``norm2``."""
    A = rng.standard_normal((dim, dim))
    A *= norm2 / np.linalg.norm(A, 2)
    return Affine(A, rng.standard_normal(dim))


def case_bounds_reflection(seed, samples):
    T = Reflection1D()
    space = Space(region=T.domain)
    cert = optimize_banach_certificate(T, space, plan=_plan(seed, samples))
    return _bound_case("bounds-reflection", cert, T, space, [[x] for x in _plan(seed, 1).rng(31).uniform(0, 1, 5)])


def case_bounds_reciprocal(seed, samples):
    T = Reciprocal1D()
    space = Space(region=T.domain)
    cert = optimize_banach_certificate(T, space, plan=_plan(seed, samples))
    return _bound_case("bounds-reciprocal", cert, T, space, [[0.5], [2.0], [1.3]])


def case_bounds_almost(seed, samples):
    T = ex_ac2()
    space = Space(region=T.domain)
    cert = certify(C.ENRICHED_ALMOST, T, space, {"b": 1.0, "theta": 1.9, "L": 3.0}, _plan(seed, samples))
    return _bound_case("bounds-almost", cert, T, space, [[0.3], [1.2], [0.0], [4.0 / 3.0]])


def case_bounds_affine(seed, samples):
    rng = _plan(seed, 1).rng(41)
    T = random_affine_contraction(rng)
    space = Space(region=Box(-np.ones(5), np.ones(5)))
    cert = certify(C.ENRICHED_BANACH, T, space, {"b": 0.0, "theta": 0.8}, _plan(seed, samples))
    return _bound_case("bounds-affine-r5", cert, T, space, list(rng.uniform(-5, 5, (5, 5))))


# -- atlas ----------------------------------------------------------------------

def case_diagram(seed, samples):
    out = diagram_check(_plan(seed, samples))
    return CaseResult("diagram", out["passed"], details={"counterexamples": out["counterexamples"],
                                                          "separations": out["separations"]})


def case_p5(seed, samples):
    rng = _plan(seed, 1).rng(51)
    space = Space(region=Box(-np.ones(3), np.ones(3)))
    bad = 0
    for _ in range(5):
        T = Affine(rng.standard_normal((3, 3)), rng.standard_normal(3))
        for k in (0.1, 0.5, 0.9):
            bad += int(p5_equivalence_check(T, space, k, _plan(seed, samples)).max_violation)
    return CaseResult("p5-equivalence", bad == 0, details={"disagreements": bad})


def case_algebra(seed, samples):
    worst = {name: averaging_algebra_check(T, _plan(seed, samples)).max_violation
             for name, (T, _) in catalog().items()}
    return CaseResult("averaging-algebra", max(worst.values()) <= 1e-12, details={"max_error": worst})


def case_saturation(seed, samples):
    plan = _plan(seed, samples)
    R = Reflection1D()
    lam_banach = saturation_probe(C.ENRICHED_BANACH, R, Space(region=R.domain), plan=plan)
    lam_ne = saturation_probe(C.NE, R, Space(region=R.domain), plan=plan)
    lam_shift = saturation_probe(C.ENRICHED_BANACH, translation(1), Space(region=Box([-1.0], [1.0])), plan=plan)
    ok = lam_banach is not None and lam_banach < 1 and lam_ne == 1.0 and lam_shift is None
    return CaseResult("saturation", ok, details={"reflection_contraction": lam_banach, "reflection_ne": lam_ne,
                                                 "translation": lam_shift})


SUITES = {
    "paper-examples": (case_reflection, case_reciprocal, case_almost, case_cyclic, case_presic,
                       case_quasi_banach, case_comparison),
    "bounds": (case_bounds_reflection, case_bounds_reciprocal, case_bounds_almost, case_bounds_affine),
    "atlas": (case_diagram, case_p5, case_algebra, case_saturation),
}


def run_suite(suite: str, seed: int = 0, samples: int | None = None, workers: int = 4) -> list:
    if suite not in SUITES:
        raise InputError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    cases = SUITES[suite]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda case: case(seed, samples), cases))


def format_table(results) -> str:
    rows = [("case", "status", "iterations", "max_bound_slack")]
    for r in results:
        slack = "-" if r.max_bound_slack is None else f"{r.max_bound_slack:.3e}"
        rows.append((r.name, "PASS" if r.passed else "FAIL", "-" if r.iterations is None else str(r.iterations), slack))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows)
