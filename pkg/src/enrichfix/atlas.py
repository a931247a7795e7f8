"""Membership atlas for the NE / QNE / SPC / DC / ENE classes.

Also hosts the inclusion-diagram consistency check, the Hilbert-space
ENE = SPC equivalence check, saturation probes for the averaging operator,
and the composition identity (T_lam)_mu = T_{lam mu}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certify import (C, DEFAULT_B_GRID, ClassId, Tuples, _degenerate, certify, certify_tuples, estimate_theta,
                      evaluate, sample_tuples, validate_constants)
from .errors import InputError
from .mappings import Affine, AveragedMapping, Mapping, NegateScale1D, Reciprocal1D, Reflection1D, ex_ac2, translation
from .regions import Box
from .reports import CheckReport
from .sampling import SamplingPlan, sample_points
from .spaces import Space

K_GRID = np.arange(1, 129) / 129.0
DEFAULT_LAMBDA_GRID = np.arange(16, 0, -1) / 16.0
ALGEBRA_TOL = 1e-12


@dataclass
class Verdict:
    status: str  # "pass" | "fail" | "skipped"
    constant: float | None = None
    witness: list | None = None
    reason: str | None = None
    margin: float | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class MembershipReport:
    verdicts: dict
    n_samples: int
    seed: int
    fix_set: list | None = None
    extra: dict = field(default_factory=dict)

    def passed(self, name: str) -> bool:
        return self.verdicts[name].status == "pass"

    def to_dict(self) -> dict:
        out = {"samples": self.n_samples, "seed": self.seed, "fix_set": self.fix_set,
               "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()}}
        if self.extra:
            out["extra"] = self.extra
        return out


def _verdict(cert, key: str | None = None) -> Verdict:
    const = None if key is None else cert.constants[key]
    if cert.passed:
        return Verdict("pass", const, margin=cert.min_margin)
    return Verdict("fail", const, cert.witness, margin=cert.min_margin)


def _smallest_passing(class_id, T, space, tuples, plan, grid, key):
    """Binary search over an increasing grid (pass is monotone in the constant)."""
    grid = np.sort(np.asarray(grid, dtype=float))
    run = lambda v: certify_tuples(class_id, T, space, validate_constants(class_id, {key: float(v)}), tuples, plan)
    top = run(grid[-1])
    if not top.passed:
        return top
    lo, hi, best = 0, len(grid) - 1, top
    while lo < hi:
        mid = (lo + hi) // 2
        cert = run(grid[mid])
        if cert.passed:
            hi, best = mid, cert
        else:
            lo = mid + 1
    return best if best.constants[key] == grid[lo] else run(grid[lo])


def classify(T: Mapping, space: Space, fix_set=None, plan: SamplingPlan | None = None,
             b_grid=None, k_grid=None) -> MembershipReport:
    """Sampled verdicts for NE, QNE, SPC, DC and ENE on one shared tuple set.

    Pairs (x, p) with p in ``fix_set`` are appended to the shared pairs, so the
    diagram implications hold sample-by-sample rather than only in law.
    QNE and DC are skipped without a fixed-point set.
    """
    plan = plan or SamplingPlan()
    if fix_set is None and getattr(T, "fixed_points", None) is not None:
        fix_set = T.fixed_points
    pairs = sample_tuples(C.NE, T, space, plan).data
    fix_tuples = None
    if fix_set is not None and len(np.atleast_1d(fix_set)):
        fix_data = sample_tuples(C.QNE, T, space, plan, fix_set, stream=1).data
        fix_tuples = Tuples(fix_data, _degenerate(fix_data, space.norm))
        pairs = np.concatenate([pairs, fix_data])
    shared = Tuples(pairs, _degenerate(pairs, space.norm))
    grid_k = K_GRID if k_grid is None else np.asarray(k_grid, dtype=float)
    grid_b = DEFAULT_B_GRID if b_grid is None else np.asarray(b_grid, dtype=float)

    v = {"NE": _verdict(certify_tuples(C.NE, T, space, {}, shared, plan))}
    v["SPC"] = _verdict(_smallest_passing(C.SPC, T, space, shared, plan, grid_k, "k"), "k")
    v["ENE"] = _verdict(_smallest_passing(C.ENRICHED_NONEXPANSIVE, T, space, shared, plan, grid_b, "b"), "b")
    if fix_tuples is None:
        skip = Verdict("skipped", reason="no fixed-point set supplied")
        v["QNE"], v["DC"] = skip, Verdict("skipped", reason="no fixed-point set supplied")
    else:
        v["QNE"] = _verdict(certify_tuples(C.QNE, T, space, {}, fix_tuples, plan))
        v["DC"] = _verdict(_smallest_passing(C.DC, T, space, fix_tuples, plan, grid_k, "k"), "k")
    order = ("NE", "QNE", "SPC", "DC", "ENE")
    fs = None if fix_set is None else np.atleast_2d(np.asarray(fix_set, dtype=float)).tolist()
    return MembershipReport({k: v[k] for k in order}, int(len(pairs)), int(plan.seed), fs)


DIAGRAM_EDGES = (("NE", "SPC"), ("NE", "QNE"), ("SPC", "DC"), ("QNE", "DC"))


def diagram_counterexamples(report: MembershipReport) -> list:
    """Edges A => B of the inclusion diagram violated by a single report (A passes, B fails)."""
    bad = []
    for a, b in DIAGRAM_EDGES:
        va, vb = report.verdicts[a], report.verdicts[b]
        if va.status == "pass" and vb.status == "fail":
            bad.append(f"{a}=>{b}")
    return bad


def catalog() -> dict:
    """Named (mapping, sampling space) pairs used by the diagram check and the benches."""
    def on(T, region=None):
        return T, Space(region=region or T.domain)

    line = Box([-1.0], [1.0])
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    return {
        "reflection": on(Reflection1D()),
        "reciprocal": on(Reciprocal1D()),
        "ex-ac2": on(ex_ac2()),
        "negate-scale": on(NegateScale1D()),
        "third": on(Affine([[1 / 3]], fixed_points=[[0.0]]), line),
        "quarter": on(Affine([[0.25]], fixed_points=[[0.0]]), line),
        "scale-minus-two": on(Affine([[-2.0]], fixed_points=[[0.0]]), line),
        "rotation": on(Affine(rot, fixed_points=[[0.0, 0.0]]), Box([-1.0, -1.0], [1.0, 1.0])),
        "rotation-stretch": on(Affine(1.5 * rot, fixed_points=[[0.0, 0.0]]), Box([-1.0, -1.0], [1.0, 1.0])),
        "translation": on(translation(1), line),
    }


def diagram_check(plan: SamplingPlan | None = None, maps: dict | None = None) -> dict:
    """Classify every catalog map; collect implication counterexamples and separating witnesses."""
    plan = plan or SamplingPlan()
    maps = maps or catalog()
    reports, counter = {}, {}
    for name, (T, space) in maps.items():
        rep = classify(T, space, plan=plan)
        reports[name] = rep
        bad = diagram_counterexamples(rep)
        if bad:
            counter[name] = bad
    separations = {
        "SPC\\NE": [n for n, r in reports.items() if r.passed("SPC") and not r.passed("NE")],
        "DC\\QNE": [n for n, r in reports.items() if r.passed("DC") and r.verdicts["QNE"].status == "fail"],
        "QNE\\NE": [n for n, r in reports.items() if r.passed("QNE") and not r.passed("NE")],
        "DC\\SPC": [n for n, r in reports.items() if r.passed("DC") and not r.passed("SPC")],
    }
    passed = not counter and all(separations[k] for k in ("SPC\\NE", "DC\\QNE"))
    return {"passed": passed, "counterexamples": counter, "separations": separations,
            "reports": {k: r.to_dict() for k, r in reports.items()}}


def p5_equivalence_check(T: Mapping, space: Space, k: float, plan: SamplingPlan | None = None,
                         rel_tol: float = 1e-9) -> CheckReport:
    """Pairwise agreement of SPC(k) and ENE(b = k/(1-k)) in a Euclidean space.

    A pair counts as a disagreement only if one inequality holds and the other
    fails, each by more than ``rel_tol`` relative to the larger side.
    """
    if not space.norm.is_euclidean:
        raise InputError("the SPC/ENE equivalence needs an inner-product (Euclidean) norm")
    if not 0 < k < 1:
        raise InputError("k must lie in (0, 1)")
    plan = plan or SamplingPlan()
    b = k / (1.0 - k)
    tuples = sample_tuples(C.SPC, T, space, plan).data
    ls, rs = evaluate(C.SPC, T, {"k": k}, tuples, space)
    le, re = evaluate(C.ENRICHED_NONEXPANSIVE, T, {"b": b}, tuples, space)

    def sign(lhs, rhs):
        scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), np.finfo(float).tiny)
        m = (rhs - lhs) / scale
        return np.where(m > rel_tol, 1, np.where(m < -rel_tol, -1, 0))

    s_spc, s_ene = sign(ls, rs), sign(le, re)
    decisive = (s_spc * s_ene) < 0
    n_bad = int(decisive.sum())
    witness = tuples[int(np.argmax(decisive))].tolist() if n_bad else None
    details = {"k": k, "b": b, "agreement_rate": 1.0 - n_bad / len(tuples),
               "spc_pass": int(np.sum(s_spc >= 0)), "ene_pass": int(np.sum(s_ene >= 0)),
               "undecided": int(np.sum((s_spc == 0) | (s_ene == 0)))}
    return CheckReport("p5-equivalence", n_bad == 0, float(n_bad), int(len(tuples)), witness, details)


def saturation_probe(class_id, T: Mapping, space: Space, lam_grid=None, plan: SamplingPlan | None = None,
                     consts: dict | None = None, fix_set=None):
    """First lam in the grid (default 1, 15/16, ..., 1/16) with T_lam in the class, else None.

    For ENRICHED_BANACH without constants the probe is the plain contraction
    test: b = 0 and the sampled Lipschitz estimate of T_lam must be < 1 - tol.
    """
    class_id = ClassId(class_id)
    plan = plan or SamplingPlan()
    grid = DEFAULT_LAMBDA_GRID if lam_grid is None else np.asarray(lam_grid, dtype=float)
    for lam in grid:
        Tl = T if lam == 1.0 else AveragedMapping(T, float(lam))
        if class_id == C.ENRICHED_BANACH and consts is None:
            tuples = sample_tuples(class_id, Tl, space, plan)
            theta, _ = estimate_theta(Tl, space, 0.0, tuples)
            if theta < 1.0 - plan.tol:
                cert = certify_tuples(class_id, Tl, space, {"b": 0.0, "theta": max(theta, 0.0)}, tuples, plan)
                if cert.passed:
                    return float(lam)
            continue
        if certify(class_id, Tl, space, consts or {}, plan, fix_set).passed:
            return float(lam)
    return None


def averaging_algebra_check(T: Mapping, plan: SamplingPlan | None = None, region=None) -> CheckReport:
    """Max of ||(T_lam)_mu(x) - T_{lam mu}(x)|| over sampled (x, lam, mu), including lam = 1 and mu = 1."""
    plan = plan or SamplingPlan()
    region = region or (T.domain if T.domain.sampleable else Box(-np.ones(T.dim), np.ones(T.dim)))
    rng = plan.rng(11)
    n = plan.n_samples
    X = sample_points(region, n, rng, "uniform")
    lam = 1.0 - rng.uniform(0.0, 1.0, n)  # (0, 1]
    mu = 1.0 - rng.uniform(0.0, 1.0, n)
    lam[: n // 10] = 1.0
    mu[n // 10: n // 5] = 1.0
    TX = T.evaluate(X)
    inner = (1.0 - lam)[:, None] * X + lam[:, None] * TX
    outer = (1.0 - mu)[:, None] * X + mu[:, None] * inner
    direct = (1.0 - lam * mu)[:, None] * X + (lam * mu)[:, None] * TX
    err = np.linalg.norm(outer - direct, axis=1)
    i = int(np.argmax(err))
    witness = None
    if err[i] > ALGEBRA_TOL:
        witness = {"x": X[i].tolist(), "lambda": float(lam[i]), "mu": float(mu[i])}
    return CheckReport("averaging-algebra", bool(err[i] <= ALGEBRA_TOL), float(err[i]), n, witness)
