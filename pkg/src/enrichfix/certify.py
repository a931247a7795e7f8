"""Sampled certification of enriched contraction conditions.

Every class reduces to a pointwise inequality ``lhs <= rhs`` on tuples of
points.  A certificate records the worst sampled margin ``rhs - lhs`` and the
largest ratio ``lhs / rhs``; it means "not falsified at N samples", never a
proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .comparison import ComparisonFn, PsiFn
from .errors import CertificateError, DomainError, InputError, SchemaError
from .mappings import Mapping, PresicMapping, PresicWeights
from .regions import LabeledUnion
from .reports import CheckReport
from .sampling import SamplingPlan, sample_chains, sample_cyclic_pairs, sample_fix_pairs, sample_pairs, sample_points
from .spaces import DEGENERATE, Norm, Space


class ClassId(str, Enum):
    ENRICHED_BANACH = "ENRICHED_BANACH"
    ENRICHED_KANNAN = "ENRICHED_KANNAN"
    ENRICHED_CRR = "ENRICHED_CRR"
    ENRICHED_CHATTERJEA = "ENRICHED_CHATTERJEA"
    ENRICHED_ALMOST = "ENRICHED_ALMOST"
    ENRICHED_PHI = "ENRICHED_PHI"
    ENRICHED_PSI = "ENRICHED_PSI"
    CYCLIC_ENRICHED_PHI = "CYCLIC_ENRICHED_PHI"
    ENRICHED_NONEXPANSIVE = "ENRICHED_NONEXPANSIVE"
    ENRICHED_PRESIC = "ENRICHED_PRESIC"
    CONVEX_METRIC_ENRICHED = "CONVEX_METRIC_ENRICHED"
    QUASI_BANACH_ENRICHED = "QUASI_BANACH_ENRICHED"
    NE = "NE"
    QNE = "QNE"
    SPC = "SPC"
    DC = "DC"


C = ClassId

SCHEMAS = {
    C.ENRICHED_BANACH: ("b", "theta"),
    C.ENRICHED_KANNAN: ("k", "a"),
    C.ENRICHED_CRR: ("k", "a", "b"),
    C.ENRICHED_CHATTERJEA: ("k", "b"),
    C.ENRICHED_ALMOST: ("b", "theta", "L"),
    C.ENRICHED_PHI: ("b", "phi"),
    C.ENRICHED_PSI: ("b", "psi"),
    C.CYCLIC_ENRICHED_PHI: ("b", "phi"),
    C.ENRICHED_NONEXPANSIVE: ("b",),
    C.ENRICHED_PRESIC: ("b", "theta"),
    C.CONVEX_METRIC_ENRICHED: ("lam", "c"),
    C.QUASI_BANACH_ENRICHED: ("b", "theta"),
    C.NE: (),
    C.QNE: (),
    C.SPC: ("k",),
    C.DC: ("k",),
}

FIX_CLASSES = (C.QNE, C.DC)

# b in {0} U 64 log-spaced points in [1e-3, 1e3] U {0.5, 1, 1.5, ..., 4}
DEFAULT_B_GRID = np.unique(np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 64), np.arange(1, 9) / 2.0]))


def _req(consts, key, low=None, high=None, low_open=False, high_open=False):
    v = consts[key]
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise SchemaError(f"constant {key} must be a real number") from None
    if not np.isfinite(v):
        raise SchemaError(f"constant {key} must be finite")
    if low is not None and (v < low or (low_open and v == low)):
        raise SchemaError(f"infeasible constant {key}={v}")
    if high is not None and (v > high or (high_open and v == high)):
        raise SchemaError(f"infeasible constant {key}={v}")
    return v


def validate_constants(class_id, consts: dict | None) -> dict:
    """Check keys against the class schema and the feasibility conditions; return a clean copy."""
    class_id = ClassId(class_id)
    consts = dict(consts or {})
    expected = set(SCHEMAS[class_id])
    if set(consts) != expected:
        raise SchemaError(f"{class_id.value} expects constants {sorted(expected)}, got {sorted(consts)}")
    out = {}
    if class_id in (C.ENRICHED_BANACH, C.QUASI_BANACH_ENRICHED):
        out["b"] = _req(consts, "b", 0)
        out["theta"] = _req(consts, "theta", 0, out["b"] + 1, high_open=True)
    elif class_id == C.ENRICHED_KANNAN:
        out["k"] = _req(consts, "k", 0)
        out["a"] = _req(consts, "a", 0, 0.5, high_open=True)
    elif class_id == C.ENRICHED_CRR:
        out["k"] = _req(consts, "k", 0)
        out["a"] = _req(consts, "a", 0)
        out["b"] = _req(consts, "b", 0)
        if not out["a"] / (out["k"] + 1) + 2 * out["b"] < 1:
            raise SchemaError("infeasible: need a/(k+1) + 2b < 1")
    elif class_id == C.ENRICHED_CHATTERJEA:
        out["k"] = _req(consts, "k", 0)
        out["b"] = _req(consts, "b", 0, 0.5, high_open=True)
    elif class_id == C.ENRICHED_ALMOST:
        out["b"] = _req(consts, "b", 0)
        out["theta"] = _req(consts, "theta", 0, out["b"] + 1, low_open=True, high_open=True)
        out["L"] = _req(consts, "L", 0)
    elif class_id in (C.ENRICHED_PHI, C.CYCLIC_ENRICHED_PHI):
        out["b"] = _req(consts, "b", 0)
        if not isinstance(consts["phi"], ComparisonFn):
            raise SchemaError("phi must be a ComparisonFn")
        out["phi"] = consts["phi"]
    elif class_id == C.ENRICHED_PSI:
        out["b"] = _req(consts, "b", 0)
        if not isinstance(consts["psi"], PsiFn):
            raise SchemaError("psi must be a PsiFn")
        out["psi"] = consts["psi"]
    elif class_id == C.ENRICHED_NONEXPANSIVE:
        out["b"] = _req(consts, "b", 0)
    elif class_id == C.ENRICHED_PRESIC:
        b = np.asarray(consts["b"], dtype=float).ravel()
        th = np.asarray(consts["theta"], dtype=float).ravel()
        if b.shape != th.shape or b.size < 1:
            raise SchemaError("Presic constants need equal-length b and theta lists")
        if np.any(b < 0) or np.any(th < 0) or not np.all(np.isfinite(np.r_[b, th])):
            raise SchemaError("Presic constants must be finite and nonnegative")
        if not np.sum(th - b) < 1:
            raise SchemaError("infeasible: need sum(theta_i - b_i) < 1")
        out["b"], out["theta"] = b.tolist(), th.tolist()
    elif class_id == C.CONVEX_METRIC_ENRICHED:
        out["lam"] = _req(consts, "lam", 0, 1, high_open=True)
        out["c"] = _req(consts, "c", 0, 1, high_open=True)
    elif class_id in (C.SPC, C.DC):
        out["k"] = _req(consts, "k", 0, 1, low_open=class_id == C.DC, high_open=True)
    return out


def contraction_factor(class_id, consts: dict) -> float | None:
    """Rate constant of T_lam under the derived lambda policy, or None if the class has no rate."""
    class_id = ClassId(class_id)
    if class_id in (C.ENRICHED_BANACH, C.QUASI_BANACH_ENRICHED, C.ENRICHED_ALMOST):
        return consts["theta"] / (consts["b"] + 1)
    if class_id == C.ENRICHED_KANNAN:
        return consts["a"] / (1 - consts["a"])
    if class_id == C.ENRICHED_CRR:
        k, a, b = consts["k"], consts["a"], consts["b"]
        return (a + (k + 1) * b) / ((k + 1) * (1 - b))
    if class_id == C.ENRICHED_CHATTERJEA:
        return consts["b"] / (1 - consts["b"])
    if class_id == C.CONVEX_METRIC_ENRICHED:
        return consts["c"]
    return None


def lambda_policy(class_id, consts: dict):
    """Averaging weight implied by the constants.

    b-schema classes use 1/(b+1), k-schema classes 1/(k+1); the convex-metric
    class stores its own weight; Presic returns the full weight vector.
    """
    class_id = ClassId(class_id)
    if class_id == C.ENRICHED_PRESIC:
        return PresicWeights.default(len(consts["b"]), float(np.sum(consts["b"]))).to_list()
    if class_id == C.CONVEX_METRIC_ENRICHED:
        return consts["lam"]
    if class_id in (C.ENRICHED_KANNAN, C.ENRICHED_CRR, C.ENRICHED_CHATTERJEA):
        return 1.0 / (consts["k"] + 1.0)
    if class_id in (C.SPC, C.DC):
        return 1.0 - consts["k"]
    if class_id in (C.NE, C.QNE):
        return 0.5
    return 1.0 / (consts["b"] + 1.0)


def _arity(class_id, T) -> int:
    if ClassId(class_id) == C.ENRICHED_PRESIC:
        return T.arity + 1
    return 2


def evaluate(class_id, T, consts: dict, tuples: np.ndarray, space: Space | None = None):
    """Vectorized ``(lhs, rhs)`` for every tuple in ``tuples`` (shape ``(n, m, d)``)."""
    class_id = ClassId(class_id)
    space = space or Space()
    nrm = space.norm
    tuples = np.asarray(tuples, dtype=float)
    if tuples.ndim != 3 or tuples.shape[1] != _arity(class_id, T):
        raise InputError(f"{class_id.value} needs tuples of {_arity(class_id, T)} points, got shape {tuples.shape}")
    if class_id == C.ENRICHED_PRESIC:
        k = T.arity
        b = np.asarray(consts["b"])
        th = np.asarray(consts["theta"])
        diffs = tuples[:, :-1] - tuples[:, 1:]
        lead = np.einsum("k,nkd->nd", b, diffs)
        lhs = nrm(lead + T.evaluate(tuples[:, :k]) - T.evaluate(tuples[:, 1:]))
        rhs = np.stack([nrm(diffs[:, i]) for i in range(k)], axis=1) @ th
        return lhs, rhs

    X, Y = tuples[:, 0], tuples[:, 1]
    TX = T.evaluate(X)
    TY = Y if class_id in FIX_CLASSES else T.evaluate(Y)
    D = X - Y
    nd = nrm(D)
    if class_id in (C.ENRICHED_BANACH, C.QUASI_BANACH_ENRICHED):
        return nrm(consts["b"] * D + TX - TY), consts["theta"] * nd
    if class_id == C.ENRICHED_KANNAN:
        return nrm(consts["k"] * D + TX - TY), consts["a"] * (nrm(X - TX) + nrm(Y - TY))
    if class_id == C.ENRICHED_CRR:
        k, a, b = consts["k"], consts["a"], consts["b"]
        return nrm(k * D + TX - TY), a * nd + b * (nrm(X - TX) + nrm(Y - TY))
    if class_id == C.ENRICHED_CHATTERJEA:
        k, b = consts["k"], consts["b"]
        return nrm(k * D + TX - TY), b * (nrm((k + 1) * D + Y - TY) + nrm((k + 1) * (-D) + X - TX))
    if class_id == C.ENRICHED_ALMOST:
        b = consts["b"]
        return nrm(b * D + TX - TY), consts["theta"] * nd + consts["L"] * nrm(b * D + TX - Y)
    if class_id in (C.ENRICHED_PHI, C.CYCLIC_ENRICHED_PHI):
        b = consts["b"]
        return nrm(b * D + TX - TY), (b + 1) * np.asarray(consts["phi"](nd))
    if class_id == C.ENRICHED_PSI:
        b = consts["b"]
        return nrm(b * D + TX - TY), (b + 1) * np.asarray(consts["psi"](nd)) * nd
    if class_id == C.ENRICHED_NONEXPANSIVE:
        b = consts["b"]
        return nrm(b * D + TX - TY), (b + 1) * nd
    if class_id == C.CONVEX_METRIC_ENRICHED:
        d, W, lam = space.dist, space.structure, consts["lam"]
        return np.atleast_1d(d(W(X, TX, lam), W(Y, TY, lam))), consts["c"] * np.atleast_1d(d(X, Y))
    if class_id in (C.NE, C.QNE):
        return nrm(TX - TY), nd
    if class_id == C.SPC:
        return nrm(TX - TY) ** 2, nd**2 + consts["k"] * nrm(D - TX + TY) ** 2
    if class_id == C.DC:
        return nrm(TX - TY) ** 2, nd**2 + consts["k"] * nrm(X - TX) ** 2
    raise InputError(f"no pointwise check for {class_id}")


def check_pointwise(class_id, T, consts: dict | None, args, space: Space | None = None,
                    validate: bool = True) -> float:
    """Signed margin ``rhs - lhs`` at one tuple of points (>= 0 means the inequality holds).

    For QNE/DC the second point must be a fixed point of T; for Presic pass
    k+1 points.
    """
    consts = validate_constants(class_id, consts) if validate else dict(consts or {})
    tup = np.asarray([np.atleast_1d(np.asarray(a, dtype=float)) for a in args])[None]
    lhs, rhs = evaluate(class_id, T, consts, tup, space)
    return float(rhs[0] - lhs[0])


@dataclass(frozen=True)
class Tuples:
    """Sampled argument tuples and the degenerate mask used for ratio statistics."""

    data: np.ndarray
    degenerate: np.ndarray


def sample_tuples(class_id, T, space: Space, plan: SamplingPlan, fix_set=None, stream: int = 0) -> Tuples:
    class_id = ClassId(class_id)
    if space.region is None:
        raise InputError("space needs a sampling region")
    rng = plan.rng(stream)
    n = plan.n_samples
    region = space.region
    if class_id in FIX_CLASSES:
        fix = _fix_points(T, fix_set)
        data = sample_fix_pairs(region, fix, n, rng, plan.distribution)
    elif class_id == C.CYCLIC_ENRICHED_PHI:
        if not isinstance(region, LabeledUnion):
            raise InputError("cyclic certification needs a labeled-union region")
        data = sample_cyclic_pairs(region, n, rng, plan.distribution)
    elif class_id == C.ENRICHED_PRESIC:
        data = sample_chains(region, n, T.arity + 1, rng, plan.distribution)
    else:
        data = sample_pairs(region, n, rng, plan.distribution)
    return Tuples(data, _degenerate(data, space.norm))


def _degenerate(data, norm: Norm) -> np.ndarray:
    gaps = np.stack([norm(data[:, i] - data[:, i + 1]) for i in range(data.shape[1] - 1)], axis=1)
    return np.all(gaps < DEGENERATE, axis=1)


def _fix_points(T, fix_set):
    if fix_set is not None:
        return np.atleast_2d(np.asarray(fix_set, dtype=float))
    if getattr(T, "fixed_points", None) is not None:
        return T.fixed_points
    raise InputError("QNE/DC checks need a fixed-point set (from the solver or catalog metadata)")


def _check_self_map(T, tuples: np.ndarray):
    if isinstance(T, PresicMapping):
        return
    X = tuples.reshape(-1, tuples.shape[-1])
    inside = T.domain.contains(T.evaluate(X))
    if not np.all(inside):
        i = int(np.argmin(inside))
        raise DomainError(f"sampled point {X[i].tolist()} is mapped outside the domain")


@dataclass
class Certificate:
    """Result of sampling one contraction condition."""

    class_id: ClassId
    constants: dict
    passed: bool
    n_samples: int
    seed: int
    tolerance: float
    distribution: str
    min_margin: float
    argmin_tuple: list
    max_ratio: float
    witness: list | None
    tightest_tuple: list | None
    lam: object = None
    factor: float | None = None
    factor_heuristic: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def feasibility_margin(self) -> float:
        """1 - sup(lhs/rhs): nonnegative for a passing certificate (up to tolerance)."""
        return 1.0 - self.max_ratio

    def to_dict(self) -> dict:
        consts = {k: (v.to_dict() if hasattr(v, "to_dict") else v) for k, v in self.constants.items()}
        return {
            "class": self.class_id.value,
            "constants": consts,
            "passed": self.passed,
            "samples": self.n_samples,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "distribution": self.distribution,
            "min_margin": self.min_margin,
            "argmin_tuple": self.argmin_tuple,
            "max_ratio": self.max_ratio,
            "feasibility_margin": self.feasibility_margin,
            "witness": self.witness,
            "tightest_tuple": self.tightest_tuple,
            "lambda": self.lam,
            "factor": self.factor,
            "factor_heuristic": self.factor_heuristic,
            **({"extra": self.extra} if self.extra else {}),
        }


def certify_tuples(class_id, T, space: Space, consts: dict, tuples: Tuples, plan: SamplingPlan) -> Certificate:
    """Build a certificate from already sampled tuples (lets callers share samples)."""
    class_id = ClassId(class_id)
    lhs, rhs = evaluate(class_id, T, consts, tuples.data, space)
    margin = rhs - lhs
    slack = plan.tol * (1.0 + np.abs(rhs))
    violating = margin < -slack
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > slack, np.inf, 0.0))
    ratio = np.where(tuples.degenerate, -np.inf, ratio)
    i_min = int(np.argmin(margin))
    i_max = int(np.argmax(ratio))
    max_ratio = float(ratio[i_max]) if ratio[i_max] > -np.inf else 0.0
    witness = None
    if violating.any():
        cand = np.where(violating, ratio, -np.inf)
        j = int(np.argmax(cand))
        if cand[j] == -np.inf:
            j = int(np.argmin(np.where(violating, margin, np.inf)))
        witness = tuples.data[j].tolist()
    passed = not violating.any()
    lam = factor = None
    if passed:
        lam = lambda_policy(class_id, consts)
        factor = contraction_factor(class_id, consts)
    return Certificate(
        class_id=class_id,
        constants=dict(consts),
        passed=passed,
        n_samples=int(len(margin)),
        seed=int(plan.seed),
        tolerance=float(plan.tol),
        distribution=plan.distribution,
        min_margin=float(margin[i_min]),
        argmin_tuple=tuples.data[i_min].tolist(),
        max_ratio=max_ratio,
        witness=witness,
        tightest_tuple=tuples.data[i_max].tolist(),
        lam=lam,
        factor=factor,
        factor_heuristic=class_id == C.QUASI_BANACH_ENRICHED,
    )


def certify(class_id, T, space: Space, consts: dict | None = None, plan: SamplingPlan | None = None,
            fix_set=None) -> Certificate:
    """Sample the class inequality for T over ``space.region``."""
    class_id = ClassId(class_id)
    consts = validate_constants(class_id, consts)
    plan = plan or SamplingPlan()
    tuples = sample_tuples(class_id, T, space, plan, fix_set)
    _check_self_map(T, tuples.data)
    return certify_tuples(class_id, T, space, consts, tuples, plan)


def recheck(cert: Certificate, T, space: Space | None = None) -> dict:
    """Re-evaluate the stored argmin tuple and witness pointwise (no resampling).

    For a failed b-grid search the witness is re-scored as the factor
    ||b(x-y) + Tx - Ty|| / ((b+1)||x-y||), which is >= 1 - tol when infeasible.
    """
    out = {"argmin_margin": check_pointwise(cert.class_id, T, cert.constants, cert.argmin_tuple, space, False)}
    if cert.witness is None:
        return out
    if "factor_hat" in cert.extra and not cert.passed:
        b = cert.constants["b"]
        tup = np.asarray(cert.witness, dtype=float)[None]
        lhs, rhs = evaluate(cert.class_id, T, {"b": b, "theta": b + 1.0}, tup, space)
        out["witness_factor"] = float(lhs[0] / rhs[0]) if rhs[0] > 0 else float("inf")
    else:
        out["witness_margin"] = check_pointwise(cert.class_id, T, cert.constants, cert.witness, space, False)
    return out


def estimate_theta(T: Mapping, space: Space, b: float, tuples: Tuples):
    """Sampled sup of ||b(x-y) + Tx - Ty|| / ||x-y|| and the pair attaining it."""
    X, Y = tuples.data[:, 0], tuples.data[:, 1]
    keep = ~tuples.degenerate
    num = space.norm(b * (X - Y) + T.evaluate(X) - T.evaluate(Y))
    den = space.norm(X - Y)
    ratio = np.where(keep, num / np.where(keep, den, 1.0), -np.inf)
    i = int(np.argmax(ratio))
    return float(ratio[i]), tuples.data[i].tolist()


def optimize_banach_certificate(T: Mapping, space: Space, b_grid=None, plan: SamplingPlan | None = None,
                                class_id=C.ENRICHED_BANACH) -> Certificate:
    """Pick b on the grid minimizing theta_hat(b)/(b+1) and certify there.

    A grid point counts as feasible only if theta_hat(b)/(b+1) < 1 - tol; if
    none is, a failed certificate at the best grid point is returned with the
    worst pair as witness.
    """
    plan = plan or SamplingPlan()
    grid = DEFAULT_B_GRID if b_grid is None else np.asarray(b_grid, dtype=float)
    if grid.size == 0 or np.any(grid < 0):
        raise InputError("b grid must be non-empty and nonnegative")
    tuples = sample_tuples(class_id, T, space, plan)
    _check_self_map(T, tuples.data)
    best = None
    for b in grid:
        theta, pair = estimate_theta(T, space, float(b), tuples)
        c = theta / (b + 1.0)
        if best is None or c < best[0]:
            best = (c, float(b), theta, pair)
    c, b, theta, pair = best
    scan = {"b_grid_size": int(grid.size), "theta_hat": theta, "factor_hat": c}
    if c < 1.0 - plan.tol:
        consts = {"b": b, "theta": max(theta, 0.0)}
        cert = certify_tuples(class_id, T, space, consts, tuples, plan)
        cert.extra.update(scan)
        return cert
    consts = {"b": b, "theta": theta}
    cert = certify_tuples(class_id, T, space, consts, tuples, plan)
    cert.passed = False
    cert.lam = cert.factor = None
    cert.witness = pair
    cert.extra.update(scan, reason="theta_hat(b) >= b + 1 for every grid point")
    return cert


def check_cyclic_representation(T: Mapping, regions, plan: SamplingPlan | None = None) -> CheckReport:
    """Sampled check that T maps A_i into A_{i+1} (A_{m+1} = A_1)."""
    plan = plan or SamplingPlan()
    parts = regions.parts if isinstance(regions, LabeledUnion) else list(regions)
    if not parts:
        raise InputError("need at least one region")
    rng = plan.rng(7)
    worst, witness, total = 0, None, 0
    per = max(plan.n_samples // len(parts), 1)
    for i, A in enumerate(parts):
        nxt = parts[(i + 1) % len(parts)]
        X = np.vstack([sample_points(A, per, rng, plan.distribution), A.grid(9)])
        Y = T.evaluate(X, check=False)
        bad = ~nxt.contains(Y)
        total += len(X)
        if bad.any():
            worst += int(bad.sum())
            if witness is None:
                witness = {"region": i + 1, "x": X[np.argmax(bad)].tolist(), "Tx": Y[np.argmax(bad)].tolist()}
    return CheckReport("cyclic-representation", worst == 0, float(worst), total, witness)


def derive_lambda(cert: Certificate):
    """Averaging weight to run the solver with; refuses failed certificates."""
    if not cert.passed:
        raise CertificateError("cannot derive lambda from a failed certificate")
    return lambda_policy(cert.class_id, cert.constants)


def certificate_from_dict(d: dict) -> Certificate:
    from .reports import restore_float

    cid = ClassId(d["class"])
    consts = dict(d["constants"])
    if "phi" in consts:
        consts["phi"] = ComparisonFn(**consts["phi"])
    if "psi" in consts:
        consts["psi"] = PsiFn(**consts["psi"])
    return Certificate(
        class_id=cid, constants=consts, passed=d["passed"], n_samples=d["samples"], seed=d["seed"],
        tolerance=d["tolerance"], distribution=d["distribution"], min_margin=restore_float(d["min_margin"]),
        argmin_tuple=d["argmin_tuple"], max_ratio=restore_float(d["max_ratio"]), witness=d["witness"],
        tightest_tuple=d["tightest_tuple"], lam=d["lambda"], factor=d["factor"],
        factor_heuristic=d["factor_heuristic"], extra=d.get("extra", {}),
    )
