"""Norms, quasi-norms, metrics and Takahashi convex structures on R^d."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .regions import Box, Region
from .reports import CheckReport
from .sampling import SamplingPlan, sample_pairs, sample_points
from .validation import as_point, as_points

NORM_KINDS = ("euclidean", "p", "quasi-p", "weighted-sup")
DEGENERATE = 1e-14


@dataclass(frozen=True)
class Norm:
    """A norm (``p >= 1``) or quasi-norm (``0 < p < 1``) on R^d.

    ``weights`` is only used by the weighted-sup kind.
    """

    kind: str = "euclidean"
    p: float = 2.0
    weights: tuple | None = None

    def __post_init__(self):
        if self.kind not in NORM_KINDS:
            raise InputError(f"unknown norm kind {self.kind!r}")
        if self.kind == "p" and not self.p >= 1:
            raise InputError("p-norm requires p >= 1")
        if self.kind == "quasi-p" and not 0 < self.p < 1:
            raise InputError("quasi-p-norm requires 0 < p < 1")
        if self.kind == "weighted-sup":
            if self.weights is None or any(w <= 0 for w in self.weights):
                raise InputError("weighted-sup norm needs positive weights")
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def modulus(self) -> float:
        """Analytic quasi-triangle constant C in ||x+y|| <= C(||x|| + ||y||)."""
        if self.kind == "quasi-p":
            return 2.0 ** (1.0 / self.p - 1.0)
        return 1.0

    @property
    def is_euclidean(self) -> bool:
        return self.kind == "euclidean" or (self.kind == "p" and self.p == 2)

    def __call__(self, V) -> np.ndarray | float:
        V = np.asarray(V, dtype=float)
        single = V.ndim <= 1
        A = np.abs(np.atleast_2d(V))
        if self.kind == "euclidean":
            out = np.sqrt(np.einsum("ij,ij->i", A, A))
        elif self.kind == "weighted-sup":
            if len(self.weights) != A.shape[1]:
                raise InputError("weight count does not match dimension")
            out = (A * np.asarray(self.weights)).max(axis=1)
        elif self.p == 1:
            out = A.sum(axis=1)
        elif self.p == 2:
            out = np.sqrt(np.einsum("ij,ij->i", A, A))
        else:
            out = (A**self.p).sum(axis=1) ** (1.0 / self.p)
        return float(out[0]) if single else out

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("p", "quasi-p"):
            d["p"] = self.p
        if self.kind == "weighted-sup":
            d["weights"] = list(self.weights)
        return d


def norm_eval(norm: Norm, v) -> float:
    """Norm of a single finite point."""
    return norm(as_point(v))


@dataclass(frozen=True)
class Metric:
    """A metric on R^d built from a norm.

    ``norm``      d(x, y) = ||x - y||
    ``scaled``    d(x, y) = factor * ||x - y||
    ``truncated`` d(x, y) = min(||x - y||, cap)
    """

    kind: str = "norm"
    norm: Norm = field(default_factory=Norm)
    factor: float = 1.0
    cap: float = 1.0

    def __post_init__(self):
        if self.kind not in ("norm", "scaled", "truncated"):
            raise InputError(f"unknown metric kind {self.kind!r}")
        if self.kind == "scaled" and not self.factor > 0:
            raise InputError("scaled metric needs a positive factor")
        if self.kind == "truncated" and not self.cap > 0:
            raise InputError("truncated metric needs a positive cap")

    def __call__(self, X, Y):
        r = self.norm(np.asarray(X, dtype=float) - np.asarray(Y, dtype=float))
        if self.kind == "scaled":
            return self.factor * r
        if self.kind == "truncated":
            return np.minimum(r, self.cap)
        return r

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "norm": self.norm.to_dict()}
        if self.kind == "scaled":
            d["factor"] = self.factor
        if self.kind == "truncated":
            d["cap"] = self.cap
        return d


@dataclass(frozen=True)
class ConvexStructure:
    """W(x, y; lam).  The linear kind is lam*x + (1-lam)*y; ``custom`` wraps an evaluator."""

    kind: str = "linear"
    evaluator: object = None

    def __post_init__(self):
        if self.kind not in ("linear", "custom"):
            raise InputError(f"unknown convex structure {self.kind!r}")
        if self.kind == "custom" and not callable(self.evaluator):
            raise InputError("custom convex structure needs an evaluator")

    def __call__(self, X, Y, lam):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        lam = np.asarray(lam, dtype=float)
        if X.ndim == 2 and lam.ndim == 1:
            lam = lam[:, None]
        if self.kind == "linear":
            return lam * X + (1.0 - lam) * Y
        return self.evaluator(X, Y, lam)

    def to_dict(self) -> dict:
        return {"kind": self.kind}


def w_eval(W: ConvexStructure, x, y, lam) -> np.ndarray:
    x = as_point(x)
    y = as_point(y, x.size)
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"convex-structure weight {lam} outside [0, 1]")
    return np.asarray(W(x, y, float(lam)), dtype=float)


@dataclass(frozen=True)
class Space:
    """The ambient setting handed to checks and solvers."""

    norm: Norm = field(default_factory=Norm)
    region: Region | None = None
    metric: Metric | None = None
    structure: ConvexStructure = field(default_factory=ConvexStructure)

    @property
    def dist(self) -> Metric:
        return self.metric if self.metric is not None else Metric("norm", self.norm)

    @property
    def dim(self) -> int:
        if self.region is None:
            raise InputError("space has no region")
        return self.region.dim

    def to_dict(self) -> dict:
        return {
            "norm": self.norm.to_dict(),
            "metric": self.dist.to_dict(),
            "structure": self.structure.to_dict(),
            "region": None if self.region is None else self.region.to_dict(),
        }


def quasinorm_modulus(norm: Norm, plan: SamplingPlan | None = None, dim: int = 2) -> tuple[float, float]:
    """Return ``(empirical C, analytic C)``.

    The empirical value is the sampled sup of ||x+y|| / (||x|| + ||y||) over
    pairs in [-1, 1]^dim; pairs with a vanishing denominator are skipped.
    """
    plan = plan or SamplingPlan(n_samples=100_000)
    if plan.n_samples < 1000:
        raise InputError("modulus estimation needs at least 1000 pairs")
    rng = plan.rng(0)
    box = Box(-np.ones(dim), np.ones(dim))
    X = sample_points(box, plan.n_samples, rng, "uniform")
    Y = sample_points(box, plan.n_samples, rng, "uniform")
    # sparse directions reach the sup for quasi-norms
    k = plan.n_samples // 4
    X[:k] *= (rng.random((k, dim)) < 0.5)
    Y[:k] *= (rng.random((k, dim)) < 0.5)
    den = norm(X) + norm(Y)
    keep = den > DEGENERATE
    ratio = norm(X[keep] + Y[keep]) / den[keep]
    return float(ratio.max()), norm.modulus


def w_check(W: ConvexStructure, metric: Metric, domain: Region, plan: SamplingPlan | None = None) -> CheckReport:
    """Sampled check of d(u, W(x,y;lam)) <= lam d(u,x) + (1-lam) d(u,y)."""
    plan = plan or SamplingPlan()
    rng = plan.rng(1)
    n = plan.n_samples
    P = sample_pairs(domain, n, rng, plan.distribution)
    X, Y = P[:, 0], P[:, 1]
    U = np.where((rng.random(n) < 0.25)[:, None], Y, sample_points(domain, n, rng, plan.distribution))
    lam = rng.random(n)
    lam[: n // 10] = rng.choice([0.0, 0.5, 1.0], n // 10)
    lhs = np.atleast_1d(metric(U, W(X, Y, lam)))
    rhs = lam * np.atleast_1d(metric(U, X)) + (1 - lam) * np.atleast_1d(metric(U, Y))
    viol = lhs - rhs
    i = int(np.argmax(viol))
    worst = float(viol[i])
    passed = bool(np.all(viol <= plan.tol * (1.0 + np.abs(rhs))))
    witness = None if passed else {"u": U[i].tolist(), "x": X[i].tolist(), "y": Y[i].tolist(), "lambda": float(lam[i])}
    return CheckReport("convex-structure", passed, max(worst, 0.0), n, witness)


def check_metric_axioms(metric: Metric, domain: Region, plan: SamplingPlan | None = None) -> CheckReport:
    """Symmetry, identity and triangle inequality on sampled triples."""
    plan = plan or SamplingPlan()
    rng = plan.rng(2)
    P = sample_pairs(domain, plan.n_samples, rng, plan.distribution)
    X, Y = P[:, 0], P[:, 1]
    Z = sample_points(domain, plan.n_samples, rng, plan.distribution)
    dxy, dyx = metric(X, Y), metric(Y, X)
    tri = metric(X, Z) - (dxy + metric(Y, Z))
    sym = np.abs(dxy - dyx)
    ident = np.abs(metric(X, X))
    worst = float(max(tri.max(), sym.max(), ident.max()))
    return CheckReport("metric-axioms", worst <= 1e-12, max(worst, 0.0), plan.n_samples)


def check_subordination(metric: Metric, norm: Norm, domain: Region, plan: SamplingPlan | None = None) -> CheckReport:
    """Sampled check of d(x, y) <= ||x - y|| (the pairing a Maia-type run needs)."""
    plan = plan or SamplingPlan()
    P = sample_pairs(domain, plan.n_samples, plan.rng(3), plan.distribution)
    viol = metric(P[:, 0], P[:, 1]) - norm(P[:, 0] - P[:, 1])
    i = int(np.argmax(viol))
    passed = bool(viol[i] <= 1e-12)
    witness = None if passed else P[i].tolist()
    return CheckReport("subordination", passed, max(float(viol[i]), 0.0), plan.n_samples, witness)

