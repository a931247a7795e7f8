"""Catalog mappings, averaged operators and k-ary (Presic) mappings.

Every mapping evaluates on a single point ``(d,)`` or a batch ``(n, d)``.
Inputs are checked against the mapping's domain with a 1e-12 boundary slack.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, InputError
from .regions import BOUNDARY_TOL, Box, Region, WholeSpace
from .sampling import SamplingPlan, sample_points
from .validation import as_point, as_points, check_scalar_in

SELF_MAP_PLAN = SamplingPlan(n_samples=4000, distribution="mixed", seed=0)


class Mapping:
    """Self-map of a region of R^d."""

    kind = "mapping"
    fixed_points: np.ndarray | None = None

    def __init__(self, domain: Region, fixed_points=None, check_self_map: bool = True):
        self.domain = domain
        self.dim = domain.dim
        if fixed_points is not None:
            self.fixed_points = as_points(fixed_points, self.dim)
        if check_self_map:
            self.verify_self_map()

    def _apply(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, X, check: bool = True) -> np.ndarray:
        """Batch evaluation on an ``(n, d)`` array."""
        if check:
            self.domain.check_contains(X)
        return self._apply(X)

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 2:
            return self.evaluate(as_points(arr, self.dim))
        p = as_point(arr, self.dim)
        return self.evaluate(p[None, :])[0]

    def verify_self_map(self, plan: SamplingPlan = SELF_MAP_PLAN) -> None:
        if not self.domain.sampleable:
            return
        X = sample_points(self.domain, plan.n_samples, plan.rng(99), plan.distribution)
        X = np.vstack([X, self.domain.grid(9)])
        Y = self._apply(X)
        inside = self.domain.contains(Y, BOUNDARY_TOL)
        if not np.all(inside):
            i = int(np.argmin(inside))
            raise DomainError(f"{self.kind} is not a self-map: T({X[i].tolist()}) = {Y[i].tolist()}")

    def to_dict(self) -> dict:
        raise NotImplementedError


class Affine(Mapping):
    """x -> A x + c."""

    kind = "affine"

    def __init__(self, A, c=None, domain: Region | None = None, **kw):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        d = self.A.shape[0]
        if self.A.shape != (d, d):
            raise InputError("affine map needs a square matrix")
        self.c = np.zeros(d) if c is None else as_point(c, d)
        super().__init__(domain or WholeSpace(d), **kw)

    def _apply(self, X):
        return X @ self.A.T + self.c

    def to_dict(self):
        return {"kind": "affine", "A": self.A.tolist(), "c": self.c.tolist(), "domain": self.domain.to_dict()}


class Reflection1D(Mapping):
    """x -> 1 - x on [0, 1]."""

    kind = "reflection-1d"

    def __init__(self, domain: Region | None = None, **kw):
        kw.setdefault("fixed_points", [[0.5]])
        super().__init__(domain or Box([0.0], [1.0]), **kw)

    def _apply(self, X):
        return 1.0 - X

    def to_dict(self):
        return {"kind": self.kind, "domain": self.domain.to_dict()}


class Reciprocal1D(Mapping):
    """x -> 1/x on [1/2, 2]."""

    kind = "reciprocal-1d"

    def __init__(self, domain: Region | None = None, **kw):
        kw.setdefault("fixed_points", [[1.0]])
        super().__init__(domain or Box([0.5], [2.0]), **kw)

    def _apply(self, X):
        return 1.0 / X

    def to_dict(self):
        return {"kind": self.kind, "domain": self.domain.to_dict()}


class NegateScale1D(Mapping):
    """x -> -x/2."""

    kind = "negate-scale-1d"

    def __init__(self, domain: Region | None = None, **kw):
        kw.setdefault("fixed_points", [[0.0]])
        super().__init__(domain or Box([-1.0], [1.0]), **kw)

    def _apply(self, X):
        return -0.5 * X

    def to_dict(self):
        return {"kind": self.kind, "domain": self.domain.to_dict()}


class PiecewiseAffine1D(Mapping):
    """Piecewise x -> slope*x + intercept on [a_i, a_{i+1}); the last piece is closed."""

    kind = "piecewise-affine-1d"

    def __init__(self, breakpoints, pieces, **kw):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.pieces = np.asarray(pieces, dtype=float).reshape(-1, 2)
        if len(self.breakpoints) != len(self.pieces) + 1:
            raise InputError("need one more breakpoint than pieces")
        if np.any(np.diff(self.breakpoints) <= 0):
            raise InputError("breakpoints must be strictly increasing")
        super().__init__(Box(self.breakpoints[:1], self.breakpoints[-1:]), **kw)

    def _apply(self, X):
        idx = np.clip(np.searchsorted(self.breakpoints, X[:, 0], side="right") - 1, 0, len(self.pieces) - 1)
        slope, icpt = self.pieces[idx, 0], self.pieces[idx, 1]
        return (slope * X[:, 0] + icpt)[:, None]

    def to_dict(self):
        return {"kind": self.kind, "breakpoints": self.breakpoints.tolist(), "pieces": self.pieces.tolist()}


def ex_ac2() -> PiecewiseAffine1D:
    """1 - x on [0, 2/3), 2 - x on [2/3, 4/3]; fixed points 1/2 and 1."""
    return PiecewiseAffine1D([0.0, 2.0 / 3.0, 4.0 / 3.0], [(-1.0, 1.0), (-1.0, 2.0)], fixed_points=[[0.5], [1.0]])


def translation(dim: int = 1, shift: float = 1.0) -> Affine:
    """x -> x + shift on R^dim (fixed-point free)."""
    return Affine(np.eye(dim), np.full(dim, shift))


class Composed(Mapping):
    """Apply ``maps[0]``, then ``maps[1]``, ..."""

    kind = "composed"

    def __init__(self, maps, **kw):
        self.maps = list(maps)
        if not self.maps:
            raise InputError("composition needs at least one map")
        kw.setdefault("check_self_map", False)
        super().__init__(self.maps[0].domain, **kw)

    def _apply(self, X):
        for m in self.maps:
            X = m.evaluate(X)
        return X

    def to_dict(self):
        return {"kind": self.kind, "maps": [m.to_dict() for m in self.maps]}


class AveragedMapping(Mapping):
    """T_lam = (1 - lam) I + lam T, sharing the fixed points of T."""

    kind = "averaged"

    def __init__(self, base: Mapping, lam: float):
        self.base = base
        self.lam = check_scalar_in("lambda", lam, 0.0, 1.0, low_open=True)
        super().__init__(base.domain, fixed_points=base.fixed_points, check_self_map=False)

    def _apply(self, X):
        return (1.0 - self.lam) * X + self.lam * self.base.evaluate(X, check=False)

    def to_dict(self):
        return {"kind": self.kind, "lambda": self.lam, "base": self.base.to_dict()}


def map_eval(T: Mapping, x) -> np.ndarray:
    return T(x)


def averaged_eval(T: Mapping, lam, x) -> np.ndarray:
    """(1 - lam) x + lam T(x); ``lam`` may be an array broadcasting over a batch."""
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr <= 0) or np.any(lam_arr > 1):
        raise InputError("averaging weight must lie in (0, 1]")
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2:
        X = as_points(arr, T.dim)
        L = lam_arr[:, None] if lam_arr.ndim == 1 else lam_arr
        return (1.0 - L) * X + L * T.evaluate(X)
    p = as_point(arr, T.dim)
    return (1.0 - lam_arr) * p + lam_arr * T(p)


class PresicMapping:
    """k-ary mapping T(x_0, ..., x_{k-1}) = scale * sum_i w_i x_i + offset."""

    kind = "presic-affine-mean"

    def __init__(self, arity: int, weights, scale: float = 1.0, offset=None, domain: Region | None = None,
                 check_self_map: bool = True):
        self.arity = int(arity)
        if self.arity < 1:
            raise InputError("arity must be a positive integer")
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.shape != (self.arity,):
            raise InputError("need one weight per argument")
        self.scale = float(scale)
        self.domain = domain or WholeSpace(1)
        self.dim = self.domain.dim
        self.offset = np.zeros(self.dim) if offset is None else as_point(offset, self.dim)
        if check_self_map and self.domain.sampleable:
            rng = SELF_MAP_PLAN.rng(98)
            tuples = np.stack([self.domain.sample(rng, 2000) for _ in range(self.arity)], axis=1)
            self.domain.check_contains(self.evaluate(tuples, check=False))

    def evaluate(self, tuples, check: bool = True) -> np.ndarray:
        """``tuples`` has shape ``(n, k, d)``; returns ``(n, d)``."""
        tuples = np.asarray(tuples, dtype=float)
        if tuples.ndim != 3 or tuples.shape[1] != self.arity or tuples.shape[2] != self.dim:
            raise InputError(f"expected tuples of shape (n, {self.arity}, {self.dim}), got {tuples.shape}")
        if check:
            self.domain.check_contains(tuples.reshape(-1, self.dim))
        return self.scale * np.einsum("k,nkd->nd", self.weights, tuples) + self.offset

    def __call__(self, *points):
        if len(points) != self.arity:
            raise InputError(f"expected {self.arity} arguments, got {len(points)}")
        t = np.stack([as_point(p, self.dim) for p in points])[None]
        return self.evaluate(t)[0]

    def diagonal(self) -> Mapping:
        """The one-argument map x -> T(x, ..., x)."""
        return _Diagonal(self)

    def to_dict(self):
        return {"kind": self.kind, "arity": self.arity, "weights": self.weights.tolist(), "scale": self.scale,
                "offset": self.offset.tolist(), "domain": self.domain.to_dict()}


class _Diagonal(Mapping):
    kind = "presic-diagonal"

    def __init__(self, presic: PresicMapping):
        self.presic = presic
        super().__init__(presic.domain, check_self_map=False)

    def _apply(self, X):
        return self.presic.evaluate(np.repeat(X[:, None, :], self.presic.arity, axis=1), check=False)

    def to_dict(self):
        return {"kind": self.kind, "base": self.presic.to_dict()}


class PresicWeights:
    """Nonnegative weights lam_0..lam_k, renormalized to sum to one, with lam_k > 0."""

    def __init__(self, lams):
        lams = np.asarray(lams, dtype=float)
        if lams.ndim != 1 or lams.size < 2:
            raise InputError("need at least two weights (k >= 1)")
        if np.any(lams < 0) or not np.all(np.isfinite(lams)):
            raise InputError("weights must be finite and nonnegative")
        if lams[-1] <= 0:
            raise InputError("the weight on T must be positive")
        self.values = lams / lams.sum()

    @property
    def k(self) -> int:
        return self.values.size - 1

    @classmethod
    def default(cls, k: int, b_total: float = 0.0) -> "PresicWeights":
        """lam_k = 1/(B+1), the remaining mass spread evenly over lam_0..lam_{k-1}."""
        lk = 1.0 / (float(b_total) + 1.0)
        return cls(np.concatenate([np.full(k, (1.0 - lk) / k), [lk]]))

    def to_list(self):
        return self.values.tolist()


def presic_averaged_eval(T: PresicMapping, w: PresicWeights, points) -> np.ndarray:
    """sum_{i<k} lam_i x_i + lam_k T(x_0, ..., x_{k-1})."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] != T.arity or w.k != T.arity:
        raise InputError(f"arity mismatch: mapping takes {T.arity}, got {pts.shape[0]} points and k={w.k}")
    lam = w.values
    return np.einsum("k,kd->d", lam[:-1], pts) + lam[-1] * T.evaluate(pts[None])[0]


def diagonal_residual(T: PresicMapping, x, norm=None) -> float:
    """||T(x, ..., x) - x||."""
    from .spaces import Norm

    norm = norm or Norm()
    p = as_point(x, T.dim)
    return float(norm(T.diagonal()(p) - p))
