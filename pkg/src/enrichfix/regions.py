"""Sampling domains: boxes, balls, finite sets, labeled unions and the whole space."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, InputError
from .validation import as_point, as_points

BOUNDARY_TOL = 1e-12


class Region:
    """Base class.  Subclasses are immutable after construction."""

    kind = "region"
    dim: int

    def contains(self, X, tol: float = BOUNDARY_TOL) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def sample_boundary(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.sample(rng, n)

    def project(self, X) -> np.ndarray:
        raise NotImplementedError

    def grid(self, m: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    @property
    def sampleable(self) -> bool:
        return True

    def check_contains(self, X, tol: float = BOUNDARY_TOL) -> None:
        X = as_points(X, self.dim)
        inside = self.contains(X, tol)
        if not np.all(inside):
            bad = X[~inside][0]
            raise DomainError(f"point {bad.tolist()} outside {self.kind} region")

    def to_dict(self) -> dict:
        raise NotImplementedError


class WholeSpace(Region):
    """All of R^d.  Usable as a mapping domain, not as a sampling region."""

    kind = "whole"

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise InputError("dimension must be >= 1")
        self.dim = int(dim)

    def contains(self, X, tol=BOUNDARY_TOL):
        X = as_points(X, self.dim)
        return np.ones(len(X), dtype=bool)

    @property
    def sampleable(self):
        return False

    def sample(self, rng, n):
        raise InputError("cannot sample the whole space; supply a bounded region")

    def project(self, X):
        return as_points(X, self.dim)

    @property
    def diameter(self):
        return np.inf

    def to_dict(self):
        return {"kind": "whole", "dimension": self.dim}


class Box(Region):
    kind = "box"

    def __init__(self, lo, hi):
        self.lo = as_point(lo)
        self.hi = as_point(hi, self.lo.size)
        if np.any(self.lo > self.hi):
            raise InputError("box requires lo <= hi componentwise")
        self.dim = self.lo.size

    def contains(self, X, tol=BOUNDARY_TOL):
        X = as_points(X, self.dim)
        return np.all((X >= self.lo - tol) & (X <= self.hi + tol), axis=1)

    def sample(self, rng, n):
        return self.lo + (self.hi - self.lo) * rng.random((n, self.dim))

    def sample_boundary(self, rng, n):
        X = self.sample(rng, n)
        pin = rng.random((n, self.dim)) < 0.5
        pin[np.arange(n), rng.integers(0, self.dim, n)] = True  # at least one face per point
        side = np.where(rng.random((n, self.dim)) < 0.5, self.lo, self.hi)
        return np.where(pin, side, X)

    def project(self, X):
        return np.clip(X, self.lo, self.hi)

    def grid(self, m):
        axes = [np.linspace(l, h, m) for l, h in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    @property
    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def to_dict(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Ball(Region):
    """Closed Euclidean ball, sampled by rejection from its bounding box."""

    kind = "ball"

    def __init__(self, center, radius):
        self.center = as_point(center)
        self.radius = float(radius)
        if not self.radius > 0:
            raise InputError("ball radius must be positive")
        self.dim = self.center.size

    def contains(self, X, tol=BOUNDARY_TOL):
        X = as_points(X, self.dim)
        return np.linalg.norm(X - self.center, axis=1) <= self.radius + tol

    def sample(self, rng, n):
        out = np.empty((0, self.dim))
        while len(out) < n:
            cand = self.center + self.radius * (2.0 * rng.random((2 * n + 8, self.dim)) - 1.0)
            out = np.vstack([out, cand[np.linalg.norm(cand - self.center, axis=1) <= self.radius]])
        return out[:n]

    def sample_boundary(self, rng, n):
        X = self.sample(rng, n)
        d = rng.standard_normal((n, self.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        S = self.center + self.radius * d
        return np.where((rng.random(n) < 0.5)[:, None], S, X)

    def project(self, X):
        V = X - self.center
        r = np.linalg.norm(V, axis=1, keepdims=True)
        scale = np.where(r > self.radius, self.radius / np.maximum(r, 1e-300), 1.0)
        return self.center + V * scale

    def grid(self, m):
        box = Box(self.center - self.radius, self.center + self.radius).grid(m)
        return box[self.contains(box)]

    @property
    def diameter(self):
        return 2.0 * self.radius

    def to_dict(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


class FiniteSet(Region):
    kind = "finite-set"

    def __init__(self, points):
        self.points = as_points(points)
        self.dim = self.points.shape[1]

    def contains(self, X, tol=BOUNDARY_TOL):
        X = as_points(X, self.dim)
        d = np.linalg.norm(X[:, None, :] - self.points[None, :, :], axis=2)
        return d.min(axis=1) <= tol

    def sample(self, rng, n):
        return self.points[rng.integers(0, len(self.points), n)]

    def project(self, X):
        d = np.linalg.norm(X[:, None, :] - self.points[None, :, :], axis=2)
        return self.points[d.argmin(axis=1)]

    def grid(self, m):
        return self.points.copy()

    @property
    def diameter(self):
        P = self.points
        return float(np.linalg.norm(P[:, None] - P[None], axis=2).max())

    def to_dict(self):
        return {"kind": "finite-set", "points": self.points.tolist()}


class LabeledUnion(Region):
    """Union of sub-regions A_1..A_m (labels are the 1-based positions)."""

    kind = "labeled-union"

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise InputError("labeled union needs at least one sub-region")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise InputError("sub-regions must share a dimension")
        if any(not p.sampleable for p in parts):
            raise InputError("sub-regions of a labeled union must be bounded")
        self.parts = parts
        self.dim = dims.pop()

    @property
    def labels(self):
        return list(range(1, len(self.parts) + 1))

    def contains(self, X, tol=BOUNDARY_TOL):
        X = as_points(X, self.dim)
        return np.any([p.contains(X, tol) for p in self.parts], axis=0)

    def _split(self, rng, n, method):
        m = len(self.parts)
        counts = np.full(m, n // m)
        counts[: n % m] += 1
        X = np.vstack([getattr(p, method)(rng, int(c)) for p, c in zip(self.parts, counts)])
        return X[rng.permutation(len(X))]

    def sample(self, rng, n):
        return self._split(rng, n, "sample")

    def sample_boundary(self, rng, n):
        return self._split(rng, n, "sample_boundary")

    def project(self, X):
        cands = np.stack([p.project(X) for p in self.parts])
        d = np.linalg.norm(cands - X[None], axis=2)
        return cands[d.argmin(axis=0), np.arange(len(X))]

    def grid(self, m):
        return np.vstack([p.grid(m) for p in self.parts])

    @property
    def diameter(self):
        G = self.grid(5)
        return float(np.linalg.norm(G[:, None] - G[None], axis=2).max())

    def to_dict(self):
        return {"kind": "labeled-union", "parts": [p.to_dict() for p in self.parts]}


def region_from_dict(d: dict) -> Region:
    kind = d["kind"]
    if kind == "box":
        return Box(d["lo"], d["hi"])
    if kind == "ball":
        return Ball(d["center"], d["radius"])
    if kind == "finite-set":
        return FiniteSet(d["points"])
    if kind == "labeled-union":
        return LabeledUnion([region_from_dict(p) for p in d["parts"]])
    if kind == "whole":
        return WholeSpace(d["dimension"])
    raise InputError(f"unknown region kind {kind!r}")
