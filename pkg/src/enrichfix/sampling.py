"""Deterministic sampling plans and tuple samplers used by every sampled check."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .regions import LabeledUnion, Region

DISTRIBUTIONS = ("mixed", "uniform", "boundary", "grid")


@dataclass(frozen=True)
class SamplingPlan:
    """How many tuples to draw, from which distribution, with which seed.

    ``tol`` is the relative slack allowed on each sampled inequality: a tuple
    violates when ``rhs - lhs < -tol * (1 + |rhs|)``.
    """

    n_samples: int = 10_000
    distribution: str = "mixed"
    seed: int = 0
    tol: float = 1e-9

    def __post_init__(self):
        if int(self.n_samples) < 1:
            raise InputError("sampling plan needs at least one sample")
        if self.distribution not in DISTRIBUTIONS:
            raise InputError(f"unknown distribution {self.distribution!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError("seed must fit in an unsigned 64-bit integer")
        if not self.tol >= 0:
            raise InputError("tolerance must be nonnegative")

    def rng(self, stream: int = 0) -> np.random.Generator:
        """Independent generator for substream ``stream`` of this plan's seed."""
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(self.seed), spawn_key=(int(stream),))))

    def replace(self, **changes) -> "SamplingPlan":
        fields = {"n_samples": self.n_samples, "distribution": self.distribution, "seed": self.seed, "tol": self.tol}
        fields.update(changes)
        return SamplingPlan(**fields)


def _perturb(region: Region, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n, d = X.shape
    diam = region.diameter if np.isfinite(region.diameter) and region.diameter > 0 else 1.0
    direction = rng.standard_normal((n, d))
    direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-300)
    scale = diam * 10.0 ** rng.uniform(-6, -1, (n, 1))
    return region.project(X + scale * direction)


def sample_points(region: Region, n: int, rng: np.random.Generator, distribution: str = "uniform") -> np.ndarray:
    if distribution == "boundary":
        return region.sample_boundary(rng, n)
    if distribution == "grid":
        m = max(2, int(np.ceil(n ** (1.0 / region.dim))))
        G = region.grid(m)
        return G[rng.integers(0, len(G), n)]
    if distribution == "mixed":
        nb = n // 4
        X = np.vstack([region.sample(rng, n - nb), region.sample_boundary(rng, nb)])
        return X[rng.permutation(n)]
    return region.sample(rng, n)


def sample_pairs(region: Region, n: int, rng: np.random.Generator, distribution: str = "mixed") -> np.ndarray:
    """Return an ``(n, 2, d)`` array of point pairs.

    The mixed distribution combines independent pairs, close pairs (so local
    Lipschitz behaviour is seen) and boundary-pinned pairs.
    """
    if distribution != "mixed":
        X = sample_points(region, n, rng, distribution)
        Y = sample_points(region, n, rng, distribution)
        return np.stack([X, Y], axis=1)
    n_ind = n // 2
    n_loc = n // 4
    n_bnd = n - n_ind - n_loc
    X1, Y1 = region.sample(rng, n_ind), region.sample(rng, n_ind)
    X2 = region.sample(rng, n_loc)
    Y2 = _perturb(region, X2, rng)
    X3 = region.sample_boundary(rng, n_bnd)
    Y3 = np.where((rng.random(n_bnd) < 0.5)[:, None], region.sample_boundary(rng, n_bnd), _perturb(region, X3, rng))
    P = np.concatenate([np.stack([X1, Y1], 1), np.stack([X2, Y2], 1), np.stack([X3, Y3], 1)])
    return P[rng.permutation(n)]


def sample_chains(region: Region, n: int, length: int, rng: np.random.Generator, distribution: str = "mixed") -> np.ndarray:
    """Return ``(n, length, d)`` tuples; consecutive entries are often close."""
    pts = [sample_points(region, n, rng, "mixed" if distribution == "mixed" else distribution)]
    for _ in range(length - 1):
        fresh = sample_points(region, n, rng, distribution if distribution != "mixed" else "uniform")
        if distribution == "mixed":
            near = _perturb(region, pts[-1], rng)
            fresh = np.where((rng.random(n) < 0.5)[:, None], near, fresh)
        pts.append(fresh)
    return np.stack(pts, axis=1)


def sample_fix_pairs(region: Region, fix_points: np.ndarray, n: int, rng: np.random.Generator,
                     distribution: str = "mixed") -> np.ndarray:
    """Pairs ``(x, y)`` with ``x`` from the region and ``y`` cycling over ``fix_points``."""
    X = sample_points(region, n, rng, distribution)
    Y = fix_points[np.arange(n) % len(fix_points)]
    return np.stack([X, Y], axis=1)


def sample_cyclic_pairs(union: LabeledUnion, n: int, rng: np.random.Generator,
                        distribution: str = "mixed") -> np.ndarray:
    """Pairs ``(x, y)`` with ``x`` in A_i and ``y`` in A_{i+1}, A_{m+1} = A_1."""
    m = len(union.parts)
    counts = np.full(m, n // m)
    counts[: n % m] += 1
    blocks = []
    for i, c in enumerate(counts):
        a, b = union.parts[i], union.parts[(i + 1) % m]
        blocks.append(np.stack([sample_points(a, int(c), rng, distribution),
                                sample_points(b, int(c), rng, distribution)], axis=1))
    return np.concatenate(blocks)
