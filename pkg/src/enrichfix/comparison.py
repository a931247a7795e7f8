"""Comparison functions, (c)-comparison certificates, psi functions and s(t)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CertificateError, InputError
from .reports import CheckReport

PHI_KINDS = ("rational", "linear", "split", "identity")


@dataclass(frozen=True)
class ComparisonFn:
    """Catalog comparison function.

    rational  t / (t + 1)
    linear    c t, 0 <= c < 1
    split     t/2 on [0, 1], t - 1/3 on (1, inf)
    identity  t (not a comparison function; kept as a negative control)
    """

    kind: str = "rational"
    c: float = 0.5

    def __post_init__(self):
        if self.kind not in PHI_KINDS:
            raise InputError(f"unknown comparison function {self.kind!r}")
        if self.kind == "linear" and not 0 <= self.c < 1:
            raise InputError("linear comparison function needs 0 <= c < 1")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "rational":
            out = t / (t + 1.0)
        elif self.kind == "linear":
            out = self.c * t
        elif self.kind == "split":
            out = np.where(t <= 1.0, 0.5 * t, t - 1.0 / 3.0)
        else:
            out = t.copy()
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c": self.c} if self.kind == "linear" else {"kind": self.kind}


@dataclass(frozen=True)
class PsiFn:
    """Auxiliary function psi: R+ -> [0, 1); only exp(-t) is cataloged."""

    kind: str = "exp-decay"

    def __post_init__(self):
        if self.kind != "exp-decay":
            raise InputError(f"unknown psi function {self.kind!r}")

    def __call__(self, t):
        out = np.exp(-np.asarray(t, dtype=float))
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"kind": self.kind}


def phi_iterate(phi: ComparisonFn, t, n: int):
    """phi^n(t) by repeated application (vectorized over ``t``)."""
    if n < 0:
        raise InputError("iteration count must be nonnegative")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InputError("comparison functions act on t >= 0")
    for _ in range(int(n)):
        t = np.asarray(phi(t))
    return t if t.ndim else float(t)


def default_t_grid(t_max: float = 100.0, size: int = 1024) -> np.ndarray:
    g = np.unique(np.concatenate([np.geomspace(1e-6, t_max, size // 2), np.linspace(0.0, t_max, size // 2)[1:],
                                  [1.0, 1.0 + 1e-12]]))
    return g[g <= t_max]


def check_comparison(phi: ComparisonFn, t_grid=None, n_iter: int = 10_000, orbit_tol: float = 1e-3) -> CheckReport:
    """Check (i) monotonicity, (ii) phi^N(t) -> 0 up to N, (iii) phi(t) < t.

    (ii) is a semi-decision: the report states the cap N and the largest
    phi^N(t) on the grid.
    """
    t = np.sort(default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float))
    if np.any(t < 0):
        raise InputError("t grid must be nonnegative")
    f = np.asarray(phi(t))
    mono_viol = float(max(0.0, -(np.diff(f)).min())) if t.size > 1 else 0.0
    orbit = np.asarray(phi_iterate(phi, t, n_iter))
    orbit_max = float(orbit.max())
    pos = t > 0
    below_viol = float(max(0.0, (f[pos] - t[pos]).max())) if pos.any() else 0.0
    strict_fail = bool(np.any(f[pos] >= t[pos]))
    details = {
        "monotone": mono_viol <= 1e-15,
        "monotone_violation": mono_viol,
        "orbit_checked_up_to": int(n_iter),
        "orbit_max": orbit_max,
        "orbit_to_zero": orbit_max <= orbit_tol,
        "below_diagonal": not strict_fail,
        "below_diagonal_violation": below_viol,
        "t_max": float(t.max()),
    }
    passed = details["monotone"] and details["orbit_to_zero"] and details["below_diagonal"]
    witness = None
    if strict_fail:
        witness = [float(t[pos][np.argmax(f[pos] - t[pos])])]
    return CheckReport("comparison-function", passed, max(mono_viol, below_viol, orbit_max if not
                                                          details["orbit_to_zero"] else 0.0), int(t.size), witness,
                       details)


def check_psi(psi: PsiFn, t_grid=None) -> CheckReport:
    """Range check on t > 0 plus the analytic status of condition (g)."""
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    t = t[t > 0]
    v = np.asarray(psi(t))
    bad = (v < 0) | (v >= 1)
    details = {"condition_g": "analytic: exp(-t) is continuous, strictly decreasing, equals 1 only at t = 0",
               "range_checked_on": "t > 0"}
    witness = [float(t[np.argmax(bad)])] if bad.any() else None
    return CheckReport("psi-function", not bad.any(), float(bad.sum()), int(t.size), witness, details)


@dataclass(frozen=True)
class SummableSequence:
    """v_k = scale * ratio**k (ratio in [0, 1)); scale 0 gives the zero sequence."""

    scale: float = 0.0
    ratio: float = 0.0

    def __post_init__(self):
        if self.scale < 0 or not 0 <= self.ratio < 1:
            raise InputError("summable sequence needs scale >= 0 and 0 <= ratio < 1")

    def __call__(self, k):
        return self.scale * self.ratio ** np.asarray(k, dtype=float)

    def tail(self, k: int) -> float:
        """sum_{j >= k} v_j."""
        return self.scale * self.ratio**k / (1.0 - self.ratio)

    def to_dict(self):
        return {"scale": self.scale, "ratio": self.ratio}


@dataclass(frozen=True)
class CComparisonCert:
    """Claim phi^{k+1}(t) <= delta phi^k(t) + v_k for k >= k0."""

    delta: float
    k0: int = 0
    v: SummableSequence = SummableSequence()

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InputError("delta must lie in (0, 1)")
        if int(self.k0) < 0:
            raise InputError("k0 must be nonnegative")

    def to_dict(self):
        return {"delta": self.delta, "k0": int(self.k0), "v": self.v.to_dict()}


def check_c_comparison(phi: ComparisonFn, cert: CComparisonCert, t_grid=None, n_k: int = 200,
                       tol: float = 1e-12) -> CheckReport:
    """Max violation of the (c)-comparison recursion over k0 <= k < k0 + n_k and the t grid."""
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    cur = np.asarray(phi_iterate(phi, t, cert.k0))
    worst, arg = -np.inf, None
    for k in range(cert.k0, cert.k0 + n_k):
        nxt = np.asarray(phi(cur))
        viol = nxt - (cert.delta * cur + cert.v(k))
        i = int(np.argmax(viol))
        if viol[i] > worst:
            worst, arg = float(viol[i]), (k, float(t[i]))
        cur = nxt
    passed = worst <= tol
    witness = None if passed else list(arg)
    return CheckReport("c-comparison", passed, max(worst, 0.0), int(t.size * n_k), witness,
                       {"k_range": [int(cert.k0), int(cert.k0 + n_k)]})


def series_sum(phi: ComparisonFn, t: float, cert: CComparisonCert, tol: float = 1e-14,
               max_terms: int = 10_000_000) -> float:
    """s(t) = sum_{k>=1} phi^k(t), truncated once the certified tail is below ``tol``.

    With a_k = phi^k(t), the recursion gives
    sum_{j>K} a_j <= (delta a_K + sum_{j>=K} v_j) / (1 - delta) for K >= k0.
    Refuses when ``cert`` does not hold for ``phi`` on [0, t]; the orbit of a
    nondecreasing phi below the diagonal never leaves that interval.
    """
    if tol <= 0:
        raise InputError("tolerance must be positive")
    if t < 0:
        raise InputError("s is defined on t >= 0")
    grid = default_t_grid(max(float(t), 1e-6))
    report = check_c_comparison(phi, cert, t_grid=np.append(grid, float(t)))
    if not report.passed:
        raise CertificateError(f"no valid (c)-comparison certificate for {phi.kind}: the series may diverge")
    return series_sum_unchecked(phi, t, cert, tol, max_terms)


def series_sum_unchecked(phi: ComparisonFn, t: float, cert: CComparisonCert, tol: float = 1e-14,
                         max_terms: int = 10_000_000) -> float:
    """series_sum for callers that already validated ``cert`` against ``phi``."""
    if t < 0:
        raise InputError("s is defined on t >= 0")
    total, a = 0.0, float(t)
    for K in range(1, max_terms + 1):
        a = float(phi(a))
        total += a
        if K >= cert.k0:
            tail = (cert.delta * a + cert.v.tail(K)) / (1.0 - cert.delta)
            if tail <= tol:
                return total
    raise CertificateError("series did not reach the requested tolerance")
