"""Averaged fixed-point iterations with their a priori / a posteriori error bounds."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .certify import C, Certificate, ClassId, certify, check_cyclic_representation, derive_lambda
from .comparison import CComparisonCert, ComparisonFn, check_c_comparison, phi_iterate, series_sum_unchecked
from .errors import CertificateError, DivergenceError, DomainError, InputError
from .mappings import Mapping, PresicMapping, PresicWeights
from .regions import Box, LabeledUnion
from .sampling import SamplingPlan
from .spaces import ConvexStructure, Metric, Norm, Space, check_subordination, w_check
from .validation import as_point, as_points, check_scalar_in

STOP_RULES = ("residual", "bound-target", "max-iter")


@dataclass(frozen=True)
class SolveConfig:
    """Iteration controls.  ``lam`` overrides the certificate's averaging weight."""

    max_iter: int = 100_000
    tol: float = 1e-12
    lam: float | None = None
    stop: str = "residual"
    divergence_window: int = 100

    def __post_init__(self):
        if int(self.max_iter) < 1:
            raise InputError("max_iter must be >= 1")
        if not self.tol > 0:
            raise InputError("tolerance must be positive")
        if self.stop not in STOP_RULES:
            raise InputError(f"unknown stop rule {self.stop!r}")


@dataclass
class Trace:
    """Iterates x_0..x_N and per-row quantities.

    ``steps[n]`` is the distance from x_n to the next iterate (the last entry
    is the final residual); bounds are NaN where undefined.
    """

    points: np.ndarray
    steps: np.ndarray
    apriori: np.ndarray = None
    aposteriori: np.ndarray = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.points)
        if self.apriori is None:
            self.apriori = np.full(n, np.nan)
        if self.aposteriori is None:
            self.aposteriori = np.full(n, np.nan)

    def __len__(self):
        return len(self.points)

    def to_csv(self, fh=None) -> str:
        """Rows ``n, coord_0..coord_{d-1}, residual, bound_apriori, bound_aposteriori``."""
        d = self.points.shape[1]
        buf = io.StringIO()
        buf.write(",".join(["n", *[f"coord_{i}" for i in range(d)], "residual", "bound_apriori",
                            "bound_aposteriori"]) + "\n")

        def fmt(v):
            return "" if not np.isfinite(v) else repr(float(v))

        for n, x in enumerate(self.points):
            row = [str(n), *[repr(float(c)) for c in x], fmt(self.steps[n]), fmt(self.apriori[n]),
                   fmt(self.aposteriori[n])]
            buf.write(",".join(row) + "\n")
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


@dataclass
class SolveReport:
    converged: bool
    final_point: np.ndarray
    final_residual: float
    iterations: int
    method: str
    lam: object = None
    factor: float | None = None
    certificate: str | None = None
    bound_violations: int = 0
    max_bound_slack: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "final_point": np.asarray(self.final_point).tolist(),
            "final_residual": self.final_residual,
            "iterations": self.iterations,
            "method": self.method,
            "lambda": self.lam,
            "factor": self.factor,
            "certificate": self.certificate,
            "bound_violations": self.bound_violations,
            "max_bound_slack": self.max_bound_slack,
            **({"extra": self.extra} if self.extra else {}),
        }


def _iterate(step, x0: np.ndarray, dist, cfg: SolveConfig, factor: float | None = None):
    """Run ``x <- step(x)`` under the stop rule; returns (trace, converged)."""
    pts = [x0]
    steps = []
    x = x0
    rising = 0
    while True:
        try:
            x_next = step(x)
        except DomainError as exc:
            raise DivergenceError(f"iterate left the domain: {exc}", _partial(pts, steps)) from exc
        r = float(dist(x_next, x))
        steps.append(r)
        if not (np.all(np.isfinite(x_next)) and np.isfinite(r)):
            raise DivergenceError("non-finite iterate", _partial(pts, steps))
        n = len(pts) - 1
        if cfg.stop == "residual" and r <= cfg.tol:
            break
        if cfg.stop == "bound-target" and factor is not None and factor < 1:
            if factor**n / (1 - factor) * steps[0] <= cfg.tol:
                break
        if n >= cfg.max_iter:
            break
        rising = rising + 1 if len(steps) > 1 and r > steps[-2] else 0
        if rising >= cfg.divergence_window:
            raise DivergenceError(f"residual grew for {rising} consecutive steps", _partial(pts, steps))
        pts.append(x_next)
        x = x_next
    trace = Trace(np.array(pts), np.array(steps))
    return trace, steps[-1] <= cfg.tol


def _partial(pts, steps):
    steps = list(steps) + [np.nan] * (len(pts) - len(steps))
    return Trace(np.array(pts), np.array(steps[: len(pts)]))


def bound_apriori(c, n: int, first_step: float) -> float:
    """c^n / (1 - c) * ||x_1 - x_0||."""
    c = _factor(c)
    return c**n / (1.0 - c) * float(first_step)


def bound_aposteriori(c, last_step: float) -> float:
    """c / (1 - c) * ||x_n - x_{n-1}||."""
    c = _factor(c)
    return c / (1.0 - c) * float(last_step)


def _factor(c) -> float:
    if isinstance(c, Certificate):
        if not c.passed or c.factor is None:
            raise CertificateError("certificate carries no contraction factor")
        c = c.factor
    c = float(c)
    if not 0 <= c < 1:
        raise CertificateError(f"bounds need a factor in [0, 1), got {c}")
    return c


def _attach_geometric(trace: Trace, c: float, norm_steps: np.ndarray):
    n = np.arange(len(trace))
    trace.apriori = c**n / (1.0 - c) * norm_steps[0]
    post = np.full(len(trace), np.nan)
    post[1:] = c / (1.0 - c) * norm_steps[:-1][: len(trace) - 1]
    trace.aposteriori = post


def count_violations(trace: Trace, dist, slack: float, columns=("apriori", "aposteriori")):
    """Rows where dist(x_n, x_N) exceeds a bound by more than ``slack``; also the worst bound slack."""
    limit = trace.points[-1]
    d = np.asarray(dist(trace.points, np.broadcast_to(limit, trace.points.shape)), dtype=float)
    count, worst = 0, None
    for col in columns:
        b = getattr(trace, col) if hasattr(trace, col) else trace.extra[col]
        b = np.asarray(b, dtype=float)
        ok = np.isfinite(b)
        if not ok.any():
            continue
        count += int(np.sum(d[ok] > b[ok] + slack))
        gap = float(np.max(d[ok] - b[ok]))
        worst = gap if worst is None else max(worst, gap)
    return count, worst


def _norm_dist(norm: Norm):
    return lambda a, b: norm(np.asarray(a) - np.asarray(b))


def krasnoselskij_solve(T: Mapping, lam: float, x0, cfg: SolveConfig | None = None, norm: Norm | None = None):
    """x_{n+1} = (1 - lam) x_n + lam T x_n.  Returns ``(SolveReport, Trace)``."""
    cfg = cfg or SolveConfig()
    lam = check_scalar_in("lambda", lam, 0.0, 1.0, low_open=True)
    norm = norm or Norm()
    x0 = as_point(x0, T.dim)
    T.domain.check_contains(x0)

    def step(x):
        return (1.0 - lam) * x + lam * T(x)

    trace, converged = _iterate(step, x0, _norm_dist(norm), cfg)
    p = trace.points[-1]
    report = SolveReport(converged, p, float(trace.steps[-1]), len(trace) - 1, "krasnoselskij", lam=lam,
                         extra={"fixed_point_residual": float(norm(T(p) - p))})
    return report, trace


def solve_with_certificate(cert: Certificate, T: Mapping, x0, cfg: SolveConfig | None = None,
                           space: Space | None = None, attach_heuristic: bool = False):
    """Krasnoselskij run with lambda from the certificate and its per-step bounds attached."""
    if not cert.passed:
        raise CertificateError("refusing to solve with a failed certificate")
    if cert.class_id in (C.ENRICHED_PRESIC, C.CYCLIC_ENRICHED_PHI, C.CONVEX_METRIC_ENRICHED):
        raise InputError(f"{cert.class_id.value} certificates use their dedicated solver")
    cfg = cfg or SolveConfig()
    space = space or Space()
    lam = cfg.lam if cfg.lam is not None else derive_lambda(cert)
    factor = cert.factor
    use_bounds = factor is not None and factor < 1 and (attach_heuristic or not cert.factor_heuristic)
    overridden = cfg.lam is not None and abs(cfg.lam - derive_lambda(cert)) > 1e-15
    if overridden:
        use_bounds = False  # the certified factor belongs to the certified lambda only
    if cfg.stop == "bound-target" and use_bounds:
        lam = check_scalar_in("lambda", lam, 0.0, 1.0, low_open=True)
        x0p = as_point(x0, T.dim)
        trace, converged = _iterate(lambda x: (1.0 - lam) * x + lam * T(x), x0p, _norm_dist(space.norm), cfg, factor)
        report = SolveReport(converged, trace.points[-1], float(trace.steps[-1]), len(trace) - 1, "krasnoselskij",
                             lam=lam)
    else:
        report, trace = krasnoselskij_solve(T, lam, x0, cfg, space.norm)
    report.certificate = f"{cert.class_id.value}@seed={cert.seed}"
    report.factor = None if overridden else factor
    if overridden:
        report.extra["bounds_dropped"] = "lambda differs from the certified value"
    if use_bounds:
        _attach_geometric(trace, factor, trace.steps)
        if cert.factor_heuristic:
            # no rate is guaranteed in quasi-normed spaces; scale by the modulus and flag it
            trace.apriori *= space.norm.modulus
            trace.aposteriori *= space.norm.modulus
            report.extra["bounds_heuristic"] = True
        report.bound_violations, report.max_bound_slack = count_violations(trace, _norm_dist(space.norm),
                                                                           10 * cfg.tol)
    return report, trace


def convex_metric_solve(T: Mapping, W: ConvexStructure, metric: Metric, lam: float, x0,
                        cfg: SolveConfig | None = None, cert: Certificate | None = None, region=None,
                        plan: SamplingPlan | None = None):
    """x_{n+1} = W(x_n, T x_n; lam), residuals measured in ``metric``.

    ``lam`` weights x_n (W(x, y; 1) = x).  The convex-structure inequality is
    checked on ``region`` (default: T's domain) before iterating.
    """
    cfg = cfg or SolveConfig()
    lam = check_scalar_in("lambda", lam, 0.0, 1.0, high_open=True)
    x0 = as_point(x0, T.dim)
    if region is None:
        region = T.domain if T.domain.sampleable else Box(x0 - 1.0, x0 + 1.0)
    check = w_check(W, metric, region, plan or SamplingPlan(n_samples=5000))
    if not check.passed:
        raise InputError(f"convex-structure check failed (max violation {check.max_violation:.3g})")
    T.domain.check_contains(x0)

    def step(x):
        return np.asarray(W(x, T(x), lam), dtype=float)

    trace, converged = _iterate(step, x0, metric, cfg)
    p = trace.points[-1]
    report = SolveReport(converged, p, float(trace.steps[-1]), len(trace) - 1, "convex-metric", lam=lam)
    if cert is not None:
        if not cert.passed or cert.class_id != C.CONVEX_METRIC_ENRICHED:
            raise CertificateError("need a passing CONVEX_METRIC_ENRICHED certificate")
        report.factor = cert.factor
        report.certificate = f"{cert.class_id.value}@seed={cert.seed}"
        _attach_geometric(trace, cert.factor, trace.steps)
        report.bound_violations, report.max_bound_slack = count_violations(trace, metric, 10 * cfg.tol)
    return report, trace


def maia_solve(T: Mapping, norm: Norm, metric: Metric, lam: float | None, x0, cfg: SolveConfig | None = None,
               cert: Certificate | None = None, region=None, plan: SamplingPlan | None = None):
    """Krasnoselskij iteration judged in a metric d subordinate to the norm (d <= ||.||).

    Bounds are d(x_n, p) <= c^n/(1-c) ||x_1 - x_0|| and c/(1-c) ||x_n - x_{n-1}||,
    with c from an enriched-contraction certificate taken w.r.t. the norm.
    """
    cfg = cfg or SolveConfig()
    x0 = as_point(x0, T.dim)
    if region is None:
        region = T.domain if T.domain.sampleable else Box(x0 - 1.0, x0 + 1.0)
    sub = check_subordination(metric, norm, region, plan or SamplingPlan(n_samples=5000))
    if not sub.passed:
        raise InputError("metric is not subordinate to the norm; refusing Maia-type run")
    if cert is not None and not cert.passed:
        raise CertificateError("refusing to solve with a failed certificate")
    if lam is None:
        if cert is None:
            raise InputError("need lambda or a certificate")
        lam = derive_lambda(cert)
    lam = check_scalar_in("lambda", lam, 0.0, 1.0, low_open=True)
    T.domain.check_contains(x0)

    def step(x):
        return (1.0 - lam) * x + lam * T(x)

    trace, converged = _iterate(step, x0, metric, cfg)
    p = trace.points[-1]
    report = SolveReport(converged, p, float(trace.steps[-1]), len(trace) - 1, "maia", lam=lam)
    norm_steps = np.asarray(norm(np.diff(np.vstack([trace.points, step(p)]), axis=0)), dtype=float)
    trace.extra["norm_steps"] = norm_steps
    if cert is not None and cert.factor is not None:
        report.factor = cert.factor
        report.certificate = f"{cert.class_id.value}@seed={cert.seed}"
        _attach_geometric(trace, cert.factor, norm_steps)
        report.bound_violations, report.max_bound_slack = count_violations(trace, metric, 10 * cfg.tol)
    return report, trace


def cyclic_solve(T: Mapping, regions: LabeledUnion, phi: ComparisonFn, ccert: CComparisonCert, b: float, x0,
                 cfg: SolveConfig | None = None, norm: Norm | None = None, plan: SamplingPlan | None = None,
                 series_tol: float = 1e-14):
    """Averaged iteration (lam = 1/(b+1)) for a cyclic enriched phi-contraction.

    Attached bounds, with s(t) = sum_{k>=1} phi^k(t):
      apriori      s(phi^n(||x_0 - x_1||))
      aposteriori  s(lam ||x_n - T x_n||)
    and, in ``extra['second_form']``, the form s(phi(||x_n - x_{n+1}||)).

    s starts at k=1, so the first two columns omit the k=0 term and can undercut
    the true error (T = x/2 on one region).  ``extra['apriori_sound']`` and
    ``extra['aposteriori_sound']`` hold t + s(t) at the same arguments; their violation
    count is ``report.extra['sound_violations']``.
    """
    cfg = cfg or SolveConfig()
    norm = norm or Norm()
    plan = plan or SamplingPlan()
    b = check_scalar_in("b", b, 0.0)
    rep = check_cyclic_representation(T, regions, plan)
    if not rep.passed:
        raise InputError(f"regions are not a cyclic representation for T: {rep.witness}")
    cert = certify(C.CYCLIC_ENRICHED_PHI, T, Space(norm=norm, region=regions), {"b": b, "phi": phi}, plan)
    if not cert.passed:
        raise CertificateError(f"cyclic enriched phi-contraction not certified; witness {cert.witness}")
    cc = check_c_comparison(phi, ccert)
    if not cc.passed:
        raise CertificateError("phi has no valid (c)-comparison certificate")
    lam = cfg.lam if cfg.lam is not None else 1.0 / (b + 1.0)
    report, trace = krasnoselskij_solve(T, lam, x0, cfg, norm)
    report.method = "cyclic"
    report.certificate = f"{cert.class_id.value}@seed={cert.seed}"

    def s(t):
        return series_sum_unchecked(phi, float(t), ccert, series_tol)

    steps = trace.steps
    X = trace.points
    trace.apriori = np.array([s(phi_iterate(phi, steps[0], n)) for n in range(len(trace))])
    trace.aposteriori = np.array([s(lam * norm(x - T(x))) for x in X])
    trace.extra["second_form"] = np.array([s(phi(r)) for r in steps])
    trace.extra["apriori_sound"] = np.array([t + s(t) for t in (phi_iterate(phi, steps[0], n) for n in range(len(trace)))])
    trace.extra["aposteriori_sound"] = np.array([t + s(t) for t in (lam * norm(x - T(x)) for x in X)])
    dist = _norm_dist(norm)
    report.bound_violations, report.max_bound_slack = count_violations(trace, dist, 10 * cfg.tol)
    second, _ = count_violations(trace, dist, 10 * cfg.tol, columns=("second_form",))
    report.extra["second_form_violations"] = second
    sound, _ = count_violations(trace, dist, 10 * cfg.tol, columns=("apriori_sound", "aposteriori_sound"))
    report.extra["sound_violations"] = sound
    return report, trace


def presic_solve(T: PresicMapping, cert: Certificate, init, cfg: SolveConfig | None = None,
                 method: str = "diagonal", weights: PresicWeights | None = None, norm: Norm | None = None):
    """Diagonal one-step or k-step averaged iteration for a k-ary mapping.

    diagonal  y_n = (1 - a) y_{n-1} + a T(y_{n-1}, ..., y_{n-1}), a = lam_k
    k-step    x_n = T_lam(x_{n-k}, ..., x_{n-1})
    """
    if not cert.passed or cert.class_id != C.ENRICHED_PRESIC:
        raise CertificateError("need a passing ENRICHED_PRESIC certificate")
    cfg = cfg or SolveConfig()
    norm = norm or Norm()
    k = T.arity
    weights = weights or PresicWeights(derive_lambda(cert))
    if weights.k != k:
        raise InputError(f"weights are for k={weights.k}, mapping has arity {k}")
    dist = _norm_dist(norm)
    init = np.asarray(init, dtype=float)
    if method == "diagonal":
        y0 = as_point(init, T.dim)
        a = float(weights.values[-1])
        diag = T.diagonal()

        def step(y):
            return (1.0 - a) * y + a * diag(y)

        trace, converged = _iterate(step, y0, dist, cfg)
        lam = a
    elif method == "k-step":
        X0 = as_points(init, T.dim) if init.ndim > 1 or T.dim > 1 else init.reshape(-1, 1)
        if len(X0) != k:
            raise InputError(f"k-step method needs {k} initial points, got {len(X0)}")
        trace, converged = _iterate_kstep(T, weights, X0, dist, cfg)
        lam = weights.to_list()
    else:
        raise InputError(f"unknown Presic method {method!r}")
    p = trace.points[-1]
    report = SolveReport(converged, p, float(trace.steps[-1]), len(trace) - 1, f"presic-{method}", lam=lam,
                         certificate=f"{cert.class_id.value}@seed={cert.seed}")
    report.extra["diagonal_residual"] = float(norm(T.diagonal()(p) - p))
    return report, trace


def _iterate_kstep(T: PresicMapping, w: PresicWeights, X0: np.ndarray, dist, cfg: SolveConfig):
    k = T.arity
    lam = w.values
    pts = [x for x in X0]
    steps = [float(dist(pts[i + 1], pts[i])) for i in range(k - 1)]
    rising = 0
    while True:
        window = np.stack(pts[-k:])
        try:
            x_new = np.einsum("k,kd->d", lam[:-1], window) + lam[-1] * T.evaluate(window[None])[0]
        except DomainError as exc:
            raise DivergenceError(f"iterate left the domain: {exc}", _partial(pts, steps)) from exc
        r = float(dist(x_new, pts[-1]))
        steps.append(r)
        if not (np.all(np.isfinite(x_new)) and np.isfinite(r)):
            raise DivergenceError("non-finite iterate", _partial(pts, steps))
        if cfg.stop == "residual" and r <= cfg.tol:
            break
        if len(pts) - k >= cfg.max_iter:
            break
        rising = rising + 1 if len(steps) > k and r > steps[-2] else 0
        if rising >= cfg.divergence_window:
            raise DivergenceError(f"residual grew for {rising} consecutive steps", _partial(pts, steps))
        pts.append(x_new)
    return Trace(np.array(pts), np.array(steps)), steps[-1] <= cfg.tol
