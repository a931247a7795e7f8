"""scikit-learn style wrappers around certification and the averaged iteration.

``fit`` takes the mapping in place of a data matrix; ``transform`` maps a batch
of starting points to the fixed points reached from them.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .certify import C, ClassId, certify, derive_lambda, evaluate, optimize_banach_certificate
from .errors import CertificateError, InputError
from .mappings import Mapping
from .sampling import SamplingPlan
from .solver import SolveConfig, krasnoselskij_solve, solve_with_certificate
from .spaces import Space
from .validation import as_points


def _space(norm, region, T) -> Space:
    from .spaces import Norm

    return Space(norm=norm or Norm(), region=region if region is not None else T.domain)


class EnrichedContractionCertifier(BaseEstimator):
    """Certify a mapping against one contraction class.

    With ``class_id="ENRICHED_BANACH"`` and no ``constants`` the b-grid search
    picks the constants.  After ``fit``: ``certificate_``, ``lambda_``,
    ``factor_`` and ``passed_``.
    """

    def __init__(self, class_id="ENRICHED_BANACH", constants=None, n_samples=10_000, seed=0,
                 distribution="mixed", tol=1e-9, b_grid=None, norm=None, region=None, fix_set=None):
        self.class_id = class_id
        self.constants = constants
        self.n_samples = n_samples
        self.seed = seed
        self.distribution = distribution
        self.tol = tol
        self.b_grid = b_grid
        self.norm = norm
        self.region = region
        self.fix_set = fix_set

    def _plan(self):
        return SamplingPlan(self.n_samples, self.distribution, self.seed, self.tol)

    def fit(self, T: Mapping, y=None):
        if not isinstance(T, Mapping):
            raise InputError("fit expects a Mapping")
        cid = ClassId(self.class_id)
        space = _space(self.norm, self.region, T)
        if self.constants is None and cid in (C.ENRICHED_BANACH, C.QUASI_BANACH_ENRICHED):
            cert = optimize_banach_certificate(T, space, self.b_grid, self._plan(), cid)
        else:
            cert = certify(cid, T, space, self.constants, self._plan(), self.fix_set)
        self.mapping_ = T
        self.space_ = space
        self.certificate_ = cert
        self.passed_ = cert.passed
        self.lambda_ = cert.lam
        self.factor_ = cert.factor
        return self

    def predict(self, X):
        """Pointwise verdict (True = inequality holds) for tuples of shape ``(n, m, d)``."""
        check_is_fitted(self, "certificate_")
        tuples = np.asarray(X, dtype=float)
        if tuples.ndim == 2:
            tuples = tuples[:, :, None]
        cert = self.certificate_
        lhs, rhs = evaluate(cert.class_id, self.mapping_, cert.constants, tuples, self.space_)
        return (rhs - lhs) >= -cert.tolerance * (1.0 + np.abs(rhs))

    def score(self, X, y=None):
        """Fraction of tuples satisfying the certified inequality."""
        return float(np.mean(self.predict(X)))


class KrasnoselskijSolver(TransformerMixin, BaseEstimator):
    """Averaged iteration x <- (1 - lam) x + lam T x run from each row of ``X``.

    If ``lam`` is None, ``fit`` certifies T (see ``EnrichedContractionCertifier``)
    and takes lambda from the certificate; error bounds are then attached.
    """

    def __init__(self, lam=None, max_iter=100_000, tol=1e-12, stop="residual", class_id="ENRICHED_BANACH",
                 constants=None, n_samples=10_000, seed=0, norm=None, region=None):
        self.lam = lam
        self.max_iter = max_iter
        self.tol = tol
        self.stop = stop
        self.class_id = class_id
        self.constants = constants
        self.n_samples = n_samples
        self.seed = seed
        self.norm = norm
        self.region = region

    def fit(self, T: Mapping, y=None):
        if not isinstance(T, Mapping):
            raise InputError("fit expects a Mapping")
        self.mapping_ = T
        self.space_ = _space(self.norm, self.region, T)
        self.certificate_ = None
        if self.lam is None:
            certifier = EnrichedContractionCertifier(self.class_id, self.constants, self.n_samples, self.seed,
                                                     norm=self.norm, region=self.region).fit(T)
            if not certifier.passed_:
                raise CertificateError(f"{self.class_id} not certified; witness {certifier.certificate_.witness}")
            self.certificate_ = certifier.certificate_
            self.lambda_ = derive_lambda(self.certificate_)
        else:
            self.lambda_ = float(self.lam)
        return self

    def transform(self, X):
        check_is_fitted(self, "lambda_")
        X = as_points(X, self.mapping_.dim)
        cfg = SolveConfig(self.max_iter, self.tol, None, self.stop)
        out = np.empty_like(X)
        self.reports_ = []
        for i, x0 in enumerate(X):
            if self.certificate_ is not None:
                rep, _ = solve_with_certificate(self.certificate_, self.mapping_, x0, cfg, self.space_)
            else:
                rep, _ = krasnoselskij_solve(self.mapping_, self.lambda_, x0, cfg, self.space_.norm)
            out[i] = rep.final_point
            self.reports_.append(rep)
        return out

    def fit_transform(self, X, y=None, **fit_params):
        raise TypeError("fit takes a mapping and transform takes starting points; call them separately")
