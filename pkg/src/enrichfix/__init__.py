"""Sampled certificates and averaged (Krasnoselskij) iterations for enriched contractions."""

from .atlas import MembershipReport, averaging_algebra_check, classify, p5_equivalence_check, saturation_probe
from .certify import (Certificate, ClassId, certify, check_cyclic_representation, check_pointwise, derive_lambda,
                      optimize_banach_certificate, recheck)
from .comparison import CComparisonCert, ComparisonFn, PsiFn, check_comparison, phi_iterate, series_sum
from .errors import CertificateError, DivergenceError, DomainError, InputError, SchemaError
from .estimators import EnrichedContractionCertifier, KrasnoselskijSolver
from .mappings import (Affine, AveragedMapping, Mapping, NegateScale1D, PiecewiseAffine1D, PresicMapping,
                       PresicWeights, Reciprocal1D, Reflection1D, ex_ac2, translation)
from .regions import Ball, Box, FiniteSet, LabeledUnion, WholeSpace
from .sampling import SamplingPlan
from .solver import (SolveConfig, SolveReport, Trace, bound_aposteriori, bound_apriori, convex_metric_solve,
                     cyclic_solve, krasnoselskij_solve, maia_solve, presic_solve, solve_with_certificate)
from .spaces import ConvexStructure, Metric, Norm, Space

__version__ = "0.1.0"
