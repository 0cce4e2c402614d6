"""Variance, mean and mean-variance mixtures of multivariate normal distributions."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .closed_forms import GHParams, gh_logpdf, mmne_logpdf, mvt_logpdf, sn_logpdf
from .estimation import (
    EStepStats,
    FitConfig,
    FitResult,
    fit_gh_em,
    fit_mmne_em,
    fit_sn_em,
    fit_t_em,
    loglik,
)
from .families import (
    MMN,
    MVMN,
    UNDEFINED,
    VMN,
    ConditionalResult,
    NormalMixture,
    TiltedMixing,
    add_independent_normal,
    affine,
    conditional,
    dispatch_route,
    logpdf,
    make_family,
    marginal,
    mgf,
    moments,
    sample,
)
from .linalg import AffineMap, PartitionIndex, PDMatrix, cholesky, mvn_logpdf
from .mixing import (
    GIG,
    BirnbaumSaunders,
    Exponential,
    FiniteDiscrete,
    InverseGamma,
    Lindley,
    PointMass,
    TruncNormalPos,
    parse_mixing,
)
from .modelio import parse_model, serialize_model

__all__ = [
    "BACKEND", "GHParams", "gh_logpdf", "mmne_logpdf", "mvt_logpdf", "sn_logpdf",
    "EStepStats", "FitConfig", "FitResult", "fit_gh_em", "fit_mmne_em", "fit_sn_em",
    "fit_t_em", "loglik", "MMN", "MVMN", "UNDEFINED", "VMN", "ConditionalResult",
    "NormalMixture", "TiltedMixing", "add_independent_normal", "affine", "conditional",
    "dispatch_route", "logpdf", "make_family", "marginal", "mgf", "moments", "sample",
    "AffineMap", "PartitionIndex", "PDMatrix", "cholesky", "mvn_logpdf", "GIG",
    "BirnbaumSaunders", "Exponential", "FiniteDiscrete", "InverseGamma", "Lindley",
    "PointMass", "TruncNormalPos", "parse_mixing", "parse_model", "serialize_model",
]
