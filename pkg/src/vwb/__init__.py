"""Variational Wasserstein barycenters: a parametric proxy for the barycenter
of sample-accessible distributions, trained jointly with neural dual
potentials under a regularized dual objective."""

from .dists import (
    DiagGaussian,
    Empirical,
    FullGaussian,
    Gaussian,
    GaussianMixture,
    Mixture,
    ProductOfFamilies,
    Ring,
    RingFamily,
    UniformBox,
    VariationalDistribution,
    load_samples_csv,
    save_samples_csv,
)
from .gaussian import GaussianMoments, bw2, bw2_uvp, fixed_point_barycenter, moments_from_samples
from .objective import Regularizer
from .oracle import check_c_monotone, exact_ot, regularized_dual_value
from .trainer import TrainConfig, Trainer, train

__all__ = [
    "DiagGaussian",
    "Empirical",
    "FullGaussian",
    "Gaussian",
    "GaussianMixture",
    "GaussianMoments",
    "Mixture",
    "ProductOfFamilies",
    "Regularizer",
    "Ring",
    "RingFamily",
    "TrainConfig",
    "Trainer",
    "UniformBox",
    "VariationalDistribution",
    "bw2",
    "bw2_uvp",
    "check_c_monotone",
    "exact_ot",
    "fixed_point_barycenter",
    "load_samples_csv",
    "moments_from_samples",
    "regularized_dual_value",
    "save_samples_csv",
    "train",
]
