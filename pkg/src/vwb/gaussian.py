"""Closed-form Gaussian reference: Bures-Wasserstein distance, barycenter
fixed point, the BW2-UVP error metric and test-problem generators."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTruth, DimMismatch, NoConvergence, NotPD, TooFewSamples
from .linalg import check_symmetric, psd_inv_sqrt, psd_sqrt, sym_eig


@dataclass(frozen=True)
class GaussianMoments:
    """Mean vector and symmetric positive definite covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64)).copy()
        cov = check_symmetric(np.atleast_2d(np.asarray(self.cov, dtype=np.float64)))
        if cov.shape != (mean.size, mean.size):
            raise DimMismatch(f"mean has length {mean.size} but covariance is {cov.shape}")
        w = sym_eig(cov).eigenvalues
        if w[0] <= 0.0:
            raise NotPD(f"covariance has eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.size


def bw2(a, b):
    """Squared Bures-Wasserstein distance with the 1/2 prefactors on both terms.

    ``0.5 * |m_a - m_b|^2 + 0.5 * tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2)``
    """
    if a.dim != b.dim:
        raise DimMismatch(f"dimension {a.dim} vs {b.dim}")
    ra = psd_sqrt(a.cov)
    cross = psd_sqrt(ra @ b.cov @ ra)
    dm = a.mean - b.mean
    value = 0.5 * dm @ dm + 0.5 * (np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross))
    return max(float(value), 0.0)


def bw2_uvp(candidate, truth):
    """Unexplained variance percentage ``100 * BW2 / (0.5 * tr(S_truth))``."""
    var = np.trace(truth.cov)
    if not var > 0.0:
        raise DegenerateTruth("ground-truth covariance has zero trace")
    return float(100.0 * bw2(candidate, truth) / (0.5 * var))


def fixed_point_step(cov, covs, weights):
    """One application of the barycenter covariance map."""
    root = psd_sqrt(cov)
    inv_root = psd_inv_sqrt(cov)
    acc = sum(w * psd_sqrt(root @ c @ root) for w, c in zip(weights, covs))
    nxt = inv_root @ acc @ acc @ inv_root
    return 0.5 * (nxt + nxt.T)


def fixed_point_residual(cov, covs, weights):
    nxt = fixed_point_step(cov, covs, weights)
    return np.linalg.norm(cov - nxt) / np.linalg.norm(cov)


def fixed_point_barycenter(moments, weights=None, tol=1e-10, max_iter=500):
    """Wasserstein-2 barycenter of Gaussians.

    The mean is the weighted mean of the input means. The covariance is the
    fixed point of ``S = sum_i w_i (S^1/2 S_i S^1/2)^1/2``, reached by
    iterating the map of Alvarez-Esteban et al. from the arithmetic mean of
    the input covariances until the relative Frobenius change is below
    ``tol``.
    """
    moments = list(moments)
    n = len(moments)
    if n == 0:
        raise ValueError("need at least one Gaussian")
    weights = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=np.float64)
    if weights.shape != (n,):
        raise DimMismatch(f"{n} Gaussians but {weights.size} weights")
    dim = moments[0].dim
    if any(m.dim != dim for m in moments):
        raise DimMismatch("all Gaussians must share a dimension")

    covs = [m.cov for m in moments]
    mean = sum(w * m.mean for w, m in zip(weights, moments))
    cov = sum(w * c for w, c in zip(weights, covs))
    for _ in range(max_iter):
        nxt = fixed_point_step(cov, covs, weights)
        done = np.linalg.norm(cov - nxt) / np.linalg.norm(cov) <= tol
        cov = nxt
        if done:
            return GaussianMoments(mean, cov)
    raise NoConvergence(f"fixed point did not reach tol={tol:g} in {max_iter} iterations")


def random_covariance(dim, rng):
    """``A @ A.T + 1e-6 I`` with ``A`` uniform on ``[-2, 2]``."""
    a = rng.uniform(-2.0, 2.0, size=(dim, dim))
    return a @ a.T + 1e-6 * np.eye(dim)


def moments_from_samples(samples):
    """Sample mean and unbiased covariance of an ``(S, D)`` array."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    s, d = x.shape
    if s < d + 1:
        raise TooFewSamples(f"need at least {d + 1} samples for a {d}-dimensional covariance, got {s}")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (s - 1)
    cov = 0.5 * (cov + cov.T)
    if sym_eig(cov).eigenvalues[0] <= 0.0:
        cov = cov + 1e-9 * np.eye(d)
    return GaussianMoments(mean, cov)
