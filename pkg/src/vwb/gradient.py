"""Score-function gradient of the objective in the variational parameters,
with a scalar control variate built from the score itself."""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch

DEGENERATE_VAR = 1e-30


@dataclass
class GradientEstimate:
    raw: np.ndarray
    control: np.ndarray  # batch mean of the score
    a_star: float
    reduced: np.ndarray
    empirical_variance: np.ndarray  # per coordinate, of the reduced per-sample terms


def _check(scores, penalties, weights):
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    penalties = np.atleast_2d(np.asarray(penalties, dtype=np.float64))
    weights = np.atleast_1d(np.asarray(weights, dtype=np.float64))
    if penalties.shape != (weights.size, scores.shape[0]):
        raise ShapeMismatch(
            f"penalties {penalties.shape} do not match {weights.size} distributions x {scores.shape[0]} samples"
        )
    return scores, penalties, weights


def per_sample_terms(scores, penalties, weights):
    """``f_s = score_s * sum_i w_i R[i, s]``, shape ``(S, P)``."""
    scores, penalties, weights = _check(scores, penalties, weights)
    return scores * (weights @ penalties)[:, None]


def raw_gradient(scores, penalties, weights):
    """``(1/S) sum_i sum_s w_i score_s R[i, s]``."""
    return per_sample_terms(scores, penalties, weights).mean(axis=0)


def optimal_scaling(f_samples, h_samples):
    """Scalar ``a* = sum_c Cov(f_c, h_c) / sum_c Var(h_c)`` with ``1/(S-1)`` moments.

    Returns 0 when the pooled variance of ``h`` is below ``1e-30``.
    """
    f = np.atleast_2d(np.asarray(f_samples, dtype=np.float64))
    h = np.atleast_2d(np.asarray(h_samples, dtype=np.float64))
    if f.shape != h.shape:
        raise ShapeMismatch(f"f {f.shape} vs h {h.shape}")
    s = f.shape[0]
    if s < 2:
        raise ShapeMismatch("need at least two samples to estimate a covariance")
    hc = h - h.mean(axis=0)
    var = np.sum(hc * hc) / (s - 1)
    if var <= DEGENERATE_VAR:
        return 0.0
    cov = np.sum((f - f.mean(axis=0)) * hc) / (s - 1)
    return float(cov / var)


def reduced_gradient(scores, penalties, weights, a_star):
    """``(1/S) sum_i sum_s w_i score_s (R[i, s] - a*)``."""
    scores, penalties, weights = _check(scores, penalties, weights)
    return (scores * (weights @ (penalties - a_star))[:, None]).mean(axis=0)


def estimate(scores, penalties, weights):
    """Raw and control-variate gradients from one batch, ``a*`` fitted on that batch."""
    scores, penalties, weights = _check(scores, penalties, weights)
    f = per_sample_terms(scores, penalties, weights)
    a = optimal_scaling(f, scores)
    wsum = weights.sum()
    reduced_terms = f - a * wsum * scores
    return GradientEstimate(
        raw=f.mean(axis=0),
        control=scores.mean(axis=0),
        a_star=a,
        reduced=reduced_terms.mean(axis=0),
        empirical_variance=reduced_terms.var(axis=0, ddof=1),
    )
