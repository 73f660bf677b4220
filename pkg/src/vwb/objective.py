"""Regularizers and the minibatch value of the variational barycenter objective.

Notation: for input distribution ``i`` we have paired batches ``x_i`` (from
``mu_i``) and ``y`` (from the variational distribution), potential values
``phi_i(x_i)`` and ``psi_i(y)``, and the weighted sum ``psi_bar(y) = sum_j
a_j psi_j(y)``. Values at the cyclically shifted batch ``y_perm`` are the
same vectors rolled by one.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BatchMismatch, WeightMismatch

EXP_CLAMP = 30.0


@dataclass(frozen=True)
class Regularizer:
    kind: str  # "l2" or "entropy"
    eps: float

    def __post_init__(self):
        if self.kind not in ("l2", "entropy"):
            raise ValueError(f"unknown regularizer {self.kind!r}")
        if not self.eps > 0:
            raise ValueError("regularization strength must be positive")

    def value(self, t):
        return reg_value(self, t)

    def grad(self, t):
        return reg_grad(self, t)


def reg_value(f, t):
    """``-eps exp(t/eps)`` (entropy, exponent capped at 30) or ``-(t)_+^2 / 4 eps`` (L2)."""
    t = np.asarray(t, dtype=np.float64)
    if f.kind == "entropy":
        return -f.eps * np.exp(np.minimum(t / f.eps, EXP_CLAMP))
    return -np.square(np.maximum(t, 0.0)) / (4.0 * f.eps)


def reg_grad(f, t):
    """Derivative of :func:`reg_value` in ``t`` (zero where the clamp is active)."""
    t = np.asarray(t, dtype=np.float64)
    if f.kind == "entropy":
        z = t / f.eps
        return np.where(z < EXP_CLAMP, -np.exp(np.minimum(z, EXP_CLAMP)), 0.0)
    return -np.maximum(t, 0.0) / (2.0 * f.eps)


def sq_euclidean(x, y):
    """Row-wise squared Euclidean distance."""
    d = np.asarray(x) - np.asarray(y)
    return np.sum(d * d, axis=-1)


def cyclic_permute(batch):
    """Row ``l`` of the result is row ``l + 1`` of ``batch`` (the last wraps to the first)."""
    return np.roll(batch, -1, axis=0)


def _same_rows(*arrays):
    n = {np.shape(a)[0] for a in arrays}
    if len(n) != 1:
        raise BatchMismatch(f"batches disagree in row count: {sorted(n)}")
    return n.pop()


def cyclical_argument(cost, x, y_perm, phi_x, psi_perm, psi_hat):
    """``sum_l c(x^l, y^s(l)) - phi(x^l) - psi(y^s(l)) + psi_hat^l``."""
    if _same_rows(x, y_perm, phi_x, psi_perm, psi_hat) < 2:
        raise BatchMismatch("the cyclical term needs at least two rows")
    return float(np.sum(cost(x, y_perm) - phi_x - psi_perm + psi_hat))


def cyclical_penalty(f, cost, x, y_perm, phi_x, psi_perm, psi_hat):
    """Regularizer applied once to the summed cyclical argument."""
    return float(reg_value(f, cyclical_argument(cost, x, y_perm, phi_x, psi_perm, psi_hat)))


def marginal_arguments(cost, x, y, phi_x, psi_y, psi_bar):
    _same_rows(x, y, phi_x, psi_y, psi_bar)
    return phi_x + psi_y - psi_bar - cost(x, y)


def marginal_penalty(f, cost, x, y, phi_x, psi_y, psi_bar):
    """Batch mean of ``F(phi(x_s) + psi(y_s) - psi_bar(y_s) - c(x_s, y_s))``."""
    return float(np.mean(reg_value(f, marginal_arguments(cost, x, y, phi_x, psi_y, psi_bar))))


def pairwise_cost(cost, x, y):
    """``(S_x, S_y)`` matrix of ``cost(x^l, y^s)``."""
    return cost(x[:, None, :], y[None, :, :])


def all_pairs_arguments(cost, x, y, phi_x, psi_y, psi_bar):
    """Marginal arguments for every ``(x^l, y^s)`` combination, shape ``(S, S)``."""
    _same_rows(x, y, phi_x, psi_y, psi_bar)
    return phi_x[:, None] + (psi_y - psi_bar)[None, :] - pairwise_cost(cost, x, y)


@dataclass
class ObjectiveTerms:
    """Minibatch objective with its per-distribution breakdown."""

    value: float
    phi_mean: np.ndarray  # (N,)
    r1: np.ndarray  # (N,) cyclical penalty per distribution
    r2: np.ndarray  # (N,) marginal penalty (batch mean) per distribution
    r1_arg: np.ndarray  # (N,) scalar argument of the cyclical penalty
    r2_args: np.ndarray  # (N, S) paired or (N, S, S) all-pairs marginal arguments

    @property
    def r(self):
        return self.r1 + self.r2

    def marginal_per_sample(self, f):
        """Marginal penalty attributed to each variational sample ``y^s``, ``(N, S)``."""
        vals = reg_value(f, self.r2_args)
        return vals if vals.ndim == 2 else vals.mean(axis=1)

    def per_sample_penalties(self, f):
        """``R[i, s] = r1_i + marginal penalty at y^s``; the rows fed to the score estimator."""
        return self.r1[:, None] + self.marginal_per_sample(f)


def check_weights(weights, n):
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise WeightMismatch(f"{n} distributions but {w.size} weights")
    if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise WeightMismatch(f"weights must be positive and sum to 1 (sum={w.sum():.15g})")
    return w


def objective_value(phi_x, psi_y, xs, y, weights, f, cost=sq_euclidean, cyclical_sign=1.0, pairing="paired"):
    """Minibatch estimate of the regularized objective.

    Parameters
    ----------
    phi_x : (N, S) array
        ``phi_i`` evaluated on ``xs[i]``.
    psi_y : (N, S) array
        ``psi_i`` evaluated on ``y``.
    xs : (N, S, D) array
    y : (S, D) array
        Variational batch; the shifted batch is ``cyclic_permute(y)``.
    weights : (N,) array
    f : Regularizer
    cyclical_sign : float
        ``+1`` uses the cyclical argument as written above, ``-1`` negates
        it, ``0`` drops the cyclical term.
    pairing : {"paired", "all"}
        Average the marginal term over the ``S`` paired rows or over all
        ``S * S`` combinations of ``x`` and ``y`` rows.

    Returns
    -------
    ObjectiveTerms
        ``value = sum_i w_i (mean_s phi_i + r1_i + r2_i)``.
    """
    phi_x = np.atleast_2d(phi_x)
    psi_y = np.atleast_2d(psi_y)
    n = phi_x.shape[0]
    w = check_weights(weights, n)
    if psi_y.shape != phi_x.shape or len(xs) != n:
        raise BatchMismatch(f"phi {phi_x.shape}, psi {psi_y.shape}, {len(xs)} x-batches")
    if pairing not in ("paired", "all"):
        raise ValueError(f"pairing must be 'paired' or 'all', not {pairing!r}")
    marginal = marginal_arguments if pairing == "paired" else all_pairs_arguments
    y_perm = cyclic_permute(y)
    psi_bar = w @ psi_y
    psi_hat = cyclic_permute(psi_bar)
    r1_arg = np.empty(n)
    r2_args = []
    for i in range(n):
        r1_arg[i] = cyclical_sign * cyclical_argument(cost, xs[i], y_perm, phi_x[i], cyclic_permute(psi_y[i]), psi_hat)
        r2_args.append(marginal(cost, xs[i], y, phi_x[i], psi_y[i], psi_bar))
    r2_args = np.stack(r2_args)
    r1 = reg_value(f, r1_arg) if cyclical_sign else np.zeros(n)
    r2 = reg_value(f, r2_args).reshape(n, -1).mean(axis=1)
    phi_mean = phi_x.mean(axis=1)
    value = float(w @ (phi_mean + r1 + r2))
    return ObjectiveTerms(value, phi_mean, r1, r2, r1_arg, r2_args)


def objective_upstream(terms, weights, f, cyclical_sign=1.0):
    """Derivatives of the objective value w.r.t. every potential output.

    Returns ``(d_phi, d_psi)``, both ``(N, S)``: ``d_phi[i, s]`` is the
    derivative w.r.t. ``phi_i(x_i^s)`` and ``d_psi[i, s]`` w.r.t.
    ``psi_i(y^s)``, including the contributions that reach ``psi_i`` through
    the weighted sums ``psi_bar`` and ``psi_hat`` of every other term.
    """
    w = np.asarray(weights, dtype=np.float64)
    n, s = terms.phi_mean.size, terms.r2_args.shape[1]
    g1 = cyclical_sign * reg_grad(f, terms.r1_arg)  # (N,)
    g2 = reg_grad(f, terms.r2_args)
    if g2.ndim == 2:
        g2x = g2y = g2 / s
    else:
        g2 = g2 / (s * s)
        g2x, g2y = g2.sum(axis=2), g2.sum(axis=1)
    d_phi = w[:, None] * (1.0 / s - g1[:, None] + g2x)
    # direct path: the cyclical term sees psi_i once at every shifted
    # position, so its derivative is the same for every row
    d_direct = w[:, None] * (-g1[:, None] + g2y)
    # shared path through psi_bar / psi_hat: psi_i enters each with weight w_i
    shared = w @ (g1[:, None] - g2y)  # (S,)
    d_psi = d_direct + w[:, None] * shared[None, :]
    return d_phi, d_psi
