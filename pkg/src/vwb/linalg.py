"""Small dense symmetric linear algebra.

Matrices are plain ``float64`` numpy arrays. The eigensolver is a cyclic
Jacobi method, which is slow for large matrices but accurate to roundoff for
the handful-of-dimensions problems this package deals with.
"""

from typing import NamedTuple

import numpy as np

from .errors import NoConvergence, NonSquare, NotPD, NotPSD, NotSymmetric

SYM_TOL = 1e-9
PSD_FLOOR = -1e-10


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns


def _as_square(a):
    a = np.array(a, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {a.shape}")
    return a


def check_symmetric(a):
    """Return ``a`` as a symmetrized float array, or raise :class:`NotSymmetric`."""
    a = _as_square(a)
    scale = np.max(np.abs(a)) if a.size else 0.0
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asym > SYM_TOL * scale:
        raise NotSymmetric(f"asymmetry {asym:.3e} exceeds {SYM_TOL:g} * max|A| = {SYM_TOL * scale:.3e}")
    return 0.5 * (a + a.T)


def _off_diagonal_norm(a):
    # summed directly: ||A||^2 - ||diag A||^2 cancels below ~1e-8 ||A||
    return np.linalg.norm(a - np.diag(np.diag(a)))


def sym_eig(a, tol=1e-12, max_sweeps=100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all off-diagonal pairs until the off-diagonal Frobenius norm
    drops below ``tol * ||a||_F``.

    Returns
    -------
    SpectralDecomposition
        Eigenvalues in ascending order and the matching orthonormal
        eigenvectors as columns.
    """
    a = check_symmetric(a)
    n = a.shape[0]
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if n <= 1 or norm == 0.0:
        return SpectralDecomposition(np.diag(a).copy(), v)

    for _ in range(max_sweeps):
        off = _off_diagonal_norm(a)
        if off < tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta  # theta^2 would overflow
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        off = _off_diagonal_norm(a)
        if off >= tol * norm:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal {off:.3e})")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return SpectralDecomposition(w[order], v[:, order])


def _clamped_spectrum(a):
    w, q = sym_eig(a)
    if w.size and w[0] < PSD_FLOOR:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} is below {PSD_FLOOR:g}")
    return np.clip(w, 0.0, None), q


def psd_sqrt(a):
    """Symmetric PSD square root; eigenvalues in ``[-1e-10, 0]`` are clamped to 0."""
    w, q = _clamped_spectrum(a)
    r = (q * np.sqrt(w)) @ q.T
    return 0.5 * (r + r.T)


def psd_inv_sqrt(a):
    """Inverse symmetric square root of a positive definite matrix."""
    w, q = _clamped_spectrum(a)
    if w.size and w[0] <= 0.0:
        raise NotPD("matrix is singular; inverse square root undefined")
    r = (q / np.sqrt(w)) @ q.T
    return 0.5 * (r + r.T)


def cholesky(a):
    """Lower-triangular ``L`` with positive diagonal such that ``L @ L.T == a``."""
    a = check_symmetric(a)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > 0.0:
            raise NotPD(f"non-positive pivot {pivot:.3e} at column {j}")
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L
