"""Input distributions and trainable variational families.

Input distributions only need to be sampled. Variational families are
stateless descriptors that map a flat unconstrained parameter vector
``raw`` to a distribution: they sample from it, evaluate its log-density and
its score ``d log q(y | raw) / d raw``.

Raw layouts
-----------
``DiagGaussian(D)``      ``[mean (D) | raw std (D)]``, ``std = softplus(raw)``
``FullGaussian(D)``      ``[mean (D) | raw Cholesky (D(D+1)/2)]``; the factor is
                         stored row by row over the lower triangle
                         (``L00, L10, L11, L20, ...``); diagonal entries pass
                         through softplus, off-diagonal entries are used as is
``GaussianMixture(D,K)`` ``[means (K*D) | raw std (K*D) | logits (K)]``,
                         weights are ``softmax(logits)``
``RingFamily()``         ``[center (2) | log-radius location | raw log-radius
                         scale]``, uniform angle
``ProductOfFamilies``    concatenation of the factor layouts
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp, softmax

from .errors import DimMismatch, FileParse, LayoutMismatch, NotPD
from .linalg import cholesky

LOG_2PI = math.log(2.0 * math.pi)


def softplus(x):
    return np.logaddexp(0.0, x)


def softplus_inv(y):
    y = np.asarray(y, dtype=np.float64)
    return y + np.log(-np.expm1(-y))


def _points(y, dim):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[None, :] if dim > 1 or y.size == 1 else y[:, None]
    if y.shape[1] != dim:
        raise DimMismatch(f"expected points of dimension {dim}, got {y.shape[1]}")
    return y


# ---------------------------------------------------------------------------
# input distributions
# ---------------------------------------------------------------------------


class Gaussian:
    def __init__(self, mean, cov):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        self.cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise DimMismatch(f"mean length {self.mean.size} vs covariance {self.cov.shape}")
        self._chol = cholesky(self.cov)

    @property
    def dim(self):
        return self.mean.size

    def sample(self, n, rng):
        return self.mean + rng.standard_normal((n, self.dim)) @ self._chol.T

    def moments(self):
        from .gaussian import GaussianMoments

        return GaussianMoments(self.mean, self.cov)

    def __repr__(self):
        return f"Gaussian(dim={self.dim})"


class Mixture:
    """Finite mixture of Gaussian components."""

    def __init__(self, weights, components):
        w = np.asarray(weights, dtype=np.float64)
        if len(components) != w.size or w.size == 0:
            raise DimMismatch("need one weight per component")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be positive and sum to 1")
        dims = {c.dim for c in components}
        if len(dims) != 1:
            raise DimMismatch("mixture components must share a dimension")
        self.weights = w
        self.components = list(components)

    @property
    def dim(self):
        return self.components[0].dim

    def sample(self, n, rng):
        k = rng.choice(self.weights.size, size=n, p=self.weights)
        out = np.empty((n, self.dim))
        for j, comp in enumerate(self.components):
            idx = np.flatnonzero(k == j)
            if idx.size:
                out[idx] = comp.sample(idx.size, rng)
        return out


class UniformBox:
    def __init__(self, lower, upper):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=np.float64))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=np.float64))
        if self.lower.shape != self.upper.shape or np.any(self.upper <= self.lower):
            raise ValueError("box needs lower < upper in every coordinate")

    @property
    def dim(self):
        return self.lower.size

    def sample(self, n, rng):
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))


class Ring:
    """Uniform angle on a circle of given radius, radius jittered by ``N(0, width^2)``."""

    def __init__(self, center=(0.0, 0.0), radius=1.0, width=0.1):
        self.center = np.asarray(center, dtype=np.float64)
        if self.center.shape != (2,):
            raise DimMismatch("Ring is two-dimensional")
        self.radius = float(radius)
        self.width = float(width)

    dim = 2

    def sample(self, n, rng):
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
        r = self.radius + self.width * rng.standard_normal(n)
        return self.center + r[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])


class Empirical:
    """Resamples rows of a fixed table uniformly with replacement."""

    def __init__(self, table, name=None):
        t = np.asarray(table, dtype=np.float64)
        if t.ndim == 1:
            t = t[:, None]
        if t.ndim != 2 or t.shape[0] == 0:
            raise ValueError("empirical table must be a non-empty (S, D) array")
        self.table = t
        self.name = name

    @property
    def dim(self):
        return self.table.shape[1]

    def sample(self, n, rng):
        return self.table[rng.integers(0, self.table.shape[0], size=n)]

    @classmethod
    def from_csv(cls, path):
        return cls(load_samples_csv(path), name=str(path))


def load_samples_csv(path):
    """Read one sample per row; an optional header line starts with ``#``."""
    rows = []
    width = None
    try:
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or (lineno == 1 and row[0].lstrip().startswith("#")):
                    continue
                try:
                    values = [float(v) for v in row]
                except ValueError as exc:
                    raise FileParse(f"{path}:{lineno}: {exc}") from None
                if width is None:
                    width = len(values)
                elif len(values) != width:
                    raise FileParse(f"{path}:{lineno}: expected {width} columns, got {len(values)}")
                rows.append(values)
    except OSError as exc:
        raise FileParse(f"{path}: {exc}") from None
    if not rows:
        raise FileParse(f"{path}: no samples")
    return np.array(rows)


def save_samples_csv(path, samples, header=True):
    samples = np.asarray(samples)
    with open(path, "w", newline="") as fh:
        if header:
            fh.write("# " + ",".join(f"x{j}" for j in range(samples.shape[1])) + "\n")
        np.savetxt(fh, samples, delimiter=",", fmt="%.17g")


# ---------------------------------------------------------------------------
# variational families
# ---------------------------------------------------------------------------


class DiagGaussian:
    def __init__(self, dim):
        self.dim = int(dim)

    @property
    def n_params(self):
        return 2 * self.dim

    def _split(self, raw):
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape != (self.n_params,):
            raise LayoutMismatch(f"{type(self).__name__} expects {self.n_params} raw parameters, got {raw.shape}")
        return raw[: self.dim], raw[self.dim:]

    def constrain(self, raw):
        mean, r = self._split(raw)
        return {"mean": mean.copy(), "std": softplus(r)}

    def initial_raw(self, rng, center=None, scale=1.0):
        center = np.zeros(self.dim) if center is None else center
        return np.concatenate([center, np.full(self.dim, softplus_inv(scale))])

    def sample(self, raw, n, rng):
        p = self.constrain(raw)
        return p["mean"] + p["std"] * rng.standard_normal((n, self.dim))

    def log_density(self, raw, y):
        p = self.constrain(raw)
        y = _points(y, self.dim)
        z = (y - p["mean"]) / p["std"]
        return -0.5 * self.dim * LOG_2PI - np.sum(np.log(p["std"])) - 0.5 * np.sum(z * z, axis=1)

    def score(self, raw, y):
        mean, r = self._split(raw)
        std = softplus(r)
        y = _points(y, self.dim)
        u = y - mean
        d_mean = u / std**2
        d_std = -1.0 / std + u * u / std**3
        return np.hstack([d_mean, d_std * expit(r)])


class FullGaussian:
    def __init__(self, dim):
        self.dim = int(dim)
        self._rows, self._cols = np.tril_indices(self.dim)
        self._diag = np.flatnonzero(self._rows == self._cols)

    @property
    def n_params(self):
        return self.dim + self.dim * (self.dim + 1) // 2

    def _split(self, raw):
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape != (self.n_params,):
            raise LayoutMismatch(f"FullGaussian({self.dim}) expects {self.n_params} raw parameters, got {raw.shape}")
        return raw[: self.dim], raw[self.dim:]

    def _factor(self, tri):
        L = np.zeros((self.dim, self.dim))
        vals = tri.copy()
        vals[self._diag] = softplus(tri[self._diag])
        L[self._rows, self._cols] = vals
        return L

    def constrain(self, raw):
        mean, tri = self._split(raw)
        L = self._factor(tri)
        return {"mean": mean.copy(), "chol": L, "cov": L @ L.T}

    def initial_raw(self, rng, center=None, scale=1.0):
        center = np.zeros(self.dim) if center is None else center
        tri = np.zeros(self.dim * (self.dim + 1) // 2)
        tri[self._diag] = softplus_inv(scale)
        return np.concatenate([center, tri])

    def raw_from_moments(self, mean, cov):
        """Inverse of :meth:`constrain` for a given mean and covariance."""
        L = cholesky(cov)
        tri = L[self._rows, self._cols].copy()
        tri[self._diag] = softplus_inv(tri[self._diag])
        return np.concatenate([np.asarray(mean, dtype=np.float64), tri])

    def sample(self, raw, n, rng):
        p = self.constrain(raw)
        return p["mean"] + rng.standard_normal((n, self.dim)) @ p["chol"].T

    def _whiten(self, raw, y):
        mean, tri = self._split(raw)
        L = self._factor(tri)
        Linv = np.linalg.inv(L)
        z = (_points(y, self.dim) - mean) @ Linv.T
        return tri, L, Linv, z

    def log_density(self, raw, y):
        _, L, _, z = self._whiten(raw, y)
        return -0.5 * self.dim * LOG_2PI - np.sum(np.log(np.diag(L))) - 0.5 * np.sum(z * z, axis=1)

    def score(self, raw, y):
        tri, L, Linv, z = self._whiten(raw, y)
        w = z @ Linv  # rows are L^-T z
        # d/dL of -0.5|L^-1 u|^2 is (L^-T z) z^T; restrict to the lower triangle
        g = w[:, self._rows] * z[:, self._cols]
        g[:, self._diag] -= 1.0 / np.diag(L)
        g[:, self._diag] *= expit(tri[self._diag])
        return np.hstack([w, g])


class GaussianMixture:
    """Mixture of ``K`` diagonal Gaussians with softmax weights."""

    def __init__(self, dim, n_components=10):
        self.dim = int(dim)
        self.k = int(n_components)

    @property
    def n_params(self):
        return 2 * self.k * self.dim + self.k

    def _split(self, raw):
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape != (self.n_params,):
            raise LayoutMismatch(f"GaussianMixture({self.dim}, {self.k}) expects {self.n_params} raw parameters, got {raw.shape}")
        kd = self.k * self.dim
        return raw[:kd].reshape(self.k, self.dim), raw[kd:2 * kd].reshape(self.k, self.dim), raw[2 * kd:]

    def constrain(self, raw):
        means, r, logits = self._split(raw)
        return {"means": means.copy(), "std": softplus(r), "weights": softmax(logits)}

    def initial_raw(self, rng, center=None, scale=1.0):
        center = np.zeros(self.dim) if center is None else np.asarray(center)
        means = center + scale * rng.standard_normal((self.k, self.dim))
        return np.concatenate([means.ravel(), np.full(self.k * self.dim, softplus_inv(scale)), np.zeros(self.k)])

    def sample(self, raw, n, rng):
        p = self.constrain(raw)
        comp = rng.choice(self.k, size=n, p=p["weights"])
        return p["means"][comp] + p["std"][comp] * rng.standard_normal((n, self.dim))

    def _component_logs(self, raw, y):
        means, r, logits = self._split(raw)
        std = softplus(r)
        y = _points(y, self.dim)
        u = y[:, None, :] - means[None]  # (S, K, D)
        z = u / std
        comp = -0.5 * self.dim * LOG_2PI - np.sum(np.log(std), axis=1) - 0.5 * np.sum(z * z, axis=2)
        logw = logits - logsumexp(logits)
        return comp + logw, u, std, r, logw

    def log_density(self, raw, y):
        joint = self._component_logs(raw, y)[0]
        return logsumexp(joint, axis=1)

    def score(self, raw, y):
        joint, u, std, r, logw = self._component_logs(raw, y)
        resp = np.exp(joint - logsumexp(joint, axis=1, keepdims=True))  # (S, K)
        d_mean = resp[:, :, None] * u / std**2
        d_std = resp[:, :, None] * (-1.0 / std + u * u / std**3) * expit(r)
        d_logit = resp - np.exp(logw)
        s = resp.shape[0]
        return np.hstack([d_mean.reshape(s, -1), d_std.reshape(s, -1), d_logit])


class RingFamily:
    """Planar ring: uniform angle around a learnable center, log-normal radius.

    The density is a product of a uniform law on the angle and a log-normal
    law on the distance to the center, mapped to Cartesian coordinates.
    """

    dim = 2
    n_params = 4

    def _split(self, raw):
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape != (4,):
            raise LayoutMismatch(f"RingFamily expects 4 raw parameters, got {raw.shape}")
        return raw[:2], raw[2], raw[3]

    def constrain(self, raw):
        center, loc, r = self._split(raw)
        return {"center": center.copy(), "log_radius": float(loc), "log_radius_std": float(softplus(r))}

    def initial_raw(self, rng, center=None, scale=1.0):
        center = np.zeros(2) if center is None else np.asarray(center, dtype=np.float64)
        return np.concatenate([center, [math.log(scale), float(softplus_inv(0.5))]])

    def sample(self, raw, n, rng):
        p = self.constrain(raw)
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
        rho = np.exp(p["log_radius"] + p["log_radius_std"] * rng.standard_normal(n))
        return p["center"] + rho[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])

    def _polar(self, raw, y):
        center, loc, r = self._split(raw)
        u = _points(y, 2) - center
        rho = np.hypot(u[:, 0], u[:, 1])
        return u, rho, np.log(rho), loc, softplus(r), r

    def log_density(self, raw, y):
        _, rho, lr, loc, w, _ = self._polar(raw, y)
        # angle density 1/(2 pi), radial log-normal, Jacobian 1/rho
        return -LOG_2PI - 0.5 * LOG_2PI - np.log(w) - 2.0 * lr - 0.5 * ((lr - loc) / w) ** 2

    def score(self, raw, y):
        u, rho, lr, loc, w, r = self._polar(raw, y)
        t = (lr - loc) / w
        dlogp_drho = -2.0 / rho - t / (w * rho)
        d_center = -dlogp_drho[:, None] * u / rho[:, None]
        d_loc = t / w
        d_w = (-1.0 / w + t * t / w) * expit(r)
        return np.column_stack([d_center, d_loc, d_w])


@dataclass
class ProductOfFamilies:
    """Independent factors over consecutive coordinate blocks."""

    factors: list = field(default_factory=list)

    def __post_init__(self):
        if not self.factors:
            raise ValueError("product needs at least one factor")
        self._dims = np.cumsum([0] + [f.dim for f in self.factors])
        self._params = np.cumsum([0] + [f.n_params for f in self.factors])

    @property
    def dim(self):
        return int(self._dims[-1])

    @property
    def n_params(self):
        return int(self._params[-1])

    def _blocks(self, raw):
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape != (self.n_params,):
            raise LayoutMismatch(f"product expects {self.n_params} raw parameters, got {raw.shape}")
        return [raw[self._params[j]:self._params[j + 1]] for j in range(len(self.factors))]

    def constrain(self, raw):
        return {"factors": [f.constrain(b) for f, b in zip(self.factors, self._blocks(raw))]}

    def initial_raw(self, rng, center=None, scale=1.0):
        parts = []
        for j, f in enumerate(self.factors):
            c = None if center is None else np.asarray(center)[self._dims[j]:self._dims[j + 1]]
            parts.append(f.initial_raw(rng, c, scale))
        return np.concatenate(parts)

    def sample(self, raw, n, rng):
        return np.hstack([f.sample(b, n, rng) for f, b in zip(self.factors, self._blocks(raw))])

    def _cols(self, y, j):
        return y[:, self._dims[j]:self._dims[j + 1]]

    def log_density(self, raw, y):
        y = _points(y, self.dim)
        return sum(f.log_density(b, self._cols(y, j)) for j, (f, b) in enumerate(zip(self.factors, self._blocks(raw))))

    def score(self, raw, y):
        y = _points(y, self.dim)
        return np.hstack([f.score(b, self._cols(y, j)) for j, (f, b) in enumerate(zip(self.factors, self._blocks(raw)))])


@dataclass
class VariationalDistribution:
    """A variational family together with its current raw parameters."""

    family: object
    raw: np.ndarray

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=np.float64)
        if self.raw.shape != (self.family.n_params,):
            raise LayoutMismatch(f"family expects {self.family.n_params} raw parameters, got {self.raw.shape}")

    @property
    def dim(self):
        return self.family.dim

    def constrain(self):
        return self.family.constrain(self.raw)

    def sample(self, n, rng):
        return self.family.sample(self.raw, n, rng)

    def log_density(self, y):
        return self.family.log_density(self.raw, y)

    def score(self, y):
        return self.family.score(self.raw, y)


def check_constrained(family, raw):
    """Raise if the constrained parameters are not a valid distribution."""
    p = family.constrain(raw)
    if isinstance(family, ProductOfFamilies):
        for f, b in zip(family.factors, family._blocks(raw)):
            check_constrained(f, b)
        return
    for key in ("std", "log_radius_std"):
        if key in p and not np.all(np.asarray(p[key]) > 0):
            raise NotPD(f"non-positive {key}")
    if "chol" in p and not np.all(np.diag(p["chol"]) > 0):
        raise NotPD("Cholesky factor has a non-positive diagonal")
    if "weights" in p and not (np.all(p["weights"] >= 0) and abs(p["weights"].sum() - 1) < 1e-12):
        raise ValueError("mixture weights left the simplex")
