"""Exact optimal transport on tiny uniform instances and a brute-force
c-cyclical monotonicity checker, used as independent test oracles."""

from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from .errors import DimMismatch, TooLarge
from .objective import reg_value

MAX_EXACT_POINTS = 8
MAX_SUBSET = 6
ROUNDOFF_FLOOR = -1e-12


def power_cost(p=2):
    """Row-wise ``|x - y|^p`` in the Euclidean norm."""

    def cost(x, y):
        d = np.linalg.norm(np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64), axis=-1)
        return d**p

    cost.exponent = p
    return cost


sq_cost = power_cost(2)


@dataclass
class DiscreteCoupling:
    """Permutation coupling between two uniform point clouds of equal size."""

    xs: np.ndarray
    ys: np.ndarray
    matching: tuple  # x row l is sent to y row matching[l]
    cost: float

    @property
    def masses(self):
        n = len(self.matching)
        plan = np.zeros((n, n))
        plan[np.arange(n), list(self.matching)] = 1.0 / n
        return plan

    @property
    def support(self):
        """``(n, 2, D)`` array of the coupled pairs ``(x^l, y^matching(l))``."""
        return np.stack([self.xs, self.ys[list(self.matching)]], axis=1)


@dataclass
class MonotonicityReport:
    max_violation: float
    subset: tuple  # indices into the pair list, empty when no gain exists
    permutation: tuple  # position j of the subset receives the y of subset[permutation[j]]


def _as_points(a):
    a = np.asarray(a, dtype=np.float64)
    return a[:, None] if a.ndim == 1 else a


def exact_ot(xs, ys, cost=sq_cost):
    """Minimum-cost matching between two equal-size uniform point sets by enumeration.

    Ties are resolved to the lexicographically first permutation.
    """
    xs, ys = _as_points(xs), _as_points(ys)
    n = len(xs)
    if len(ys) != n:
        raise DimMismatch(f"{n} source points but {len(ys)} targets")
    if xs.shape[1] != ys.shape[1]:
        raise DimMismatch(f"source dimension {xs.shape[1]} vs target {ys.shape[1]}")
    if n > MAX_EXACT_POINTS:
        raise TooLarge(f"exhaustive search handles at most {MAX_EXACT_POINTS} points, got {n}")
    table = cost(xs[:, None, :], ys[None, :, :])
    rows = np.arange(n)
    best, best_cost = None, np.inf
    for perm in permutations(range(n)):
        total = table[rows, perm].sum()
        if total < best_cost:
            best, best_cost = perm, total
    return DiscreteCoupling(xs, ys, tuple(best), float(best_cost / n))


def check_c_monotone(pairs, cost=sq_cost, subset_size_max=MAX_SUBSET):
    """Largest cost reduction obtainable by permuting destinations within a small subset.

    Parameters
    ----------
    pairs : (k, 2, D) array or sequence of ``(x, y)``
    subset_size_max : int
        Subsets of size ``2 .. subset_size_max`` are enumerated (at most 6).

    Returns
    -------
    MonotonicityReport
        ``max_violation`` is zero (up to roundoff) when the pairs are
        c-cyclically monotone at this subset size. The witness is the first
        maximizing subset in lexicographic order.
    """
    if subset_size_max > MAX_SUBSET:
        raise TooLarge(f"subset size is capped at {MAX_SUBSET}, got {subset_size_max}")
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[1] != 2:
        raise DimMismatch(f"expected (k, 2, D) pairs, got shape {arr.shape}")
    x, y = arr[:, 0], arr[:, 1]
    table = cost(x[:, None, :], y[None, :, :])
    best, witness = 0.0, ((), ())
    for m in range(2, min(subset_size_max, len(arr)) + 1):
        for subset in combinations(range(len(arr)), m):
            idx = np.array(subset)
            current = table[idx, idx].sum()
            for perm in permutations(range(m)):
                gain = current - table[idx, idx[list(perm)]].sum()
                if gain > best:
                    best, witness = float(gain), (subset, perm)
    return MonotonicityReport(max(best, ROUNDOFF_FLOOR), witness[0], tuple(witness[1]))


def regularized_dual_value(xs, ys, f, phi, psi, cost=sq_cost):
    """Regularized dual objective on uniform discrete marginals.

    ``mean(phi) + mean(psi) + mean_{l, s} F(phi_l + psi_s - c(x_l, y_s))``
    with ``phi`` and ``psi`` given as values on the points.
    """
    xs, ys = _as_points(xs), _as_points(ys)
    phi = np.asarray(phi, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    if phi.shape != (len(xs),) or psi.shape != (len(ys),):
        raise DimMismatch(f"potentials {phi.shape}, {psi.shape} vs {len(xs)} and {len(ys)} points")
    table = cost(xs[:, None, :], ys[None, :, :])
    return float(phi.mean() + psi.mean() + reg_value(f, phi[:, None] + psi[None, :] - table).mean())
