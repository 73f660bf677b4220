from itertools import permutations

import numpy as np
import pytest

from vwb.errors import DimMismatch, TooLarge
from vwb.objective import Regularizer
from vwb.oracle import check_c_monotone, exact_ot, power_cost, regularized_dual_value, sq_cost

L2_SMALL = Regularizer("l2", 1e-6)


def test_identical_point_sets_match_to_themselves(rng):
    xs = rng.normal(size=(5, 2))
    c = exact_ot(xs, xs)
    assert c.matching == tuple(range(5))
    assert c.cost == 0.0


def test_sorted_matching_in_one_dimension():
    c = exact_ot([0.0, 1.0, 2.0], [5.0, 3.0, 4.0])
    assert c.matching == (1, 2, 0)  # 0 -> 3, 1 -> 4, 2 -> 5
    brute = min(sum((x - y) ** 2 for x, y in zip([0, 1, 2], p)) for p in permutations([5, 3, 4]))
    assert c.cost == pytest.approx(brute / 3)
    assert exact_ot([0.0, 1.0], [0.0, 1.0]).cost == 0.0


def test_coupling_masses_are_uniform(rng):
    c = exact_ot(rng.normal(size=(4, 3)), rng.normal(size=(4, 3)))
    plan = c.masses
    np.testing.assert_allclose(plan.sum(axis=0), 0.25, atol=1e-12)
    np.testing.assert_allclose(plan.sum(axis=1), 0.25, atol=1e-12)
    assert c.support.shape == (4, 2, 3)


def test_exact_ot_errors():
    with pytest.raises(TooLarge):
        exact_ot(np.zeros((9, 1)), np.zeros((9, 1)))
    with pytest.raises(DimMismatch):
        exact_ot(np.zeros((3, 1)), np.zeros((2, 1)))


def test_cost_is_invariant_to_point_order(rng):
    xs, ys = rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
    base = exact_ot(xs, ys).cost
    assert exact_ot(xs[rng.permutation(6)], ys[rng.permutation(6)]).cost == pytest.approx(base, abs=1e-12)


def test_monotone_and_crossed_pairs():
    assert check_c_monotone([[0.0, 0.0], [1.0, 1.0]]).max_violation == 0.0
    report = check_c_monotone([[0.0, 1.0], [1.0, 0.0]])
    assert report.max_violation == pytest.approx(2.0)
    assert report.subset == (0, 1)
    assert report.permutation == (1, 0)
    with pytest.raises(TooLarge):
        check_c_monotone(np.zeros((3, 2, 1)), subset_size_max=7)


def test_witness_is_lexicographically_first():
    # two disjoint crossed pairs with equal gain; the first subset wins
    pairs = [[0.0, 1.0], [1.0, 0.0], [10.0, 11.0], [11.0, 10.0]]
    assert check_c_monotone(pairs, subset_size_max=2).subset == (0, 1)


@pytest.mark.parametrize("p", [1, 2])
def test_optimal_supports_are_cyclically_monotone(p):
    rng = np.random.default_rng(p)
    cost = power_cost(p)
    for _ in range(50):
        n, d = rng.integers(2, 7), rng.integers(1, 4)
        c = exact_ot(rng.normal(size=(n, d)), rng.normal(size=(n, d)), cost)
        assert check_c_monotone(c.support, cost).max_violation <= 1e-9


def test_swapping_an_optimal_matching_creates_violation(rng):
    for _ in range(20):
        xs, ys = rng.normal(size=(5, 2)), rng.normal(size=(5, 2))
        c = exact_ot(xs, ys)
        m = list(c.matching)
        m[0], m[1] = m[1], m[0]
        swapped = np.stack([xs, ys[m]], axis=1)
        assert check_c_monotone(swapped).max_violation > 0


def test_zero_potentials_give_zero_dual():
    xs = np.array([[0.0], [1.0]])
    assert regularized_dual_value(xs, xs + 1.0, L2_SMALL, np.zeros(2), np.zeros(2)) == 0.0


def test_exact_dual_potentials_recover_the_cost():
    # xs = (0, 1), ys = (0, 3): identity matching, cost (0 + 4) / 2 = 2
    xs, ys = np.array([[0.0], [1.0]]), np.array([[0.0], [3.0]])
    exact = exact_ot(xs, ys).cost
    # feasible (phi_l + psi_s <= c_ls) and tight on the matching
    phi = np.array([0.0, 1.0])
    psi = np.array([0.0, 3.0])
    table = (xs - ys.T) ** 2
    assert np.all(phi[:, None] + psi[None, :] <= table + 1e-12)
    assert phi[0] + psi[0] == table[0, 0] and phi[1] + psi[1] == table[1, 1]
    assert regularized_dual_value(xs, ys, L2_SMALL, phi, psi) == pytest.approx(exact, abs=1e-3)


def test_dual_value_is_bounded_by_exact_cost(rng):
    f = Regularizer("l2", 1e-4)
    for _ in range(100):
        n = rng.integers(2, 6)
        xs, ys = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
        exact = exact_ot(xs, ys).cost
        phi, psi = rng.normal(size=n), rng.normal(size=n)
        # weak duality against the optimal permutation plan, whose density
        # w.r.t. the product of uniform marginals is n on n cells: the L2
        # primal value of that plan is exact + eps * n
        assert regularized_dual_value(xs, ys, f, phi, psi) <= exact + f.eps * n + 1e-12
