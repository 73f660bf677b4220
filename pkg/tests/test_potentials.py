import numpy as np
import pytest

from vwb.errors import DimMismatch, LayoutMismatch
from vwb.potentials import AdamState, PotentialNetwork, adam_step, adam_update_, load_network, save_network


def test_layout_and_initialisation(rng):
    net = PotentialNetwork(3, (128, 256), rng=rng)
    assert net.widths == (3, 128, 256, 1)
    assert net.n_params == 3 * 128 + 128 + 128 * 256 + 256 + 256 + 1
    for W, b in net._layers:
        limit = np.sqrt(6.0 / sum(W.shape))
        assert np.abs(W).max() <= limit
        assert np.all(b == 0)


def test_params_are_views(rng):
    net = PotentialNetwork(2, (4,), rng=rng)
    x = rng.normal(size=(3, 2))
    before = net.forward(x)
    net.params[-1] += 1.0  # output bias
    np.testing.assert_allclose(net.forward(x), before + 1.0)


def test_backward_matches_finite_differences(rng):
    net = PotentialNetwork(2, (5, 4), rng=rng)
    net.params += 0.05 * rng.normal(size=net.n_params)  # move biases off zero
    x = rng.normal(size=(6, 2))
    up = rng.normal(size=6)
    grad = net.backward(x, up)
    h = 1e-6
    for k in range(net.n_params):
        old = net.params[k]
        net.params[k] = old + h
        plus = up @ net.forward(x)
        net.params[k] = old - h
        minus = up @ net.forward(x)
        net.params[k] = old
        assert grad[k] == pytest.approx((plus - minus) / (2 * h), rel=1e-5, abs=1e-7)


def test_relu_subgradient_at_zero_is_zero():
    net = PotentialNetwork(1, (1,), params=np.array([1.0, 0.0, 1.0, 0.0]))
    assert np.all(net.backward(np.zeros((1, 1)), np.ones(1))[:2] == 0.0)


def test_dimension_errors(rng):
    net = PotentialNetwork(2, (3,), rng=rng)
    with pytest.raises(DimMismatch):
        net.forward(np.zeros((4, 3)))
    with pytest.raises(DimMismatch):
        net.backward(np.zeros((4, 2)), np.zeros(3))
    with pytest.raises(LayoutMismatch):
        PotentialNetwork(2, (3,), params=np.zeros(5))


def test_save_load_round_trip(tmp_path, rng):
    net = PotentialNetwork(3, (7, 5), rng=rng)
    save_network(tmp_path / "n.npz", net)
    back = load_network(tmp_path / "n.npz")
    assert back.widths == net.widths
    np.testing.assert_array_equal(back.params, net.params)
    clone = net.copy()
    clone.params[0] += 1
    assert clone.params[0] != net.params[0]


def test_adam_first_step_moves_by_learning_rate():
    # bias correction makes the first step lr * sign(grad) up to eps
    params = np.zeros(3)
    new, state = adam_step(AdamState.zeros(3, lr=0.1), params, np.array([2.0, -0.5, 1e-3]), "descent")
    np.testing.assert_allclose(new, [-0.1, 0.1, -0.1], rtol=1e-4)
    assert state.t == 1
    assert np.all(params == 0)
    up, _ = adam_step(AdamState.zeros(3, lr=0.1), params, np.ones(3), "ascent")
    np.testing.assert_allclose(up, 0.1, rtol=1e-6)


def test_adam_matches_reference_recursion(rng):
    lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8
    p = rng.normal(size=4)
    m = v = np.zeros(4)
    state = AdamState.zeros(4)
    ours = p.copy()
    for t in range(1, 6):
        g = rng.normal(size=4)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p = p - lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
        ours, state = adam_step(state, ours, g)
    np.testing.assert_allclose(ours, p, rtol=1e-12)


def test_in_place_adam_agrees_with_pure_form(rng):
    a = AdamState.zeros(5, lr=0.01)
    b = AdamState.zeros(5, lr=0.01)
    pa = rng.normal(size=5)
    pb = pa.copy()
    for _ in range(10):
        g = rng.normal(size=5)
        pa, a = adam_step(a, pa, g, "ascent")
        adam_update_(b, pb, g, "ascent")
    np.testing.assert_allclose(pb, pa, rtol=1e-13)
    assert a.t == b.t == 10


def test_adam_rejects_bad_input():
    with pytest.raises(ValueError):
        adam_step(AdamState.zeros(2), np.zeros(2), np.zeros(2), "sideways")
    with pytest.raises(LayoutMismatch):
        adam_step(AdamState.zeros(2), np.zeros(2), np.zeros(3))
