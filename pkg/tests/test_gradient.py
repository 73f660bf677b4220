import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vwb import gradient
from vwb.errors import ShapeMismatch


def test_optimal_scaling_recovers_linear_relation(rng):
    h = rng.normal(size=(500, 3))
    f = 2.5 * h + 0.01 * rng.normal(size=h.shape)
    assert gradient.optimal_scaling(f, h) == pytest.approx(2.5, abs=0.01)


def test_optimal_scaling_degenerate_control():
    assert gradient.optimal_scaling(np.ones((4, 2)), np.ones((4, 2))) == 0.0
    with pytest.raises(ShapeMismatch):
        gradient.optimal_scaling(np.ones((1, 2)), np.ones((1, 2)))
    with pytest.raises(ShapeMismatch):
        gradient.optimal_scaling(np.ones((3, 2)), np.ones((3, 3)))


def test_raw_gradient_by_hand():
    scores = np.array([[1.0, 0.0], [0.0, 2.0]])
    penalties = np.array([[1.0, 3.0], [5.0, 7.0]])
    w = np.array([0.5, 0.5])
    # per-sample weighted penalties 3 and 5
    np.testing.assert_allclose(gradient.raw_gradient(scores, penalties, w), [1.5, 5.0])
    np.testing.assert_allclose(gradient.reduced_gradient(scores, penalties, w, 1.0), [1.0, 4.0])


@given(st.integers(2, 30), st.integers(1, 4), st.integers(0, 2**31 - 1))
@settings(max_examples=50, deadline=None)
def test_reduced_estimator_never_increases_batch_variance(s, p, seed):
    # a* minimises the pooled sample variance of f - a h over the same batch
    rng = np.random.default_rng(seed)
    scores = rng.normal(size=(s, p))
    penalties = rng.normal(size=(2, s)) + scores[:, 0]
    est = gradient.estimate(scores, penalties, np.array([0.3, 0.7]))
    raw_terms = gradient.per_sample_terms(scores, penalties, np.array([0.3, 0.7]))
    assert est.empirical_variance.sum() <= raw_terms.var(axis=0, ddof=1).sum() + 1e-9


def test_estimate_matches_reduced_gradient(rng):
    scores = rng.normal(size=(64, 3))
    penalties = rng.normal(size=(2, 64))
    w = np.array([0.4, 0.6])
    est = gradient.estimate(scores, penalties, w)
    np.testing.assert_allclose(est.reduced, gradient.reduced_gradient(scores, penalties, w, est.a_star), atol=1e-12)
    np.testing.assert_allclose(est.raw, gradient.raw_gradient(scores, penalties, w))
    np.testing.assert_allclose(est.control, scores.mean(axis=0))


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        gradient.raw_gradient(np.zeros((4, 2)), np.zeros((2, 3)), np.array([0.5, 0.5]))
