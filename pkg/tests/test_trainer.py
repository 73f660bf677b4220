import numpy as np
import pytest

from vwb.dists import DiagGaussian, FullGaussian, Gaussian
from vwb.errors import DimMismatch, NonFiniteLoss
from vwb.gaussian import GaussianMoments
from vwb.objective import Regularizer, objective_value
from vwb.trainer import TrainConfig, Trainer, load_checkpoint, save_checkpoint, train, write_history_csv

SMALL = (16, 16)


def inputs_2d():
    return [Gaussian([-1.0, 0.0], np.eye(2)), Gaussian([1.0, 0.5], [[2.0, 0.3], [0.3, 1.0]]),
            Gaussian([0.0, 1.0], [[0.5, 0.0], [0.0, 1.5]])]


def config(**kw):
    base = dict(family=FullGaussian(2), hidden=SMALL, batch_size=16, iterations=20, eval_every=5, seed=3)
    base.update(kw)
    return TrainConfig(**base)


def all_params(trainer):
    return np.concatenate([np.concatenate([p.phi.params, p.psi.params]) for p in trainer.state.pairs])


def test_config_invariants():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=1)
    with pytest.raises(ValueError):
        TrainConfig(lambda_optimizer="rmsprop")
    with pytest.raises(DimMismatch):
        Trainer(inputs_2d(), config(family=FullGaussian(3)))


def test_fixed_seed_reproduces_history():
    a = train(inputs_2d(), config())
    b = train(inputs_2d(), config())
    strip = [(h.iteration, h.objective) for h in a.history]
    assert strip == [(h.iteration, h.objective) for h in b.history]
    np.testing.assert_array_equal(a.raw, b.raw)


def test_parallel_workers_are_bit_identical():
    seq = Trainer(inputs_2d(), config(workers=1))
    par = Trainer(inputs_2d(), config(workers=3))
    more = Trainer(inputs_2d(), config(workers=8))
    for _ in range(10):
        seq.step()
        par.step()
        more.step()
        np.testing.assert_array_equal(all_params(seq), all_params(par))
        np.testing.assert_array_equal(all_params(seq), all_params(more))
    np.testing.assert_array_equal(seq.state.raw, par.state.raw)
    par.close()
    more.close()


def test_history_timestamps_strictly_increase(tmp_path):
    result = train(inputs_2d(), config(iterations=30, eval_every=1))
    walls = [h.wall_seconds for h in result.history]
    assert all(b > a for a, b in zip(walls, walls[1:]))
    assert [h.iteration for h in result.history][:3] == [0, 1, 2]
    path = tmp_path / "h.csv"
    write_history_csv(path, result.history)
    assert path.read_text().splitlines()[0] == "iteration,objective,uvp,wall_seconds"


def test_constraints_hold_after_every_step():
    tr = Trainer(inputs_2d(), config(lambda_lr=0.05))
    for _ in range(30):
        tr.step()
        assert np.all(np.diag(tr.family.constrain(tr.state.raw)["chol"]) > 0)


def test_potential_update_is_ascent_on_frozen_batch():
    tr = Trainer(inputs_2d(), config(batch_size=32))
    st = tr.state
    increases = 0
    for _ in range(100):
        rng_states = [r.bit_generator.state for r in st.input_rngs], st.master_rng.bit_generator.state
        xs = np.stack([mu.sample(32, r) for mu, r in zip(tr.inputs, st.input_rngs)])
        y = tr.family.sample(st.raw, 32, st.master_rng)

        def value():
            phi = np.stack([p.phi.forward(xs[i]) for i, p in enumerate(st.pairs)])
            psi = np.stack([p.psi.forward(y) for p in st.pairs])
            return objective_value(phi, psi, xs, y, tr.weights, tr.config.regularizer,
                                   cyclical_sign=tr.config.cyclical_sign, pairing=tr.config.pairing).value

        before = value()
        # replay the same draws inside step()
        for r, s in zip(st.input_rngs, rng_states[0]):
            r.bit_generator.state = s
        st.master_rng.bit_generator.state = rng_states[1]
        raw = st.raw.copy()
        tr.step()
        st.raw = raw  # keep lambda frozen
        increases += value() >= before
    assert increases >= 90


def test_weight_invariance_under_input_permutation():
    ins = inputs_2d()
    w = np.array([0.2, 0.3, 0.5])
    order = [2, 0, 1]
    a = Trainer(ins, config(weights=w, pairing="paired"))
    b = Trainer([ins[k] for k in order], config(weights=w[order], stream_ids=order, pairing="paired"))
    for _ in range(15):
        a.step()
        b.step()
    np.testing.assert_allclose(a.state.raw, b.state.raw, rtol=1e-9, atol=1e-12)


def test_checkpoint_resume_is_exact(tmp_path):
    cfg = config(iterations=10)
    straight = Trainer(inputs_2d(), cfg)
    straight.run(20)
    first = Trainer(inputs_2d(), cfg)
    first.run(10)
    save_checkpoint(tmp_path / "ck.npz", first)
    resumed = load_checkpoint(tmp_path / "ck.npz", inputs_2d(), cfg)
    resumed.run(10)
    np.testing.assert_array_equal(all_params(resumed), all_params(straight))
    np.testing.assert_array_equal(resumed.state.raw, straight.state.raw)
    assert [h.iteration for h in resumed.state.history] == [h.iteration for h in straight.state.history]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_network_blow_up_is_named():
    tr = Trainer(inputs_2d(), config())
    tr.step()
    tr.state.pairs[1].psi.params[0] = np.inf
    with pytest.raises(NonFiniteLoss) as info:
        tr.step()
    assert info.value.term == "potential"
    assert info.value.iteration == 1


def test_entropy_clamp_keeps_large_arguments_finite():
    # far-apart inputs with a tiny eps push the exponent well past the clamp
    cfg = config(regularizer=Regularizer("entropy", 1e-3), cyclical_sign=1.0)
    tr = Trainer([Gaussian([-50.0, 0.0], np.eye(2)), Gaussian([50.0, 0.0], np.eye(2))], cfg)
    terms = tr.step()
    assert np.max(terms.r1_arg) / 1e-3 > 30
    assert np.all(np.isfinite(terms.r1))


def test_sgd_and_decay_options_run():
    for kw in (dict(lambda_optimizer="sgd", lambda_lr=1e-3), dict(lambda_decay=10.0)):
        result = train(inputs_2d(), config(**kw))
        assert result.iterations == 20
    tr = Trainer(inputs_2d(), config(lambda_decay=10.0, lambda_lr=1e-2))
    tr.run(30)
    assert tr.state.lambda_opt.lr == pytest.approx(1e-2 / (1 + 29 / 10.0) ** 0.6)


@pytest.mark.slow
def test_single_input_recovers_itself():
    truth = GaussianMoments(np.array([0.5]), np.array([[2.0]]))
    cfg = TrainConfig(family=DiagGaussian(1), hidden=(32, 32), iterations=3000, eval_every=1000,
                      lambda_lr=1e-2, seed=1)
    tr = Trainer([Gaussian(truth.mean, truth.cov)], cfg, truth)
    tr.run()
    # loose: the objective's own bias (see notes) dominates the budget here
    assert abs(tr.family.constrain(tr.state.raw)["mean"][0] - 0.5) < 0.3
