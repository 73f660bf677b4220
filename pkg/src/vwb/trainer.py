"""Alternating stochastic optimization of the dual potentials (ascent) and
the variational parameters (descent)."""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import gradient
from .dists import GaussianMixture, check_constrained
from .errors import DimMismatch, NonFiniteLoss
from .gaussian import bw2_uvp, moments_from_samples
from .objective import Regularizer, check_weights, objective_upstream, objective_value, sq_euclidean
from .potentials import DEFAULT_HIDDEN, AdamState, PotentialNetwork, adam_step, adam_update_


@dataclass
class TrainConfig:
    weights: Optional[np.ndarray] = None  # None means equal weights
    family: object = None  # None means GaussianMixture(dim, 10)
    regularizer: Regularizer = field(default_factory=lambda: Regularizer("l2", 1e-4))
    batch_size: int = 64
    iterations: int = 20000
    hidden: tuple = DEFAULT_HIDDEN
    potential_lr: float = 1e-3
    lambda_lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    lambda_optimizer: str = "adam"  # or "sgd": rho_t = lambda_lr / (1 + t)^0.6
    lambda_decay: float = 0.0  # > 0: Adam step size lambda_lr / (1 + t / lambda_decay)^0.6
    control_variate: bool = True
    seed: int = 0
    eval_every: int = 200
    eval_samples: int = 10000
    workers: int = 1
    init_raw: Optional[np.ndarray] = None
    init_scale: float = 1.0
    cost: object = sq_euclidean
    cyclical_sign: float = -1.0  # +1 literal argument (collapses the proxy), 0 drops the term
    pairing: str = "all"
    stream_ids: Optional[list] = None  # per-input RNG stream labels, default 0..N-1

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch size must be at least 2")
        if self.lambda_optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown lambda optimizer {self.lambda_optimizer!r}")
        if self.workers < 1:
            raise ValueError("need at least one worker")


@dataclass
class PotentialPair:
    phi: PotentialNetwork
    psi: PotentialNetwork
    phi_opt: AdamState
    psi_opt: AdamState


@dataclass
class HistoryRecord:
    iteration: int
    objective: float
    uvp: float
    wall_seconds: float


@dataclass
class TrainState:
    pairs: list
    raw: np.ndarray
    lambda_opt: AdamState
    iteration: int
    master_rng: np.random.Generator
    input_rngs: list
    eval_rng: np.random.Generator
    history: list = field(default_factory=list)
    last_objective: float = float("nan")
    last_a_star: float = 0.0


@dataclass
class BarycenterResult:
    family: object
    raw: np.ndarray
    params: dict
    history: list
    iterations: int
    final_objective: float
    wall_seconds: float
    state: TrainState

    def sample(self, n, rng):
        return self.family.sample(self.raw, n, rng)


def _streams(seed, n, stream_ids):
    """Independent generators: master, evaluation, and one per input.

    Per-input streams are derived from ``(seed, stream_id)`` so the same
    input sees the same randomness wherever it sits in the input list.
    """
    ids = list(range(n)) if stream_ids is None else list(stream_ids)
    if len(ids) != n:
        raise DimMismatch(f"{n} inputs but {len(ids)} stream ids")
    master = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    evaluation = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    inputs = [np.random.default_rng(np.random.SeedSequence([seed, 2, k])) for k in ids]
    inits = [np.random.default_rng(np.random.SeedSequence([seed, 3, k])) for k in ids]
    return master, evaluation, inputs, inits


class Trainer:
    """Owns the inputs, configuration and mutable training state."""

    def __init__(self, inputs, config=None, ground_truth=None, state=None):
        self.inputs = list(inputs)
        if not self.inputs:
            raise ValueError("need at least one input distribution")
        self.config = config or TrainConfig()
        dim = self.inputs[0].dim
        if any(mu.dim != dim for mu in self.inputs):
            raise DimMismatch("input distributions must share a dimension")
        n = len(self.inputs)
        cfg = self.config
        self.weights = check_weights(np.full(n, 1.0 / n) if cfg.weights is None else cfg.weights, n)
        self.family = cfg.family if cfg.family is not None else GaussianMixture(dim, 10)
        if self.family.dim != dim:
            raise DimMismatch(f"variational family has dimension {self.family.dim}, inputs have {dim}")
        self.dim = dim
        self.ground_truth = ground_truth
        self.state = state if state is not None else self._fresh_state()
        self._pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
        self._t0 = None

    def _adam(self, n, lr):
        c = self.config
        return AdamState.zeros(n, lr=lr, beta1=c.beta1, beta2=c.beta2, eps=c.adam_eps)

    def _fresh_state(self):
        cfg = self.config
        master, evaluation, input_rngs, inits = _streams(cfg.seed, len(self.inputs), cfg.stream_ids)
        pairs = []
        for rng in inits:
            phi = PotentialNetwork(self.dim, cfg.hidden, rng=rng)
            psi = PotentialNetwork(self.dim, cfg.hidden, rng=rng)
            pairs.append(PotentialPair(phi, psi, self._adam(phi.n_params, cfg.potential_lr),
                                       self._adam(psi.n_params, cfg.potential_lr)))
        if cfg.init_raw is not None:
            raw = np.array(cfg.init_raw, dtype=np.float64)
        else:
            raw = self.family.initial_raw(np.random.default_rng(np.random.SeedSequence([cfg.seed, 4])),
                                          scale=cfg.init_scale)
        check_constrained(self.family, raw)
        return TrainState(pairs, raw, self._adam(raw.size, cfg.lambda_lr), 0, master, input_rngs, evaluation)

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _map(self, fn, items):
        if self._pool is None:
            return [fn(it) for it in items]
        return list(self._pool.map(fn, items))

    # -- one iteration -----------------------------------------------------

    def step(self):
        """One full iteration: sample, evaluate, ascend potentials, descend lambda."""
        cfg, st = self.config, self.state
        s = cfg.batch_size
        n = len(self.inputs)
        f = cfg.regularizer

        xs = np.stack([mu.sample(s, rng) for mu, rng in zip(self.inputs, st.input_rngs)])
        y = self.family.sample(st.raw, s, st.master_rng)

        def forward(i):
            pair = st.pairs[i]
            phi_x, phi_acts = pair.phi.forward(xs[i], keep=True)
            psi_y, psi_acts = pair.psi.forward(y, keep=True)
            return phi_x, phi_acts, psi_y, psi_acts

        fwd = self._map(forward, range(n))
        phi_x = np.stack([r[0] for r in fwd])
        psi_y = np.stack([r[2] for r in fwd])
        if not (np.all(np.isfinite(phi_x)) and np.all(np.isfinite(psi_y))):
            raise NonFiniteLoss("potential outputs are not finite (network blow-up)", "potential", st.iteration)

        terms = objective_value(phi_x, psi_y, xs, y, self.weights, f, cfg.cost, cfg.cyclical_sign, cfg.pairing)
        if not np.all(np.isfinite(terms.r1)):
            raise NonFiniteLoss("cyclical penalty r1 is not finite (entropy overflow)", "r1", st.iteration)
        if not np.all(np.isfinite(terms.r2)):
            raise NonFiniteLoss("marginal penalty r2 is not finite", "r2", st.iteration)
        d_phi, d_psi = objective_upstream(terms, self.weights, f, cfg.cyclical_sign)

        def update(i):
            pair = st.pairs[i]
            _, phi_acts, _, psi_acts = fwd[i]
            g_phi = pair.phi.backward(xs[i], d_phi[i], phi_acts)
            g_psi = pair.psi.backward(y, d_psi[i], psi_acts)
            if not (np.all(np.isfinite(g_phi)) and np.all(np.isfinite(g_psi))):
                raise NonFiniteLoss(f"potential gradient for input {i} is not finite", "potential", st.iteration)
            adam_update_(pair.phi_opt, pair.phi.params, g_phi, "ascent")
            adam_update_(pair.psi_opt, pair.psi.params, g_psi, "ascent")

        self._map(update, range(n))

        scores = self.family.score(st.raw, y)
        penalties = terms.per_sample_penalties(f)
        est = gradient.estimate(scores, penalties, self.weights)
        g = est.reduced if cfg.control_variate else est.raw
        if not np.all(np.isfinite(g)):
            raise NonFiniteLoss("variational gradient is not finite", "lambda", st.iteration)
        if cfg.lambda_optimizer == "adam":
            if cfg.lambda_decay > 0:
                st.lambda_opt.lr = cfg.lambda_lr / (1.0 + st.iteration / cfg.lambda_decay) ** 0.6
            st.raw, st.lambda_opt = adam_step(st.lambda_opt, st.raw, g, "descent")
        else:
            st.raw = st.raw - cfg.lambda_lr / (1.0 + st.iteration) ** 0.6 * g
        check_constrained(self.family, st.raw)
        st.iteration += 1
        st.last_objective = terms.value
        st.last_a_star = est.a_star
        return terms

    # -- evaluation and the outer loop -------------------------------------

    def evaluate(self, n_samples=None):
        """BW2-UVP of the current proxy against the ground truth (nan without one)."""
        if self.ground_truth is None:
            return float("nan")
        n_samples = n_samples or self.config.eval_samples
        draws = self.family.sample(self.state.raw, n_samples, self.state.eval_rng)
        return bw2_uvp(moments_from_samples(draws), self.ground_truth)

    def _record(self):
        st = self.state
        wall = time.perf_counter() - self._t0
        if st.history and wall <= st.history[-1].wall_seconds:
            wall = np.nextafter(st.history[-1].wall_seconds, np.inf)
        st.history.append(HistoryRecord(st.iteration, float(st.last_objective), self.evaluate(), wall))

    def run(self, iterations=None, callback=None):
        cfg = self.config
        total = cfg.iterations if iterations is None else iterations
        self._t0 = time.perf_counter() - (self.state.history[-1].wall_seconds if self.state.history else 0.0)
        if not self.state.history:
            self._record()
        target = self.state.iteration + total
        try:
            while self.state.iteration < target:
                self.step()
                if cfg.eval_every and self.state.iteration % cfg.eval_every == 0:
                    self._record()
                    if callback is not None:
                        callback(self)
        finally:
            self.close()
        if self.state.history[-1].iteration != self.state.iteration:
            self._record()
        return self.result()

    def result(self):
        st = self.state
        return BarycenterResult(
            family=self.family,
            raw=st.raw.copy(),
            params=self.family.constrain(st.raw),
            history=list(st.history),
            iterations=st.iteration,
            final_objective=float(st.last_objective),
            wall_seconds=st.history[-1].wall_seconds if st.history else 0.0,
            state=st,
        )


def train(inputs, config=None, ground_truth=None):
    """Run the configured iteration budget and return the trained proxy."""
    return Trainer(inputs, config, ground_truth).run()


def history_rows(history):
    return [(h.iteration, h.objective, h.uvp, h.wall_seconds) for h in history]


def write_history_csv(path, history):
    with open(path, "w") as fh:
        fh.write("iteration,objective,uvp,wall_seconds\n")
        for h in history:
            fh.write(f"{h.iteration},{h.objective!r},{h.uvp!r},{h.wall_seconds!r}\n")


# -- checkpoints ----------------------------------------------------------


def _adam_arrays(prefix, st, out):
    out[f"{prefix}_m"] = st.m
    out[f"{prefix}_v"] = st.v
    out[f"{prefix}_t"] = np.array(st.t)


def save_checkpoint(path, trainer):
    st = trainer.state
    out = {"raw": st.raw, "iteration": np.array(st.iteration)}
    _adam_arrays("lambda", st.lambda_opt, out)
    for i, pair in enumerate(st.pairs):
        out[f"phi{i}"] = pair.phi.params
        out[f"psi{i}"] = pair.psi.params
        _adam_arrays(f"phi{i}_adam", pair.phi_opt, out)
        _adam_arrays(f"psi{i}_adam", pair.psi_opt, out)
    rngs = {
        "master": st.master_rng.bit_generator.state,
        "eval": st.eval_rng.bit_generator.state,
        "inputs": [r.bit_generator.state for r in st.input_rngs],
    }
    out["rng_state"] = np.array(json.dumps(rngs))
    out["history"] = np.array(history_rows(st.history), dtype=np.float64).reshape(-1, 4)
    np.savez(path, **out)


def load_checkpoint(path, inputs, config, ground_truth=None):
    """Rebuild a :class:`Trainer` that continues exactly where ``path`` left off."""
    trainer = Trainer(inputs, config, ground_truth)
    st = trainer.state
    with np.load(path) as data:
        st.raw = data["raw"].copy()
        st.iteration = int(data["iteration"])

        def adam(prefix, lr):
            return AdamState(data[f"{prefix}_m"].copy(), data[f"{prefix}_v"].copy(), int(data[f"{prefix}_t"]),
                             lr, config.beta1, config.beta2, config.adam_eps)

        st.lambda_opt = adam("lambda", config.lambda_lr)
        for i, pair in enumerate(st.pairs):
            pair.phi.params[...] = data[f"phi{i}"]
            pair.psi.params[...] = data[f"psi{i}"]
            pair.phi_opt = adam(f"phi{i}_adam", config.potential_lr)
            pair.psi_opt = adam(f"psi{i}_adam", config.potential_lr)
        rngs = json.loads(str(data["rng_state"]))
        st.history = [HistoryRecord(int(r[0]), float(r[1]), float(r[2]), float(r[3])) for r in data["history"]]
    st.master_rng.bit_generator.state = rngs["master"]
    st.eval_rng.bit_generator.state = rngs["eval"]
    for r, s in zip(st.input_rngs, rngs["inputs"]):
        r.bit_generator.state = s
    return trainer
