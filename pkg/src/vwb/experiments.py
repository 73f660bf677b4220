"""Experiment drivers behind the command-line interface.

Each driver trains a proxy, writes plain-text outputs (history CSV, samples
CSV, a ``key = value`` report and the resolved config) into an output
directory, and returns a :class:`RunReport`.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import dump_config
from .dists import (
    DiagGaussian,
    Empirical,
    FullGaussian,
    Gaussian,
    GaussianMixture,
    Ring,
    RingFamily,
    load_samples_csv,
    save_samples_csv,
)
from .errors import DimensionMismatch, NonFiniteLoss
from .gaussian import GaussianMoments, bw2_uvp, fixed_point_barycenter, moments_from_samples, random_covariance
from .trainer import TrainConfig, Trainer, write_history_csv


@dataclass
class RunReport:
    uvp: float  # mean over seeds; nan without ground truth
    wall_seconds: float
    iterations: int
    final_objective: float
    paths: list = field(default_factory=list)
    uvps: list = field(default_factory=list)  # one per seed
    extra: dict = field(default_factory=dict)

    def lines(self):
        out = [
            f"uvp = {self.uvp!r}",
            f"uvp_per_seed = {', '.join(repr(u) for u in self.uvps)}",
            f"wall_seconds = {self.wall_seconds!r}",
            f"iterations = {self.iterations}",
            f"final_objective = {self.final_objective!r}",
        ]
        out += [f"{k} = {v}" for k, v in self.extra.items()]
        out += [f"file = {p}" for p in self.paths]
        return out


def read_report(path):
    """Parse a report file back into a dict of strings (``file`` entries as a list)."""
    out = {"file": []}
    for line in Path(path).read_text().splitlines():
        key, _, value = line.partition(" = ")
        if key == "file":
            out["file"].append(value)
        else:
            out[key] = value
    return out


class Outputs:
    """Output directory that refuses to clobber existing files unless told to."""

    def __init__(self, root, overwrite=False):
        self.root = Path(root)
        self.overwrite = overwrite
        self.written = []

    def claim(self, names):
        """Check up front that none of ``names`` exist; call before any training."""
        if not self.overwrite:
            clash = [str(self.root / n) for n in names if (self.root / n).exists()]
            if clash:
                raise FileExistsError(f"refusing to overwrite {', '.join(clash)} (pass --overwrite)")
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, name):
        p = self.root / name
        self.written.append(str(p))
        return p


def make_family(name, dim, components=10):
    if name == "mixture":
        return GaussianMixture(dim, components)
    if name == "full-gaussian":
        return FullGaussian(dim)
    if name == "diag-gaussian":
        return DiagGaussian(dim)
    if name == "ring":
        if dim != 2:
            raise DimensionMismatch(f"the ring family is planar, inputs have dimension {dim}")
        return RingFamily()
    raise ValueError(f"unknown family {name!r}")


def train_config(cfg, family, seed, stream_ids=None):
    """Map an :class:`ExperimentConfig` onto the trainer's configuration."""
    return TrainConfig(
        weights=None if cfg.weights is None else np.array(cfg.weights),
        family=family,
        regularizer=cfg.regularizer_spec(),
        batch_size=cfg.batch_size,
        iterations=cfg.iterations,
        hidden=cfg.hidden,
        potential_lr=cfg.potential_lr,
        lambda_lr=cfg.lambda_lr,
        lambda_decay=cfg.lambda_decay,
        lambda_optimizer=cfg.lambda_optimizer,
        control_variate=cfg.control_variate,
        seed=seed,
        eval_every=cfg.eval_every,
        workers=cfg.workers,
        init_scale=cfg.init_scale,
        cyclical_sign=cfg.cyclical_sign,
        pairing=cfg.pairing,
        stream_ids=stream_ids,
    )


def _train(trainer, history_path):
    """Run to completion; on divergence still write the partial history."""
    try:
        result = trainer.run()
    except NonFiniteLoss:
        write_history_csv(history_path, trainer.state.history)
        raise
    write_history_csv(history_path, result.history)
    return result


def _final_uvp(result, truth, n_samples, seed):
    if truth is None:
        return float("nan")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 5]))
    return bw2_uvp(moments_from_samples(result.sample(n_samples, rng)), truth)


def _emit(outputs, name, result, cfg, seed):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 6]))
    samples = result.sample(cfg.emit_samples, rng)
    save_samples_csv(outputs.path(name), samples)
    return samples


def _finish(outputs, report, cfg):
    outputs.path("config.resolved.cfg").write_text(dump_config(cfg))
    report_path = outputs.path("report.txt")
    report.paths = list(outputs.written)
    report_path.write_text("\n".join(report.lines()) + "\n")
    return report


def gaussian_problem(dim, n_inputs, seed):
    """Random Gaussian inputs (uniform means in [-1, 1]) and their barycenter."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    moments = [GaussianMoments(rng.uniform(-1.0, 1.0, dim), random_covariance(dim, rng)) for _ in range(n_inputs)]
    return [Gaussian(m.mean, m.cov) for m in moments], fixed_point_barycenter(moments)


def run_gaussian_benchmark(cfg, out_dir, overwrite=False, callback=None):
    """Train on ``cfg.seeds`` random Gaussian problems and report the mean UVP."""
    seeds = [cfg.seed + k for k in range(cfg.seeds)]
    outputs = Outputs(out_dir, overwrite)
    names = [f"{stem}_seed{s}.csv" for s in seeds for stem in ("history", "samples")]
    outputs.claim(names + ["report.txt", "config.resolved.cfg"])
    uvps, walls, objective = [], [], float("nan")
    for s in seeds:
        inputs, truth = gaussian_problem(cfg.dim, cfg.n_inputs, s)
        family = make_family(cfg.bench_family, cfg.dim, cfg.components)
        trainer = Trainer(inputs, train_config(cfg, family, s), truth)
        result = _train(trainer, outputs.path(f"history_seed{s}.csv"))
        uvps.append(_final_uvp(result, truth, cfg.eval_samples, s))
        walls.append(result.wall_seconds)
        objective = result.final_objective
        _emit(outputs, f"samples_seed{s}.csv", result, cfg, s)
        if callback is not None:
            callback(s, uvps[-1], result)
    report = RunReport(float(np.mean(uvps)), float(np.sum(walls)), cfg.iterations, objective, uvps=uvps)
    return _finish(outputs, report, cfg)


def demo_inputs(scenario):
    """Inputs, default proxy family name and ground truth of a bundled 2-D scenario."""
    if scenario in ("two-gaussians", "single-gaussian"):
        if scenario == "two-gaussians":
            moments = [GaussianMoments(np.array([-1.0, 0.0]), np.eye(2)), GaussianMoments(np.array([1.0, 0.0]), np.eye(2))]
        else:
            moments = [GaussianMoments(np.array([0.5, -0.5]), np.array([[1.0, 0.3], [0.3, 0.5]]))]
        return [Gaussian(m.mean, m.cov) for m in moments], "mixture", fixed_point_barycenter(moments)
    if scenario == "rings":
        return [Ring(radius=1.0, width=0.1), Ring(radius=3.0, width=0.1)], "ring", None
    raise ValueError(f"unknown scenario {scenario!r}")


def run_2d_demo(cfg, out_dir, overwrite=False):
    """Train on a bundled 2-D scenario and emit input and barycenter samples."""
    inputs, family_name, truth = demo_inputs(cfg.scenario)
    if cfg.demo_family != "auto":
        family_name = cfg.demo_family
    outputs = Outputs(out_dir, overwrite)
    input_names = [f"input{k}.csv" for k in range(len(inputs))]
    outputs.claim(input_names + ["barycenter.csv", "history.csv", "report.txt", "config.resolved.cfg"])
    trainer = Trainer(inputs, train_config(cfg, make_family(family_name, 2, cfg.components), cfg.seed), truth)
    result = _train(trainer, outputs.path("history.csv"))
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 8]))
    for name, mu in zip(input_names, inputs):
        save_samples_csv(outputs.path(name), mu.sample(cfg.emit_samples, rng))
    samples = _emit(outputs, "barycenter.csv", result, cfg, cfg.seed)
    uvp = _final_uvp(result, truth, cfg.eval_samples, cfg.seed)
    mean = samples.mean(axis=0)
    cov = np.cov(samples, rowvar=False)
    extra = {
        "scenario": cfg.scenario,
        "family": family_name,
        "barycenter_mean": ", ".join(repr(float(v)) for v in mean),
        "barycenter_cov": ", ".join(repr(float(v)) for v in cov.ravel()),
    }
    report = RunReport(uvp, result.wall_seconds, result.iterations, result.final_objective, uvps=[uvp], extra=extra)
    return _finish(outputs, report, cfg)


def load_inputs(paths):
    """Empirical inputs from sample files; all must share one dimension."""
    inputs = [Empirical.from_csv(p) for p in paths]
    for p, mu in zip(paths[1:], inputs[1:]):
        if mu.dim != inputs[0].dim:
            raise DimensionMismatch(f"{paths[0]} has {inputs[0].dim} columns but {p} has {mu.dim}")
    return inputs


def run_aggregate(sample_files, cfg, out_dir, overwrite=False, truth_file=None):
    """Barycenter of posterior sample files; UVP against ``truth_file`` samples if given."""
    paths = [str(p) for p in sample_files]
    if len(paths) < 2:
        raise ValueError(f"aggregation needs at least two sample files, got {len(paths)}")
    inputs = load_inputs(paths)
    truth = None
    if truth_file is not None:
        truth_samples = load_samples_csv(truth_file)
        if truth_samples.shape[1] != inputs[0].dim:
            raise DimensionMismatch(
                f"{paths[0]} has {inputs[0].dim} columns but {truth_file} has {truth_samples.shape[1]}"
            )
        truth = moments_from_samples(truth_samples)
    outputs = Outputs(out_dir, overwrite)
    outputs.claim(["barycenter.csv", "history.csv", "report.txt", "config.resolved.cfg"])
    family = make_family(cfg.aggregate_family, inputs[0].dim, cfg.components)
    # isotropic start at the pooled sample mean and spread: posteriors live on
    # their own scale, far from the unit-scale default
    pooled = np.concatenate([mu.table for mu in inputs])
    spread = float(np.sqrt(pooled.var(axis=0).mean()))
    tcfg = train_config(cfg, family, cfg.seed)
    tcfg.init_raw = family.initial_raw(np.random.default_rng(np.random.SeedSequence([cfg.seed, 4])),
                                       center=pooled.mean(axis=0), scale=cfg.init_scale * spread)
    trainer = Trainer(inputs, tcfg, truth)
    result = _train(trainer, outputs.path("history.csv"))
    _emit(outputs, "barycenter.csv", result, cfg, cfg.seed)
    uvp = _final_uvp(result, truth, cfg.eval_samples, cfg.seed)
    report = RunReport(uvp, result.wall_seconds, result.iterations, result.final_objective, uvps=[uvp],
                       extra={"inputs": ", ".join(paths)})
    return _finish(outputs, report, cfg)


def synthetic_posteriors(out_dir, n_subsets=5, dim=2, n_data=500, n_samples=5000, seed=0):
    """Subset posteriors of a conjugate Gaussian mean model, plus the full-data posterior.

    Data ``z_j ~ N(theta, Sigma)`` with a ``N(0, I)`` prior. Each subset
    posterior raises its likelihood to the number of subsets, so every subset
    shares the full-data posterior covariance and the subset means average to
    the full-data mean; the Wasserstein barycenter of the subset posteriors is
    therefore exactly the full-data posterior.

    Returns the subset file paths, the truth file path and the exact posterior
    moments.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 9]))
    noise = random_covariance(dim, rng) + np.eye(dim)
    theta = rng.normal(size=dim)
    data = rng.multivariate_normal(theta, noise, size=n_data)
    noise_prec = np.linalg.inv(noise)
    post_cov = np.linalg.inv(np.eye(dim) + n_data * noise_prec)
    post_cov = 0.5 * (post_cov + post_cov.T)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for k, chunk in enumerate(np.array_split(data, n_subsets)):
        mean_k = post_cov @ (n_subsets * noise_prec @ chunk.sum(axis=0))
        path = out / f"subset{k}.csv"
        save_samples_csv(path, rng.multivariate_normal(mean_k, post_cov, size=n_samples))
        files.append(path)
    full_mean = post_cov @ (noise_prec @ data.sum(axis=0))
    truth_path = out / "full_posterior.csv"
    save_samples_csv(truth_path, rng.multivariate_normal(full_mean, post_cov, size=4 * n_samples))
    return files, truth_path, GaussianMoments(full_mean, post_cov)


def evaluate_files(candidate, truth):
    """BW2-UVP between the sample moments of two files."""
    a, b = load_samples_csv(candidate), load_samples_csv(truth)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"{candidate} has {a.shape[1]} columns but {truth} has {b.shape[1]}")
    return bw2_uvp(moments_from_samples(a), moments_from_samples(b))
