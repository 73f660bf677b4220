from pathlib import Path

import numpy as np
import pytest

from vwb import cli
from vwb.config import parse_config
from vwb.dists import Empirical, save_samples_csv
from vwb.errors import DimensionMismatch
from vwb.experiments import read_report, run_aggregate, synthetic_posteriors

FAST = "[train]\niterations = 30\neval_every = 10\nhidden = 8, 8\nbatch_size = 16\n[experiment]\neval_samples = 2000\nemit_samples = 200\n"


@pytest.fixture
def fast_cfg(tmp_path):
    path = tmp_path / "fast.cfg"
    path.write_text(FAST)
    return str(path)


def test_bench_gauss_writes_outputs(tmp_path, fast_cfg, capsys):
    out = tmp_path / "bench"
    assert cli.run(["bench-gauss", "--config", fast_cfg, "--seeds", "2", "--seed", "4", "--out", str(out)]) == 0
    report = read_report(out / "report.txt")
    assert len(report["uvp_per_seed"].split(",")) == 2
    for path in report["file"]:
        assert Path(path).exists()
    assert {p.name for p in out.iterdir()} >= {"history_seed4.csv", "history_seed5.csv", "samples_seed4.csv",
                                               "config.resolved.cfg", "report.txt"}
    assert "uvp = " in capsys.readouterr().out


def test_outputs_are_never_silently_overwritten(tmp_path, fast_cfg):
    out = str(tmp_path / "demo")
    assert cli.run(["demo-2d", "--config", fast_cfg, "--out", out]) == 0
    before = (tmp_path / "demo" / "barycenter.csv").read_text()
    assert cli.run(["demo-2d", "--config", fast_cfg, "--out", out, "--seed", "9"]) == 1
    assert (tmp_path / "demo" / "barycenter.csv").read_text() == before
    assert cli.run(["demo-2d", "--config", fast_cfg, "--out", out, "--seed", "9", "--overwrite"]) == 0


def test_demo_samples_reload_as_empirical(tmp_path, fast_cfg):
    out = tmp_path / "demo"
    assert cli.run(["demo-2d", "--config", fast_cfg, "--out", str(out)]) == 0
    for name in ("input0.csv", "input1.csv", "barycenter.csv"):
        assert Empirical.from_csv(out / name).table.shape == (200, 2)


def test_resolved_snapshot_reproduces_history(tmp_path, fast_cfg):
    first = tmp_path / "a"
    assert cli.run(["demo-2d", "--config", fast_cfg, "--seed", "2", "--out", str(first)]) == 0
    second = tmp_path / "b"
    assert cli.run(["demo-2d", "--config", str(first / "config.resolved.cfg"), "--out", str(second)]) == 0
    assert parse_config(first / "config.resolved.cfg") == parse_config(second / "config.resolved.cfg")

    def columns(path):
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        return rows[:, :3]  # wall-clock time is not reproducible

    np.testing.assert_array_equal(columns(first / "history.csv"), columns(second / "history.csv"))


def test_validation_errors_exit_with_one(tmp_path, fast_cfg):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[train]\nwhatever = 1\n")
    assert cli.run(["bench-gauss", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    bad.write_text("[train]\nweights = 0.5, 0.4\n")
    assert cli.run(["bench-gauss", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    assert cli.run(["aggregate", "--config", fast_cfg, str(tmp_path / "missing.csv"), str(tmp_path / "m2.csv"),
                    "--out", str(tmp_path / "y")]) == 1


def test_runtime_abort_exits_with_two(tmp_path, fast_cfg, monkeypatch):
    from vwb import experiments
    from vwb.errors import NonFiniteLoss

    def boom(*args, **kwargs):
        raise NonFiniteLoss("diverged", "r1", 3)

    monkeypatch.setattr(experiments, "run_2d_demo", boom)
    assert cli.run(["demo-2d", "--config", fast_cfg, "--out", str(tmp_path / "z")]) == 2


def test_aggregate_dimension_mismatch_names_both_files(tmp_path, fast_cfg):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    save_samples_csv(a, np.zeros((5, 2)))
    save_samples_csv(b, np.zeros((5, 3)))
    with pytest.raises(DimensionMismatch) as info:
        run_aggregate([a, b], parse_config(fast_cfg), tmp_path / "out")
    assert "a.csv" in str(info.value) and "b.csv" in str(info.value)
    assert cli.run(["aggregate", "--config", fast_cfg, str(a), str(b), "--out", str(tmp_path / "o")]) == 1


def test_aggregate_and_eval_on_synthetic_posteriors(tmp_path, fast_cfg, capsys):
    files, truth, moments = synthetic_posteriors(tmp_path / "post", n_subsets=3, n_samples=500)
    out = tmp_path / "agg"
    argv = ["aggregate", "--config", fast_cfg, *map(str, files), "--truth", str(truth), "--out", str(out)]
    assert cli.run(argv) == 0
    report = read_report(out / "report.txt")
    assert np.isfinite(float(report["uvp"]))
    capsys.readouterr()
    assert cli.run(["eval", str(truth), str(truth)]) == 0
    assert float(capsys.readouterr().out.split("=")[1]) == pytest.approx(0.0, abs=1e-9)


def test_synthetic_subset_posteriors_share_the_truth(tmp_path):
    # exact property of the construction: equal covariances, means average to the full mean
    files, _, moments = synthetic_posteriors(tmp_path, n_subsets=4, n_samples=20000, dim=2)
    means = [np.loadtxt(f, delimiter=",", skiprows=1).mean(axis=0) for f in files]
    sd = np.sqrt(np.diag(moments.cov))
    np.testing.assert_allclose(np.mean(means, axis=0), moments.mean, atol=4 * sd.max() / np.sqrt(80000))


def test_eval_dimension_mismatch(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    save_samples_csv(a, np.random.default_rng(0).normal(size=(10, 2)))
    save_samples_csv(b, np.random.default_rng(1).normal(size=(10, 3)))
    assert cli.run(["eval", str(a), str(b)]) == 1
