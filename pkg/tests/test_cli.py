import json

import numpy as np
import pytest

from msw.cli import config_from_mapping, load_sample_file, main, parse_config_file
from msw.errors import ConfigError
from msw.harness import load_rate_curve
from msw.measures import Gaussian, ParetoProduct, RkhsPushforward


def write_samples(path, arr, header=False):
    with open(path, "w") as fh:
        if header:
            fh.write(",".join(f"x{i + 1}" for i in range(arr.shape[1])) + "\n")
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def test_load_sample_file_with_and_without_header(tmp_path):
    arr = np.random.default_rng(0).normal(size=(8, 3))
    plain = tmp_path / "plain.csv"
    headed = tmp_path / "headed.csv"
    write_samples(plain, arr)
    write_samples(headed, arr, header=True)
    assert np.array_equal(load_sample_file(plain), arr)
    assert np.array_equal(load_sample_file(headed), arr)


def test_compute_command(tmp_path, capsys):
    rng = np.random.default_rng(1)
    x, y = tmp_path / "x.csv", tmp_path / "y.csv"
    write_samples(x, rng.normal(size=(12, 2)))
    write_samples(y, rng.normal(size=(10, 2)) + 1.0)
    code = main(["compute", str(x), str(y), "--p", "2", "--seed", "4", "--restarts", "6"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["value"] > 0.0
    assert len(payload["argmax"]) == 2


def test_parse_config_file(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        """
# comment
experiment = rate_two_sample
distribution = pareto_product
shape = 8
d = 2
n_grid = 10, 20, 40
mc_runs = 3
master_seed = 7
include_seeded_starts = true
"""
    )
    mapping = parse_config_file(cfg)
    assert mapping["experiment"] == "rate_two_sample"
    assert mapping["n_grid"] == [10, 20, 40]
    assert mapping["include_seeded_starts"] is True
    config, eps = config_from_mapping(mapping)
    assert isinstance(config.spec, ParetoProduct)
    assert config.n_grid == (10, 20, 40)
    assert config.mc_runs == 3
    assert len(eps) > 0


def test_config_covariance_forms():
    eq, _ = config_from_mapping(
        {"experiment": "rate_vs_truth", "d": 3, "mean": 1, "covariance": "equicorrelated(0.5)"}
    )
    assert isinstance(eq.spec, Gaussian)
    assert eq.spec.cov[0, 1] == pytest.approx(0.5)
    assert eq.spec.cov[0, 0] == pytest.approx(1.0)
    assert np.all(eq.spec.mean == 1.0)

    dg, _ = config_from_mapping(
        {"experiment": "rate_vs_truth", "d": 2, "covariance": "diag(4,1)"}
    )
    assert dg.spec.cov[0, 0] == 4.0

    rk, _ = config_from_mapping(
        {
            "experiment": "rkhs_rate",
            "distribution": "rkhs_pushforward",
            "sigma2": 4,
            "w": 1,
            "eta2": 1,
            "d_test_list": [10, 20],
        }
    )
    assert isinstance(rk.spec, RkhsPushforward)
    assert rk.d_test_list == (10, 20)

    with pytest.raises(ConfigError):
        config_from_mapping({"experiment": "rate_vs_truth", "d": 2, "covariance": "wat"})
    with pytest.raises(ConfigError):
        config_from_mapping({"distribution": "gaussian"})


def test_rate_command_end_to_end(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "experiment = rate_two_sample\ndistribution = gaussian\nd = 2\n"
        "n_grid = 8, 16, 32\nmc_runs = 2\nmaster_seed = 5\nrestarts = 3\nmax_iters = 30\n"
    )
    out = tmp_path / "curve.csv"
    assert main(["rate", "--config", str(cfg), "--out", str(out), "--threads", "2"]) == 0
    curve = load_rate_curve(out, "csv")
    assert curve.n.tolist() == [8, 16, 32]
    assert (tmp_path / "curve.meta.json").exists()
    # --seed overrides the master seed recorded in the metadata
    out2 = tmp_path / "curve2.csv"
    assert main(["rate", "--config", str(cfg), "--seed", "99", "--out", str(out2)]) == 0
    assert load_rate_curve(out2, "csv").meta["master_seed"] == 99


def test_ratio_command_end_to_end(tmp_path):
    cfg = tmp_path / "ratio.cfg"
    cfg.write_text(
        "experiment = ratio_exceedance\ndistribution = gaussian\nd = 2\n"
        "n_grid = 20\nmc_runs = 2\nmaster_seed = 5\nrestarts = 2\nmax_iters = 15\n"
        "eps_grid = 0.1, 0.5\n"
    )
    out = tmp_path / "table.csv"
    assert main(["ratio", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,epsilon,frequency,bound,bound_raw,runs"
    assert len(lines) == 3


def test_rkhs_spectrum_command(tmp_path):
    out = tmp_path / "spectrum.csv"
    code = main(
        ["rkhs-spectrum", "--sigma2", "0.25", "--w", str(0.125**0.5), "--j-max", "8",
         "--check", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "j,lambda"
    assert float(lines[1].split(",")[1]) == pytest.approx(0.5, rel=1e-12)
    report = json.loads((tmp_path / "spectrum.report.json").read_text())
    assert report["kappa"] == pytest.approx(4.0)
    assert report["orthonormality_error"] < 1e-10


def test_exit_codes(tmp_path):
    # missing config file -> I/O error
    assert main(["rate", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "o.csv")]) == 4
    # bad experiment -> config error
    bad = tmp_path / "bad.cfg"
    bad.write_text("experiment = bogus\n")
    assert main(["rate", "--config", str(bad), "--out", str(tmp_path / "o.csv")]) == 2
    # unwritable output path -> I/O error
    good = tmp_path / "good.cfg"
    good.write_text(
        "experiment = rate_two_sample\ndistribution = gaussian\nd = 2\n"
        "n_grid = 8, 16\nmc_runs = 1\nrestarts = 2\nmax_iters = 10\n"
    )
    assert main(["rate", "--config", str(good), "--out", str(tmp_path / "no_dir" / "o.csv")]) == 4
