"""Experiment driver: seeded Monte Carlo rate curves, ratio exceedance tables,
slope fits, and CSV/JSON emission.

Every (sample size, trial) work item owns random streams derived from the
master seed and its own indices, so results are bit-identical no matter how
the items are scheduled across worker processes.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .bounds import (
    BoundParams,
    expectation_bound_exp_decay,
    expectation_bound_finite,
    expectation_bound_poly_decay,
)
from .errors import ConfigError, DomainError
from .maxsliced import OptimizerOpts, msw_empirical, msw_vs_analytic
from .measures import (
    DistributionSpec,
    Gaussian,
    ParetoProduct,
    RkhsPushforward,
    RngStream,
    sample,
)
from .ratio import ratio_sup, ratio_tail_bound

EXPERIMENTS = ("rate_vs_truth", "rate_two_sample", "ratio_exceedance", "rkhs_rate")

# stream roles within one (n, trial) work item
_ROLE_MU, _ROLE_NU, _ROLE_OPT, _ROLE_SPARE = 0, 1, 2, 3

# desk-scale defaults; the library default OptimizerOpts is heavier than the
# Monte Carlo experiments need, so the harness ships its own
DEFAULT_N_GRID = (50, 100, 200, 400, 800, 1600)
EXPERIMENT_OPTIMIZER = OptimizerOpts(restarts=6, max_iters=200)

_OVERLAY_KINDS = ("finite", "exp_decay", "poly_decay")


@dataclass(frozen=True)
class Overlay:
    """An expectation-bound curve to emit next to the empirical means."""

    kind: str
    params: BoundParams

    def evaluate(self, n: int) -> float:
        if self.kind == "finite":
            return expectation_bound_finite(self.params, n)
        if self.kind == "exp_decay":
            return expectation_bound_exp_decay(self.params, n)
        if self.kind == "poly_decay":
            return expectation_bound_poly_decay(self.params, n)
        raise ConfigError(f"unknown overlay kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    spec: DistributionSpec
    p: float = 2.0
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    mc_runs: int = 100
    master_seed: int = 0
    optimizer: OptimizerOpts = EXPERIMENT_OPTIMIZER
    d_test_list: tuple[int, ...] | None = None
    overlay: Overlay | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) < 1 or any(n < 2 for n in grid) or any(
            b <= a for a, b in zip(grid, grid[1:])
        ):
            raise ConfigError(f"n_grid must be strictly ascending with entries >= 2, got {grid}")
        object.__setattr__(self, "n_grid", grid)
        if self.mc_runs < 1:
            raise ConfigError(f"mc_runs must be >= 1, got {self.mc_runs}")
        if not self.p >= 1.0:
            raise ConfigError(f"order p must be >= 1, got {self.p}")
        if self.experiment in ("rate_vs_truth", "ratio_exceedance") and not isinstance(self.spec, Gaussian):
            raise ConfigError(f"experiment {self.experiment!r} requires a Gaussian spec")
        if self.experiment == "rkhs_rate":
            if not isinstance(self.spec, RkhsPushforward):
                raise ConfigError("experiment 'rkhs_rate' requires an RkhsPushforward spec")
            if self.d_test_list is None:
                object.__setattr__(self, "d_test_list", (self.spec.d_test,))
            else:
                lst = tuple(int(d) for d in self.d_test_list)
                if any(d < 1 for d in lst):
                    raise ConfigError(f"d_test_list entries must be >= 1, got {lst}")
                object.__setattr__(self, "d_test_list", lst)


@dataclass(frozen=True)
class RateCurve:
    """Per-n Monte Carlo estimates of the expected max-sliced distance."""

    n: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    runs: np.ndarray
    wall_s: np.ndarray
    meta: dict
    bound: np.ndarray | None = None

    def same_statistics(self, other: "RateCurve") -> bool:
        """Bitwise equality of everything except the wallclock column."""
        return (
            np.array_equal(self.n, other.n)
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.stderr, other.stderr)
            and np.array_equal(self.runs, other.runs)
            and (
                (self.bound is None and other.bound is None)
                or (self.bound is not None and other.bound is not None
                    and np.array_equal(self.bound, other.bound))
            )
        )


@dataclass(frozen=True)
class RatioTable:
    """Exceedance frequencies of the ratio statistic next to the tail bound."""

    n: np.ndarray
    epsilon: np.ndarray
    frequency: np.ndarray
    bound: np.ndarray
    bound_raw: np.ndarray
    runs: np.ndarray
    meta: dict

    def same_statistics(self, other: "RatioTable") -> bool:
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("n", "epsilon", "frequency", "bound", "bound_raw", "runs")
        )


def spec_to_dict(spec: DistributionSpec) -> dict:
    if isinstance(spec, Gaussian):
        return {
            "distribution": "gaussian",
            "mean": spec.mean.tolist(),
            "cov": spec.cov.tolist(),
        }
    if isinstance(spec, ParetoProduct):
        return {"distribution": "pareto_product", "shape": spec.shape, "d": spec.d}
    if isinstance(spec, RkhsPushforward):
        return {
            "distribution": "rkhs_pushforward",
            "sigma2": spec.kernel.sigma2,
            "w": spec.kernel.w,
            "eta2": spec.eta2,
            "d_test": spec.d_test,
        }
    raise ConfigError(f"cannot serialize spec of type {type(spec).__name__}")


def config_to_dict(config: ExperimentConfig) -> dict:
    out = {
        "experiment": config.experiment,
        "spec": spec_to_dict(config.spec),
        "p": config.p,
        "n_grid": list(config.n_grid),
        "mc_runs": config.mc_runs,
        "master_seed": config.master_seed,
        "optimizer": asdict(config.optimizer),
    }
    if config.d_test_list is not None:
        out["d_test_list"] = list(config.d_test_list)
    if config.overlay is not None:
        out["overlay"] = {"kind": config.overlay.kind, **asdict(config.overlay.params)}
    return out


def _meta(config: ExperimentConfig) -> dict:
    blob = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return {
        "config": config_to_dict(config),
        "master_seed": config.master_seed,
        "content_hash": hashlib.sha256(blob.encode()).hexdigest(),
    }


def _streams(config: ExperimentConfig, n_index: int, trial: int) -> tuple[RngStream, ...]:
    base = n_index * config.mc_runs * 4 + trial * 4
    return tuple(
        RngStream(config.master_seed, base + role)
        for role in (_ROLE_MU, _ROLE_NU, _ROLE_OPT, _ROLE_SPARE)
    )


def _rate_trial(config: ExperimentConfig, n_index: int, trial: int):
    n = config.n_grid[n_index]
    mu_stream, nu_stream, opt_stream, _ = _streams(config, n_index, trial)
    start = time.perf_counter()
    if config.experiment == "rate_vs_truth":
        xs = sample(config.spec, n, mu_stream)
        values = (msw_vs_analytic(xs, config.spec, config.p, config.optimizer, opt_stream).value,)
    elif config.experiment == "rate_two_sample":
        xs = sample(config.spec, n, mu_stream)
        ys = sample(config.spec, n, nu_stream)
        values = (msw_empirical(xs, ys, config.p, config.optimizer, opt_stream).value,)
    else:  # rkhs_rate: one latent draw shared across truncation levels
        spec = config.spec
        d_max = max(config.d_test_list)
        big = RkhsPushforward(spec.kernel, spec.eta2, d_max)
        xs = sample(big, n, mu_stream)
        ys = sample(big, n, nu_stream)
        values = tuple(
            msw_empirical(
                xs[:, :dt], ys[:, :dt], config.p, config.optimizer, opt_stream.child(k)
            ).value
            for k, dt in enumerate(config.d_test_list)
        )
    wall = time.perf_counter() - start
    return n_index, trial, values, wall


def _ratio_trial(config: ExperimentConfig, n_index: int, trial: int):
    n = config.n_grid[n_index]
    mu_stream, _, opt_stream, _ = _streams(config, n_index, trial)
    start = time.perf_counter()
    xs = sample(config.spec, n, mu_stream)
    value = ratio_sup(xs, config.spec, config.optimizer, opt_stream).value
    wall = time.perf_counter() - start
    return n_index, trial, (value,), wall


def _run_items(worker, config: ExperimentConfig, items, threads: int):
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads == 1 or len(items) <= 1:
        results = [worker(config, *it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(worker, config, *it) for it in items]
            results = [f.result() for f in futures]
    # deterministic fold: order by (n_index, trial) regardless of completion
    results.sort(key=lambda r: (r[0], r[1]))
    return results


def _aggregate(config: ExperimentConfig, results, column: int) -> RateCurve:
    n_count = len(config.n_grid)
    vals = np.empty((n_count, config.mc_runs))
    walls = np.empty((n_count, config.mc_runs))
    for n_index, trial, values, wall in results:
        vals[n_index, trial] = values[column]
        walls[n_index, trial] = wall
    means = vals.mean(axis=1)
    if config.mc_runs > 1:
        stderrs = vals.std(axis=1, ddof=1) / math.sqrt(config.mc_runs)
    else:
        stderrs = np.zeros(n_count)
    bound = None
    if config.overlay is not None:
        bound = np.array([config.overlay.evaluate(n) for n in config.n_grid])
    return RateCurve(
        n=np.array(config.n_grid, dtype=np.int64),
        mean=means,
        stderr=stderrs,
        runs=np.full(n_count, config.mc_runs, dtype=np.int64),
        wall_s=walls.mean(axis=1),
        meta=_meta(config),
        bound=bound,
    )


def run_rate_experiment(config: ExperimentConfig, threads: int = 1):
    """Monte Carlo estimate of n -> E[MSW_p] over the configured grid.

    Returns a RateCurve, except for the 'rkhs_rate' experiment which returns
    one curve per truncation level as {d_test: RateCurve}. threads = 0 picks
    the CPU count; any thread count produces identical statistics.
    """
    if config.experiment not in ("rate_vs_truth", "rate_two_sample", "rkhs_rate"):
        raise ConfigError(f"run_rate_experiment cannot run {config.experiment!r}")
    items = [(i, t) for i in range(len(config.n_grid)) for t in range(config.mc_runs)]
    results = _run_items(_rate_trial, config, items, threads)
    if config.experiment == "rkhs_rate":
        return {
            dt: _aggregate(config, results, k)
            for k, dt in enumerate(config.d_test_list)
        }
    return _aggregate(config, results, 0)


def run_ratio_experiment(config: ExperimentConfig, eps_grid, threads: int = 1) -> RatioTable:
    """Exceedance frequencies of the ratio statistic against the tail bound."""
    if config.experiment != "ratio_exceedance":
        raise ConfigError(f"run_ratio_experiment cannot run {config.experiment!r}")
    eps_grid = np.asarray(eps_grid, dtype=np.float64)
    if eps_grid.ndim != 1 or eps_grid.size < 1 or np.any(eps_grid < 0.0):
        raise ConfigError("eps_grid must be a nonempty vector of nonnegative thresholds")
    d = config.spec.dim
    items = [(i, t) for i in range(len(config.n_grid)) for t in range(config.mc_runs)]
    results = _run_items(_ratio_trial, config, items, threads)
    values = np.empty((len(config.n_grid), config.mc_runs))
    for n_index, trial, vals, _ in results:
        values[n_index, trial] = vals[0]
    rows_n, rows_eps, rows_freq, rows_bound, rows_raw = [], [], [], [], []
    for i, n in enumerate(config.n_grid):
        for eps in eps_grid:
            bound = ratio_tail_bound(n, d, float(eps))
            rows_n.append(n)
            rows_eps.append(float(eps))
            rows_freq.append(float(np.mean(values[i] >= eps)))
            rows_bound.append(bound.clipped)
            rows_raw.append(bound.raw)
    return RatioTable(
        n=np.array(rows_n, dtype=np.int64),
        epsilon=np.array(rows_eps),
        frequency=np.array(rows_freq),
        bound=np.array(rows_bound),
        bound_raw=np.array(rows_raw),
        runs=np.full(len(rows_n), config.mc_runs, dtype=np.int64),
        meta=_meta(config),
    )


def fit_loglog_slope(curve: RateCurve, n_min: int = 0) -> tuple[float, float, float]:
    """OLS fit of log(mean) on log(n) over rows with n >= n_min and mean > 0.

    Returns (slope, intercept, r_squared); needs at least 3 usable rows.
    """
    keep = (curve.n >= n_min) & (curve.mean > 0.0)
    if int(np.sum(keep)) < 3:
        raise DomainError(
            f"slope fit needs >= 3 rows with n >= {n_min} and positive mean, got {int(np.sum(keep))}"
        )
    lx = np.log(curve.n[keep].astype(np.float64))
    ly = np.log(curve.mean[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(intercept), r2


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _rate_rows(curve: RateCurve):
    header = ["n", "mean", "stderr", "runs", "wall_s"]
    cols = [curve.n, curve.mean, curve.stderr, curve.runs, curve.wall_s]
    if curve.bound is not None:
        header.append("bound")
        cols.append(curve.bound)
    return header, list(zip(*cols))


def _ratio_rows(table: RatioTable):
    header = ["n", "epsilon", "frequency", "bound", "bound_raw", "runs"]
    cols = [table.n, table.epsilon, table.frequency, table.bound, table.bound_raw, table.runs]
    return header, list(zip(*cols))


def emit(obj, format: str, path) -> None:
    """Write a RateCurve or RatioTable as CSV or JSON, plus a sibling meta file.

    CSV uses '.' decimals, LF line endings, UTF-8, and round-trippable float
    repr; JSON mirrors the same fields as one object per row. The metadata
    (full config, master seed, content hash) lands next to the output as
    <stem>.meta.json.
    """
    if format not in ("csv", "json"):
        raise DomainError(f"format must be 'csv' or 'json', got {format!r}")
    if isinstance(obj, RateCurve):
        header, rows = _rate_rows(obj)
    elif isinstance(obj, RatioTable):
        header, rows = _ratio_rows(obj)
    else:
        raise DomainError(f"cannot emit object of type {type(obj).__name__}")
    path = Path(path)
    try:
        if format == "csv":
            lines = [",".join(header)]
            lines.extend(",".join(_fmt(x) for x in row) for row in rows)
            path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        else:
            payload = [
                {key: (int(x) if isinstance(x, (int, np.integer)) else float(x))
                 for key, x in zip(header, row)}
                for row in rows
            ]
            path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8", newline="\n")
        meta_path = path.with_suffix(".meta.json")
        meta_path.write_text(
            json.dumps(obj.meta, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
        )
    except OSError as exc:
        raise OSError(f"failed to write {path}: {exc}") from exc


def load_rate_curve(path, format: str) -> RateCurve:
    """Read back a RateCurve written by emit (meta comes from the sibling file)."""
    path = Path(path)
    meta_path = path.with_suffix(".meta.json")
    meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}
    if format == "csv":
        lines = path.read_text(encoding="utf-8").strip().split("\n")
        header = lines[0].split(",")
        rows = [line.split(",") for line in lines[1:]]
        data = {key: [row[i] for row in rows] for i, key in enumerate(header)}
    elif format == "json":
        rows = json.loads(path.read_text(encoding="utf-8"))
        header = list(rows[0].keys()) if rows else []
        data = {key: [row[key] for row in rows] for key in header}
    else:
        raise DomainError(f"format must be 'csv' or 'json', got {format!r}")
    bound = np.array([float(x) for x in data["bound"]]) if "bound" in data else None
    return RateCurve(
        n=np.array([int(x) for x in data["n"]], dtype=np.int64),
        mean=np.array([float(x) for x in data["mean"]]),
        stderr=np.array([float(x) for x in data["stderr"]]),
        runs=np.array([int(x) for x in data["runs"]], dtype=np.int64),
        wall_s=np.array([float(x) for x in data["wall_s"]]),
        meta=meta,
        bound=bound,
    )
