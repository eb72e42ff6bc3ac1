"""Replicated size/power experiments and goodness-of-fit of the statistics."""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import special

from nsqlr.errors import ConfigError, ExperimentQualityError, NumericalError
from nsqlr.grid import build_overlaps, gen_poisson_grid
from nsqlr.hy import v_n_test
from nsqlr.likelihood import QuasiLikelihood, default_block_count
from nsqlr.lrt import test_sigma, test_theta
from nsqlr.model import ParamPoint, get_model
from nsqlr.simulate import replication_rng, simulate_and_sample

TESTS = ("sigma", "theta", "hy")
MAX_FAILURE_RATE = 0.01
REPORT_HEADER = "true_value,alpha,rejection_rate,iterations,failures"


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class SweepValue:
    label: str
    value: float


def resolve_sweep(kind: str, values, n: int, h_n: float) -> tuple:
    """Turn a symbolic sweep (``u_over_sqrt_n = 1,2``) into numeric true values."""
    out = []
    for u in values:
        u = float(u)
        if kind == "absolute":
            out.append(SweepValue(f"{u:g}", u))
        elif kind == "u_over_sqrt_n":
            out.append(SweepValue(f"{u:g}/sqrt(n)", u / math.sqrt(n)))
        elif kind == "u_over_sqrt_nh":
            out.append(SweepValue(f"{u:g}/sqrt(nh)", u / math.sqrt(n * h_n)))
        else:
            raise ConfigError(f"unknown sweep kind {kind!r}")
    return tuple(out)


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo study: a model, a test, and a sweep over the tested coordinate.

    ``sweep`` values replace the first tested coordinate of the true
    parameter (sigma for ``sigma``/``hy`` tests, theta for ``theta``).
    """

    model: str = "T1"
    test: str = "sigma"
    n: int = 1000
    h_n: float = 1e-3
    horizon: float = 1.0
    lambda1: float = 2000.0
    lambda2: float = 3000.0
    sigma: tuple = (2.0, 2.0, 0.0)
    theta: tuple = (0.0, 0.0)
    sweep: tuple = (SweepValue("0", 0.0),)
    r: int = 1
    blocks: Optional[int] = None
    alphas: tuple = (0.10, 0.05, 0.01)
    iterations: int = 500
    seed: int = 0
    fine_step: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        if self.test not in TESTS:
            raise ConfigError(f"test must be one of {TESTS}, got {self.test!r}")
        get_model(self.model)
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not all(0.0 < a < 1.0 for a in self.alphas):
            raise ConfigError("every alpha must lie in (0, 1)")
        if self.n is not None and self.h_n is not None and not math.isclose(self.n * self.h_n, self.horizon,
                                                                             rel_tol=1e-9):
            raise ConfigError(f"horizon {self.horizon} differs from n * h_n = {self.n * self.h_n}")
        if self.test == "theta" and self.model != "T3":
            raise ConfigError("the theta test needs a model with drift (T3)")
        if not self.sweep:
            raise ConfigError("sweep needs at least one true value")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0 (0 uses every available core)")

    @property
    def step(self) -> float:
        return self.fine_step if self.fine_step is not None else self.h_n / 10.0

    def true_params(self, value: float) -> ParamPoint:
        model = get_model(self.model)
        sigma = np.array(self.sigma, dtype=float)
        theta = np.array(self.theta, dtype=float)[: model.d2]
        if self.test == "theta":
            theta[model.theta_test_order[0]] = value
        else:
            sigma[model.sigma_test_order[0]] = value
        return ParamPoint(sigma, theta).check(model)


@dataclass
class ReportRow:
    true_value: str
    alpha: float
    rejections: int
    iterations: int
    failures: int

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.iterations if self.iterations else float("nan")


@dataclass
class ExperimentReport:
    rows: list
    statistics: dict = field(default_factory=dict)
    ks: dict = field(default_factory=dict)

    def rate(self, label: str, alpha: float) -> float:
        for row in self.rows:
            if row.true_value == label and row.alpha == alpha:
                return row.rejection_rate
        raise KeyError((label, alpha))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(REPORT_HEADER + "\n")
        for row in self.rows:
            buf.write(f"{row.true_value},{_fmt(row.alpha)},{_fmt(row.rejection_rate)},"
                      f"{row.iterations},{row.failures}\n")
        return buf.getvalue()


def simulate_replication(config: ExperimentConfig, value_index: int, rep: int):
    """Grids and data for one replication; the stream depends only on (seed, value, rep)."""
    rng = replication_rng(config.seed, value_index, rep)
    model = get_model(config.model)
    g1 = gen_poisson_grid(config.lambda1, config.horizon, rng, 1)
    g2 = gen_poisson_grid(config.lambda2, config.horizon, rng, 2)
    params = config.true_params(config.sweep[value_index].value)
    return model, simulate_and_sample(model, params, (g1, g2), config.step, rng)


def run_replication(config: ExperimentConfig, value_index: int, rep: int):
    """``(statistic, p_value)`` of one replication, or ``None`` on a numerical failure."""
    model, data = simulate_replication(config, value_index, rep)
    try:
        if config.test == "hy":
            out = v_n_test(data, build_overlaps(data.grid1, data.grid2), config.n, config.horizon)
        else:
            blocks = config.blocks or default_block_count(data.grid1, data.grid2)
            ql = QuasiLikelihood(data, model, blocks)
            if config.test == "sigma":
                out = test_sigma(data, model, config.r, ql=ql)
            else:
                out = test_theta(data, model, config.r, ql=ql)
    except NumericalError:
        return None
    return out.statistic, out.p_value


def _run_task(args):
    config, value_index, rep = args
    return run_replication(config, value_index, rep)


def run_experiment(config: ExperimentConfig, progress=None) -> ExperimentReport:
    """Run every replication of every sweep value and aggregate rejection counts.

    Output depends only on the config (seed included), not on ``workers``.
    """
    tasks = [(config, v, rep) for v in range(len(config.sweep)) for rep in range(config.iterations)]
    workers = config.workers or os.cpu_count() or 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = []
        for k, task in enumerate(tasks):
            results.append(_run_task(task))
            if progress is not None:
                progress(k + 1, len(tasks))

    rows, statistics, ks = [], {}, {}
    df = 1 if config.test == "hy" else config.r
    for v, sweep in enumerate(config.sweep):
        chunk = results[v * config.iterations:(v + 1) * config.iterations]
        ok = [res for res in chunk if res is not None]
        failures = len(chunk) - len(ok)
        if failures > MAX_FAILURE_RATE * config.iterations:
            raise ExperimentQualityError(
                f"{failures} of {config.iterations} replications failed at true value {sweep.label}")
        stats = np.array([res[0] for res in ok])
        pvals = np.array([res[1] for res in ok])
        statistics[sweep.label] = stats
        if stats.size:
            ks[sweep.label] = ks_statistic(stats, df)
        for alpha in config.alphas:
            rows.append(ReportRow(sweep.label, float(alpha), int(np.sum(pvals <= alpha)), len(ok), failures))
    return ExperimentReport(rows, statistics, ks)


def ks_statistic(samples, df: int):
    """Kolmogorov-Smirnov distance to chi-square(df) and its asymptotic p-value."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("need at least one sample")
    n = x.size
    cdf = special.gammainc(0.5 * df, 0.5 * np.maximum(x, 0.0))
    d_plus = np.max(np.arange(1, n + 1) / n - cdf)
    d_minus = np.max(cdf - np.arange(n) / n)
    d = float(max(d_plus, d_minus))
    return d, float(special.kolmogorov(math.sqrt(n) * d))


def with_overrides(config: ExperimentConfig, **kwargs) -> ExperimentConfig:
    return replace(config, **kwargs)
