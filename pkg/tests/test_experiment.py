import math

import numpy as np
import pytest
from scipy import special

from nsqlr.errors import ConfigError, ExperimentQualityError
from nsqlr.experiment import (
    ExperimentConfig,
    SweepValue,
    ks_statistic,
    resolve_sweep,
    run_experiment,
    run_replication,
    with_overrides,
)

SMALL = ExperimentConfig(model="T1", test="sigma", n=100, h_n=0.01, horizon=1.0, lambda1=40, lambda2=60,
                         sweep=resolve_sweep("absolute", [0, 0.5], 100, 0.01), blocks=1,
                         iterations=6, seed=3)


def test_resolve_sweep_labels_and_values():
    s = resolve_sweep("u_over_sqrt_n", [1, 4], 1000, 0.001)
    assert [v.label for v in s] == ["1/sqrt(n)", "4/sqrt(n)"]
    assert s[1].value == 4 / math.sqrt(1000)
    s = resolve_sweep("u_over_sqrt_nh", [2], 10**5, 5e-4)
    assert s[0].label == "2/sqrt(nh)" and s[0].value == 2 / math.sqrt(50)
    assert resolve_sweep("absolute", [0.25], 1, 1)[0] == SweepValue("0.25", 0.25)
    with pytest.raises(ConfigError):
        resolve_sweep("relative", [1], 1, 1)


@pytest.mark.parametrize("kwargs", [
    {"iterations": 0},
    {"alphas": (0.05, 1.0)},
    {"horizon": 2.0},
    {"test": "gamma"},
    {"model": "T9"},
    {"test": "theta"},
    {"sweep": ()},
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        with_overrides(SMALL, **kwargs)


def test_true_params_replaces_tested_coordinate():
    p = SMALL.true_params(0.5)
    np.testing.assert_array_equal(p.sigma, [2, 2, 0.5])
    cfg = ExperimentConfig(model="T3", test="theta", n=10, h_n=1.0, horizon=10.0, sigma=(1, 1, 0))
    np.testing.assert_array_equal(cfg.true_params(0.3).theta, [0.3, 0])


def test_single_iteration_rates():
    rep = run_experiment(with_overrides(SMALL, iterations=1))
    assert len(rep.rows) == 2 * 3
    for row in rep.rows:
        assert row.rejection_rate in (0.0, 1.0) and row.iterations == 1


def test_rates_are_exact_counts():
    rep = run_experiment(SMALL)
    for row in rep.rows:
        assert row.rejection_rate == row.rejections / row.iterations
        assert 0 <= row.rejection_rate <= 1
    stats = rep.statistics["0.5"]
    pvals = [run_replication(SMALL, 1, k)[1] for k in range(SMALL.iterations)]
    assert rep.rate("0.5", 0.05) == sum(p <= 0.05 for p in pvals) / SMALL.iterations
    assert stats.shape == (SMALL.iterations,)


def test_determinism_byte_identical():
    a = run_experiment(SMALL).to_csv()
    b = run_experiment(SMALL).to_csv()
    assert a == b
    assert a.splitlines()[0] == "true_value,alpha,rejection_rate,iterations,failures"
    assert a.splitlines()[1].startswith("0,0.1,")


def test_worker_count_invariance():
    one = run_experiment(SMALL)
    two = run_experiment(with_overrides(SMALL, workers=2))
    assert one.to_csv() == two.to_csv()
    for label in one.statistics:
        np.testing.assert_array_equal(one.statistics[label], two.statistics[label])


def test_progress_callback():
    seen = []
    run_experiment(with_overrides(SMALL, iterations=2), progress=lambda k, n: seen.append((k, n)))
    assert seen == [(1, 4), (2, 4), (3, 4), (4, 4)]


def test_failures_abort():
    # intensities so low that most HY variance estimates degenerate
    cfg = ExperimentConfig(model="T1", test="hy", n=1, h_n=1.0, horizon=1.0, lambda1=0.01, lambda2=0.01,
                           iterations=20, seed=1)
    with pytest.raises(ExperimentQualityError):
        run_experiment(cfg)


def test_hy_experiment_runs():
    cfg = with_overrides(SMALL, test="hy")
    rep = run_experiment(cfg)
    assert all(row.failures == 0 for row in rep.rows)


# -- KS ----------------------------------------------------------------------------

def test_ks_single_sample():
    median = 2 * special.gammaincinv(0.5, 0.5)
    d, _ = ks_statistic([median], 1)
    assert d == pytest.approx(0.5, abs=1e-12)


def test_ks_matches_brute_force():
    rng = np.random.default_rng(2)
    x = rng.chisquare(2, 50)
    d, p = ks_statistic(x, 2)
    xs = np.sort(x)
    cdf = 1 - np.exp(-xs / 2)
    brute = max(max(abs((k + 1) / 50 - c), abs(k / 50 - c)) for k, c in enumerate(cdf))
    assert d == pytest.approx(brute, abs=1e-14)
    assert 0 <= p <= 1


def test_ks_self_consistency():
    rng = np.random.default_rng(123)
    passes = sum(ks_statistic(rng.standard_normal(2000) ** 2, 1)[1] > 0.01 for _ in range(100))
    assert passes >= 95


def test_ks_detects_mismatch():
    rng = np.random.default_rng(9)
    x = np.sum(rng.standard_normal((2000, 3)) ** 2, axis=1)
    assert ks_statistic(x, 1)[1] < 0.001


def test_ks_empty():
    with pytest.raises(ValueError):
        ks_statistic([], 1)
