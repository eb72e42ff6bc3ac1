import math

import numpy as np
import pytest
from scipy import stats

from nsqlr.errors import SimulationError
from nsqlr.grid import gen_poisson_grid
from nsqlr.model import ParamPoint, get_model
from nsqlr.simulate import replication_rng, simulate_and_sample
from conftest import grid


def test_deterministic_given_seed():
    m = get_model("T2")
    g1, g2 = grid([0, 0.3, 0.55, 1]), grid([0, 0.2, 1], 2)
    a = simulate_and_sample(m, ParamPoint([1, 1, 0.3]), (g1, g2), 0.01, replication_rng(9, 1))
    b = simulate_and_sample(m, ParamPoint([1, 1, 0.3]), (g1, g2), 0.01, replication_rng(9, 1))
    assert np.array_equal(a.values1, b.values1) and np.array_equal(a.values2, b.values2)
    c = simulate_and_sample(m, ParamPoint([1, 1, 0.3]), (g1, g2), 0.01, replication_rng(9, 2))
    assert not np.array_equal(a.values1, c.values1)


def test_increments_are_differences():
    m = get_model("T1")
    d = simulate_and_sample(m, ParamPoint([1, 1, 0]), (grid([0, 0.3, 1]), grid([0, 0.5, 1], 2)), 0.05,
                            np.random.default_rng(0))
    assert d.values1[0] == 0 and d.values2[0] == 0
    assert d.increments1.size == 2
    np.testing.assert_array_equal(np.concatenate([[0], np.cumsum(d.increments1)]), d.values1)


def test_increment_variance_matches_exact_gaussian():
    m = get_model("T1")
    g = grid([0, 0.2, 0.21, 1])
    inc = np.array([
        simulate_and_sample(m, ParamPoint([1, 1, 0]), (g, g), 0.003, replication_rng(1, k)).increments1[1]
        for k in range(2000)
    ])
    assert 0.01 * 0.85 <= inc.var(ddof=1) <= 0.01 * 1.15


def test_drift_ode_limit():
    m = get_model("T3")
    g = grid([0, math.pi / 2, math.pi])
    d = simulate_and_sample(m, ParamPoint([1e-6, 1e-6, 0], [0, 0]), (g, g), 1e-4, np.random.default_rng(3))
    assert abs(d.values1[-1] - 2.0) < 1e-3
    assert abs(d.values2[-1] + 2.0) < 1e-3


def test_constant_coefficient_law_is_exact():
    # standardized increments over random intervals must be N(0, Sigma |I|) for any mesh
    m = get_model("T1")
    sigma = [2.0, 1.0, 0.7]
    cov = np.array([[4.49, 0.7], [0.7, 1.0]])
    z = []
    for k in range(2000):
        rng = replication_rng(0, k)
        g = grid(np.concatenate([[0], np.sort(rng.uniform(0, 1, 3)), [1]]))
        d = simulate_and_sample(m, ParamPoint(sigma), (g, g), 0.37, rng)
        i = k % 4
        x = np.array([d.increments1[i], d.increments2[i]]) / math.sqrt(g.lengths[i])
        z.append(np.linalg.solve(np.linalg.cholesky(cov), x))
    z = np.array(z)
    # chi-square goodness of fit of both standardized coordinates against N(0, 1) deciles
    edges = stats.norm.ppf(np.linspace(0, 1, 11))
    for col in z.T:
        observed, _ = np.histogram(col, edges)
        assert stats.chisquare(observed).pvalue > 0.01


def test_independent_components_when_uncorrelated():
    m = get_model("T1")
    g = grid([0, 0.5, 1])
    pairs = np.array([
        simulate_and_sample(m, ParamPoint([2, 2, 0]), (g, g), 0.1, replication_rng(8, k)).increments1[0:1].tolist()
        + simulate_and_sample(m, ParamPoint([2, 2, 0]), (g, g), 0.1, replication_rng(8, k)).increments2[0:1].tolist()
        for k in range(2000)
    ])
    corr = np.corrcoef(pairs.T)[0, 1]
    assert abs(corr) <= 3 / math.sqrt(2000)


def test_infeasible_sigma():
    with pytest.raises(SimulationError):
        simulate_and_sample(get_model("T1"), ParamPoint([0, 1, 0]), (grid([0, 1]), grid([0, 1], 2)), 0.1,
                            np.random.default_rng(0))


def test_observation_times_hit_exactly():
    m = get_model("T1")
    rng = np.random.default_rng(2)
    g1, g2 = gen_poisson_grid(37, 1.0, rng, 1), gen_poisson_grid(53, 1.0, rng, 2)
    d = simulate_and_sample(m, ParamPoint([1, 1, 0.5]), (g1, g2), 0.01, rng)
    assert d.values1.size == g1.times.size and d.values2.size == g2.times.size
