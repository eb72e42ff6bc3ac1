import numpy as np
import pytest

from nsqlr.grid import ObservationGrid, gen_poisson_grid
from nsqlr.model import ParamPoint, get_model
from nsqlr.simulate import NonsyncData, replication_rng, simulate_and_sample


def grid(times, component=1):
    return ObservationGrid(np.asarray(times, dtype=float), component)


def data_from_increments(times1, times2, dx1, dx2):
    v1 = np.concatenate([[0.0], np.cumsum(dx1)])
    v2 = np.concatenate([[0.0], np.cumsum(dx2)])
    return NonsyncData(grid(times1, 1), grid(times2, 2), v1, v2)


def simulated(model_name="T1", sigma=(2.0, 2.0, 0.0), theta=(), rates=(200.0, 300.0), horizon=1.0,
              seed=0, rep=0, fine_step=1e-3):
    model = get_model(model_name)
    rng = replication_rng(seed, rep)
    g1 = gen_poisson_grid(rates[0], horizon, rng, 1)
    g2 = gen_poisson_grid(rates[1], horizon, rng, 2)
    data = simulate_and_sample(model, ParamPoint(sigma, theta), (g1, g2), fine_step, rng)
    return model, data


@pytest.fixture
def small_t1():
    return simulated("T1", (2.0, 2.0, 0.5), seed=11)


def random_grid_pair(rng, max_intervals=50, horizon=1.0):
    def one(component):
        m = int(rng.integers(1, max_intervals + 1))
        inner = np.unique(rng.uniform(0, horizon, m - 1))
        inner = inner[(inner > 0) & (inner < horizon)]
        return ObservationGrid(np.concatenate([[0.0], inner, [horizon]]), component)

    return one(1), one(2)
