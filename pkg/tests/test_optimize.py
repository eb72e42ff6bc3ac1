import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsqlr.errors import ConfigError, NoFeasiblePointError
from nsqlr.optimize import GRID_POINTS, OptProblem, maximize


def test_quadratic_1d():
    res = maximize(OptProblem(lambda x: -(x[0] - 0.3) ** 2, [[0, 1]]))
    assert res.x[0] == pytest.approx(0.3, abs=1e-6)
    assert res.value == pytest.approx(0, abs=1e-12)
    assert not res.on_boundary


def test_pinned_coordinate():
    seen = []

    def f(x):
        seen.append(x[0])
        return -x[0] ** 2 - (x[1] - 0.5) ** 2

    res = maximize(OptProblem(f, [[-1, 1], [-1, 1]], fixed={0: 0.0}))
    np.testing.assert_allclose(res.x, [0, 0.5], atol=1e-6)
    assert set(seen) == {0.0}


def test_rosenbrock():
    f = lambda x: -(1 - x[0]) ** 2 - 100 * (x[1] - x[0] ** 2) ** 2
    res = maximize(OptProblem(f, [[-2, 2], [-2, 2]]))
    np.testing.assert_allclose(res.x, [1, 1], atol=1e-4)


def test_boundary_maximum():
    res = maximize(OptProblem(lambda x: x[0] + x[1], [[0, 1], [-2, 3]]))
    np.testing.assert_allclose(res.x, [1, 3], atol=1e-6)
    assert res.on_boundary


def test_all_pinned_exact():
    f = lambda x: float(np.sin(x[0]) * np.cos(x[1]))
    res = maximize(OptProblem(f, [[-1, 1], [-1, 1]], fixed={0: 0.25, 1: -0.5}))
    np.testing.assert_array_equal(res.x, [0.25, -0.5])
    assert res.value == f(np.array([0.25, -0.5]))


def test_no_feasible_point():
    with pytest.raises(NoFeasiblePointError):
        maximize(OptProblem(lambda x: -np.inf, [[0, 1], [0, 1]]))
    with pytest.raises(NoFeasiblePointError):
        maximize(OptProblem(lambda x: -np.inf, [[0, 1]], fixed={0: 0.5}))


def test_infeasible_region_is_avoided():
    f = lambda x: -np.inf if x[0] < 0.2 else -(x[0] - 0.25) ** 2
    res = maximize(OptProblem(f, [[0, 1]]))
    assert res.x[0] == pytest.approx(0.25, abs=1e-6)


def test_nan_treated_as_infeasible():
    f = lambda x: np.nan if x[0] > 0.5 else -(x[0] - 0.4) ** 2
    assert maximize(OptProblem(f, [[0, 1]])).x[0] == pytest.approx(0.4, abs=1e-6)


def test_pinned_outside_box_rejected():
    with pytest.raises(ConfigError):
        OptProblem(lambda x: 0.0, [[0, 1]], fixed={0: 2.0})
    with pytest.raises(ConfigError):
        OptProblem(lambda x: 0.0, [[0, 1]], n_starts=0)


def test_extra_start_reaches_isolated_peak():
    # narrow peak between grid nodes that only the extra start can see
    f = lambda x: float(np.exp(-((x[0] - 0.51) / 0.003) ** 2)) - 0.5 * x[0] ** 2
    res = maximize(OptProblem(f, [[-1, 1]], extra_starts=[np.array([0.51])]))
    assert res.x[0] == pytest.approx(0.51, abs=1e-3)


def test_tie_break_lexicographic():
    # two symmetric maxima: the smaller point wins
    f = lambda x: -min((x[0] - 0.5) ** 2, (x[0] + 0.5) ** 2)
    res = maximize(OptProblem(f, [[-1, 1]]))
    assert res.x[0] == pytest.approx(-0.5, abs=1e-6)


def test_deterministic():
    f = lambda x: -np.sum((x - [0.1, -0.7]) ** 2) + 0.1 * np.sin(9 * x[0])
    a = maximize(OptProblem(f, [[-1, 1], [-1, 1]]))
    b = maximize(OptProblem(f, [[-1, 1], [-1, 1]]), np.random.default_rng(1))
    np.testing.assert_array_equal(a.x, b.x)


coef = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.tuples(coef, coef, coef, coef, st.floats(0.1, 5)))
def test_value_dominates_grid_and_constrained(c):
    a, b, p, q, s = c
    f = lambda x: -(x[0] - a) ** 2 - s * (x[1] - b) ** 2 + p * x[0] * x[1] / 10 + np.cos(q * x[0])
    box = np.array([[-2.0, 2.0], [-2.0, 2.0]])
    full = maximize(OptProblem(f, box))
    axes = [np.linspace(lo, hi, GRID_POINTS) for lo, hi in box]
    grid_best = max(f(np.array(z)) for z in itertools.product(*axes))
    assert full.value >= grid_best
    assert full.value == f(full.x)
    null = maximize(OptProblem(f, box, fixed={0: 0.0}, extra_starts=()))
    full2 = maximize(OptProblem(f, box, extra_starts=[null.x]))
    assert null.value <= full2.value + 1e-9
