import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nsqlr.errors import ConfigError
from nsqlr.model import (
    ModelSpec,
    ParamPoint,
    drift_integral,
    eval_diffusion,
    eval_drift,
    get_model,
    integrate_sigma,
    is_positive_definite,
    sigma_matrix,
    time_weight,
)

coef = st.floats(-10, 10, allow_nan=False)
times = st.floats(0, 100, allow_nan=False)


def test_t3_drift_at_half_pi():
    m = get_model("T3")
    np.testing.assert_allclose(eval_drift(m, [0.0, 0.0], math.pi / 2), [1.0, -1.0])
    np.testing.assert_allclose(eval_drift(m, [1.0, 0.0], math.pi / 2), [2.0, -1.0])


def test_driftless_is_zero():
    m = get_model("T1")
    assert np.array_equal(eval_drift(m, [], 3.7), [0.0, 0.0])


def test_t1_diffusion_table_values():
    m = get_model("T1")
    np.testing.assert_array_equal(eval_diffusion(m, [2, 2, 0], 0.3), [[2, 0], [0, 2]])
    np.testing.assert_array_equal(sigma_matrix(m, [1, 1, 1], 0.0), [[2, 1], [1, 1]])


def test_t2_diffusion_quarter():
    m = get_model("T2")
    np.testing.assert_allclose(eval_diffusion(m, [1, 1, 0], 0.25), [[1.5, 0], [0, 1.5]], rtol=1e-15)


def test_unknown_family():
    with pytest.raises(ConfigError):
        ModelSpec("T9", "T1")
    with pytest.raises(ConfigError):
        get_model("T7")


def test_box_must_contain_zero():
    with pytest.raises(ConfigError):
        get_model("T1", sigma_box=[[1, 2], [1, 2], [1, 2]])


def test_default_boxes():
    m = get_model("T3")
    assert m.sigma_box.tolist() == [[-10, 10]] * 3
    assert m.theta_box.tolist() == [[-10, 10]] * 2
    assert get_model("T1").d2 == 0


def test_param_point_box_check():
    m = get_model("T1")
    ParamPoint([1, 1, 0]).check(m)
    with pytest.raises(ConfigError):
        ParamPoint([11, 1, 0]).check(m)


@given(coef, coef, coef, times)
def test_sigma_symmetric(s1, s2, s3, t):
    for name in ("T1", "T2"):
        cov = sigma_matrix(get_model(name), [s1, s2, s3], t)
        assert cov[0, 1] == cov[1, 0]


GRID = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)


@pytest.mark.parametrize("name", ["T1", "T2"])
def test_positive_definite_iff_diagonal_nonzero(name):
    m = get_model(name)
    for s1 in GRID:
        for s2 in GRID:
            for s3 in GRID:
                cov = sigma_matrix(m, [s1, s2, s3], 0.3)
                try:
                    np.linalg.cholesky(cov)
                    factorizes = np.linalg.eigvalsh(cov).min() > 0
                except np.linalg.LinAlgError:
                    factorizes = False
                assert factorizes == (s1 != 0 and s2 != 0)
                assert is_positive_definite(cov) == factorizes


@given(coef, coef, coef, times)
def test_t2_is_scaled_t1(s1, s2, s3, t):
    c1 = sigma_matrix(get_model("T1"), [s1, s2, s3], t)
    c2 = sigma_matrix(get_model("T2"), [s1, s2, s3], t)
    factor = (1 + math.sin(2 * math.pi * t) / 2) ** 2
    np.testing.assert_allclose(c2, factor * c1, rtol=1e-12, atol=1e-300)


@settings(max_examples=50)
@given(st.floats(0, 5), st.floats(1e-6, 2))
def test_t2_weight_matches_quadrature(a, d):
    m = get_model("T2")
    exact, _ = integrate.quad(lambda t: (1 + math.sin(2 * math.pi * t) / 2) ** 2, a, a + d,
                              epsabs=1e-13, epsrel=1e-13, limit=200)
    assert time_weight(m, a, a + d) == pytest.approx(exact, rel=1e-10, abs=1e-14)


def test_t3_drift_integral():
    m = get_model("T3")
    np.testing.assert_allclose(drift_integral(m, [0, 0], 0, math.pi)[0], [2, -2], rtol=1e-14)
    np.testing.assert_allclose(drift_integral(m, [1, 0], 0, math.pi)[0, 0], 4, rtol=1e-14)


def test_custom_model_quadrature_matches_t2():
    t2 = get_model("T2")
    custom = ModelSpec.custom(lambda t, s: eval_diffusion(t2, s, t), d1=3)
    a, b = np.array([0.0, 0.13]), np.array([0.13, 0.5])
    np.testing.assert_allclose(integrate_sigma(custom, [1, 2, 0.5], a, b),
                               integrate_sigma(t2, [1, 2, 0.5], a, b), rtol=1e-9, atol=1e-10)
