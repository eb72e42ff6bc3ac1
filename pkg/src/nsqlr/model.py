"""Parameterized two-dimensional SDE models.

A model couples a drift family ``mu_t(theta)`` with a diffusion family
``b_t(sigma)``; both are deterministic functions of time.  The built-in
families are the ones used in the experiments:

* diffusion ``T1``: ``b = [[s1, s3], [0, s2]]`` (constant in time)
* diffusion ``T2``: ``T1 * (1 + sin(2 pi t) / 2)``
* drift ``T3``: ``((1 + th1) sin t, (-1 + th2) sin t)``
* drift ``none``: zero drift, no parameters

User-supplied coefficient callbacks are supported through :meth:`ModelSpec.custom`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from nsqlr.errors import ConfigError

DRIFT_FAMILIES = {"none": 0, "T3": 2, "custom": None}
DIFFUSION_FAMILIES = {"T1": 3, "T2": 3, "custom": None}
DEFAULT_BOUND = 10.0


def _box(bounds, dim: int, what: str) -> np.ndarray:
    if bounds is None:
        box = np.tile([-DEFAULT_BOUND, DEFAULT_BOUND], (dim, 1)).astype(float)
    else:
        box = np.asarray(bounds, dtype=float).reshape(-1, 2)
    if box.shape != (dim, 2):
        raise ConfigError(f"{what}: expected {dim} intervals, got {box.shape[0]}")
    if np.any(box[:, 0] > box[:, 1]):
        raise ConfigError(f"{what}: empty interval in {box.tolist()}")
    return box


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Drift and diffusion families plus their parameter boxes.

    ``sigma_test_order`` / ``theta_test_order`` list the coordinates (0-based)
    in the order in which a null hypothesis pins them: a test with ``r``
    restrictions pins the first ``r`` entries to zero.
    """

    drift_family: str
    diffusion_family: str
    sigma_box: np.ndarray = None
    theta_box: np.ndarray = None
    sigma_test_order: tuple = None
    theta_test_order: tuple = None
    name: str = ""
    drift_fn: Optional[Callable] = field(default=None, repr=False)
    diffusion_fn: Optional[Callable] = field(default=None, repr=False)
    d1_custom: int = 0
    d2_custom: int = 0

    def __post_init__(self):
        if self.drift_family not in DRIFT_FAMILIES:
            raise ConfigError(f"unknown drift family {self.drift_family!r}")
        if self.diffusion_family not in DIFFUSION_FAMILIES:
            raise ConfigError(f"unknown diffusion family {self.diffusion_family!r}")
        if self.drift_family == "custom" and self.drift_fn is None:
            raise ConfigError("custom drift family needs drift_fn")
        if self.diffusion_family == "custom" and self.diffusion_fn is None:
            raise ConfigError("custom diffusion family needs diffusion_fn")
        if self.d1 < 1:
            raise ConfigError("diffusion parameter dimension must be >= 1")
        object.__setattr__(self, "sigma_box", _box(self.sigma_box, self.d1, "sigma_box"))
        object.__setattr__(self, "theta_box", _box(self.theta_box, self.d2, "theta_box"))
        if self.sigma_test_order is None:
            order = (2, 0, 1) if self.diffusion_family in ("T1", "T2") else tuple(range(self.d1))
            object.__setattr__(self, "sigma_test_order", order)
        if self.theta_test_order is None:
            object.__setattr__(self, "theta_test_order", tuple(range(self.d2)))
        for box, order, what in ((self.sigma_box, self.sigma_test_order, "sigma"),
                                 (self.theta_box, self.theta_test_order, "theta")):
            if sorted(order) != list(range(len(box))):
                raise ConfigError(f"{what}_test_order must permute 0..{len(box) - 1}")
            lo, hi = box[list(order), 0], box[list(order), 1]
            if np.any(lo > 0) or np.any(hi < 0):
                raise ConfigError(f"{what}_box must contain 0 in every testable coordinate")

    @classmethod
    def custom(cls, diffusion_fn, d1, drift_fn=None, d2=0, **kwargs):
        """Model from callbacks ``diffusion_fn(t, sigma) -> 2x2`` and ``drift_fn(t, theta) -> 2``."""
        return cls(
            drift_family="custom" if drift_fn is not None else "none",
            diffusion_family="custom",
            drift_fn=drift_fn,
            diffusion_fn=diffusion_fn,
            d1_custom=d1,
            d2_custom=d2 if drift_fn is not None else 0,
            **kwargs,
        )

    @property
    def d1(self) -> int:
        d = DIFFUSION_FAMILIES[self.diffusion_family]
        return self.d1_custom if d is None else d

    @property
    def d2(self) -> int:
        d = DRIFT_FAMILIES[self.drift_family]
        return self.d2_custom if d is None else d

    @property
    def separable(self) -> bool:
        """Sigma_t(sigma) = f(t)^2 Sigma(sigma) with a parameter-free scalar f."""
        return self.diffusion_family in ("T1", "T2")

    @property
    def time_invariant(self) -> bool:
        return self.diffusion_family == "T1"

    @property
    def drift_affine(self) -> bool:
        return self.drift_family in ("none", "T3")


@dataclass(frozen=True)
class ParamPoint:
    sigma: np.ndarray
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))

    def check(self, model: ModelSpec) -> "ParamPoint":
        for vec, box, what in ((self.sigma, model.sigma_box, "sigma"), (self.theta, model.theta_box, "theta")):
            if vec.shape != (len(box),):
                raise ConfigError(f"{what} must have length {len(box)}")
            if np.any(vec < box[:, 0]) or np.any(vec > box[:, 1]):
                raise ConfigError(f"{what}={vec.tolist()} outside its box")
        return self


PRESETS = {
    "T1": ("none", "T1"),
    "T2": ("none", "T2"),
    "T3": ("T3", "T1"),
}


def get_model(name: str, sigma_box=None, theta_box=None) -> ModelSpec:
    """Built-in experiment model by name (``T1``, ``T2`` or ``T3``)."""
    try:
        drift, diffusion = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; expected one of {sorted(PRESETS)}") from None
    return ModelSpec(drift, diffusion, sigma_box=sigma_box, theta_box=theta_box, name=name)


def _t2_factor(t):
    return 1.0 + np.sin(2.0 * np.pi * t) / 2.0


def base_diffusion(sigma) -> np.ndarray:
    s1, s2, s3 = sigma
    return np.array([[s1, s3], [0.0, s2]], dtype=float)


def eval_drift(model: ModelSpec, theta, t):
    """``mu_t(theta)``; shape (2,) for scalar ``t``, (K, 2) for an array."""
    t = np.asarray(t, dtype=float)
    if model.drift_family == "none":
        return np.zeros(t.shape + (2,))
    if model.drift_family == "T3":
        s = np.sin(t)
        return np.stack([(1.0 + theta[0]) * s, (-1.0 + theta[1]) * s], axis=-1)
    if t.ndim == 0:
        return np.asarray(model.drift_fn(float(t), theta), dtype=float)
    return np.array([model.drift_fn(float(u), theta) for u in t], dtype=float)


def eval_diffusion(model: ModelSpec, sigma, t):
    """``b_t(sigma)``; shape (2, 2) for scalar ``t``, (K, 2, 2) for an array."""
    t = np.asarray(t, dtype=float)
    if model.diffusion_family == "custom":
        if t.ndim == 0:
            return np.asarray(model.diffusion_fn(float(t), sigma), dtype=float)
        return np.array([model.diffusion_fn(float(u), sigma) for u in t], dtype=float)
    b = base_diffusion(sigma)
    if model.diffusion_family == "T1":
        return np.broadcast_to(b, t.shape + (2, 2)).copy()
    return _t2_factor(t)[..., None, None] * b


def sigma_matrix(model: ModelSpec, sigma, t):
    """``Sigma_t = b_t b_t^T``."""
    b = eval_diffusion(model, sigma, t)
    return b @ np.swapaxes(b, -1, -2)


def base_covariance(model: ModelSpec, sigma) -> np.ndarray:
    """Time-free factor of Sigma for separable families."""
    if not model.separable:
        raise ConfigError(f"diffusion family {model.diffusion_family!r} is not separable")
    b = base_diffusion(sigma)
    return b @ b.T


def is_positive_definite(cov: np.ndarray) -> bool:
    return bool(cov[0, 0] > 0.0 and cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0] > 0.0)


def time_weight(model: ModelSpec, a, b):
    """``int_a^b f(t)^2 dt`` for the time factor of a separable family."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    if model.diffusion_family == "T1":
        return d
    if model.diffusion_family == "T2":
        # f^2 = 9/8 + sin(2 pi t) - cos(4 pi t) / 8, differences rewritten as products
        s = a + b
        return (9.0 / 8.0) * d + np.sin(np.pi * s) * np.sin(np.pi * d) / np.pi \
            - np.cos(2.0 * np.pi * s) * np.sin(2.0 * np.pi * d) / (16.0 * np.pi)
    raise ConfigError(f"diffusion family {model.diffusion_family!r} is not separable")


def integrate_sigma(model: ModelSpec, sigma, a, b) -> np.ndarray:
    """``int_a^b Sigma_t(sigma) dt`` for each interval; shape (K, 2, 2)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if model.separable:
        return time_weight(model, a, b)[:, None, None] * base_covariance(model, sigma)
    out = np.empty((len(a), 2, 2))
    for k, (lo, hi) in enumerate(zip(a, b)):
        for p, q in ((0, 0), (0, 1), (1, 1)):
            val, _ = integrate.quad(lambda u: sigma_matrix(model, sigma, u)[p, q], lo, hi,
                                    epsabs=1e-10, epsrel=1e-12)
            out[k, p, q] = out[k, q, p] = val
    return out


def drift_integral(model: ModelSpec, theta, a, b) -> np.ndarray:
    """``int_a^b mu_t(theta) dt`` for each interval; shape (K, 2)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if model.drift_family == "none":
        return np.zeros((len(a), 2))
    if model.drift_family == "T3":
        c = _sin_integral(a, b)
        return np.stack([(1.0 + theta[0]) * c, (-1.0 + theta[1]) * c], axis=-1)
    out = np.empty((len(a), 2))
    for k, (lo, hi) in enumerate(zip(a, b)):
        for p in range(2):
            out[k, p], _ = integrate.quad(lambda u: eval_drift(model, theta, u)[p], lo, hi,
                                          epsabs=1e-10, epsrel=1e-12)
    return out


def drift_design(model: ModelSpec, a, b):
    """Affine decomposition ``int mu = offset + design @ theta``.

    Returns ``offset`` with shape (K, 2) and ``design`` with shape (K, 2, d2).
    Only defined for drift families that are affine in theta.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if model.drift_family == "none":
        return np.zeros((len(a), 2)), np.zeros((len(a), 2, 0))
    if model.drift_family == "T3":
        c = _sin_integral(a, b)
        offset = np.stack([c, -c], axis=-1)
        design = np.zeros((len(a), 2, 2))
        design[:, 0, 0] = c
        design[:, 1, 1] = c
        return offset, design
    raise ConfigError(f"drift family {model.drift_family!r} is not affine")


def _sin_integral(a, b):
    # cos a - cos b, written to avoid cancellation on short intervals
    return 2.0 * np.sin(0.5 * (a + b)) * np.sin(0.5 * (b - a))


def as_vector(x: Sequence[float] | np.ndarray, dim: int, what: str) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape != (dim,):
        raise ConfigError(f"{what} must have length {dim}, got {v.shape[0]}")
    return v
