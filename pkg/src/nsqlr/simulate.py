"""Euler-Maruyama simulation sampled at nonsynchronous observation times."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nsqlr.errors import DataError, SimulationError
from nsqlr.grid import ObservationGrid
from nsqlr.model import ModelSpec, ParamPoint, eval_diffusion, eval_drift, is_positive_definite, sigma_matrix


@dataclass(frozen=True, eq=False)
class NonsyncData:
    grid1: ObservationGrid
    grid2: ObservationGrid
    values1: np.ndarray
    values2: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v1 = np.asarray(self.values1, dtype=float)
        v2 = np.asarray(self.values2, dtype=float)
        object.__setattr__(self, "values1", v1)
        object.__setattr__(self, "values2", v2)
        if v1.shape != self.grid1.times.shape or v2.shape != self.grid2.times.shape:
            raise DataError("values must have one entry per observation time")
        if self.grid1.horizon != self.grid2.horizon:
            raise DataError("both components must be observed up to the same horizon")

    @property
    def increments1(self) -> np.ndarray:
        return np.diff(self.values1)

    @property
    def increments2(self) -> np.ndarray:
        return np.diff(self.values2)

    @property
    def horizon(self) -> float:
        return self.grid1.horizon

    def scaled(self, c: float) -> "NonsyncData":
        return NonsyncData(self.grid1, self.grid2, c * self.values1, c * self.values2, dict(self.meta))


def replication_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for ``key`` under a master seed.

    Streams depend only on (seed, key), never on the order in which they are
    requested, so parallel and serial runs draw identical numbers.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def simulate_and_sample(model: ModelSpec, params: ParamPoint, grids, fine_step: float,
                        rng: np.random.Generator, x0=(0.0, 0.0)) -> NonsyncData:
    """Simulate ``X`` by Euler-Maruyama and read it off at both grids.

    The time mesh is the union of ``k * fine_step`` and all observation
    times, so observations are hit exactly.  Coefficients depend on time only,
    which makes the scheme a cumulative sum of independent Gaussian steps.
    """
    grid1, grid2 = grids
    if not fine_step > 0:
        raise ValueError("fine_step must be positive")
    if grid1.horizon != grid2.horizon:
        raise DataError("grids must span a common [0, T]")
    horizon = grid1.horizon
    fine = np.arange(int(np.floor(horizon / fine_step)) + 1) * fine_step
    mesh = np.union1d(np.union1d(fine[fine < horizon], grid1.times), grid2.times)
    left = mesh[:-1]
    dt = np.diff(mesh)

    _check_feasible(model, params.sigma, left)
    b = eval_diffusion(model, params.sigma, left)
    mu = eval_drift(model, params.theta, left)
    z = rng.standard_normal((dt.size, 2)) * np.sqrt(dt)[:, None]
    steps = mu * dt[:, None] + np.einsum("kij,kj->ki", b, z)
    path = np.vstack([np.asarray(x0, dtype=float)[None, :], np.asarray(x0) + np.cumsum(steps, axis=0)])

    idx1 = np.searchsorted(mesh, grid1.times)
    idx2 = np.searchsorted(mesh, grid2.times)
    meta = {"drift_family": model.drift_family, "diffusion_family": model.diffusion_family}
    return NonsyncData(grid1, grid2, path[idx1, 0], path[idx2, 1], meta)


def _check_feasible(model, sigma, t):
    if model.separable:
        # the time factor of T2 is >= 1/2, so one check covers all t
        cov = sigma_matrix(model, sigma, 0.0)
        ok = is_positive_definite(cov)
    else:
        covs = sigma_matrix(model, sigma, t)
        ok = bool(np.all(covs[:, 0, 0] > 0) and np.all(np.linalg.det(covs) > 0))
    if not ok:
        raise SimulationError(f"sigma={list(sigma)} gives a singular diffusion matrix")
