"""Hayashi-Yoshida covariation estimator and the zero-covariation test built on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from nsqlr.errors import ConfigError, DegenerateVarianceError
from nsqlr.grid import OverlapStructure, build_overlaps
from nsqlr.lrt import TestOutcome
from nsqlr.simulate import NonsyncData


@dataclass(frozen=True)
class HYResult:
    hy: float
    lambda1: float
    lambda2: float
    lambda3: float
    u_n: float
    n_obs: int
    v_n: float = float("nan")


def hy_estimator(data: NonsyncData, overlaps: OverlapStructure | None = None) -> float:
    """Sum of ``dX^1_i dX^2_j`` over overlapping interval pairs."""
    overlaps = build_overlaps(data.grid1, data.grid2) if overlaps is None else overlaps
    return float(np.sum(data.increments1[overlaps.i] * data.increments2[overlaps.j]))


def u_n_variance(data: NonsyncData, overlaps: OverlapStructure | None, n: int,
                 horizon: float | None = None) -> HYResult:
    """Plug-in estimate ``U_n`` of the asymptotic variance of ``sqrt(n) HY``.

    Valid for time-invariant diffusion coefficients.
    """
    overlaps = build_overlaps(data.grid1, data.grid2) if overlaps is None else overlaps
    horizon = data.horizon if horizon is None else horizon
    dx1, dx2 = data.increments1, data.increments2
    hy = hy_estimator(data, overlaps)
    scale = n * hy * hy / (horizon * horizon)
    lam1 = scale * (np.sum(data.grid1.lengths ** 2) + np.sum(data.grid2.lengths ** 2))
    lam2 = -scale * np.sum(overlaps.length ** 2)
    lam3 = n * np.sum(dx1[overlaps.i] ** 2 * dx2[overlaps.j] ** 2) + 2.0 * lam2
    u = lam1 + lam2 + lam3
    if not u > 0:
        raise DegenerateVarianceError(f"variance estimate U_n = {u!r} is not positive")
    v = np.sqrt(n) * hy / np.sqrt(u)
    return HYResult(hy, float(lam1), float(lam2), float(lam3), float(u), int(n), float(v))


def normal_quantile(p: float) -> float:
    return float(special.ndtri(p))


def v_n_test(data: NonsyncData, overlaps: OverlapStructure | None, n: int, horizon: float | None = None,
             alpha: float = 0.05) -> TestOutcome:
    """Two-sided test of zero quadratic covariation.

    The outcome's ``statistic`` is ``V_n^2`` so that it shares the chi-square(1)
    calibration of the likelihood ratio outcomes; the signed ``V_n`` is in
    ``diagnostics["v_n"]``.
    """
    if data.meta.get("diffusion_family") == "T2":
        raise ConfigError("the HY variance estimator needs a time-invariant diffusion (got T2)")
    res = u_n_variance(data, overlaps, n, horizon)
    v = res.v_n
    p = float(special.erfc(abs(v) / np.sqrt(2.0)))
    reject = bool(abs(v) >= normal_quantile(1.0 - alpha / 2.0))
    return TestOutcome("HY", v * v, 1, float(alpha), p, reject,
                       diagnostics={"v_n": v, "hy": res.hy, "u_n": res.u_n, "n": res.n_obs})
