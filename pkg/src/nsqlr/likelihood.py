"""Gaussian quasi-log-likelihoods of nonsynchronous increments.

Two evaluation routes share every input:

``dense``
    assemble ``S`` block by block, Cholesky-factorize, triangular solves.
``spectral``
    for separable diffusions (``Sigma_t = f(t)^2 Sigma``) write
    ``S = D^{1/2} (I + rho K) D^{1/2}`` with ``K = [[0, G], [G^T, 0]]``.
    ``K`` does not depend on the parameter, so one SVD of the (time-weighted)
    overlap matrix ``G`` per block turns every later evaluation into a sum
    over singular values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from nsqlr.errors import ConfigError, InfeasibleParameterError
from nsqlr.grid import ObservationGrid, OverlapStructure, build_overlaps
from nsqlr.model import (
    ModelSpec,
    base_covariance,
    drift_design,
    drift_integral,
    integrate_sigma,
    is_positive_definite,
    sigma_matrix,
    time_weight,
)
from nsqlr.simulate import NonsyncData

NEG_INF = -np.inf
INTERVALS_PER_BLOCK = 250


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """Equal-length blocks ``(t_{k-1}, t_k]`` of ``[0, T]``.

    Each interval belongs to the block holding its right endpoint.
    ``block1[i]`` / ``block2[j]`` are 0-based block ids.
    """

    n_blocks: int
    boundaries: np.ndarray
    block1: np.ndarray
    block2: np.ndarray


def make_blocks(grid1: ObservationGrid, grid2: ObservationGrid, n_blocks: int = 1) -> BlockPartition:
    if n_blocks < 1:
        raise ConfigError("block count must be a positive integer")
    horizon = grid1.horizon
    boundaries = np.arange(n_blocks + 1) * horizon / n_blocks
    boundaries[-1] = horizon

    def assign(grid):
        return np.clip(np.searchsorted(boundaries, grid.right, side="left") - 1, 0, n_blocks - 1)

    return BlockPartition(n_blocks, boundaries, assign(grid1), assign(grid2))


def default_block_count(grid1: ObservationGrid, grid2: ObservationGrid,
                        per_block: int = INTERVALS_PER_BLOCK) -> int:
    """Blocks holding roughly ``per_block`` intervals of the denser component."""
    return max(1, int(round(max(grid1.n_intervals, grid2.n_intervals) / per_block)))


@dataclass(frozen=True, eq=False)
class CovFactorization:
    S: np.ndarray
    chol: np.ndarray
    logdet: float
    eigvals: Optional[np.ndarray] = None
    rho: Optional[float] = None

    def solve_quad(self, x: np.ndarray) -> float:
        z = linalg.solve_triangular(self.chol, x, lower=True, check_finite=False)
        return float(z @ z)


@dataclass(frozen=True, eq=False)
class DriftIncrements:
    v1: np.ndarray
    v2: np.ndarray
    residual: Optional[np.ndarray] = None


class _Block:
    """Interval indices and overlap pairs owned by one block."""

    def __init__(self, idx1, idx2, grid1, grid2, overlaps, model):
        self.idx1 = idx1
        self.idx2 = idx2
        self.m1, self.m2 = idx1.size, idx2.size
        pos1 = np.full(grid1.n_intervals, -1)
        pos1[idx1] = np.arange(self.m1)
        pos2 = np.full(grid2.n_intervals, -1)
        pos2[idx2] = np.arange(self.m2)
        li, lj = pos1[overlaps.i], pos2[overlaps.j]
        keep = (li >= 0) & (lj >= 0)
        self.li, self.lj = li[keep], lj[keep]
        # intersection endpoints, used for time integrals of Sigma_12
        self.ov_a = np.maximum(grid1.left[overlaps.i[keep]], grid2.left[overlaps.j[keep]])
        self.ov_b = np.minimum(grid1.right[overlaps.i[keep]], grid2.right[overlaps.j[keep]])
        self.a1, self.b1 = grid1.left[idx1], grid1.right[idx1]
        self.a2, self.b2 = grid2.left[idx2], grid2.right[idx2]
        if model.separable:
            self.w1 = time_weight(model, self.a1, self.b1)
            self.w2 = time_weight(model, self.a2, self.b2)
            self.w12 = time_weight(model, self.ov_a, self.ov_b)
        self._svd = None

    def g_matrix(self) -> np.ndarray:
        """Time-weighted ``G``; equals the plain overlap ``G`` for constant diffusions."""
        g = np.zeros((self.m1, self.m2))
        g[self.li, self.lj] = self.w12 / np.sqrt(self.w1[self.li] * self.w2[self.lj])
        return g

    def svd(self):
        if self._svd is None:
            if self.m1 == 0 or self.m2 == 0:
                self._svd = (np.eye(self.m1), np.zeros(0), np.eye(self.m2))
            else:
                p, s, qt = np.linalg.svd(self.g_matrix(), full_matrices=True)
                self._svd = (p, s, qt.T)
        return self._svd

    def eigvals(self) -> np.ndarray:
        """Eigenvalues of ``[[0, G], [G^T, 0]]``: ``+-s`` and zeros."""
        _, s, _ = self.svd()
        return np.concatenate([s, -s, np.zeros(self.m1 + self.m2 - 2 * s.size)])

    def assemble(self, model, sigma) -> np.ndarray:
        m1 = self.m1
        S = np.zeros((m1 + self.m2, m1 + self.m2))
        if model.separable:
            c = base_covariance(model, sigma)
            if not is_positive_definite(c):
                raise InfeasibleParameterError("diffusion covariance is not positive definite")
            d1, d2, off = c[0, 0] * self.w1, c[1, 1] * self.w2, c[0, 1] * self.w12
        else:
            ts = np.concatenate([self.a1, self.b1, self.a2, self.b2])
            cs = sigma_matrix(model, sigma, ts) if ts.size else np.zeros((0, 2, 2))
            if np.any(cs[:, 0, 0] <= 0.0) or np.any(cs[:, 0, 0] * cs[:, 1, 1] - cs[:, 0, 1] ** 2 <= 0.0):
                raise InfeasibleParameterError("diffusion covariance is not positive definite")
            d1 = integrate_sigma(model, sigma, self.a1, self.b1)[:, 0, 0] if m1 else np.zeros(0)
            d2 = integrate_sigma(model, sigma, self.a2, self.b2)[:, 1, 1] if self.m2 else np.zeros(0)
            off = integrate_sigma(model, sigma, self.ov_a, self.ov_b)[:, 0, 1] if self.li.size else np.zeros(0)
        S[np.arange(m1), np.arange(m1)] = d1
        S[m1 + np.arange(self.m2), m1 + np.arange(self.m2)] = d2
        S[self.li, m1 + self.lj] = off
        S[m1 + self.lj, self.li] = off
        return S


def factorize(S: np.ndarray) -> CovFactorization:
    try:
        chol = linalg.cholesky(S, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise InfeasibleParameterError("increment covariance is not positive definite") from None
    diag = np.diag(chol)
    if not np.all(diag > 0):
        raise InfeasibleParameterError("increment covariance is not positive definite")
    return CovFactorization(S, chol, float(2.0 * np.sum(np.log(diag))))


class SpectralForm:
    """``x -> -1/2 x^T S(sigma)^{-1} x - 1/2 logdet S(sigma)`` for fixed ``x``.

    Built from the per-block SVDs; each call costs O(number of intervals).
    Only valid for separable diffusion families.
    """

    def __init__(self, model, blocks, x1, x2):
        self.model = model
        s_all, aa, bb, ab = [], [], [], []
        rest1 = rest2 = 0.0
        const = 0.0
        m1 = m2 = 0
        for blk in blocks:
            p, s, q = blk.svd()
            y1 = x1[blk.idx1] / np.sqrt(blk.w1)
            y2 = x2[blk.idx2] / np.sqrt(blk.w2)
            alpha, beta = p.T @ y1, q.T @ y2
            r = s.size
            s_all.append(s)
            aa.append(alpha[:r] ** 2)
            bb.append(beta[:r] ** 2)
            ab.append(alpha[:r] * beta[:r])
            rest1 += float(alpha[r:] @ alpha[r:])
            rest2 += float(beta[r:] @ beta[r:])
            const += float(np.sum(np.log(blk.w1)) + np.sum(np.log(blk.w2)))
            m1 += blk.m1
            m2 += blk.m2
        self.s = np.concatenate(s_all)
        self.s2 = self.s ** 2
        self.aa, self.bb = np.concatenate(aa), np.concatenate(bb)
        self.sab = self.s * np.concatenate(ab)
        self.rest1, self.rest2 = rest1, rest2
        self.const, self.m1, self.m2 = const, m1, m2

    def __call__(self, sigma) -> float:
        c = base_covariance(self.model, sigma)
        if not is_positive_definite(c):
            return NEG_INF
        c11, c12, c22 = c[0, 0], c[0, 1], c[1, 1]
        den = 1.0 - (c12 * c12 / (c11 * c22)) * self.s2
        if np.any(den <= 0.0):
            return NEG_INF
        quad = np.sum((self.aa / c11 + self.bb / c22 - 2.0 * c12 * self.sab / (c11 * c22)) / den)
        quad += self.rest1 / c11 + self.rest2 / c22
        logdet = self.const + self.m1 * np.log(c11) + self.m2 * np.log(c22) + np.sum(np.log(den))
        return float(-0.5 * (quad + logdet))


class QuasiLikelihood:
    """Quasi-log-likelihoods of one dataset under one model.

    Caches the block structure, the overlap SVDs and the drift design so
    repeated evaluation inside an optimizer is cheap.  ``method`` is
    ``"dense"``, ``"spectral"`` or ``"auto"`` (spectral when the diffusion
    family is separable).
    """

    def __init__(self, data: NonsyncData, model: ModelSpec, blocks: BlockPartition | int | None = None,
                 method: str = "auto", overlaps: OverlapStructure | None = None):
        if method not in ("auto", "dense", "spectral"):
            raise ConfigError(f"unknown likelihood method {method!r}")
        if method == "spectral" and not model.separable:
            raise ConfigError("spectral evaluation needs a separable diffusion family")
        self.data, self.model = data, model
        self.method = ("spectral" if model.separable else "dense") if method == "auto" else method
        g1, g2 = data.grid1, data.grid2
        if blocks is None:
            blocks = make_blocks(g1, g2, 1)
        elif isinstance(blocks, (int, np.integer)):
            blocks = make_blocks(g1, g2, int(blocks))
        self.partition = blocks
        overlaps = build_overlaps(g1, g2) if overlaps is None else overlaps
        ids1, ids2 = np.arange(g1.n_intervals), np.arange(g2.n_intervals)
        self.blocks = [
            _Block(ids1[blocks.block1 == k], ids2[blocks.block2 == k], g1, g2, overlaps, model)
            for k in range(blocks.n_blocks)
        ]
        self.dx1, self.dx2 = data.increments1, data.increments2
        self._h1_form = None

    # -- drift -------------------------------------------------------------
    def residual(self, theta):
        if self.model.drift_family == "none":
            return self.dx1, self.dx2
        g1, g2 = self.data.grid1, self.data.grid2
        v1 = drift_integral(self.model, theta, g1.left, g1.right)[:, 0]
        v2 = drift_integral(self.model, theta, g2.left, g2.right)[:, 1]
        return self.dx1 - v1, self.dx2 - v2

    # -- dense pieces ------------------------------------------------------
    def factorizations(self, sigma):
        return [factorize(blk.assemble(self.model, sigma)) for blk in self.blocks]

    def _dense(self, sigma, x1, x2, with_logdet=True) -> float:
        try:
            facs = self.factorizations(sigma)
        except InfeasibleParameterError:
            return NEG_INF
        total = 0.0
        for blk, fac in zip(self.blocks, facs):
            x = np.concatenate([x1[blk.idx1], x2[blk.idx2]])
            total += -0.5 * fac.solve_quad(x)
            if with_logdet:
                total += -0.5 * fac.logdet
        return total

    # -- public evaluations -------------------------------------------------
    def h1(self, sigma) -> float:
        sigma = np.asarray(sigma, dtype=float)
        if self.method == "dense":
            return self._dense(sigma, self.dx1, self.dx2)
        if self._h1_form is None:
            self._h1_form = SpectralForm(self.model, self.blocks, self.dx1, self.dx2)
        return self._h1_form(sigma)

    def h1_objective(self):
        if self.method == "dense":
            return self.h1
        self.h1(self.model.sigma_box.mean(axis=1))
        return self._h1_form

    def joint(self, sigma, theta) -> float:
        x1, x2 = self.residual(theta)
        if self.method == "dense":
            return self._dense(np.asarray(sigma, dtype=float), x1, x2)
        return SpectralForm(self.model, self.blocks, x1, x2)(np.asarray(sigma, dtype=float))

    def joint_sigma_objective(self, theta):
        """``sigma -> joint(sigma, theta)`` with theta held fixed."""
        x1, x2 = self.residual(theta)
        if self.method == "dense":
            return lambda sigma: self._dense(np.asarray(sigma, dtype=float), x1, x2)
        return SpectralForm(self.model, self.blocks, x1, x2)

    def h2(self, theta, sigma_hat) -> float:
        return self.h2_objective(sigma_hat)(theta)

    def h2_objective(self, sigma_hat, with_logdet: bool = False):
        """``theta -> H2(theta)`` with ``S(sigma_hat)`` factorized once.

        ``with_logdet`` adds ``-1/2 logdet S(sigma_hat)``, which turns H2 into
        the joint log-likelihood at fixed sigma.
        """
        sigma_hat = np.asarray(sigma_hat, dtype=float)
        try:
            facs = self.factorizations(sigma_hat)
        except InfeasibleParameterError:
            return lambda theta: NEG_INF
        shift = -0.5 * sum(f.logdet for f in facs) if with_logdet else 0.0
        if self.model.drift_affine:
            return _AffineH2(self, facs, shift)

        def objective(theta):
            x1, x2 = self.residual(np.asarray(theta, dtype=float))
            total = shift
            for blk, fac in zip(self.blocks, facs):
                total += -0.5 * fac.solve_quad(np.concatenate([x1[blk.idx1], x2[blk.idx2]]))
            return total

        return objective


class _AffineH2:
    """H2 for drifts affine in theta: an explicit quadratic in theta."""

    def __init__(self, ql: QuasiLikelihood, facs, shift):
        g1, g2 = ql.data.grid1, ql.data.grid2
        off1, des1 = drift_design(ql.model, g1.left, g1.right)
        off2, des2 = drift_design(ql.model, g2.left, g2.right)
        x1 = ql.dx1 - off1[:, 0]
        x2 = ql.dx2 - off2[:, 1]
        d = ql.model.d2
        e0, lin, quad = 0.0, np.zeros(d), np.zeros((d, d))
        for blk, fac in zip(ql.blocks, facs):
            x = np.concatenate([x1[blk.idx1], x2[blk.idx2]])
            v = np.vstack([des1[blk.idx1, 0, :], des2[blk.idx2, 1, :]])
            zx = linalg.solve_triangular(fac.chol, x, lower=True, check_finite=False)
            zv = linalg.solve_triangular(fac.chol, v, lower=True, check_finite=False)
            e0 += float(zx @ zx)
            lin += zv.T @ zx
            quad += zv.T @ zv
        self.e0, self.lin, self.quad, self.shift = e0, lin, quad, shift

    def __call__(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        q = self.e0 - 2.0 * theta @ self.lin + theta @ self.quad @ theta
        q = max(q, 0.0)  # a squared norm; cancellation can push it below zero
        return float(self.shift - 0.5 * q)


# -- functional surface ------------------------------------------------------

def assemble_S(model: ModelSpec, sigma, grid1: ObservationGrid, grid2: ObservationGrid,
               overlaps: OverlapStructure | None = None, with_eigen: bool = True) -> CovFactorization:
    """Full (unblocked) increment covariance ``S(sigma)`` and its factorization.

    Raises :class:`InfeasibleParameterError` when ``S`` is not positive definite.
    """
    overlaps = build_overlaps(grid1, grid2) if overlaps is None else overlaps
    blk = _Block(np.arange(grid1.n_intervals), np.arange(grid2.n_intervals), grid1, grid2, overlaps, model)
    fac = factorize(blk.assemble(model, np.asarray(sigma, dtype=float)))
    if with_eigen and model.time_invariant:
        c = base_covariance(model, sigma)
        rho = float(c[0, 1] / np.sqrt(c[0, 0] * c[1, 1]))
        return CovFactorization(fac.S, fac.chol, fac.logdet, blk.eigvals(), rho)
    return fac


def overlap_eigvals(grid1: ObservationGrid, grid2: ObservationGrid,
                    overlaps: OverlapStructure | None = None) -> np.ndarray:
    """Eigenvalues of ``[[0, G], [G^T, 0]]``; compute once per grid pair."""
    overlaps = build_overlaps(grid1, grid2) if overlaps is None else overlaps
    s = np.linalg.svd(overlaps.dense_g(), compute_uv=False)
    return np.concatenate([s, -s, np.zeros(grid1.n_intervals + grid2.n_intervals - 2 * s.size)])


def log_det_fast(cov: np.ndarray, grid1: ObservationGrid, grid2: ObservationGrid, eig: np.ndarray) -> float:
    """``log det S`` for a time-constant ``Sigma`` from precomputed eigenvalues."""
    cov = np.asarray(cov, dtype=float)
    rho = cov[0, 1] / np.sqrt(cov[0, 0] * cov[1, 1])
    if not abs(rho) < 1.0:
        raise InfeasibleParameterError(f"correlation {rho} outside (-1, 1)")
    shifted = 1.0 + rho * eig
    if np.any(shifted <= 0.0):
        raise InfeasibleParameterError("1 + rho * lambda is not positive")
    return float(np.sum(np.log(cov[0, 0] * grid1.lengths)) + np.sum(np.log(cov[1, 1] * grid2.lengths))
                 + np.sum(np.log(shifted)))


def drift_increments(model: ModelSpec, theta, grid1: ObservationGrid, grid2: ObservationGrid,
                     data: NonsyncData | None = None) -> DriftIncrements:
    v1 = drift_integral(model, theta, grid1.left, grid1.right)[:, 0]
    v2 = drift_integral(model, theta, grid2.left, grid2.right)[:, 1]
    residual = None
    if data is not None:
        residual = np.concatenate([data.increments1 - v1, data.increments2 - v2])
    return DriftIncrements(v1, v2, residual)


def h1(data: NonsyncData, model: ModelSpec, sigma, blocks=None, method: str = "auto") -> float:
    """Blocked ``H1(sigma)``; ``-inf`` for infeasible sigma."""
    return QuasiLikelihood(data, model, blocks, method).h1(sigma)


def h2(data: NonsyncData, model: ModelSpec, theta, sigma_hat, blocks=None) -> float:
    return QuasiLikelihood(data, model, blocks).h2(theta, sigma_hat)


def joint_h(data: NonsyncData, model: ModelSpec, sigma, theta, blocks=None, method: str = "auto") -> float:
    return QuasiLikelihood(data, model, blocks, method).joint(sigma, theta)
