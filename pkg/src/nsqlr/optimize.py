"""Box-constrained derivative-free maximization with pinned coordinates."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from nsqlr.errors import ConfigError, NoFeasiblePointError

GRID_POINTS = 9
XATOL = 1e-8
MAX_EVALS = 2000


@dataclass
class OptProblem:
    """Maximize ``objective`` over ``box``.

    ``fixed`` maps coordinate index to a pinned value; pinned coordinates
    never move.  ``n_starts`` grid points seed Nelder-Mead, and every point
    of ``extra_starts`` seeds one more run.
    """

    objective: Callable[[np.ndarray], float]
    box: np.ndarray
    fixed: dict = field(default_factory=dict)
    n_starts: int = 3
    extra_starts: Sequence[np.ndarray] = ()

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=float).reshape(-1, 2)
        if self.n_starts < 1:
            raise ConfigError("need at least one start point")
        for k, v in self.fixed.items():
            lo, hi = self.box[k]
            if not lo <= v <= hi:
                raise ConfigError(f"pinned value {v} of coordinate {k} outside [{lo}, {hi}]")


@dataclass
class OptResult:
    x: np.ndarray
    value: float
    n_evals: int
    on_boundary: bool


def _better(a, b):
    """Is candidate ``a = (value, x)`` preferred over ``b``? Ties go to the smaller point."""
    if a[0] != b[0]:
        return a[0] > b[0]
    return tuple(a[1]) < tuple(b[1])


def maximize(problem: OptProblem, rng: Optional[np.random.Generator] = None) -> OptResult:
    """Grid scan followed by Nelder-Mead from the best grid points.

    Deterministic: ``rng`` is accepted for interface symmetry but unused.
    """
    box = problem.box
    dim = len(box)
    base = np.zeros(dim)
    for k, v in problem.fixed.items():
        base[k] = v
    free = [k for k in range(dim) if k not in problem.fixed and box[k, 0] < box[k, 1]]
    for k in range(dim):
        if k not in problem.fixed and k not in free:
            base[k] = box[k, 0]
    evals = 0

    def f_full(x):
        nonlocal evals
        evals += 1
        val = problem.objective(x)
        return -np.inf if val is None or np.isnan(val) else float(val)

    def embed(z):
        x = base.copy()
        x[free] = z
        return x

    if not free:
        val = f_full(base)
        if not np.isfinite(val):
            raise NoFeasiblePointError("objective is infeasible at the pinned point")
        return OptResult(base, val, evals, False)

    lo, hi = box[free, 0], box[free, 1]
    axes = [np.linspace(a, b, GRID_POINTS) for a, b in zip(lo, hi)]
    candidates = []
    for z in itertools.product(*axes):
        x = embed(np.array(z))
        candidates.append((f_full(x), x))
    ranked = sorted(candidates, key=lambda c: (-c[0], tuple(c[1])))
    starts = [c[1][free] for c in ranked[: problem.n_starts] if np.isfinite(c[0])]
    for s in problem.extra_starts:
        s = np.clip(np.asarray(s, dtype=float), box[:, 0], box[:, 1])
        if np.isfinite(f_full(embed(s[free]))):
            starts.append(s[free])
    if not starts:
        raise NoFeasiblePointError("objective is -inf at every grid point")

    best = ranked[0]
    step0 = (hi - lo) / (2.0 * (GRID_POINTS - 1))
    for z0 in starts:
        z, val = _nelder_mead(lambda z: -f_full(embed(z)), z0, lo, hi, step0)
        cand = (val, embed(z))
        if _better(cand, best):
            best = cand
    x = best[1]
    on_boundary = bool(np.any(np.isclose(x[free], lo, atol=1e-6) | np.isclose(x[free], hi, atol=1e-6)))
    return OptResult(x, best[0], evals, on_boundary)


def _nelder_mead(neg_f, z0, lo, hi, step):
    """Nelder-Mead with restarts from the incumbent until it stops improving."""
    z = np.asarray(z0, dtype=float)
    fz = neg_f(z)
    used = 1
    scale = step.copy()
    for _ in range(4):
        simplex = [z]
        for k in range(z.size):
            v = z.copy()
            v[k] = z[k] + scale[k] if z[k] + scale[k] <= hi[k] else z[k] - scale[k]
            simplex.append(v)
        budget = MAX_EVALS - used
        if budget <= z.size + 1:
            break
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = optimize.minimize(
                neg_f, z, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                options={"initial_simplex": np.array(simplex), "xatol": XATOL, "fatol": np.inf,
                         "maxfev": budget},
            )
        used += res.nfev
        improved = res.fun < fz - 1e-12
        if res.fun <= fz:
            z, fz = np.clip(res.x, lo, hi), float(res.fun)
        if not improved:
            break
        scale = np.maximum(scale / 4.0, 1e-4)
    return z, -fz
