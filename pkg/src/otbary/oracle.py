"""Independent reference computations for tests and the ``verify`` command.

Nothing here is used by the solvers themselves.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import Infeasible, NotMeanZero, Singular
from .grid import DiscreteMeasure, GridSpec, ScalarField, normalize

QUANTILE_LEVELS = 10_000


def lp_ot(masses_a, masses_b, cost) -> float:
    """Exact discrete transport cost ``min <cost, plan>`` over couplings.

    Solved with the HiGHS dual simplex; supports up to 256 points per side.
    """
    a = np.asarray(masses_a, dtype=np.float64).ravel()
    b = np.asarray(masses_b, dtype=np.float64).ravel()
    c = np.asarray(cost, dtype=np.float64)
    if c.shape != (a.size, b.size):
        raise ValueError(f"cost has shape {c.shape}, expected {(a.size, b.size)}")
    if a.size > 256 or b.size > 256:
        raise ValueError("lp_ot is limited to 256 support points per side")
    if abs(a.sum() - b.sum()) > 1e-12:
        raise Infeasible("marginals carry different total mass")
    # drop empty rows/columns, they do not change the optimum
    ia = np.flatnonzero(a > 0)
    ib = np.flatnonzero(b > 0)
    a, b, c = a[ia], b[ib], c[np.ix_(ia, ib)]
    na, nb = a.size, b.size
    rows = sparse.vstack([
        sparse.kron(sparse.eye(na), np.ones((1, nb))),
        sparse.kron(np.ones((1, na)), sparse.eye(nb)),
    ]).tocsr()
    # presolve misreports feasibility when masses span many decades
    res = linprog(
        c.ravel(), A_eq=rows, b_eq=np.concatenate([a, b]), bounds=(0, None),
        method="highs-ds",
        options={"presolve": False, "primal_feasibility_tolerance": 1e-10,
                 "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise Infeasible(f"transport LP failed: {res.message}")
    return float(c.ravel() @ np.clip(res.x, 0.0, None))


def enumerate_ot(masses_a, masses_b, cost) -> float:
    """Transport cost by enumerating the vertices of the transport polytope.

    Every vertex is a spanning-forest plan, obtained by the northwest-corner
    rule on some ordering of rows and columns.  Exponential, for tiny inputs.
    """
    a = np.asarray(masses_a, dtype=np.float64)
    b = np.asarray(masses_b, dtype=np.float64)
    c = np.asarray(cost, dtype=np.float64)
    best = np.inf
    for pa in itertools.permutations(range(a.size)):
        for pb in itertools.permutations(range(b.size)):
            ra, rb = a[list(pa)].copy(), b[list(pb)].copy()
            i = j = 0
            total = 0.0
            while i < a.size and j < b.size:
                t = min(ra[i], rb[j])
                total += t * c[pa[i], pb[j]]
                ra[i] -= t
                rb[j] -= t
                if ra[i] <= rb[j]:
                    i += 1
                else:
                    j += 1
            best = min(best, total)
    return float(best)


def cost_matrix(grid: GridSpec) -> np.ndarray:
    """``|x - y|^2 / 2`` between all node pairs."""
    pts = np.stack([c.ravel() for c in grid.coords()], axis=1)
    diff = pts[:, None, :] - pts[None, :, :]
    return 0.5 * (diff**2).sum(axis=-1)


def _levels(count: int) -> tuple[np.ndarray, np.ndarray]:
    q = np.linspace(0.0, 1.0, count)
    w = np.full(count, 1.0 / (count - 1))
    w[[0, -1]] *= 0.5
    return q, w


def quantile_function(nu: DiscreteMeasure, q: np.ndarray) -> np.ndarray:
    """Left-continuous inverse CDF of a 1D node measure at levels ``q``."""
    if nu.grid.dims != 1:
        raise ValueError("quantiles need a 1D measure")
    cdf = np.cumsum(nu.mass)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, np.clip(q, 1e-15, 1.0), side="left")
    return nu.grid.axis[np.minimum(idx, nu.grid.n - 1)]


def quantile_w2_1d(nu: DiscreteMeasure, mu: DiscreteMeasure, levels: int = QUANTILE_LEVELS) -> float:
    """``int_0^1 (F_nu^-1 - F_mu^-1)^2 / 2 dq`` by the trapezoidal rule."""
    q, w = _levels(levels)
    gap = quantile_function(nu, q) - quantile_function(mu, q)
    return float(0.5 * (w * gap**2).sum())


def quantile_barycenter_1d(measures, levels: int = QUANTILE_LEVELS) -> DiscreteMeasure:
    """1D barycenter: average the quantile functions, deposit at nearest nodes."""
    grid = measures[0].grid
    q = (np.arange(levels) + 0.5) / levels
    avg = np.mean([quantile_function(m, q) for m in measures], axis=0)
    idx = np.clip(np.rint(avg * (grid.n - 1)).astype(np.int64), 0, grid.n - 1)
    mass = np.bincount(idx, minlength=grid.n).astype(np.float64)
    return normalize(mass, 0.0, grid)


def neumann_matrix(grid: GridSpec) -> np.ndarray:
    """Dense ``-Lap_h`` with the no-flux finite-volume stencil."""
    n = grid.n
    lap1 = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    lap1[0, 0] = lap1[-1, -1] = 1.0
    lap1 /= grid.spacing**2
    if grid.dims == 1:
        return lap1
    eye = np.eye(n)
    return np.kron(lap1, eye) + np.kron(eye, lap1)


def dense_neumann_solve(rhs: ScalarField, tol: float = 1e-10) -> ScalarField:
    """Direct solve of ``-Lap_h u = rhs`` bordered by the constraint ``sum(u) = 0``."""
    grid = rhs.grid
    if grid.n > 32:
        raise ValueError("dense oracle is limited to 32 points per axis")
    f = np.asarray(rhs.value, dtype=np.float64).ravel()
    if abs(f.sum()) > tol:
        raise NotMeanZero(f"right-hand side sums to {f.sum():.3e}")
    m = f.size
    system = np.zeros((m + 1, m + 1))
    system[:m, :m] = neumann_matrix(grid)
    system[:m, m] = 1.0
    system[m, :m] = 1.0
    try:
        sol = np.linalg.solve(system, np.concatenate([f - f.mean(), [0.0]]))
    except np.linalg.LinAlgError as err:
        raise Singular(str(err)) from err
    return ScalarField(grid, sol[:m].reshape(grid.shape))


def brute_conjugate(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``max_x <x, y> - f(x)`` over all node pairs by explicit enumeration."""
    f = np.asarray(values, dtype=np.float64).ravel()
    pts = [c.ravel() for c in grid.coords()]
    out = np.empty(f.size)
    for j in range(f.size):
        inner = pts[0] * pts[0][j]
        for ax in range(1, grid.dims):
            inner = inner + pts[ax] * pts[ax][j]
        out[j] = (inner - f).max()
    return out.reshape(grid.shape)


def truncated_gaussian(grid: GridSpec, center: float, sigma: float) -> DiscreteMeasure:
    """Node masses of ``N(center, sigma^2)`` restricted to ``[0, 1]``."""
    if grid.dims != 1:
        raise ValueError("truncated_gaussian builds 1D measures")
    x = grid.axis
    return normalize(np.exp(-0.5 * ((x - center) / sigma) ** 2), 0.0, grid)
