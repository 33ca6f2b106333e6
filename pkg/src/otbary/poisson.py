"""Neumann inverse Laplacian on the node grid via the type-II cosine transform.

The discrete operator is the finite-volume Laplacian in which every node
owns a cell of side ``h`` and no flux leaves the outer cell faces::

    (-Lap_h u)_i = (2 u_i - u_{i-1} - u_{i+1}) / h^2     interior
    (-Lap_h u)_0 = (u_0 - u_1) / h^2                     boundary

(applied per axis and summed in 2D).  The matrix is symmetric, its kernel is
the constants, and its range is exactly the vectors with zero node sum.  Its
eigenvectors are ``cos(pi k (i + 1/2) / N)`` with eigenvalues
``(2 - 2 cos(pi k / N)) / h^2``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import fft

from .errors import NonFiniteInput, NotMeanZero
from .grid import GridSpec, ScalarField

MEAN_TOL = 1e-10


def eigenvalues(grid: GridSpec) -> np.ndarray:
    """Eigenvalues of ``-Lap_h`` on the full grid shape (zero mode at index 0)."""
    k = np.arange(grid.n)
    lam1 = (2.0 - 2.0 * np.cos(np.pi * k / grid.n)) / grid.spacing**2
    if grid.dims == 1:
        return lam1
    return lam1[:, None] + lam1[None, :]


def mode(grid: GridSpec, k) -> np.ndarray:
    """The cosine eigenvector with per-axis wave numbers ``k``."""
    ks = np.broadcast_to(np.atleast_1d(k), (grid.dims,))
    i = np.arange(grid.n)
    out = np.ones(grid.shape)
    for ax, kk in enumerate(ks):
        c = np.cos(np.pi * kk * (i + 0.5) / grid.n)
        out = out * (c if grid.dims == 1 else (c[:, None] if ax == 0 else c[None, :]))
    return out


def apply_neg_laplacian(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``-Lap_h u`` with the stencil above (used for residual checks)."""
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    for ax in range(grid.dims):
        d = np.diff(u, axis=ax)
        lo = [slice(None)] * grid.dims
        hi = [slice(None)] * grid.dims
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        out[tuple(lo)] -= d
        out[tuple(hi)] += d
    return out / grid.spacing**2


def project_mean_zero(values: np.ndarray) -> np.ndarray:
    return values - values.mean()


def neg_inv_laplacian(rhs: ScalarField, tol: float = MEAN_TOL) -> ScalarField:
    """Solve ``-Lap_h u = rhs`` with the gauge ``sum(u) = 0``.

    ``rhs`` must have node sum within ``tol`` of zero; the remaining drift is
    projected out before the solve.
    """
    grid = rhs.grid
    f = np.asarray(rhs.value, dtype=np.float64)
    if not np.all(np.isfinite(f)):
        raise NonFiniteInput("Poisson right-hand side has non-finite values")
    total = float(f.sum())
    if abs(total) > tol:
        raise NotMeanZero(f"right-hand side sums to {total:.3e}; Neumann problem needs zero")
    return ScalarField(grid, _solve(project_mean_zero(f), grid))


@lru_cache(maxsize=16)
def _inverse_eigenvalues(grid: GridSpec) -> np.ndarray:
    lam = eigenvalues(grid)
    lam.flat[0] = 1.0
    inv = 1.0 / lam
    inv.flat[0] = 0.0
    inv.flags.writeable = False
    return inv


def _solve(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    coef = fft.dctn(f, type=2, norm="ortho")
    coef *= _inverse_eigenvalues(grid)
    return fft.idctn(coef, type=2, norm="ortho", overwrite_x=True)


def h1_inner(u: np.ndarray, v: np.ndarray, grid: GridSpec) -> float:
    """Discrete homogeneous H^1 product ``sum_edges h^d (du/h)(dv/h)``.

    Summation by parts gives ``h1_inner(u, v) = h^d * sum(v * (-Lap_h u))``.
    """
    total = 0.0
    for ax in range(grid.dims):
        total += float((np.diff(u, axis=ax) * np.diff(v, axis=ax)).sum())
    return total * grid.spacing ** (grid.dims - 2)
