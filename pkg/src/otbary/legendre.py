"""Discrete Legendre transforms on grid nodes.

The transform used throughout is ``f*(y) = max_x <x, y> - f(x)`` where both
``x`` and ``y`` range over the grid nodes.  In 1D it is computed in linear
time: build the lower convex hull of the samples, then sweep the sorted
slopes along the hull.  The 2D transform is separable, one 1D pass over each
row followed by one pass over each column.

Some references write the transform in the squared-distance form
``max_x |x - y|^2 / 2 - f(x)``.  Up to sign conventions that is the
transform above applied to ``|x|^2 / 2 - f``; :func:`to_quadratic_form` and
:func:`from_quadratic_form` convert between the two.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import NonFiniteInput
from .grid import GridSpec, Potential


@njit(cache=True, nogil=True)
def _conj_line(x, f, y, out, hull):
    n = x.shape[0]
    m = 0
    for i in range(n):
        while m >= 2:
            a = hull[m - 2]
            b = hull[m - 1]
            # drop b when it lies on or above the chord a -> i
            if (f[b] - f[a]) * (x[i] - x[a]) >= (f[i] - f[a]) * (x[b] - x[a]):
                m -= 1
            else:
                break
        hull[m] = i
        m += 1
    k = 0
    for j in range(y.shape[0]):
        yj = y[j]
        cur = x[hull[k]] * yj - f[hull[k]]
        while k < m - 1:
            nxt = x[hull[k + 1]] * yj - f[hull[k + 1]]
            if nxt > cur:
                k += 1
                cur = nxt
            else:
                break
        out[j] = cur


@njit(cache=True, nogil=True)
def _conj_rows(x, f, y, out):
    hull = np.empty(x.shape[0], dtype=np.int64)
    for r in range(f.shape[0]):
        _conj_line(x, f[r], y, out[r], hull)


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise NonFiniteInput("conjugate input has non-finite values")


def conjugate_1d(values, coords) -> np.ndarray:
    """``out[j] = max_i coords[i] * coords[j] - values[i]`` in O(N).

    ``coords`` must be strictly increasing; ties between maximizers resolve
    to the smaller index.
    """
    f = np.ascontiguousarray(values, dtype=np.float64)
    x = np.ascontiguousarray(coords, dtype=np.float64)
    _check_finite(f)
    if f.shape != x.shape or f.ndim != 1:
        raise ValueError("values and coords must be 1D arrays of equal length")
    out = np.empty_like(f)
    _conj_line(x, f, x, out, np.empty(x.shape[0], dtype=np.int64))
    return out


def conjugate_array(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Grid conjugate of a raw array (1D or 2D), no flag bookkeeping."""
    f = np.ascontiguousarray(values, dtype=np.float64)
    _check_finite(f)
    x = grid.axis
    if grid.dims == 1:
        out = np.empty_like(f)
        _conj_line(x, f, x, out, np.empty(x.shape[0], dtype=np.int64))
        return out
    # rows: g[i, :] = conj of f[i, :] along the second axis
    g = np.empty_like(f)
    _conj_rows(x, f, x, g)
    # columns: out[:, j] = conj of -g[:, j] along the first axis
    neg_gt = np.ascontiguousarray(-g.T)
    out_t = np.empty_like(neg_gt)
    _conj_rows(x, neg_gt, x, out_t)
    return np.ascontiguousarray(out_t.T)


def conjugate(phi: Potential) -> Potential:
    """Convex conjugate over grid nodes; the result is always convex."""
    return Potential(phi.grid, conjugate_array(phi.value, phi.grid), convex=True)


def conjugate_2d(phi: Potential) -> Potential:
    if phi.grid.dims != 2:
        raise ValueError("conjugate_2d needs a 2D potential")
    return conjugate(phi)


def convexify(phi: Potential) -> Potential:
    """Double conjugate ``phi**``: the largest grid-convex minorant of ``phi``."""
    return conjugate(conjugate(phi))


def convexify_with_conjugate(phi: Potential) -> tuple[Potential, Potential]:
    """Return ``(phi**, phi*)``; ``phi*`` is also the conjugate of ``phi**``."""
    star = conjugate(phi)
    return conjugate(star), star


def to_quadratic_form(phi: Potential) -> Potential:
    """Map ``phi`` to ``|x|^2 / 2 - phi`` (the squared-distance convention)."""
    return Potential(phi.grid, phi.grid.sq_norm_half() - phi.value)


def from_quadratic_form(psi: Potential) -> Potential:
    """Inverse of :func:`to_quadratic_form` (the map is an involution)."""
    return Potential(psi.grid, psi.grid.sq_norm_half() - psi.value)

