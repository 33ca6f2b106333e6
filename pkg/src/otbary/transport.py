"""Discrete gradients, the mass-splitting pushforward, and the descent step.

Pushforward of a node measure under the gradient of a convex potential:

1. Corner gradients are backward differences of ``phi`` padded by one ghost
   layer per side along the differenced axis (quadratic extrapolation, exact
   for quadratics).  Corner ``(a, b)`` approximates the gradient at
   ``(x_a - h/2, y_b - h/2)``, so the four corners ``(i, j) .. (i+1, j+1)``
   span the image of node ``(i, j)``'s cell.
2. The node mass is split evenly over a ``k x k`` bilinear sub-mesh of that
   quadrilateral (sub-mesh parameters at the midpoints ``(a + 1/2) / k``).
3. Each sub-point is clamped into the domain and deposited on the corners of
   the grid cell containing it with weights proportional to inverse distance;
   a sub-point that hits a node puts all of its mass there, and one on a cell
   edge splits linearly between the edge's endpoints (the far pair of corners
   is ambiguous there).  In 1D inverse distance weighting is linear
   interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidSplit, NonFiniteInput, NotConvex
from .grid import GridSpec, DiscreteMeasure, Potential, same_grid

SNAP = 1e-12
DEFAULT_SPLIT = 4
DEPOSITS = ("inverse_distance", "bilinear")


@dataclass(frozen=True, eq=False)
class VectorField:
    """Per-node vectors, stored as ``components[axis]`` arrays."""

    grid: GridSpec
    components: np.ndarray

    def __post_init__(self):
        c = np.array(self.components, dtype=np.float64, copy=True)
        if c.shape != (self.grid.dims,) + self.grid.shape:
            raise ValueError(f"vector field shape {c.shape} does not fit {self.grid}")
        if not np.all(np.isfinite(c)):
            raise NonFiniteInput("vector field has non-finite entries")
        c.flags.writeable = False
        object.__setattr__(self, "components", c)


def gradient(phi: Potential) -> VectorField:
    """Backward differences, with the forward difference on index-0 faces."""
    grid = phi.grid
    h = grid.spacing
    comps = []
    for ax in range(grid.dims):
        d = np.diff(phi.value, axis=ax) / h
        first = np.take(d, [0], axis=ax)
        comps.append(np.concatenate([first, d], axis=ax))
    return VectorField(grid, np.stack(comps))


def _pad_axis(values: np.ndarray, ax: int) -> np.ndarray:
    """One ghost layer per side along ``ax``, ``g = 3 v0 - 3 v1 + v2``."""
    v = np.moveaxis(values, ax, 0)
    lo = 3.0 * v[0] - 3.0 * v[1] + v[2]
    hi = 3.0 * v[-1] - 3.0 * v[-2] + v[-3]
    return np.moveaxis(np.concatenate([lo[None], v, hi[None]], axis=0), 0, ax)


def corner_gradients(phi: Potential) -> np.ndarray:
    """Backward-difference gradients on the ``(N+1)^d`` cell-corner lattice.

    Each component is extrapolated only along its own axis (exact for
    quadratics, convexity-preserving along that axis) and replicated across
    the other, so corner gradients of a grid-convex potential are monotone
    along every grid line.
    """
    h = phi.grid.spacing
    v = np.asarray(phi.value)
    if phi.grid.dims == 1:
        return (np.diff(_pad_axis(v, 0))[None, :] / h).copy()
    gx = np.diff(_pad_axis(v, 0), axis=0) / h
    gy = np.diff(_pad_axis(v, 1), axis=1) / h
    gx = np.concatenate([gx, gx[:, -1:]], axis=1)
    gy = np.concatenate([gy, gy[-1:, :]], axis=0)
    return np.ascontiguousarray(np.stack([gx, gy]))


def cell_map(phi: Potential) -> np.ndarray:
    """Where each node's mass is centered after the pushforward.

    This is the mean of the node's corner gradients (the centroid of the
    sub-mesh parameters), a centered-difference estimate of ``grad phi`` at
    the node.  Shape ``(d,) + grid.shape``.
    """
    g = corner_gradients(phi)
    if phi.grid.dims == 1:
        return 0.5 * (g[:, :-1] + g[:, 1:])
    return 0.25 * (g[:, :-1, :-1] + g[:, 1:, :-1] + g[:, :-1, 1:] + g[:, 1:, 1:])


@njit(cache=True, nogil=True)
def _push_1d(mass, g, k, n, out):
    scale = n - 1.0
    for i in range(n):
        m = mass[i]
        if m == 0.0:
            continue
        sub = m / k
        a = g[i]
        b = g[i + 1]
        for s in range(k):
            t = (s + 0.5) / k
            p = (1.0 - t) * a + t * b
            if p < 0.0:
                p = 0.0
            elif p > 1.0:
                p = 1.0
            u = p * scale
            lo = int(np.floor(u))
            if lo > n - 2:
                lo = n - 2
            f = u - lo
            if f < SNAP:
                out[lo] += sub
            elif f > 1.0 - SNAP:
                out[lo + 1] += sub
            else:
                out[lo] += sub * (1.0 - f)
                out[lo + 1] += sub * f


@njit(cache=True, nogil=True)
def _push_2d(mass, gx, gy, k, n, bilinear, out):
    scale = n - 1.0
    inv_k2 = 1.0 / (k * k)
    for i in range(n):
        for j in range(n):
            m = mass[i, j]
            if m == 0.0:
                continue
            sub = m * inv_k2
            ax00 = gx[i, j]
            ax10 = gx[i + 1, j]
            ax01 = gx[i, j + 1]
            ax11 = gx[i + 1, j + 1]
            ay00 = gy[i, j]
            ay10 = gy[i + 1, j]
            ay01 = gy[i, j + 1]
            ay11 = gy[i + 1, j + 1]
            for s in range(k):
                al = (s + 0.5) / k
                for r in range(k):
                    be = (r + 0.5) / k
                    w00 = (1.0 - al) * (1.0 - be)
                    w10 = al * (1.0 - be)
                    w01 = (1.0 - al) * be
                    w11 = al * be
                    px = w00 * ax00 + w10 * ax10 + w01 * ax01 + w11 * ax11
                    py = w00 * ay00 + w10 * ay10 + w01 * ay01 + w11 * ay11
                    if px < 0.0:
                        px = 0.0
                    elif px > 1.0:
                        px = 1.0
                    if py < 0.0:
                        py = 0.0
                    elif py > 1.0:
                        py = 1.0
                    ux = px * scale
                    uy = py * scale
                    lx = int(np.floor(ux))
                    ly = int(np.floor(uy))
                    if lx > n - 2:
                        lx = n - 2
                    if ly > n - 2:
                        ly = n - 2
                    fx = ux - lx
                    fy = uy - ly
                    if fx < SNAP:
                        fx = 0.0
                    elif fx > 1.0 - SNAP:
                        fx = 1.0
                    if fy < SNAP:
                        fy = 0.0
                    elif fy > 1.0 - SNAP:
                        fy = 1.0
                    if bilinear:
                        c00 = (1.0 - fx) * (1.0 - fy)
                        c10 = fx * (1.0 - fy)
                        c01 = (1.0 - fx) * fy
                        c11 = fx * fy
                    elif fx == 0.0 or fx == 1.0 or fy == 0.0 or fy == 1.0:
                        # on a cell edge: the two far corners are ambiguous, use the edge's endpoints
                        c00 = (1.0 - fx) * (1.0 - fy)
                        c10 = fx * (1.0 - fy)
                        c01 = (1.0 - fx) * fy
                        c11 = fx * fy
                    else:
                        d00 = np.sqrt(fx * fx + fy * fy)
                        d10 = np.sqrt((1.0 - fx) * (1.0 - fx) + fy * fy)
                        d01 = np.sqrt(fx * fx + (1.0 - fy) * (1.0 - fy))
                        d11 = np.sqrt((1.0 - fx) * (1.0 - fx) + (1.0 - fy) * (1.0 - fy))
                        if d00 == 0.0:
                            c00, c10, c01, c11 = 1.0, 0.0, 0.0, 0.0
                        elif d10 == 0.0:
                            c00, c10, c01, c11 = 0.0, 1.0, 0.0, 0.0
                        elif d01 == 0.0:
                            c00, c10, c01, c11 = 0.0, 0.0, 1.0, 0.0
                        elif d11 == 0.0:
                            c00, c10, c01, c11 = 0.0, 0.0, 0.0, 1.0
                        else:
                            c00 = 1.0 / d00
                            c10 = 1.0 / d10
                            c01 = 1.0 / d01
                            c11 = 1.0 / d11
                            tot = c00 + c10 + c01 + c11
                            c00 /= tot
                            c10 /= tot
                            c01 /= tot
                            c11 /= tot
                    out[lx, ly] += sub * c00
                    out[lx + 1, ly] += sub * c10
                    out[lx, ly + 1] += sub * c01
                    out[lx + 1, ly + 1] += sub * c11


def push_mass(mass: np.ndarray, phi: Potential, split_k: int = DEFAULT_SPLIT,
              deposit: str = "inverse_distance") -> np.ndarray:
    """Array-level pushforward of node masses under ``grad phi``."""
    if split_k < 1:
        raise InvalidSplit(f"split_k must be >= 1, got {split_k}")
    if deposit not in DEPOSITS:
        raise ValueError(f"unknown deposit rule {deposit!r}")
    grid = phi.grid
    g = corner_gradients(phi)
    m = np.ascontiguousarray(mass, dtype=np.float64)
    out = np.zeros(grid.shape)
    if grid.dims == 1:
        _push_1d(m, g[0], int(split_k), grid.n, out)
    else:
        _push_2d(m, g[0], g[1], int(split_k), grid.n, deposit == "bilinear", out)
    return out


def pushforward(nu: DiscreteMeasure, phi: Potential, split_k: int = DEFAULT_SPLIT,
                deposit: str = "inverse_distance") -> DiscreteMeasure:
    """Mass-splitting pushforward ``(grad phi)_# nu`` for convex ``phi``."""
    same_grid(nu, phi)
    if not phi.convex:
        raise NotConvex("pushforward needs a potential flagged convex")
    out = push_mass(nu.mass, phi, split_k, deposit)
    return DiscreteMeasure(nu.grid, out)


def interpolated_potential(phi_bar: Potential, tau: float) -> Potential:
    """``(1 - tau) |x|^2 / 2 + tau * phi_bar``, gradient ``(1 - tau) id + tau grad phi_bar``."""
    value = (1.0 - tau) * phi_bar.grid.sq_norm_half() + tau * phi_bar.value
    return Potential(phi_bar.grid, value, convex=phi_bar.convex)


def descent_step(nu: DiscreteMeasure, phi_bar: Potential, tau: float,
                 split_k: int = DEFAULT_SPLIT, deposit: str = "inverse_distance") -> DiscreteMeasure:
    """One Wasserstein descent step ``(id - tau (id - grad phi_bar))_# nu``."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    return pushforward(nu, interpolated_potential(phi_bar, tau), split_k, deposit)
