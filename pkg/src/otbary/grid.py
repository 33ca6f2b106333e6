"""Node lattice on [0, 1]^d and the discrete objects that live on it.

Every array in the package is indexed ``[i]`` (1D) or ``[i, j]`` (2D) where
``i`` runs along the first coordinate axis and ``j`` along the second.  Node
``i`` sits at ``i / (N - 1)`` so both endpoints of the unit interval are grid
points.  Measures are stored as node masses; the corresponding density is
``mass / h**d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllZeroInput, GridMismatch, NegativeInput, NonFiniteInput

MASS_TOL = 1e-12


def _frozen(a, dtype=np.float64) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GridSpec:
    """Square node lattice with ``n`` points per axis on ``[0, 1]^dims``."""

    dims: int
    n: int

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise ValueError(f"dims must be 1 or 2, got {self.dims}")
        if self.n < 3:
            raise ValueError(f"need at least 3 points per axis, got {self.n}")

    @property
    def spacing(self) -> float:
        return 1.0 / (self.n - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dims

    @property
    def size(self) -> int:
        return self.n**self.dims

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dims

    @property
    def axis(self) -> np.ndarray:
        """Node coordinates along one axis, endpoints exactly 0 and 1."""
        return np.arange(self.n, dtype=np.float64) / (self.n - 1)

    def coords(self) -> tuple[np.ndarray, ...]:
        """Per-axis coordinate arrays broadcast to the full grid shape."""
        return tuple(np.meshgrid(*([self.axis] * self.dims), indexing="ij"))

    def sq_norm_half(self) -> np.ndarray:
        """``|x|^2 / 2`` at every node."""
        return 0.5 * sum(c * c for c in self.coords())

    def check(self, values: np.ndarray, what: str = "array") -> None:
        if np.shape(values) != self.shape:
            raise GridMismatch(f"{what} has shape {np.shape(values)}, grid expects {self.shape}")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Unconstrained scalar data on a grid (residuals, Poisson solutions)."""

    grid: GridSpec
    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", _frozen(self.value))
        self.grid.check(self.value, "ScalarField")

    def total(self) -> float:
        return float(self.value.sum())


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure given by nonnegative node masses summing to one."""

    grid: GridSpec
    mass: np.ndarray

    def __post_init__(self):
        m = _frozen(self.mass)
        self.grid.check(m, "DiscreteMeasure")
        if not np.all(np.isfinite(m)):
            raise NonFiniteInput("measure has non-finite masses")
        if np.any(m < 0):
            raise NegativeInput("measure has negative masses")
        total = m.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"measure masses sum to {total!r}, expected 1")
        object.__setattr__(self, "mass", m)

    def density(self) -> np.ndarray:
        return self.mass / self.grid.cell_volume

    def mean(self) -> np.ndarray:
        return np.array([float((c * self.mass).sum()) for c in self.grid.coords()])


@dataclass(frozen=True, eq=False)
class Potential:
    """Scalar potential on a grid; ``convex`` marks post-convexification output."""

    grid: GridSpec
    value: np.ndarray
    convex: bool = field(default=False)

    def __post_init__(self):
        v = _frozen(self.value)
        self.grid.check(v, "Potential")
        if not np.all(np.isfinite(v)):
            raise NonFiniteInput("potential has non-finite values")
        object.__setattr__(self, "value", v)


def same_grid(*objs) -> GridSpec:
    """Return the common grid of ``objs`` or raise GridMismatch."""
    grid = objs[0].grid
    for o in objs[1:]:
        if o.grid != grid:
            raise GridMismatch(f"grid {o.grid} does not match {grid}")
    return grid


def normalize(raw, floor_eps: float = 0.0, grid: GridSpec | None = None) -> DiscreteMeasure:
    """Turn nonnegative node weights into a probability measure.

    The result is ``(1 - floor_eps) * raw / sum(raw) + floor_eps * uniform``.

    Args:
        raw: ScalarField, or a bare array (then ``grid`` is inferred from its
            shape unless given).
        floor_eps: weight of the uniform component, in ``[0, 1)``.
    """
    if isinstance(raw, (ScalarField, DiscreteMeasure)):
        grid = raw.grid
        values = np.asarray(raw.value if isinstance(raw, ScalarField) else raw.mass, dtype=np.float64)
    else:
        values = np.asarray(raw, dtype=np.float64)
        if grid is None:
            grid = GridSpec(values.ndim, values.shape[0])
    grid.check(values, "raw weights")
    if not 0.0 <= floor_eps < 1.0:
        raise ValueError(f"floor_eps must lie in [0, 1), got {floor_eps}")
    if not np.all(np.isfinite(values)):
        raise NonFiniteInput("raw weights contain non-finite values")
    if np.any(values < 0):
        raise NegativeInput("raw weights contain negative values")
    total = values.sum()
    if total <= 0:
        raise AllZeroInput("raw weights are identically zero")
    mass = values / total
    if floor_eps > 0:
        mass = (1.0 - floor_eps) * mass + floor_eps / grid.size
    # one extra division pins the sum to 1 up to a few ulps
    mass = mass / mass.sum()
    return DiscreteMeasure(grid, mass)


def quadratic_potential(grid: GridSpec) -> Potential:
    """The potential ``|x|^2 / 2`` whose gradient is the identity map."""
    return Potential(grid, grid.sq_norm_half(), convex=True)


def uniform_measure(grid: GridSpec) -> DiscreteMeasure:
    return DiscreteMeasure(grid, np.full(grid.shape, 1.0 / grid.size))
