"""Kantorovich dual functional, its H^1 gradient, and the W2 ascent solver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import DiscreteMeasure, Potential, ScalarField, quadratic_potential, same_grid
from .legendre import conjugate, convexify_with_conjugate
from .poisson import neg_inv_laplacian, project_mean_zero
from .transport import DEFAULT_SPLIT, push_mass
from .errors import NotConvex

RESIDUAL_TOL = 1e-12


def dual_value(nu: DiscreteMeasure, mu: DiscreteMeasure, phi: Potential, phi_star: Potential) -> float:
    """``sum (|x|^2/2 - phi) nu + sum (|y|^2/2 - phi*) mu`` by node quadrature.

    ``phi_star`` must be the grid conjugate of ``phi``; it is passed in so
    callers holding it already do not pay for a second transform.
    """
    grid = same_grid(nu, mu, phi, phi_star)
    q = grid.sq_norm_half()
    return float(((q - phi.value) * nu.mass).sum() + ((q - phi_star.value) * mu.mass).sum())


def residual(nu: DiscreteMeasure, mu: DiscreteMeasure, phi_star: Potential,
             split_k: int = DEFAULT_SPLIT, deposit: str = "inverse_distance") -> np.ndarray:
    """Node masses of ``-nu + (grad phi*)_# mu``, projected to zero sum."""
    pushed = push_mass(mu.mass, phi_star, split_k, deposit)
    r = pushed - nu.mass
    drift = abs(float(r.sum()))
    if drift > RESIDUAL_TOL:
        raise AssertionError(f"pushforward lost mass: residual sums to {drift:.3e}")
    return project_mean_zero(r)


def h1_gradient(nu: DiscreteMeasure, mu: DiscreteMeasure, phi: Potential,
                split_k: int = DEFAULT_SPLIT, phi_star: Potential | None = None,
                deposit: str = "inverse_distance") -> ScalarField:
    """H^1 gradient of the dual functional, ``(-Lap)^{-1}(-nu + (grad phi*)_# mu)``.

    The residual masses are converted to densities (divided by ``h^d``)
    before the Neumann solve so the result approximates the continuum
    operator.  The ``1/n`` factor of the barycenter objective is not applied
    here.
    """
    grid = same_grid(nu, mu, phi)
    if not phi.convex:
        raise NotConvex("h1_gradient needs a convex potential")
    if phi_star is None:
        phi_star = conjugate(phi)
    r = residual(nu, mu, phi_star, split_k, deposit)
    return neg_inv_laplacian(ScalarField(grid, r / grid.cell_volume), tol=np.inf)


@dataclass
class AscentState:
    """Potential with its cached conjugate and the dual value at a given ``nu``."""

    phi: Potential
    phi_star: Potential
    value: float


def ascent_step(nu: DiscreteMeasure, mu: DiscreteMeasure, phi: Potential, eta: float,
                split_k: int = DEFAULT_SPLIT, phi_star: Potential | None = None,
                deposit: str = "inverse_distance") -> tuple[Potential, float]:
    """One H^1 ascent step followed by convexification.

    Returns the new convex potential and its dual value.
    """
    state = _ascent(nu, mu, phi, eta, split_k, phi_star, deposit)
    return state.phi, state.value


def _ascent(nu, mu, phi, eta, split_k, phi_star, deposit) -> AscentState:
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    grad = h1_gradient(nu, mu, phi, split_k, phi_star, deposit)
    raw = Potential(phi.grid, phi.value + eta * grad.value)
    new_phi, new_star = convexify_with_conjugate(raw)
    return AscentState(new_phi, new_star, dual_value(nu, mu, new_phi, new_star))


@dataclass
class W2Result:
    w2_squared: float
    phi: Potential
    trace: list[float] = field(default_factory=list)
    eta_final: float = 0.0


def solve_w2(nu: DiscreteMeasure, mu: DiscreteMeasure, iters: int = 200, eta0: float = 0.05,
             decay: float = 0.99, split_k: int = DEFAULT_SPLIT,
             deposit: str = "inverse_distance", phi0: Potential | None = None) -> W2Result:
    """Estimate ``W2^2(nu, mu)`` (cost ``|x-y|^2/2``) by H^1 gradient ascent.

    Starts from the identity potential unless ``phi0`` is given.  The step is
    multiplied by ``decay`` whenever the dual value drops; the step is kept
    anyway.  The returned value is the best dual value seen, which by weak
    duality never exceeds the discrete transport cost.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    same_grid(nu, mu)
    phi = phi0 if phi0 is not None else quadratic_potential(nu.grid)
    if not phi.convex:
        phi, star = convexify_with_conjugate(phi)
    else:
        star = conjugate(phi)
    value = dual_value(nu, mu, phi, star)
    best, best_phi = value, phi
    trace = [value]
    eta = eta0
    for _ in range(iters - 1):
        state = _ascent(nu, mu, phi, eta, split_k, star, deposit)
        if state.value < value:
            eta *= decay
        phi, star, value = state.phi, state.phi_star, state.value
        trace.append(value)
        if value > best:
            best, best_phi = value, phi
    return W2Result(best, best_phi, trace, eta)
