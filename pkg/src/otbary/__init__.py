"""Wasserstein barycenters on regular grids by Wasserstein-descent H^1-ascent."""

from .dual import ascent_step, dual_value, h1_gradient, residual, solve_w2
from .errors import (
    AllZeroInput, GridMismatch, Infeasible, InvalidSplit, NegativeInput, NonFiniteInput,
    NotConvex, NotMeanZero, OTBaryError, Singular,
)
from .grid import (
    DiscreteMeasure, GridSpec, Potential, ScalarField, normalize, quadratic_potential,
    uniform_measure,
)
from .legendre import conjugate, conjugate_2d, convexify
from .poisson import h1_inner, neg_inv_laplacian
from .transport import VectorField, descent_step, gradient, pushforward
from .wdha import (
    IterationReport, WdhaConfig, WdhaResult, barycenter_functional, run, stationarity_metric,
)

__version__ = "0.1.0"
