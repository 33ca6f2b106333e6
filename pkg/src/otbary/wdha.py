"""Wasserstein-descent H^1-ascent barycenter solver.

Each iteration takes one convexified H^1 ascent step per input measure on its
Kantorovich potential, then moves the barycenter iterate along the
Wasserstein gradient ``id - grad phi_bar`` of the averaged potential.  The
``1/n`` factor of the objective's potential gradient is folded into the
ascent step, so the effective step on measure ``i`` is ``eta_i / n``.

Theory (strong convexity/smoothness of the potentials) suggests an upper
bound on the descent step involving constants that cannot be observed on real
data (density bounds and the convexity moduli of the potentials), so only
step schedules are exposed here.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dual import AscentState, _ascent, dual_value, solve_w2
from .errors import GridMismatch
from .grid import MASS_TOL, DiscreteMeasure, Potential, normalize, quadratic_potential, same_grid
from .legendre import conjugate
from .transport import DEFAULT_SPLIT, cell_map, descent_step

SCHEDULES = ("exp", "inv_t", "const")


@dataclass(frozen=True)
class WdhaConfig:
    """Solver settings.

    Attributes:
        iters: number of iterations ``T``.
        tau_schedule: ``"exp"`` (``tau_t = exp(-t/T)``), ``"inv_t"``
            (``tau_t = 1/t``) or ``"const"`` (``tau_t = tau0``).
        tau0: constant descent step for the ``"const"`` schedule.
        eta0: initial ascent step for every measure.
        eta_decay: factor applied to ``eta_i`` whenever measure ``i``'s dual
            value drops after its ascent step.
        split_k: sub-mesh resolution of the pushforward.
        floor_eps: uniform mixing applied to the inputs (0 keeps them as is).
        use_updated_potentials: average the freshly updated potentials in the
            descent step instead of the previous ones.
        threads: worker threads for the per-measure ascent steps.
    """

    iters: int = 300
    tau_schedule: str = "exp"
    tau0: float = 1.0
    eta0: float = 0.05
    eta_decay: float = 0.99
    split_k: int = DEFAULT_SPLIT
    floor_eps: float = 0.0
    use_updated_potentials: bool = False
    deposit: str = "inverse_distance"
    threads: int = 1

    def __post_init__(self):
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.tau_schedule not in SCHEDULES:
            raise ValueError(f"tau_schedule must be one of {SCHEDULES}")
        if not 0.0 < self.tau0 <= 1.0:
            raise ValueError("tau0 must lie in (0, 1]")
        if self.eta0 <= 0:
            raise ValueError("eta0 must be positive")
        if not 0.0 < self.eta_decay <= 1.0:
            raise ValueError("eta_decay must lie in (0, 1]")
        if self.split_k < 1:
            raise ValueError("split_k must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def tau(self, t: int) -> float:
        if self.tau_schedule == "exp":
            return math.exp(-t / self.iters)
        if self.tau_schedule == "inv_t":
            return 1.0 / t
        return self.tau0


@dataclass
class IterationReport:
    t: int
    dual_values: list[float]
    objective: float
    stationarity: float
    tau: float
    etas: list[float]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class WdhaResult:
    barycenter: DiscreteMeasure
    reports: list[IterationReport] = field(default_factory=list)
    potentials: list[Potential] = field(default_factory=list)


def stationarity_metric(nu: DiscreteMeasure, phi_bar: Potential) -> float:
    """``sum |x - T(x)|^2 nu(x)``: squared L2(nu) norm of the Wasserstein gradient.

    ``T`` is the node displacement the pushforward applies under
    ``grad phi_bar`` (see :func:`transport.cell_map`), so the metric is zero
    exactly when the descent step leaves every node's mass centered in place.
    """
    grid = same_grid(nu, phi_bar)
    g = cell_map(phi_bar)
    total = np.zeros(grid.shape)
    for c, gc in zip(grid.coords(), g):
        total += (c - gc) ** 2
    return float((total * nu.mass).sum())


def average_potential(potentials: Sequence[Potential]) -> Potential:
    value = np.mean([p.value for p in potentials], axis=0)
    return Potential(potentials[0].grid, value, convex=all(p.convex for p in potentials))


def _check_measure(nu: DiscreteMeasure, t: int) -> None:
    drift = abs(float(nu.mass.sum()) - 1.0)
    if drift > MASS_TOL or np.any(nu.mass < 0):
        raise AssertionError(f"iterate {t} is not a probability measure (mass drift {drift:.3e})")


def run(measures: Sequence[DiscreteMeasure], config: WdhaConfig = WdhaConfig(),
        callback: Callable[[IterationReport], None] | None = None) -> WdhaResult:
    """Compute the barycenter of ``measures``.

    The iterate starts at the mixture of the inputs and every potential at
    ``|x|^2 / 2``.  ``callback`` receives each report as soon as it is made.
    """
    if len(measures) < 1:
        raise ValueError("need at least one measure")
    grid = measures[0].grid
    for m in measures[1:]:
        if m.grid != grid:
            raise GridMismatch(f"measure grid {m.grid} does not match {grid}")
    if config.floor_eps > 0:
        measures = [normalize(m.mass, config.floor_eps, grid) for m in measures]
    n = len(measures)
    nu = normalize(np.mean([m.mass for m in measures], axis=0), 0.0, grid)

    states = []
    for _ in range(n):
        phi = quadratic_potential(grid)
        states.append(AscentState(phi, conjugate(phi), 0.0))
    etas = [config.eta0] * n
    reports: list[IterationReport] = []

    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 and n > 1 else None

    def ascend(i: int, nu_t: DiscreteMeasure):
        s = states[i]
        old = dual_value(nu_t, measures[i], s.phi, s.phi_star)
        new = _ascent(nu_t, measures[i], s.phi, etas[i] / n, config.split_k, s.phi_star, config.deposit)
        return old, new

    try:
        for t in range(1, config.iters + 1):
            if pool is None:
                results = [ascend(i, nu) for i in range(n)]
            else:
                results = list(pool.map(lambda i: ascend(i, nu), range(n)))
            old_values = [r[0] for r in results]
            pre_phis = [s.phi for s in states]
            step_etas = list(etas)
            for i, (old, new) in enumerate(results):
                if new.value < old:
                    etas[i] *= config.eta_decay
                states[i] = new

            phi_bar = average_potential([s.phi for s in states] if config.use_updated_potentials else pre_phis)
            tau = config.tau(t)
            report = IterationReport(
                t=t,
                dual_values=old_values,
                objective=float(np.mean(old_values)),
                stationarity=stationarity_metric(nu, phi_bar),
                tau=tau,
                etas=step_etas,
            )
            reports.append(report)
            if callback is not None:
                callback(report)
            nu = descent_step(nu, phi_bar, tau, config.split_k, config.deposit)
            _check_measure(nu, t)
    finally:
        if pool is not None:
            pool.shutdown()
    return WdhaResult(nu, reports, [s.phi for s in states])


def barycenter_functional(nu: DiscreteMeasure, measures: Sequence[DiscreteMeasure], w2_iters: int = 300,
                          eta0: float = 0.05, decay: float = 0.99, split_k: int = DEFAULT_SPLIT,
                          deposit: str = "inverse_distance") -> float:
    """Mean of the certified lower bounds ``solve_w2(nu, mu_i)``."""
    return float(np.mean([
        solve_w2(nu, mu, w2_iters, eta0, decay, split_k, deposit).w2_squared for mu in measures
    ]))
