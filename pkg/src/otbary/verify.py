"""Oracle cross-checks behind ``otbary verify``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracle
from .dual import dual_value, solve_w2
from .grid import DiscreteMeasure, GridSpec, Potential, ScalarField, normalize
from .legendre import conjugate, conjugate_array, convexify
from .poisson import neg_inv_laplacian

SUITES = ("poisson", "conjugate", "w2-1d", "duality")


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_error: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" {self.detail}" if self.detail else ""
        return f"{self.name}: {status} max_error={self.max_error:.3e}{extra}"


def check_poisson(rng: np.random.Generator, cases: int = 20, n: int = 16, tol: float = 1e-10) -> CheckResult:
    worst = 0.0
    for dims in (1, 2):
        grid = GridSpec(dims, n)
        for _ in range(cases):
            f = rng.standard_normal(grid.shape)
            rhs = ScalarField(grid, f - f.mean())
            fast = neg_inv_laplacian(rhs).value
            dense = oracle.dense_neumann_solve(rhs).value
            worst = max(worst, float(np.abs(fast - dense).max()))
    return CheckResult("poisson", worst <= tol, worst)


def check_conjugate(rng: np.random.Generator, cases: int = 100, tol: float = 1e-12) -> CheckResult:
    worst = 0.0
    for dims, n in ((1, 33), (2, 17)):
        grid = GridSpec(dims, n)
        for _ in range(cases):
            f = grid.sq_norm_half() + rng.standard_normal(grid.shape) * rng.uniform(0.01, 1.0)
            brute = oracle.brute_conjugate(f, grid)
            worst = max(worst, float(np.abs(conjugate_array(f, grid) - brute).max()))
            twice = oracle.brute_conjugate(brute, grid)
            hull = convexify(Potential(grid, f)).value
            worst = max(worst, float(np.abs(hull - twice).max()))
    return CheckResult("conjugate", worst <= tol, worst)


def check_w2_1d(rng: np.random.Generator, cases: int = 5, n: int = 256, tol: float = 1e-4) -> CheckResult:
    grid = GridSpec(1, n)
    worst = 0.0
    for _ in range(cases):
        a, b = rng.uniform(0.3, 0.7, 2)
        sa, sb = rng.uniform(0.05, 0.3, 2)
        nu = oracle.truncated_gaussian(grid, a, sa)
        mu = oracle.truncated_gaussian(grid, b, sb)
        est = solve_w2(nu, mu, iters=1000).w2_squared
        worst = max(worst, abs(est - oracle.quantile_w2_1d(nu, mu)))
    return CheckResult("w2-1d", worst <= tol, worst)


def blob(grid: GridSpec, center, width: float) -> DiscreteMeasure:
    x, y = grid.coords()
    raw = np.exp(-0.5 * ((x - center[0]) ** 2 + (y - center[1]) ** 2) / width**2)
    return normalize(raw, 0.0, grid)


def check_duality(rng: np.random.Generator, cases: int = 50, n: int = 8) -> CheckResult:
    """Weak duality on random inputs, then ascent-vs-LP on translated blobs."""
    grid = GridSpec(2, n)
    cost = oracle.cost_matrix(grid)
    worst = -np.inf
    for _ in range(cases):
        nu = normalize(rng.uniform(0, 1, grid.shape), 0.0, grid)
        mu = normalize(rng.uniform(0, 1, grid.shape), 0.0, grid)
        phi = convexify(Potential(grid, grid.sq_norm_half() + 0.3 * rng.standard_normal(grid.shape)))
        gap = dual_value(nu, mu, phi, conjugate(phi)) - oracle.lp_ot(nu.mass, mu.mass, cost)
        worst = max(worst, gap)
    weak_ok = worst <= 1e-10
    rel = translated_blob_gap(GridSpec(2, 16))
    return CheckResult("duality", weak_ok and rel <= 0.01, max(worst, 0.0),
                       f"translated_blob_rel_gap={rel:.3e}")


def translated_blob_gap(grid: GridSpec, shift_nodes=(2, 1), width: float = 0.08) -> float:
    """Relative gap between ``solve_w2`` and the LP on a blob and its lattice translate.

    The shift is a whole number of grid steps so the two node measures are
    exact translates of each other.
    """
    h = grid.spacing
    c = (0.35, 0.4)
    nu = blob(grid, c, width)
    mu = blob(grid, (c[0] + shift_nodes[0] * h, c[1] + shift_nodes[1] * h), width)
    exact = oracle.lp_ot(nu.mass, mu.mass, oracle.cost_matrix(grid))
    est = solve_w2(nu, mu, iters=300).w2_squared
    return abs(exact - est) / exact


CHECKS = {
    "poisson": check_poisson,
    "conjugate": check_conjugate,
    "w2-1d": check_w2_1d,
    "duality": check_duality,
}


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    names = SUITES if name == "all" else (name,)
    if any(s not in CHECKS for s in names):
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    rng = np.random.default_rng(seed)
    return [CHECKS[s](rng) for s in names]
