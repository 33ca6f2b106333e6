import numpy as np
import pytest

from otbary.dual import solve_w2
from otbary.errors import GridMismatch
from otbary.grid import DiscreteMeasure, GridSpec, Potential, quadratic_potential, uniform_measure
from otbary.oracle import quantile_barycenter_1d, quantile_w2_1d, truncated_gaussian
from otbary.transport import descent_step
from otbary.wdha import WdhaConfig, average_potential, barycenter_functional, run, stationarity_metric

from conftest import disk


def test_single_measure_is_its_own_barycenter():
    g = GridSpec(2, 128)
    mu = disk(g, (0.5, 0.5), 0.2)
    res = run([mu], WdhaConfig(iters=100))
    assert solve_w2(res.barycenter, mu, iters=200).w2_squared <= 1e-3


def test_two_translated_disks_meet_in_the_middle():
    g = GridSpec(2, 64)
    c, v = np.array([0.5, 0.5]), np.array([0.3, 0.1])
    res = run([disk(g, c - v / 2), disk(g, c + v / 2)], WdhaConfig(iters=60))
    assert np.max(np.abs(res.barycenter.mean() - c)) <= 2 * g.spacing


def test_reports_are_consistent():
    g = GridSpec(2, 24)
    ms = [disk(g, (0.35, 0.4), 0.2), disk(g, (0.6, 0.6), 0.2)]
    seen = []
    res = run(ms, WdhaConfig(iters=12), callback=seen.append)
    assert seen == res.reports and len(res.potentials) == 2
    for k, r in enumerate(res.reports, start=1):
        assert r.t == k and r.objective == np.mean(r.dual_values)
        assert r.stationarity >= 0 and r.tau == pytest.approx(np.exp(-k / 12))
        assert set(r.to_dict()) == {"t", "dual_values", "objective", "stationarity", "tau", "etas"}
    assert all(p.convex for p in res.potentials)


def test_runs_are_reproducible_across_thread_counts():
    g = GridSpec(2, 24)
    ms = [disk(g, c, 0.2) for c in ((0.3, 0.3), (0.7, 0.3), (0.5, 0.7))]
    a = run(ms, WdhaConfig(iters=10))
    b = run(ms, WdhaConfig(iters=10))
    c = run(ms, WdhaConfig(iters=10, threads=3))
    for other in (b, c):
        assert np.array_equal(a.barycenter.mass, other.barycenter.mass)
        assert [r.to_dict() for r in a.reports] == [r.to_dict() for r in other.reports]


def test_variants_keep_valid_iterates():
    g = GridSpec(1, 64)
    ms = [truncated_gaussian(g, 0.3, 0.1), truncated_gaussian(g, 0.7, 0.05)]
    for cfg in (WdhaConfig(iters=20, use_updated_potentials=True), WdhaConfig(iters=20, tau_schedule="inv_t"),
                WdhaConfig(iters=20, floor_eps=0.01, deposit="bilinear", split_k=2)):
        res = run(ms, cfg)
        assert abs(res.barycenter.mass.sum() - 1.0) <= 1e-12 and res.barycenter.mass.min() >= 0


def test_run_validation():
    with pytest.raises(GridMismatch):
        run([uniform_measure(GridSpec(1, 8)), uniform_measure(GridSpec(1, 9))])
    with pytest.raises(ValueError):
        run([])
    for bad in (dict(iters=0), dict(tau_schedule="cos"), dict(tau0=0.0), dict(eta0=-1.0),
                dict(eta_decay=1.5), dict(split_k=0), dict(threads=0)):
        with pytest.raises(ValueError):
            WdhaConfig(**bad)
    assert WdhaConfig(tau_schedule="inv_t").tau(4) == 0.25
    assert WdhaConfig(tau_schedule="const", tau0=0.3).tau(9) == 0.3


def test_stationarity_of_identity_is_zero():
    g = GridSpec(2, 32)
    assert stationarity_metric(disk(g, (0.5, 0.5), 0.2), quadratic_potential(g)) <= g.spacing**2


def test_stationarity_of_dirac_under_linear_potential():
    g = GridSpec(2, 11)
    mass = np.zeros(g.shape)
    mass[3, 7] = 1.0
    a = (0.25, 0.6)
    x, y = g.coords()
    phi = Potential(g, a[0] * x + a[1] * y, convex=True)
    expected = (0.3 - a[0]) ** 2 + (0.7 - a[1]) ** 2
    assert stationarity_metric(DiscreteMeasure(g, mass), phi) == pytest.approx(expected, abs=1e-12)


def test_average_potential():
    g = GridSpec(1, 5)
    q = quadratic_potential(g)
    avg = average_potential([q, Potential(g, np.zeros(5), convex=True)])
    assert avg.convex and np.allclose(avg.value, 0.5 * q.value)
    assert not average_potential([q, Potential(g, np.zeros(5))]).convex


def test_functional_of_single_measure_at_itself():
    g = GridSpec(2, 32)
    mu = disk(g, (0.5, 0.5), 0.2)
    assert 0.0 <= barycenter_functional(mu, [mu], w2_iters=10) <= 1e-8


def test_functional_in_1d_matches_quantile_oracle():
    g = GridSpec(1, 512)
    ms = [truncated_gaussian(g, a, s) for a, s in ((0.35, 0.08), (0.5, 0.2), (0.62, 0.12))]
    bar = quantile_barycenter_1d(ms)
    expected = np.mean([quantile_w2_1d(bar, m) for m in ms])
    assert barycenter_functional(bar, ms, w2_iters=1000) == pytest.approx(expected, abs=1e-4)


def test_wdha_matches_quantile_barycenter_1d():
    g = GridSpec(1, 1024)
    ms = [truncated_gaussian(g, a, s) for a, s in ((0.35, 0.3), (0.5, 0.6), (0.62, 0.45))]
    res = run(ms, WdhaConfig(iters=300))
    assert quantile_w2_1d(res.barycenter, quantile_barycenter_1d(ms)) <= 1e-4


def test_exact_potential_descent_decreases_functional():
    # constant tau with the converged potential of each iterate: W2^2 to the target shrinks every step
    g = GridSpec(2, 64)
    nu, mu = disk(g, (0.35, 0.5)), disk(g, (0.65, 0.5))
    values = []
    for _ in range(6):
        res = solve_w2(nu, mu, iters=300)
        values.append(res.w2_squared)
        nu = descent_step(nu, res.phi, 0.5)
    assert np.max(np.diff(values)) <= 1e-6
