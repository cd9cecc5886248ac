from __future__ import annotations

import math

import numpy as np
import pytest

from fermi_lab.ensembles import (
    ThermoParams,
    canonical_log_z,
    canonical_log_z_bruteforce,
    free_grand_log_xi_limit,
    grand_canonical_consistency_check,
    grand_log_xi,
    plan_canonical_M,
    plan_grand_M,
    spectrum_from_eigenvalues,
)
from fermi_lab.errors import CapacityError
from fermi_lab.potentials import zero
from fermi_lab.spectrum import compute_spectrum, suggest_grid_size


def test_single_level_canonical():
    sp = spectrum_from_eigenvalues([5.0])
    r = canonical_log_z(sp, 1, ThermoParams(beta=2.0))
    assert r.log_z == pytest.approx(-10.0, rel=1e-15)
    assert r.truncation_bound == 0.0


def test_full_occupation():
    # N equals the level count: one subset, ln Z = -beta sum(eps)
    sp = spectrum_from_eigenvalues([0.5, 1.25, 2.0])
    r = canonical_log_z(sp, 3, ThermoParams(beta=1.5))
    assert r.log_z == pytest.approx(-1.5 * 3.75, rel=1e-14)


def test_three_level_frozen():
    sp = spectrum_from_eigenvalues([1.0, 2.0, 3.0])
    r = canonical_log_z(sp, 2, ThermoParams(beta=1.0))
    assert r.log_z == pytest.approx(-2.59239403555562, rel=1e-14)


def test_empty_system():
    sp = spectrum_from_eigenvalues([1.0, 2.0])
    r = canonical_log_z(sp, 0, ThermoParams(beta=1.0))
    assert r.log_z == 0.0


def test_uniform_shift_identity():
    rng = np.random.default_rng(3)
    for _ in range(10):
        M = int(rng.integers(3, 12))
        N = int(rng.integers(1, M + 1))
        beta = float(rng.uniform(0.3, 2.5))
        c = float(rng.uniform(-1.0, 4.0))
        evs = np.sort(rng.uniform(0.1, 6.0, size=M))
        evs += np.arange(M) * 1e-9  # guard against ties
        a = canonical_log_z(spectrum_from_eigenvalues(evs), N, ThermoParams(beta=beta))
        b = canonical_log_z(spectrum_from_eigenvalues(evs + c), N, ThermoParams(beta=beta))
        assert b.log_z == pytest.approx(a.log_z - beta * N * c, rel=1e-12, abs=1e-12)


def test_dp_matches_bruteforce():
    rng = np.random.default_rng(17)
    for _ in range(40):
        M = int(rng.integers(1, 13))
        N = int(rng.integers(1, min(M, 6) + 1))
        beta = float(rng.uniform(0.3, 2.5))
        evs = np.sort(rng.uniform(0.05, 8.0, size=M))
        evs += np.arange(M) * 1e-9
        got = canonical_log_z(spectrum_from_eigenvalues(evs), N, ThermoParams(beta=beta))
        ref = canonical_log_z_bruteforce(evs, N, beta)
        assert abs(got.log_z - ref) <= 1e-13 * max(1.0, abs(ref))


def test_bruteforce_guards():
    with pytest.raises(ValueError):
        canonical_log_z_bruteforce(list(range(1, 25)), 2, 1.0)
    with pytest.raises(ValueError):
        canonical_log_z_bruteforce([1.0, 2.0], 3, 1.0)
    with pytest.raises(ValueError):
        canonical_log_z_bruteforce([1.0, 2.0], 1, 0.0)


def test_truncation_bound_honest():
    params = ThermoParams(beta=1.0)
    n = suggest_grid_size(10.0, 80, 0.0)
    wide = compute_spectrum(zero(), 10.0, n, 80)
    narrow = compute_spectrum(zero(), 10.0, n, 12)
    r_wide = canonical_log_z(wide, 6, params, grow=False)
    r_narrow = canonical_log_z(narrow, 6, params, grow=False)
    assert r_narrow.truncation_bound > 0.0
    assert abs(r_wide.log_z - r_narrow.log_z) <= r_narrow.truncation_bound
    assert r_wide.truncation_bound < r_narrow.truncation_bound


def test_starved_truncation_is_flagged_infinite():
    sp = compute_spectrum(zero(), lam=20.0, n=400, M=10)
    r = canonical_log_z(sp, 10, ThermoParams(beta=0.05), grow=False)
    assert math.isinf(r.truncation_bound)


def test_growth_reaches_planned_size():
    params = ThermoParams(beta=1.0)
    M = plan_canonical_M(10.0, 1.0, 8, 0.0)
    n = suggest_grid_size(10.0, M, 0.0)
    direct = canonical_log_z(compute_spectrum(zero(), 10.0, n, M), 8, params, grow=False)
    assert direct.truncation_bound <= 1e-10
    grown = canonical_log_z(compute_spectrum(zero(), 10.0, 200, 8), 8, params)
    assert grown.log_z == pytest.approx(direct.log_z, rel=1e-13)
    assert grown.M_used >= M


def test_single_level_grand():
    sp = spectrum_from_eigenvalues([2.0])
    r = grand_log_xi(sp, ThermoParams(beta=3.0, mu=1.0))
    assert r.log_xi == pytest.approx(math.log1p(math.exp(-3.0)), rel=1e-15)
    assert r.tail_bound == 0.0


def test_three_level_grand_frozen():
    sp = spectrum_from_eigenvalues([1.0, 2.0, 3.0])
    r = grand_log_xi(sp, ThermoParams(beta=1.0, mu=0.0))
    assert r.log_xi == pytest.approx(0.48877705013493744, rel=1e-14)


def test_grand_tail_honest():
    n = suggest_grid_size(8.0, 120, 0.0)
    wide = compute_spectrum(zero(), 8.0, n, 120)
    narrow = compute_spectrum(zero(), 8.0, n, 20)
    params = ThermoParams(beta=1.0, mu=3.0)
    r_wide = grand_log_xi(wide, params, grow=False)
    r_narrow = grand_log_xi(narrow, params, grow=False)
    assert r_narrow.tail_bound > 0.0
    assert abs(r_wide.log_xi - r_narrow.log_xi) <= r_narrow.tail_bound


def test_grand_capacity_error():
    sp = compute_spectrum(zero(), lam=5.0, n=64, M=4)
    with pytest.raises(CapacityError):
        grand_log_xi(sp, ThermoParams(beta=1.0, mu=1e12))
    r = grand_log_xi(sp, ThermoParams(beta=1.0, mu=1e12), grow=False)
    assert math.isinf(r.tail_bound)


def test_cross_ensemble_identity():
    rng = np.random.default_rng(29)
    for _ in range(10):
        evs = np.sort(rng.uniform(0.05, 9.0, size=20))
        evs += np.arange(20) * 1e-9
        sp = spectrum_from_eigenvalues(evs)
        beta = float(rng.uniform(0.4, 2.0))
        mu = float(rng.uniform(-2.0, 3.0))
        assert grand_canonical_consistency_check(sp, beta, mu, 20) < 1e-12


def test_grand_monotone_convex_in_mu():
    n = suggest_grid_size(5.0, 60, 0.0)
    sp = compute_spectrum(zero(), 5.0, n, 60)
    mus = np.linspace(-2.0, 4.0, 13)
    vals = [grand_log_xi(sp, ThermoParams(beta=1.0, mu=float(m)), grow=False).log_xi for m in mus]
    diffs = np.diff(vals)
    assert np.all(diffs > 0)
    assert np.all(np.diff(diffs) >= -1e-12)


def test_limit_quadrature_frozen():
    # values certified against the Fermi-Dirac polylog identity
    cases = [
        ((1.0, 10.0), 6.794156291384744),
        ((1.0, 0.0), 0.21584399058810685),
        ((2.0, 3.0), 2.2832663100506867),
        ((0.5, 25.0), 13.368252556017547),
    ]
    for (beta, mu), expected in cases:
        got = free_grand_log_xi_limit(ThermoParams(beta=beta, mu=mu))
        assert got == pytest.approx(expected, rel=1e-12)


def test_limit_high_mu_power_law():
    # (1/pi) int_0^sqrt(mu) (mu - p^2) dp = (2/3) mu^{3/2} / pi dominates
    got = free_grand_log_xi_limit(ThermoParams(beta=1.0, mu=400.0))
    assert got / (2.0 / (3.0 * math.pi) * 400.0**1.5) == pytest.approx(1.0, abs=1e-3)


def test_finite_box_boundary_term():
    # the box value sits below the infinite-volume integral by
    # softplus(beta mu) / (2 lam); corrected, the two agree to grid accuracy
    beta, mu, lam = 1.0, 10.0, 200.0
    M = plan_grand_M(lam, beta, mu, 0.0)
    n = suggest_grid_size(lam, M, 0.0)
    sp = compute_spectrum(zero(), lam, n, M, tol_eig=1e-6)
    r = grand_log_xi(sp, ThermoParams(beta=beta, mu=mu), grow=False)
    assert r.tail_bound < 1e-8
    omega = free_grand_log_xi_limit(ThermoParams(beta=beta, mu=mu))
    surface = math.log1p(math.exp(beta * mu)) / (2.0 * lam)
    assert abs(r.log_xi / lam + surface - omega) <= 3e-4


def test_planners_meet_target():
    M = plan_grand_M(8.0, 1.0, 3.0, 0.0)
    n = suggest_grid_size(8.0, M, 0.0)
    sp = compute_spectrum(zero(), 8.0, n, M)
    r = grand_log_xi(sp, ThermoParams(beta=1.0, mu=3.0), grow=False)
    assert r.tail_bound <= 1e-10
    assert r.M_used == M
