import numpy as np
import pytest
import sympy as sp

from osstab.exceptions import CompatibilityError, DivergentIntegralError
from osstab.rayleigh import (
    cutoff_rho0,
    cutoff_rho1,
    homogeneous_rayleigh,
    operator_L,
    rayleigh_operator,
    sigma_op,
    sigma_rho0,
    sigma_rho1,
    slow_mode,
    solve_rayleigh,
)

import oracles


def test_operator_l_closed_form(tanh_profile, grid192):
    y = grid192.nodes
    u = tanh_profile.u(y)
    out = operator_L(tanh_profile, u**2 * np.exp(-y), grid192)
    assert np.max(np.abs(out - u * np.exp(-y))) <= 1e-8
    assert np.max(np.abs(operator_L(tanh_profile, np.zeros(grid192.n), grid192))) == 0.0


def test_operator_l_rejects_non_finite(tanh_profile, grid192):
    bad = np.zeros(grid192.n)
    bad[3] = np.nan
    with pytest.raises(DivergentIntegralError):
        operator_L(tanh_profile, bad, grid192)


def test_cutoff_fixtures(grid192):
    y = grid192.nodes
    assert abs(grid192.quad(cutoff_rho0(y)) - 1.0) <= 1e-12
    assert abs(grid192.quad(cutoff_rho1(y))) <= 1e-12
    assert cutoff_rho0(y)[0] == 0.0
    assert cutoff_rho1(y)[0] == 1.0
    assert np.max(np.abs(sigma_op(cutoff_rho0(y), grid192) - sigma_rho0(y))) <= 1e-10
    assert np.max(np.abs(sigma_op(cutoff_rho1(y), grid192) - sigma_rho1(y))) <= 1e-10


def test_hardy_bounds(tanh_profile, grid192, rng):
    """sigma and L obey the weighted Hardy bounds with moderate constants."""
    y = grid192.nodes
    worst_sigma = 0.0
    worst_l = 0.0
    for _ in range(20):
        c = rng.normal(size=3)
        f = (c[0] + c[1] * y + c[2] * y**2) * y**2 * np.exp(-rng.uniform(1.0, 2.5) * y)
        for k in (0, 1):
            yk = y**k
            num = grid192.norm(yk * sigma_op(f, grid192))
            den = grid192.norm(y ** (k + 1) * f)
            worst_sigma = max(worst_sigma, num / den)
            num_l = grid192.norm(yk * operator_L(tanh_profile, f, grid192))
            den_l = grid192.norm(yk * (1 + y) * f)
            worst_l = max(worst_l, num_l / den_l)
    assert worst_sigma <= 20.0
    assert worst_l <= 20.0


def test_solve_rayleigh_zero(tanh_profile, grid192):
    z = np.zeros(grid192.n)
    sol = solve_rayleigh(tanh_profile, 1.0, z, z, grid=grid192)
    assert grid192.norm(sol.phi.values) <= 1e-14


def test_solve_rayleigh_manufactured(tanh_profile, grid192):
    ys = oracles.symbol()
    phi_expr = ys**2 * sp.exp(-ys)
    g_fn = oracles.rayleigh_source(phi_expr, 1.0)
    g = np.asarray(g_fn(grid192.nodes), dtype=complex)
    f1 = sigma_op(g, grid192)
    f2 = np.zeros_like(f1)
    sol = solve_rayleigh(tanh_profile, 1.0, f1, f2, grid=grid192)
    phistar = oracles.lambdify(phi_expr)(grid192.nodes)
    assert grid192.norm(sol.phi.values - phistar) <= 1e-6
    assert sol.phi.values[0] == 0.0


def test_solve_rayleigh_compatibility(tanh_profile, grid192):
    y = grid192.nodes
    f1 = np.exp(-y)          # dY f1(0) = -1 != 0
    f2 = np.zeros_like(f1)
    with pytest.raises(CompatibilityError):
        solve_rayleigh(tanh_profile, 1.0, f1, f2, grid=grid192)


def test_rayleigh_estimate_stable_over_alpha(tanh_profile, grid192, rng):
    """||phi|| <= C(||(1+Y) f1|| + (1+a^2)(|f1(0)|/a^2 + ||f2||_H1))."""
    y = grid192.nodes
    ratios = []
    for alpha in (0.25, 0.5, 1.0, 2.0):
        for _ in range(4):
            c = rng.normal(size=2)
            g = (c[0] * y + c[1] * y**2) * np.exp(-1.5 * y)
            f1 = sigma_op(g, grid192)
            f2 = c[1] * y**2 * np.exp(-2 * y) / (1 + alpha**2)
            # compatibility: dY f1(0) = -g(0) = 0 = alpha^2 f2(0)
            sol = solve_rayleigh(tanh_profile, alpha, f1, f2, grid=grid192)
            y1 = 1.0 + y
            rhs = (grid192.norm(y1 * f1)
                   + (1 + alpha**2) * (abs(f1[0]) / alpha**2
                                       + np.sqrt(grid192.norm(f2) ** 2
                                                 + grid192.norm(grid192.d1 @ f2) ** 2)))
            ratios.append(grid192.norm(sol.phi.values) / rhs)
    assert max(ratios) <= 10.0
    assert max(ratios) / max(min(ratios), 1e-300) <= 50.0


def test_homogeneous_mode(tanh_profile, grid192):
    for alpha in (0.05, 0.1, 0.2):
        phi, c_e = homogeneous_rayleigh(tanh_profile, alpha, grid192)
        assert phi.values[0] == 1.0
        op = rayleigh_operator(tanh_profile, alpha, grid192)
        rel = grid192.norm(op(phi.values)) / grid192.norm(phi.values)
        assert rel <= 1e-6
        assert abs(c_e - tanh_profile.uprime0) <= 5.0 * alpha
    with pytest.raises(ValueError):
        homogeneous_rayleigh(tanh_profile, 1.5, grid192)


def test_slow_mode_basics(tanh_profile, grid192):
    sm = slow_mode(tanh_profile, 0.5, 1e-4, grid192)
    assert abs(sm.boundary["phi_s0"] - 1.0) <= 1e-8
    assert sm.os_residual_rel <= 1e-5


def test_slow_mode_wall_slope(tanh_profile, grid192):
    """Wall slope approaches c_E U'(0)/alpha as alpha decreases; deviation
    is O(alpha) relative and sits inside the stated eps envelope."""
    for alpha in (0.25, 0.5):
        sm = slow_mode(tanh_profile, alpha, 1e-4, grid192)
        lead = sm.boundary["dphi_s0_leading"]
        dev = abs(sm.boundary["dphi_s0"] - lead)
        assert dev <= 2.0 * alpha * abs(lead)
        assert dev <= (1e-4) ** (-0.25) + (1e-4) ** (1 / 12) / alpha


def test_slow_mode_psi_split_scalings(tanh_profile, grid192):
    """psi0 obeys ||psi0|| <~ eps^{2/3}/alpha and psi1 the eps^{1/3} family
    (one-sided: the bounds are upper bounds)."""
    alpha = 0.5
    eps_list = np.array([1e-3, 3e-4, 1e-4, 3e-5])
    r0, r1 = [], []
    for eps in eps_list:
        sm = slow_mode(tanh_profile, alpha, eps, grid192)
        g = grid192
        r0.append(g.norm(sm.psi0.values) / (eps ** (2 / 3) / alpha))
        r1.append((eps ** (1 / 3) * g.norm(g.d1 @ sm.psi1.values)
                   + alpha * g.norm(sm.psi1.values)) / eps ** (1 / 3))
    assert max(r0) <= 10.0 * max(min(r0), 1e-300) and max(r0) <= 10.0
    assert max(r1) <= 10.0


def test_slow_mode_remainder_bound(tanh_profile, grid192):
    """||(dY phi_re, alpha phi_re)|| <= C (1 + eps^{1/3}/alpha) for the
    remainder after removing the Euler seed."""
    y = grid192.nodes
    u = tanh_profile.u(y)
    ratios = []
    for eps in (1e-3, 1e-4, 1e-5):
        sm = slow_mode(tanh_profile, 0.5, eps, grid192)
        seed = (sm.c_e / 0.5) * u * np.exp(-0.5 * y)
        rem = sm.phi_s.values - seed
        ratios.append(grid192.pair_norm(rem, 0.5) / (1 + eps ** (1 / 3) / 0.5))
    assert max(ratios) <= 10.0
    assert max(ratios) / min(ratios) <= 5.0
