import numpy as np
import pytest

from osstab.exceptions import DivergentIntegralError
from osstab.grid import helm_apply
from osstab.helmholtz import (
    boundary_derivative,
    fast_decay_boundary,
    fast_decay_part,
    solve_dirichlet,
    solve_dirichlet_collocation,
)


def _random_smooth(rng, y, n_terms=4, min_rate=1.5, max_rate=3.0):
    out = np.zeros_like(y, dtype=complex)
    for _ in range(n_terms):
        a = rng.uniform(min_rate, max_rate)
        c = rng.normal() + 1j * rng.normal()
        out += c * np.exp(-a * y)
    return out


def test_analytic_case(grid160):
    y = grid160.nodes
    w = np.exp(-2 * y)
    phi = solve_dirichlet(w, 1.0, grid160)
    exact = (np.exp(-2 * y) - np.exp(-y)) / 3.0
    assert np.max(np.abs(phi - exact)) <= 1e-8
    assert phi[0] == 0.0
    assert abs(boundary_derivative(w, 1.0, grid160) + 1.0 / 3.0) <= 1e-9


def test_zero_source(grid160):
    assert np.max(np.abs(solve_dirichlet(np.zeros(grid160.n), 1.0, grid160))) == 0.0


def test_boundary_derivative_exponential(grid160):
    w = np.exp(-grid160.nodes)
    assert abs(boundary_derivative(w, 1.0, grid160) + 0.5) <= 1e-9


def test_fast_decay_part_analytic(grid160):
    y = grid160.nodes
    w = np.exp(-2 * y)
    pf = fast_decay_part(w, 1.0, grid160)
    assert np.max(np.abs(pf - np.exp(-2 * y) / 3.0)) <= 1e-8
    assert abs(pf[0] - 1.0 / 3.0) <= 1e-9
    assert np.max(np.abs(fast_decay_part(np.zeros_like(y), 1.0, grid160))) == 0.0


def test_fast_decay_round_trip(grid160):
    y = grid160.nodes
    w = np.exp(-(y**2))
    pf = fast_decay_part(w, 1.0, grid160)
    res = helm_apply(pf, 1.0, grid160) - w
    assert grid160.norm(res) <= 1e-7 * grid160.norm(w)


def test_fast_decay_boundary_values(grid160):
    w = np.exp(-2 * grid160.nodes)
    f0, df0 = fast_decay_boundary(w, 1.0, grid160)
    assert abs(f0 - 1.0 / 3.0) <= 1e-9
    assert abs(df0 + 2.0 / 3.0) <= 1e-9


def test_quadrature_vs_collocation_oracle(grid160, rng):
    for _ in range(20):
        w = _random_smooth(rng, grid160.nodes)
        alpha = rng.uniform(0.4, 1.2)
        p1 = solve_dirichlet(w, alpha, grid160)
        p2 = solve_dirichlet_collocation(w, alpha, grid160)
        scale = max(np.max(np.abs(p1)), 1e-300)
        assert np.max(np.abs(p1 - p2)) <= 1e-7 * max(1.0, scale)


def test_gaussian_collocation_agreement(grid160):
    w = np.exp(-grid160.nodes**2)
    p1 = solve_dirichlet(w, 0.5, grid160)
    p2 = solve_dirichlet_collocation(w, 0.5, grid160)
    assert np.max(np.abs(p1 - p2)) <= 1e-7


def test_greens_identity_on_random_sources(grid160, rng):
    for _ in range(10):
        w = _random_smooth(rng, grid160.nodes)
        phi = solve_dirichlet(w, 1.0, grid160)
        assert phi[0] == 0.0
        res = helm_apply(phi, 1.0, grid160) - w
        assert grid160.norm(res) <= 1e-7 * grid160.norm(w)


def test_divergent_moment_raises(grid160):
    with pytest.raises(DivergentIntegralError):
        fast_decay_part(np.exp(-grid160.nodes), 1.5, grid160)


def test_elliptic_inequalities(grid160, rng):
    """Homogeneous-data pairs (phi, w): |a|^3||(phi', a phi)|| + a^2 ||w||
    is controlled by ||(d^2-a^2) w||, and the pair norm interpolates."""
    y = grid160.nodes
    worst_main = 0.0
    worst_interp = 0.0
    for alpha in (0.5, 1.0, 2.0, 4.0):
        for _ in range(5):
            # phi with phi(0) = phi'(0) = 0 and fast decay
            c = rng.normal(size=3)
            phi = (c[0] * y**2 + c[1] * y**3 + c[2] * y**4) * np.exp(-2.0 * y)
            w = helm_apply(phi, alpha, grid160)
            hw = helm_apply(w, alpha, grid160)
            lhs = (abs(alpha) ** 3 * grid160.pair_norm(phi, alpha)
                   + alpha**2 * grid160.norm(w))
            worst_main = max(worst_main, lhs / grid160.norm(hw))
            interp = grid160.pair_norm(w, alpha) ** 2 / (
                grid160.norm(hw) * grid160.norm(w))
            worst_interp = max(worst_interp, interp)
    assert worst_main <= 50.0
    assert worst_interp <= 10.0


def test_fast_mode_boundary_derivative_consistency(tanh_profile, grid192):
    from osstab.airy import fast_mode

    fm = fast_mode(tanh_profile, 1.0, 1e-3, grid192)
    w = fm.w_a.values
    phi = solve_dirichlet(w, 1.0, grid192)
    slope = (grid192.d1 @ phi)[0]
    assert abs(slope - boundary_derivative(w, 1.0, grid192)) <= 1e-6


def test_kernel_solves_require_positive_alpha(grid160):
    w = np.exp(-2 * grid160.nodes)
    with pytest.raises(ValueError):
        solve_dirichlet(w, -1.0, grid160)
    with pytest.raises(ValueError):
        fast_decay_part(w, 0.0, grid160)
