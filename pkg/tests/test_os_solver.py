import numpy as np
import pytest
import sympy as sp

from osstab.exceptions import (
    CompatibilityError,
    InvalidParameterError,
)
from osstab.os_solver import (
    CorrectorBranch,
    OSParams,
    OSRegime,
    boundary_corrector,
    os_apply,
    solve_os_artificial,
    solve_os_full,
    solve_os_nonslip,
    solve_os_nonslip_direct,
    spectral_gap,
)

import oracles


def _manufactured_artificial(alpha, eps):
    """phi* = (Y^2 + a Y^3) e^{-Y} with a chosen so that dw*/dY(0) = 0."""
    ys = oracles.symbol()
    a = sp.symbols("a")
    phi = (ys**2 + a * ys**3) * sp.exp(-ys)
    w = sp.diff(phi, ys, 2) - alpha**2 * phi
    a_val = sp.solve(sp.diff(w, ys).subs(ys, 0), a)[0]
    phi = phi.subs(a, a_val)
    return phi, oracles.os_source(phi, alpha, eps)


def test_params_regimes():
    assert OSParams(1.0, 1e-3).regime is OSRegime.SMALL_EPS
    assert OSParams(1.0, 0.5).regime is OSRegime.LARGE_EPS
    assert OSParams(4.0, 0.02).regime is OSRegime.LARGE_EPS  # eps alpha^3 too big
    with pytest.raises(InvalidParameterError):
        OSParams(1.0, -1.0)


def test_artificial_zero(tanh_profile, grid192):
    sol = solve_os_artificial(tanh_profile, OSParams(1.0, 1e-3),
                              np.zeros(grid192.n), grid=grid192)
    assert grid192.norm(sol.phi.values) == 0.0


def test_artificial_manufactured(tanh_profile, grid192):
    alpha, eps = 1.0, 1e-3
    phi_expr, f_fn = _manufactured_artificial(alpha, eps)
    f = np.asarray(f_fn(grid192.nodes), dtype=complex)
    sol = solve_os_artificial(tanh_profile, OSParams(alpha, eps), f,
                              grid=grid192, enforce_wall_zero=False)
    phistar = oracles.lambdify(phi_expr)(grid192.nodes)
    assert grid192.norm(sol.phi.values - phistar) <= 1e-6
    assert abs(sol.boundary["phi0"]) <= 1e-10
    assert abs(sol.boundary["dw0"]) <= 1e-8


def test_artificial_wall_precondition(tanh_profile, grid192):
    with pytest.raises(CompatibilityError):
        solve_os_artificial(tanh_profile, OSParams(1.0, 1e-3),
                            np.exp(-grid192.nodes), grid=grid192)


def test_artificial_exponent_sweep(tanh_profile, grid192):
    y = grid192.nodes
    f = y * (1 + y) ** -4  # (1+Y)^{-3}-type decay, zero wall value
    eps_list = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    w1, pair_phi, ratios = [], [], []
    intf = abs(grid192.quad(f))
    nf = np.sqrt(grid192.quad((1 + y) ** 4 * f**2)) + intf
    for eps in eps_list:
        sol = solve_os_artificial(tanh_profile, OSParams(1.0, eps), f, grid=grid192)
        w1.append(sol.norms["w_1y"])
        pair_phi.append(sol.norms["pair_phi"])
        lhs = (eps ** (1 / 3) * sol.norms["w_1y"]
               + eps ** (2 / 3) * sol.norms["pair_w_1y"]
               + eps * sol.norms["helm_w_1y"]
               + sol.norms["pair_phi"])
        ratios.append(lhs / nf)
    slope = np.polyfit(np.log(eps_list), np.log(w1), 1)[0]
    assert slope >= -1.0 / 3.0 - 0.05
    assert max(pair_phi) <= 10.0 * min(pair_phi)
    assert max(ratios) <= 10.0 * min(ratios)


@pytest.mark.parametrize("alpha,eps,branch", [
    (2.0, 1e-3, CorrectorBranch.AIRY_ONLY),
    (0.3, 1e-4, CorrectorBranch.FAST_SLOW),
])
def test_corrector_boundary_conditions(tanh_profile, grid192, alpha, eps, branch):
    corr = boundary_corrector(tanh_profile, OSParams(alpha, eps), grid192)
    assert corr.branch is branch
    assert abs(corr.boundary["phi_b0"]) <= 1e-8
    assert abs(corr.boundary["dphi_b0"] - 1.0) <= 1e-8
    assert corr.os_residual_rel <= 1e-5


def test_corrector_denominator_floor(tanh_profile, grid192):
    for alpha in (0.3, 0.6, 1.0):
        for eps in (1e-3, 1e-4):
            corr = boundary_corrector(tanh_profile, OSParams(alpha, eps), grid192)
            if corr.branch is CorrectorBranch.FAST_SLOW:
                floor = 0.01 * (eps ** (2 / 3) + eps ** (4 / 3) / alpha)
                assert abs(corr.boundary["denominator"]) >= floor


def test_corrector_validity(tanh_profile, grid192):
    with pytest.raises(InvalidParameterError):
        boundary_corrector(tanh_profile, OSParams(1.0, 0.2), grid192)


def test_nonslip_zero_and_bcs(tanh_profile, grid192):
    y = grid192.nodes
    z = np.zeros(grid192.n)
    for params in (OSParams(1.0, 1e-3), OSParams(1.0, 0.5)):
        sol = solve_os_nonslip(tanh_profile, params, z, grid=grid192)
        assert grid192.norm(sol.phi.values) <= 1e-14
        sol = solve_os_nonslip(tanh_profile, params, y * np.exp(-y), grid=grid192)
        assert abs(sol.boundary["phi0"]) <= 1e-8
        assert abs(sol.boundary["dphi0"]) <= 1e-8


def test_nonslip_overlap_agreement(tanh_profile, grid192):
    y = grid192.nodes
    f = y * np.exp(-y)
    params = OSParams(1.0, 0.05)  # exactly at the threshold
    sol = solve_os_nonslip(tanh_profile, params, f, grid=grid192)  # runs both paths
    direct = solve_os_nonslip_direct(tanh_profile, params, f, grid=grid192)
    n1 = sol.norms["pair_phi"]
    n2 = direct.norms["pair_phi"]
    assert abs(n1 - n2) / max(n1, n2) <= 1e-5


def test_full_solve_zero(tanh_profile, grid192):
    z = np.zeros(grid192.n)
    sol = solve_os_full(tanh_profile, OSParams(1.0, 1e-3), z, z, grid=grid192)
    assert grid192.norm(sol.phi.values) == 0.0


def test_full_solve_energy_bound(tanh_profile, grid192):
    y = grid192.nodes
    f1 = np.exp(-y)
    f2 = np.exp(-2 * y)
    nf = np.sqrt(grid192.norm(f1) ** 2 + grid192.norm(f2) ** 2)
    ratios = []
    for eps in (1e-2, 1e-3, 1e-4, 1e-5):
        sol = solve_os_full(tanh_profile, OSParams(1.0, eps), f1, f2, grid=grid192)
        ratios.append(eps ** (1 / 3) * sol.norms["pair_phi0"] / nf)
        assert abs(sol.boundary["phi0"]) <= 1e-8
        assert abs(sol.boundary["dphi0"]) <= 1e-8
    assert max(ratios) <= 10.0 * min(ratios)


def test_weighted_apriori_bounds_fixed_eps(tanh_profile, grid192):
    """At eps >= c2: sqrt-Y and Y-weighted bounds of the compactness step."""
    y = grid192.nodes
    y1 = 1.0 + y
    f = y * np.exp(-y)
    for eps in (0.05, 0.2, 1.0):
        for alpha in (0.5, 1.0):
            sol = solve_os_nonslip_direct(tanh_profile, OSParams(alpha, eps), f,
                                          grid=grid192)
            phi, w = sol.phi.values, sol.w.values
            g = grid192
            pair = g.pair_norm(phi, alpha)
            sqrty = np.sqrt(g.norm(np.sqrt(y) * (g.d1 @ phi)) ** 2
                            + alpha**2 * g.norm(np.sqrt(y) * phi) ** 2)
            rhs1 = pair * (eps * sol.norms["pair_w_1y"]
                           + np.sqrt(g.quad(y1**4 * np.abs(f) ** 2)))
            assert sqrty**2 <= 50.0 * rhs1
            lhs2 = (eps ** (2 / 3) * np.sqrt(g.norm(y * (g.d1 @ w)) ** 2
                                             + alpha**2 * g.norm(y * w) ** 2)
                    + eps ** (1 / 3) * g.norm(y * w))
            rhs2 = (g.norm(g.d1 @ phi) + g.norm(y * f)
                    + eps * g.norm(g.d1 @ w))
            assert lhs2 <= 50.0 * rhs2


def test_large_alpha_damping(tanh_profile, grid192):
    """|alpha| >= M2 at fixed eps: ||w|| + ||(phi', a phi)|| <= C ||f||."""
    y = grid192.nodes
    f = y * np.exp(-y)
    nf = grid192.norm(f)
    cs = []
    for alpha in (8.0, 10.0, 12.0):
        sol = solve_os_nonslip_direct(tanh_profile, OSParams(alpha, 0.5), f,
                                      grid=grid192)
        cs.append((sol.norms["w"] + sol.norms["pair_phi"]) / nf)
    assert max(cs) <= 5.0
    assert max(cs) / min(cs) <= 3.0


def test_large_eps_full_estimate(tanh_profile, grid192):
    """|alpha| (||w|| + sup-pair + ||(phi', a phi)||) <= C ||(f1, f2)||.

    The constant is probed with alpha-adapted unit-norm data so the bound is
    exercised uniformly over the sweep."""
    y = grid192.nodes
    ratios = []
    for eps in (0.1, 0.5, 1.0):
        for alpha in (0.5, 1.0, 2.0):
            f1 = np.sqrt(2 * alpha) * np.exp(-alpha * y)
            f2 = np.sqrt(2 * alpha) * alpha * y * np.exp(-alpha * y)
            nf = np.sqrt(grid192.norm(f1) ** 2 + grid192.norm(f2) ** 2)
            sol = solve_os_full(tanh_profile, OSParams(alpha, eps), f1, f2,
                                grid=grid192)
            lhs = abs(alpha) * (sol.norms["w"] + sol.norms["sup_pair_phi"]
                                + sol.norms["pair_phi"])
            ratios.append(lhs / nf)
    assert max(ratios) <= 10.0 * min(ratios)


def test_os_apply_consistency(tanh_profile, grid192):
    y = grid192.nodes
    phi = y**2 * np.exp(-y)
    w, eq = os_apply(tanh_profile, 1.0, 1e-3, phi, grid192)
    ys = oracles.symbol()
    f_fn = oracles.os_source(ys**2 * sp.exp(-ys), 1.0, 1e-3)
    expect = np.asarray(f_fn(y), dtype=complex)
    assert grid192.norm(eq - expect) <= 1e-6 * grid192.norm(expect)


def test_spectral_gap_verdicts(tanh_profile):
    rep = spectral_gap(tanh_profile, OSParams(1.0, 1e-3), [96, 160, 256])
    assert rep.verdict == "gap-open"
    v = np.array(rep.sigma_min)
    assert v.max() / v.min() <= 1.2
    rep0 = spectral_gap(tanh_profile, OSParams(0.0, 1.0), [96, 160, 256])
    assert rep0.verdict == "gap-open"
    rep_open_regime = spectral_gap(tanh_profile, OSParams(1.0, 0.5), [96, 160])
    assert rep_open_regime.evidence_only


def test_artificial_manufactured_exp_profile(exp_profile, grid192):
    ys = oracles.symbol()
    a = sp.symbols("a")
    alpha, eps = 1.0, 1e-3
    phi = (ys**2 + a * ys**3) * sp.exp(-ys)
    w = sp.diff(phi, ys, 2) - alpha**2 * phi
    a_val = sp.solve(sp.diff(w, ys).subs(ys, 0), a)[0]
    phi = phi.subs(a, a_val)
    f_fn = oracles.os_source(phi, alpha, eps, u_expr=1 - sp.exp(-ys))
    f = np.asarray(f_fn(grid192.nodes), dtype=complex)
    sol = solve_os_artificial(exp_profile, OSParams(alpha, eps), f,
                              grid=grid192, enforce_wall_zero=False)
    phistar = oracles.lambdify(phi)(grid192.nodes)
    assert grid192.norm(sol.phi.values - phistar) <= 1e-6


def test_spectral_gap_exp_profile(exp_profile):
    rep = spectral_gap(exp_profile, OSParams(1.0, 1e-3), [96, 160])
    assert rep.verdict == "gap-open"


def test_overlap_mismatch_raised_for_impossible_tolerance(tanh_profile, grid192):
    """The dual-path cross-check reports disagreement when the agreement
    tolerance is set below the attainable round-off gap."""
    from osstab.exceptions import OverlapMismatchError

    f = grid192.nodes * np.exp(-grid192.nodes)
    with pytest.raises(OverlapMismatchError):
        solve_os_nonslip(tanh_profile, OSParams(1.0, 0.05), f, grid=grid192,
                         overlap_rtol=1e-18)
