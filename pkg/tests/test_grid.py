import numpy as np
import pytest
import sympy as sp

from osstab.exceptions import InvalidSizeError
from osstab.grid import GridFunction, GridKind, helm_apply, make_grid, weighted_norm
from osstab.helmholtz import solve_dirichlet

import oracles


def test_nodes_start_at_zero_and_increase():
    g = make_grid(64, 4.0)
    assert g.nodes[0] == 0.0
    assert np.all(np.diff(g.nodes) > 0)
    assert np.all(np.isfinite(g.nodes))


@pytest.mark.parametrize("fn,exact,tol", [
    (lambda y: np.exp(-y), 1.0, 1e-10),
    (lambda y: np.exp(-2 * y), 0.5, 1e-10),
    (lambda y: (1 + y) ** 2 * np.exp(-2 * y), 1.25, 1e-9),
])
def test_quadrature_analytic_integrals(fn, exact, tol):
    g = make_grid(128, 4.0)
    assert abs(g.quad(fn(g.nodes)) - exact) <= tol


def test_quadrature_exactness_set_at_160():
    g = make_grid(160, 4.0)
    y = g.nodes
    for fn, exact in [(np.exp(-y), 1.0), (y * np.exp(-y), 1.0),
                      (y**2 * np.exp(-2 * y), 0.25)]:
        assert abs(g.quad(fn) - exact) <= 1e-9


def test_weighted_norm_examples(grid160):
    u = np.exp(-grid160.nodes)
    assert abs(weighted_norm(u, 0, grid160) - np.sqrt(0.5)) <= 1e-8
    assert abs(weighted_norm(u, 1, grid160) - np.sqrt(1.25)) <= 1e-8
    assert weighted_norm(np.zeros(grid160.n), 2, grid160) == 0.0
    with pytest.raises(ValueError):
        weighted_norm(u, 7, grid160)


def test_helm_apply_eigenfunction(grid160):
    y = grid160.nodes
    res = helm_apply(np.exp(-y), 1.0, grid160)
    assert np.max(np.abs(res)) <= 1e-8


def test_helm_apply_analytic(grid160):
    y = grid160.nodes
    out = helm_apply(np.exp(-2 * y), 1.0, grid160)
    assert np.max(np.abs(out - 3 * np.exp(-2 * y))) <= 1e-7


def test_helm_apply_symbolic_oracle(grid160):
    ys = oracles.symbol()
    expr = ys**2 * sp.exp(-ys)
    d2 = sp.diff(expr, ys, 2) - expr  # alpha = 1
    u = oracles.lambdify(expr)(grid160.nodes)
    expect = oracles.lambdify(d2)(grid160.nodes)
    out = helm_apply(u, 1.0, grid160)
    assert np.max(np.abs(out - expect)) <= 1e-7


def test_differentiation_spectral_convergence():
    errs = []
    for n in (24, 48):
        g = make_grid(n, 4.0)
        u = np.exp(-g.nodes)
        errs.append(np.max(np.abs(g.d1 @ u + u)))
    order = np.log2(max(errs[0], 1e-15) / max(errs[1], 1e-15))
    assert order >= 6.0


def test_diff_operator_invariants():
    g = make_grid(96, 4.0)
    d1 = g.diff_operator(1)
    assert np.max(np.abs(d1(np.ones(g.n)))) <= 1e-10
    # second derivative of Y^2 is representable on the truncated map
    gt = make_grid(96, 4.0, GridKind.TRUNCATED_CHEBYSHEV, y_max=64.0)
    d2 = gt.diff_operator(2)
    assert np.max(np.abs(d2(gt.nodes**2) - 2.0)) <= 1e-6
    with pytest.raises(ValueError):
        g.diff_operator(3)


def test_helmholtz_round_trip(grid160):
    y = grid160.nodes
    u = y * np.exp(-y)  # vanishes at 0, decays
    w = helm_apply(u, 1.0, grid160)
    back = solve_dirichlet(w, 1.0, grid160)
    assert np.max(np.abs(back - u)) <= 1e-7


def test_antiderivative_and_tail(grid160):
    y = grid160.nodes
    f = np.exp(-y)
    assert np.max(np.abs(grid160.antiderivative(f) - (1 - np.exp(-y)))) <= 1e-10
    assert np.max(np.abs(grid160.tail_integral(f) - np.exp(-y))) <= 1e-10


def test_interpolation(grid160):
    y = np.linspace(0.0, 15.0, 101)
    u = np.exp(-grid160.nodes)
    assert np.max(np.abs(grid160.interpolate(u, y) - np.exp(-y))) <= 1e-10
    # exact hit on a node
    assert abs(grid160.interpolate(u, grid160.nodes[5:6])[0] - u[5]) == 0.0


def test_invalid_grid_sizes():
    with pytest.raises(InvalidSizeError):
        make_grid(8)
    with pytest.raises(InvalidSizeError):
        make_grid(64, -1.0)


def test_grid_function_checks_length(grid160):
    with pytest.raises(ValueError):
        GridFunction(np.zeros(grid160.n - 1), grid160)
    f = GridFunction(np.zeros(grid160.n), grid160)
    assert len(f.copy()) == grid160.n


def test_truncated_grid_calculus():
    g = make_grid(128, 4.0, GridKind.TRUNCATED_CHEBYSHEV, y_max=100.0)
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] < 100.0
    assert abs(g.quad(np.exp(-g.nodes)) - 1.0) <= 1e-10
    u = np.exp(-g.nodes)
    assert np.max(np.abs(g.d1 @ u + u)) <= 1e-9
