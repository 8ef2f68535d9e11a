"""Collocation grids on [0, inf) with differentiation, quadrature and weighted norms.

The half-line is mapped onto Chebyshev-Lobatto points through the algebraic
map Y = L(1+x)/(1-x).  The image of x = 1 (Y = inf) is dropped from the node
set; interpolation through the remaining nodes is polynomial in x, so every
representable function is bounded at infinity and solvers impose decay
behaviorally (a nonzero limit is incompatible with the far-field equations).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as sla

from .exceptions import InvalidSizeError


class GridKind(Enum):
    RATIONAL_CHEBYSHEV = "rational"
    TRUNCATED_CHEBYSHEV = "truncated"


def _clenshaw_curtis_weights(m):
    """Clenshaw-Curtis weights for the m+1 Lobatto points on [-1, 1]."""
    theta = np.pi * np.arange(m + 1) / m
    w = np.zeros(m + 1)
    ii = np.arange(1, m)
    v = np.ones(m - 1)
    if m % 2 == 0:
        w[0] = w[m] = 1.0 / (m * m - 1)
        for k in range(1, m // 2):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
        v -= np.cos(m * theta[ii]) / (m * m - 1)
    else:
        w[0] = w[m] = 1.0 / (m * m)
        for k in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
    w[ii] = 2.0 * v / m
    return w


def _barycentric_diff_matrix(x, wts):
    """First-derivative collocation matrix for nodes x with barycentric weights."""
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    d = (wts[None, :] / wts[:, None]) / dx
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return d


@dataclass(frozen=True)
class DiffOperator:
    """Dense collocation derivative acting on nodal values."""

    matrix: np.ndarray
    order: int

    def __call__(self, values):
        return self.matrix @ values


class Grid:
    """Collocation grid on [0, inf): nodes, quadrature and derivative matrices.

    Immutable after construction; safe to share across concurrent solves.
    """

    def __init__(self, nodes, quad_weights, map_scale, kind, x, bary_weights, d1, d2, shift):
        self.nodes = nodes
        self.quad_weights = quad_weights
        self.map_scale = map_scale
        self.kind = kind
        self.x = x
        self.bary_weights = bary_weights
        self.d1 = d1
        self.d2 = d2
        self._shift = shift
        self._antider_lu = None

    @property
    def n(self):
        return len(self.nodes)

    def __repr__(self):
        return f"Grid(n={self.n}, L={self.map_scale}, kind={self.kind.value})"

    # -- basic calculus -------------------------------------------------

    def quad(self, values):
        """Integral of a decaying nodal function over [0, inf)."""
        return np.dot(self.quad_weights, np.asarray(values))

    def norm(self, values):
        """L2 norm by grid quadrature."""
        v = np.asarray(values)
        return float(np.sqrt(np.dot(self.quad_weights, np.abs(v) ** 2)))

    def pair_norm(self, values, alpha):
        """L2 norm of the pair (du/dY, alpha*u)."""
        v = np.asarray(values)
        return float(np.sqrt(self.norm(self.d1 @ v) ** 2 + abs(alpha) ** 2 * self.norm(v) ** 2))

    def sup_norm(self, values):
        return float(np.max(np.abs(np.asarray(values))))

    def antiderivative(self, values):
        """F(Y) = integral of u from 0 to Y, computed spectrally."""
        if self._antider_lu is None:
            a = self.d1.astype(complex).copy()
            a[0, :] = 0.0
            a[0, 0] = 1.0
            self._antider_lu = sla.lu_factor(a)
        rhs = np.array(values, dtype=complex)
        rhs[0] = 0.0
        return sla.lu_solve(self._antider_lu, rhs)

    def tail_integral(self, values):
        """sigma[u](Y) = integral of u from Y to inf."""
        return self.quad(values) - self.antiderivative(values)

    def interpolate(self, values, y_new):
        """Barycentric evaluation of the nodal interpolant at points y_new >= 0."""
        v = np.asarray(values)
        x_new = np.atleast_1d(self.x_of_y(np.asarray(y_new, dtype=float)))
        dx = x_new[:, None] - self.x[None, :]
        exact = np.abs(dx) < 1e-15
        dx = np.where(exact, 1.0, dx)
        w = self.bary_weights[None, :] / dx
        out = (w @ v) / w.sum(axis=1)
        hit = exact.any(axis=1)
        if hit.any():
            out[hit] = v[exact.argmax(axis=1)[hit]]
        return out

    def x_of_y(self, y):
        el = self.map_scale
        return (y * (1.0 + self._shift) - el) / (y + el)

    def eval_inf_row(self):
        """Row vector extrapolating nodal values to Y = inf (x = 1)."""
        w = self.bary_weights / (1.0 - self.x)
        return w / w.sum()

    def diff_operator(self, order):
        if order == 1:
            return DiffOperator(self.d1, 1)
        if order == 2:
            return DiffOperator(self.d2, 2)
        raise ValueError(f"derivative order must be 1 or 2, got {order}")

    def refined(self, factor=2):
        """Same map, factor times as many nodes."""
        return make_grid(self.n * factor, self.map_scale, self.kind)


@dataclass
class GridFunction:
    """Complex nodal values tied to a grid."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if len(self.values) != self.grid.n:
            raise ValueError("value vector length does not match grid size")

    def __len__(self):
        return len(self.values)

    def copy(self):
        return GridFunction(self.values.copy(), self.grid)


def as_values(u):
    """Nodal values of a GridFunction or a bare array."""
    return u.values if isinstance(u, GridFunction) else np.asarray(u)


def make_grid(n, el=4.0, kind=GridKind.RATIONAL_CHEBYSHEV, y_max=None):
    """Build a collocation grid with n nodes on [0, inf).

    The rational kind sends x = 1 to infinity and drops it; the truncated
    kind maps it to the finite y_max (default 1e4 * el) before dropping it,
    which pins the interpolant to zero there.
    """
    if isinstance(kind, str):
        kind = GridKind(kind)
    if n < 16:
        raise InvalidSizeError(f"grid needs at least 16 nodes, got {n}")
    if el <= 0:
        raise InvalidSizeError(f"map scale must be positive, got {el}")

    m = n  # retained nodes are j = 1..m of the (m+1)-point Lobatto set
    x_full = np.cos(np.pi * np.arange(m + 1) / m)
    cc_full = _clenshaw_curtis_weights(m)

    if kind is GridKind.RATIONAL_CHEBYSHEV:
        e0 = 0.0
    else:
        if y_max is None:
            y_max = 1.0e4 * el
        e0 = 2.0 * el / float(y_max)

    # drop j = 0 (x = 1) and order ascending in Y
    idx = np.arange(m, 0, -1)
    x = x_full[idx]
    x[0] = -1.0

    nodes = el * (1.0 + x) / (1.0 - x + e0)
    nodes[0] = 0.0

    jac = el * (2.0 + e0) / (1.0 - x + e0) ** 2  # dY/dx
    quad_weights = cc_full[idx] * jac

    # Lobatto barycentric weights restricted to the retained nodes: dropping
    # the node at x = 1 multiplies each weight by (x_j - 1)
    delta = np.ones(m + 1)
    delta[0] = delta[m] = 0.5
    w_full = (-1.0) ** np.arange(m + 1) * delta
    w = w_full[idx] * (x - 1.0)
    w = w / np.max(np.abs(w))

    dx_mat = _barycentric_diff_matrix(x, w)
    dx2_mat = dx_mat @ dx_mat

    xp = (2.0 + e0) * el / (nodes + el) ** 2       # dx/dY
    xpp = -2.0 * (2.0 + e0) * el / (nodes + el) ** 3

    d1 = xp[:, None] * dx_mat
    d2 = xpp[:, None] * dx_mat + (xp**2)[:, None] * dx2_mat

    return Grid(
        nodes=nodes,
        quad_weights=quad_weights,
        map_scale=float(el),
        kind=kind,
        x=x,
        bary_weights=w,
        d1=d1,
        d2=d2,
        shift=e0,
    )


def weighted_norm(u, k=0, grid=None):
    """(integral (1+Y)^{2k} |u|^2 dY)^{1/2} by grid quadrature, k in 0..4."""
    if k not in (0, 1, 2, 3, 4):
        raise ValueError(f"weight power k must be in 0..4, got {k}")
    g = grid if grid is not None else u.grid
    v = as_values(u)
    w = (1.0 + g.nodes) ** (2 * k)
    return float(np.sqrt(np.dot(g.quad_weights * w, np.abs(v) ** 2)))


def helm_apply(u, alpha, grid=None):
    """Apply (d^2/dY^2 - alpha^2) to a nodal function."""
    g = grid if grid is not None else u.grid
    v = as_values(u)
    out = g.d2 @ v - alpha**2 * v
    if isinstance(u, GridFunction):
        return GridFunction(out, g)
    return out
