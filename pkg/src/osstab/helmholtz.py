"""Half-line solves of (d^2/dY^2 - alpha^2) phi = w via the explicit kernel.

The representation

    alpha * phi(Y) = -e^{-alpha Y} * int_0^inf w sinh(alpha Z) dZ
                     + int_Y^inf w sinh(alpha (Z - Y)) dZ

is evaluated with every sinh split into shifted exponentials, so that the
computed pieces involve only decaying kernels:

    phi(Y) = -(1/(2 alpha)) * [ P(Y) + Q(Y) - e^{-alpha Y} Q(0) ],
    P(Y)   = int_0^Y w(Z) e^{-alpha (Y-Z)} dZ,
    Q(Y)   = int_Y^inf w(Z) e^{-alpha (Z-Y)} dZ.

P and Q satisfy first-order ODEs and are obtained by dense spectral solves;
no positive exponential is ever integrated, which keeps round-off flat in Y.
The only exponentially weighted quadrature left is the sinh moment
int_0^inf w sinh(alpha Z) dZ needed for the fast-decay part, and that one is
guarded against divergence.  A dense collocation solve of the second-order
problem is provided as an independent cross-check path.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .exceptions import DivergentIntegralError, SingularSystemError
from .grid import GridFunction, as_values

_TAIL_LOG_DROP = 36.0  # require the e^{alpha Y}-weighted data to fall by e^-36


def _convolution_lus(grid, alpha):
    """LU factors for the one-sided exponential convolutions at this alpha."""
    cache = getattr(grid, "_helm_lus", None)
    if cache is None:
        cache = {}
        grid._helm_lus = cache
    key = float(alpha)
    if key not in cache:
        eye = np.eye(grid.n)
        ap = (grid.d1 + alpha * eye).astype(complex)
        ap[0, :] = 0.0
        ap[0, 0] = 1.0  # P(0) = 0
        aq = (grid.d1 - alpha * eye).astype(complex)
        cache[key] = (sla.lu_factor(ap), sla.lu_factor(aq))
    return cache[key]


def _one_sided_convolutions(grid, w, alpha):
    """P(Y) = int_0^Y w e^{-alpha(Y-Z)} dZ and Q(Y) = int_Y^inf w e^{-alpha(Z-Y)} dZ."""
    lu_p, lu_q = _convolution_lus(grid, alpha)
    rhs_p = np.asarray(w, dtype=complex).copy()
    rhs_p[0] = 0.0
    p = sla.lu_solve(lu_p, rhs_p)
    q = sla.lu_solve(lu_q, -np.asarray(w, dtype=complex))
    return p, q


def sinh_moment(w, alpha, grid=None):
    """Guarded quadrature of int_0^inf w(Z) sinh(alpha Z) dZ.

    Raises DivergentIntegralError when the e^{alpha Y}-weighted data has not
    decayed by e^-36 from its peak within the grid (alpha too large for the
    decay of w).
    """
    g = grid if grid is not None else w.grid
    vals = as_values(w)
    y = g.nodes
    aw = np.abs(vals)
    wmax = aw.max()
    if wmax == 0.0:
        return 0.0 + 0.0j

    sig = aw > 0.0
    logq = np.full(g.n, -np.inf)
    logq[sig] = np.log(aw[sig] / wmax) + alpha * y[sig]
    peak = logq.max()
    last_sig = int(np.nonzero(sig)[0][-1])
    if logq[last_sig] > peak - _TAIL_LOG_DROP:
        raise DivergentIntegralError(
            f"e^({alpha}*Y)-weighted data has not decayed within the grid; "
            "alpha too large for the decay of w"
        )
    if peak + np.log(wmax) > 690.0:
        raise DivergentIntegralError("sinh-weighted quadrature overflows")

    keep = logq > peak - _TAIL_LOG_DROP
    t = alpha * y[keep]
    v = vals[keep] / wmax
    small = t < 350.0
    prod = np.zeros(len(t), dtype=complex)
    prod[small] = v[small] * np.sinh(t[small])
    if (~small).any():
        # sinh(t) = e^t / 2 to double precision; combine in log space
        av = np.abs(v[~small])
        phase = np.where(av > 0, v[~small] / np.where(av > 0, av, 1.0), 0.0)
        prod[~small] = phase * np.exp(np.log(np.where(av > 0, av, 1.0)) + t[~small] - np.log(2.0))
    return complex(wmax * np.dot(g.quad_weights[keep], prod))


def solve_dirichlet(w, alpha, grid=None):
    """Solve (d^2 - alpha^2) phi = w with phi(0) = 0 and decay at infinity."""
    if alpha <= 0:
        raise ValueError("half-line kernel solves need alpha > 0")
    g = grid if grid is not None else w.grid
    vals = as_values(w)
    p, q = _one_sided_convolutions(g, vals, alpha)
    phi = -(p + q - np.exp(-alpha * g.nodes) * q[0]) / (2.0 * alpha)
    phi[0] = 0.0
    if isinstance(w, GridFunction):
        return GridFunction(phi, g)
    return phi


def boundary_derivative(w, alpha, grid=None):
    """d(phi)/dY at Y = 0 for the Dirichlet solution: -int_0^inf w e^{-alpha Y} dY."""
    g = grid if grid is not None else w.grid
    return complex(-g.quad(as_values(w) * np.exp(-alpha * g.nodes)))


def fast_decay_part(w, alpha, grid=None):
    """Particular solution Phi_f = (1/alpha) int_Y^inf w sinh(alpha(Z-Y)) dZ.

    Phi_f solves (d^2 - alpha^2) Phi_f = w without any homogeneous
    e^{-alpha Y} component; Phi_f(0) is generally nonzero.  Requires the
    sinh moment of w to converge on the grid.
    """
    if alpha <= 0:
        raise ValueError("half-line kernel solves need alpha > 0")
    g = grid if grid is not None else w.grid
    vals = as_values(w)
    moment = sinh_moment(vals, alpha, g)
    p, q = _one_sided_convolutions(g, vals, alpha)
    phi = -(p + q - np.exp(-alpha * g.nodes) * q[0]) / (2.0 * alpha)
    phi[0] = 0.0
    out = phi + np.exp(-alpha * g.nodes) * (moment / alpha)
    if isinstance(w, GridFunction):
        return GridFunction(out, g)
    return out


def fast_decay_boundary(w, alpha, grid=None):
    """Boundary data (Phi_f(0), d Phi_f/dY(0)) of the fast-decay part.

    Phi_f(0) = (1/alpha) int w sinh(alpha Z) dZ and
    d Phi_f/dY(0) = -int w cosh(alpha Z) dZ.
    """
    g = grid if grid is not None else w.grid
    vals = as_values(w)
    moment = sinh_moment(vals, alpha, g)
    q0 = complex(g.quad(vals * np.exp(-alpha * g.nodes)))
    return moment / alpha, -(q0 + moment)


def solve_dirichlet_collocation(w, alpha, grid=None):
    """Cross-check path: dense collocation solve of the same boundary-value
    problem, independent of the kernel quadrature."""
    g = grid if grid is not None else w.grid
    vals = as_values(w).astype(complex)
    a = (g.d2 - alpha**2 * np.eye(g.n)).astype(complex)
    rhs = vals.copy()
    a[0, :] = 0.0
    a[0, 0] = 1.0
    rhs[0] = 0.0
    try:
        phi = sla.solve(a, rhs)
    except sla.LinAlgError as exc:  # pragma: no cover - defensive
        raise SingularSystemError(f"Helmholtz collocation matrix singular: {exc}") from exc
    if isinstance(w, GridFunction):
        return GridFunction(phi, g)
    return phi
