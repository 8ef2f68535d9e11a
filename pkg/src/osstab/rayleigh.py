"""Rayleigh solvers: the degenerate-elliptic inverse, the inhomogeneous
boundary-value problem, the homogeneous decaying mode, and the slow mode.

The inhomogeneous problem U(d^2-alpha^2)phi - U'' phi = -dY f1 + alpha^2 f2,
phi(0) = 0 is solved by the splitting phi = phi1 + phi2: phi1 inverts the
alpha-free operator through L[sigma[.]] after the data is corrected to zero
mean and zero wall value by two fixed cutoff functions, and phi2 comes from
a divergence-form collocation solve in the regularized unknown phi2/U.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import modified_airy
from .exceptions import (
    CompatibilityError,
    DivergentIntegralError,
    SingularSystemError,
)
from .grid import GridFunction, as_values
from .modified_airy import AiryBC


@dataclass
class RayleighSolve:
    """Solution record phi = phi1 + phi2 of the inhomogeneous problem."""

    phi: GridFunction
    phi1: GridFunction
    phi2: GridFunction
    residual: float
    norms: dict


@dataclass
class SlowMode:
    """Homogeneous Orr-Sommerfeld solution varying on O(1) scales.

    phi_s(0) = 1 since the Rayleigh seed carries boundary value one and the
    two correctors vanish at the wall.  w_s is the mode's vorticity built
    from the parts (Rayleigh curvature, inner correction, remainder system),
    which avoids the wall round-off a raw second-derivative would carry.
    """

    phi_s: GridFunction
    w_s: GridFunction
    phi_ray: GridFunction
    psi: GridFunction
    psi0: GridFunction
    psi1: GridFunction
    phi_tilde: GridFunction
    c_e: complex
    boundary: dict
    os_residual_rel: float


# -- cutoff fixtures ---------------------------------------------------------


def cutoff_rho0(y):
    """rho0 = 4 Y e^{-2Y}: unit mass, rho0(0) = 0, rho0/U bounded near 0."""
    return 4.0 * y * np.exp(-2.0 * y)


def cutoff_rho1(y):
    """rho1 = (1 - 2Y) e^{-2Y}: rho1(0) = 1, zero mass."""
    return (1.0 - 2.0 * y) * np.exp(-2.0 * y)


def sigma_rho0(y):
    """sigma[rho0] = (2Y + 1) e^{-2Y} in closed form."""
    return (2.0 * y + 1.0) * np.exp(-2.0 * y)


def sigma_rho1(y):
    """sigma[rho1] = -Y e^{-2Y} in closed form."""
    return -y * np.exp(-2.0 * y)


# -- basic operators ---------------------------------------------------------


def sigma_op(f, grid=None):
    """sigma[f](Y) = int_Y^inf f."""
    g = grid if grid is not None else f.grid
    vals = g.tail_integral(as_values(f))
    if isinstance(f, GridFunction):
        return GridFunction(vals, g)
    return vals


def operator_L(profile, f, grid=None):
    """L[f](Y) = U(Y) int_Y^inf f/U^2.

    The integrand must be integrable up to the wall: the caller guarantees
    f = O(Y^2) there (as the pipeline's sigma[...] inputs are).  The wall
    value is set by quadratic extrapolation from the first three positive
    nodes.
    """
    g = grid if grid is not None else f.grid
    fv = as_values(f)
    u = profile.u(g.nodes)
    integrand = np.zeros_like(np.asarray(fv, dtype=complex))
    integrand[1:] = fv[1:] / u[1:] ** 2
    # wall limit of f/U^2 by quadratic extrapolation from the first nodes
    integrand[0] = _quadratic_extrapolate(g.nodes[1:4], integrand[1:4])
    if not np.all(np.isfinite(integrand)):
        raise DivergentIntegralError("f/U^2 is not integrable near the wall")
    inner = g.tail_integral(integrand)
    vals = u * inner
    vals[0] = _quadratic_extrapolate(g.nodes[1:4], vals[1:4])
    if isinstance(f, GridFunction):
        return GridFunction(vals, g)
    return vals


def _quadratic_extrapolate(y, v):
    c = np.polyfit(y, v, 2)
    return np.polyval(c, 0.0)


def rayleigh_operator(profile, alpha, grid):
    """Apply phi -> U(d^2-alpha^2)phi - U'' phi at the nodes."""
    u = profile.u(grid.nodes)
    d2u = profile.d2u(grid.nodes)

    def op(phi):
        v = as_values(phi)
        return u * (grid.d2 @ v - alpha**2 * v) - d2u * v

    return op


# -- inhomogeneous solve ------------------------------------------------------


def _phi2_matrix(profile, alpha, grid):
    """Divergence-form operator in psi = phi2/U:
    dY(U^2 dY psi) - alpha^2 U^2 psi, with the wall row closed by the
    differentiated equation 2 U'(0)^2 psi'(0) = (dY rhs)(0)."""
    u = profile.u(grid.nodes)
    du = profile.du(grid.nodes)
    a = (np.diag(u**2) @ grid.d2 + np.diag(2 * u * du) @ grid.d1
         - alpha**2 * np.diag(u**2)).astype(complex)
    a[0, :] = 2.0 * profile.uprime0**2 * grid.d1[0, :]
    return a


def solve_rayleigh(profile, alpha, f1, f2, grid=None, residual_rtol=1e-6):
    """Solve U(d^2-alpha^2)phi - U'' phi = -dY f1 + alpha^2 f2, phi(0) = 0.

    Requires the data compatibility (dY f1)(0) = alpha^2 f2(0); raises
    CompatibilityError otherwise.
    """
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    g = grid if grid is not None else f1.grid
    f1v = as_values(f1).astype(complex)
    f2v = as_values(f2).astype(complex)
    y = g.nodes

    df1 = g.d1 @ f1v
    scale = g.norm(f1v) + g.norm(f2v)
    compat = abs(df1[0] - alpha**2 * f2v[0])
    if scale > 0 and compat > 1e-6 * scale:
        raise CompatibilityError(
            f"(dY f1)(0) = {df1[0]:.3e} must equal alpha^2 f2(0) = "
            f"{alpha**2 * f2v[0]:.3e}"
        )

    rho0 = cutoff_rho0(y)
    rho1 = cutoff_rho1(y)
    # data corrected to zero mass and zero wall value
    f_corr = -df1 - f1v[0] * rho0 + df1[0] * rho1
    phi1 = operator_L(profile, sigma_op(f_corr, g), g)

    rhs2 = (alpha**2 * profile.u(y) * phi1
            + f1v[0] * rho0 - df1[0] * rho1 + alpha**2 * f2v)
    a2 = _phi2_matrix(profile, alpha, g)
    b2 = rhs2.copy()
    b2[0] = (g.d1 @ rhs2)[0]
    try:
        psi2 = sla.solve(a2, b2)
    except sla.LinAlgError as exc:
        raise SingularSystemError(f"phi2 system singular: {exc}") from exc
    phi2 = profile.u(y) * psi2

    phi = phi1 + phi2
    phi[0] = 0.0
    op = rayleigh_operator(profile, alpha, g)
    res = g.norm(op(phi) + df1 - alpha**2 * f2v)
    if scale > 0 and res > residual_rtol * max(scale, g.norm(phi)):
        raise SingularSystemError(
            f"Rayleigh residual {res:.3e} above tolerance; solve not certified"
        )
    norms = {
        "phi": g.norm(phi),
        "pair_phi": g.pair_norm(phi, alpha),
        "phi1": g.norm(phi1),
        "phi2": g.norm(phi2),
    }
    return RayleighSolve(
        phi=GridFunction(phi, g),
        phi1=GridFunction(phi1, g),
        phi2=GridFunction(phi2, g),
        residual=float(res),
        norms=norms,
    )


# -- homogeneous mode ---------------------------------------------------------


def homogeneous_rayleigh(profile, alpha, grid, residual_rtol=1e-6):
    """Decaying solution of U(d^2-alpha^2)phi - U'' phi = 0 with phi(0) = 1.

    Also returns the Euler-matching coefficient c_E = U'(0) / (alpha *
    int_0^inf U^2 e^{-alpha Y} dY), the amplitude that scales the seed
    U e^{-alpha Y} inside the normalized mode; c_E -> U'(0) as alpha -> 0.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"homogeneous mode needs 0 < alpha <= 1, got {alpha}")
    g = grid
    u = profile.u(g.nodes)
    d2u = profile.d2u(g.nodes)
    a = (np.diag(u) @ (g.d2 - alpha**2 * np.eye(g.n)) - np.diag(d2u)).astype(complex)
    a[0, :] = 0.0
    a[0, 0] = 1.0
    rhs = np.zeros(g.n, dtype=complex)
    rhs[0] = 1.0
    try:
        phi = sla.solve(a, rhs)
    except sla.LinAlgError as exc:
        raise SingularSystemError(
            f"homogeneous Rayleigh system singular (near a discrete eigenvalue?): {exc}"
        ) from exc
    phi = phi / phi[0]  # wall value exactly one

    op = rayleigh_operator(profile, alpha, g)
    rel = g.norm(op(phi)) / max(g.norm(phi), 1e-300)
    if rel > residual_rtol:
        raise SingularSystemError(
            f"homogeneous Rayleigh residual {rel:.3e} above {residual_rtol:.1e}"
        )
    c_e = profile.uprime0 / (alpha * g.quad(u**2 * np.exp(-alpha * g.nodes)))
    return GridFunction(phi, g), complex(c_e)


def slow_mode(profile, alpha, eps, grid, residual_rtol=1e-5):
    """Homogeneous Orr-Sommerfeld mode phi_s built around the Rayleigh mode.

    phi_s = phi_ray - psi + phi_tilde, where psi absorbs the Rayleigh
    vorticity through the inner solver and phi_tilde removes the remaining
    source -2 dY(U' psi) through the zero-boundary fourth-order solve.  The
    recorded psi0/psi1 split separates the part driven by the seed's
    curvature from the rest.
    """
    from .os_solver import solve_os_artificial, OSParams

    g = grid
    y = g.nodes
    phi_ray, c_e = homogeneous_rayleigh(profile, alpha, g)
    pr = phi_ray.values

    curv = profile.curvature_ratio(y)
    src = 1j * eps * curv * pr
    psi_sol = modified_airy.solve_modified_airy(profile, alpha, eps, src,
                                                bc=AiryBC.DIRICHLET_W, grid=g)
    psi = psi_sol.w.values

    # diagnostic split: seed part (c_E/alpha) U e^{-alpha Y} versus the rest
    d2u = profile.d2u(y)
    src0 = 1j * eps * (c_e / alpha) * d2u * np.exp(-alpha * y)
    psi0 = modified_airy.solve_modified_airy(profile, alpha, eps, src0,
                                             bc=AiryBC.DIRICHLET_W, grid=g).w.values
    psi1 = psi - psi0

    du = profile.du(y)
    f_tilde = -2.0 * (d2u * psi + du * (g.d1 @ psi))
    art = solve_os_artificial(profile, OSParams(alpha=alpha, eps=eps), f_tilde,
                              grid=g, enforce_wall_zero=False)
    phi_tilde = art.phi.values

    phi_s = pr - psi + phi_tilde
    phi_s[0] = pr[0]  # correctors vanish at the wall

    # vorticity from the parts: the Rayleigh piece satisfies
    # (d^2-a^2) phi_ray = (U''/U) phi_ray, psi contributes its own Helmholtz
    # image, and the remainder system carries w_tilde explicitly
    w_s = curv * pr - (g.d2 @ psi - alpha**2 * psi) + art.w.values

    os_res = (1j * eps * (g.d2 @ w_s - alpha**2 * w_s)
              + profile.u(y) * w_s - d2u * phi_s)
    scale = g.norm(w_s) + g.norm(phi_s)
    os_rel = g.norm(os_res) / max(scale, 1e-300)

    boundary = {
        "phi_s0": complex(phi_s[0]),
        "dphi_s0": complex((g.d1 @ phi_s)[0]),
        "dphi_s0_leading": complex(c_e * profile.uprime0 / alpha),
    }
    return SlowMode(
        phi_s=GridFunction(phi_s, g),
        w_s=GridFunction(w_s, g),
        phi_ray=phi_ray,
        psi=GridFunction(psi, g),
        psi0=GridFunction(psi0, g),
        psi1=GridFunction(psi1, g),
        phi_tilde=GridFunction(phi_tilde, g),
        c_e=c_e,
        boundary=boundary,
        os_residual_rel=float(os_rel),
    )
