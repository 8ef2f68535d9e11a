"""Complex Airy function, its rotated integral, and the fast boundary-layer mode.

Ai and Ai' are computed from the power series (summed in double-double
arithmetic so that the cancellation on the decaying rays leaves full double
accuracy) for |z| <= 8, and from the large-argument expansions beyond.  The
expansions are used only inside |arg z| < 2*pi/3 - 0.1, which covers every
argument generated by the fast-mode construction; this is asserted at run
time.

a0 is the rotated integral A0(z) = int_{e^{i pi/6} z}^{inf} Ai(t) dt,
evaluated by quadrature along the rotated ray plus a closed-form tail.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import helmholtz
from .defaults import DELTA_STAR
from .exceptions import EnvelopeExceededError, ResolutionInsufficientError
from .grid import GridFunction, helm_apply

_ENVELOPE = 40.0
_SERIES_RADIUS = 8.0
_SECTOR = 2.0 * np.pi / 3.0 - 0.1

# Ai(0) and -Ai'(0) as double-double constants
_C1_HI, _C1_LO = 0.3550280538878172, 2.05233632436212e-17
_C2_HI, _C2_LO = 0.2588194037928068, -2.522243111610832e-17

AI0 = _C1_HI + _C1_LO
AI0_PRIME = -(_C2_HI + _C2_LO)

_SPLITTER = 134217729.0  # 2**27 + 1
_ROT = np.exp(1j * np.pi / 6)


class AiryMethod(Enum):
    MACLAURIN = "maclaurin"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class AiryEval:
    """One evaluation of (Ai, Ai') with the method that produced it."""

    ai: complex
    ai_prime: complex
    method: AiryMethod


# -- double-double helpers (elementwise on ndarrays) ------------------------


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _two_prod(a, b):
    p = a * b
    ah = _SPLITTER * a
    ah = ah - (ah - a)
    al = a - ah
    bh = _SPLITTER * b
    bh = bh - (bh - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_renorm(hi, lo):
    s = hi + lo
    return s, lo - (s - hi)


def _dd_add(x, y):
    s, e = _two_sum(x[0], y[0])
    return _dd_renorm(s, e + x[1] + y[1])


def _dd_mul(x, y):
    p, e = _two_prod(x[0], y[0])
    return _dd_renorm(p, e + x[0] * y[1] + x[1] * y[0])


def _dd_div_scalar(x, d):
    q1 = x[0] / d
    p, e = _two_prod(q1, np.asarray(d, dtype=float))
    r_hi, r_e = _two_sum(x[0], -p)
    q2 = (r_hi + (r_e + x[1] - e)) / d
    return _dd_renorm(q1, q2)


def _cdd(re, im):
    z = np.zeros_like(re)
    return ((re, z.copy()), (im, z.copy()))


def _cdd_add(x, y):
    return (_dd_add(x[0], y[0]), _dd_add(x[1], y[1]))


def _cdd_mul(x, y):
    re = _dd_add(_dd_mul(x[0], y[0]), _dd_mul((-y[1][0], -y[1][1]), x[1]))
    im = _dd_add(_dd_mul(x[0], y[1]), _dd_mul(x[1], y[0]))
    return (re, im)


def _cdd_div_scalar(x, d):
    return (_dd_div_scalar(x[0], d), _dd_div_scalar(x[1], d))


def _cdd_abs2(x):
    return x[0][0] ** 2 + x[1][0] ** 2


def _cdd_to_complex(x):
    return (x[0][0] + x[0][1]) + 1j * (x[1][0] + x[1][1])


# -- power series ------------------------------------------------------------


def _ai_series(z):
    """(Ai, Ai') for an ndarray of complex z via the defining-equation series.

    The recurrence a_{n+3} = a_n / ((n+2)(n+3)) is built into the term
    updates, so the truncated series satisfies the Airy equation identically.
    """
    z = np.asarray(z, dtype=complex)
    zr, zi = z.real.copy(), z.imag.copy()
    z1 = _cdd(zr, zi)
    z3 = _cdd_mul(_cdd_mul(z1, z1), z1)

    one = np.ones_like(zr)
    tf = _cdd(one.copy(), np.zeros_like(zr))          # f terms, k = 0 -> 1
    tg = _cdd(zr.copy(), zi.copy())                   # g terms, k = 0 -> z
    f, g = tf, tg
    # f' terms start at k = 1 with z^2/2 (added inside the loop);
    # g' terms start at k = 0 with 1
    tfp = _cdd_div_scalar(_cdd_mul(z1, z1), 2.0)
    tgp = _cdd(one.copy(), np.zeros_like(zr))
    fp = _cdd(np.zeros_like(zr), np.zeros_like(zr))
    gp = tgp

    scale = np.maximum(1.0, _cdd_abs2(f))
    for k in range(120):
        tf = _cdd_div_scalar(_cdd_mul(tf, z3), (3 * k + 2) * (3 * k + 3))
        tg = _cdd_div_scalar(_cdd_mul(tg, z3), (3 * k + 3) * (3 * k + 4))
        tgp = _cdd_div_scalar(_cdd_mul(tgp, z3), (3 * k + 1) * (3 * k + 3))
        if k >= 1:
            tfp = _cdd_div_scalar(_cdd_mul(tfp, z3), 3 * k * (3 * k + 2))
        f = _cdd_add(f, tf)
        g = _cdd_add(g, tg)
        fp = _cdd_add(fp, tfp)
        gp = _cdd_add(gp, tgp)
        scale = np.maximum(scale, _cdd_abs2(f))
        if np.all(_cdd_abs2(tf) + _cdd_abs2(tg) < 1e-70 * scale):
            break

    c1 = (np.full_like(zr, _C1_HI), np.full_like(zr, _C1_LO))
    c2 = (np.full_like(zr, _C2_HI), np.full_like(zr, _C2_LO))
    ai = _cdd_add((_dd_mul(c1, f[0]), _dd_mul(c1, f[1])),
                  (_dd_mul((-c2[0], -c2[1]), g[0]), _dd_mul((-c2[0], -c2[1]), g[1])))
    aip = _cdd_add((_dd_mul(c1, fp[0]), _dd_mul(c1, fp[1])),
                   (_dd_mul((-c2[0], -c2[1]), gp[0]), _dd_mul((-c2[0], -c2[1]), gp[1])))
    return _cdd_to_complex(ai), _cdd_to_complex(aip)


# -- large-argument expansion -------------------------------------------------


def _ai_asymptotic(z):
    """(Ai, Ai') for |z| > series radius inside the admissible sector."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(np.angle(z)) >= _SECTOR):
        raise EnvelopeExceededError(
            "Airy argument outside the sector |arg z| < 2*pi/3 - 0.1"
        )
    zeta = (2.0 / 3.0) * z ** 1.5
    s_ai = np.ones_like(z)
    s_aip = np.ones_like(z)
    term = np.ones_like(z)
    u_k = 1.0
    prev = np.full(z.shape, np.inf)
    for k in range(40):
        u_next = u_k * (6 * k + 1) * (6 * k + 5) / (72.0 * (k + 1))
        v_next = u_next * (6 * (k + 1) + 1) / (1 - 6 * (k + 1))
        term = -term / zeta
        mag = np.abs(term) * u_next
        grow = mag >= prev
        upd = ~grow
        s_ai[upd] = s_ai[upd] + term[upd] * u_next
        s_aip[upd] = s_aip[upd] + term[upd] * v_next
        prev = np.where(grow, prev, mag)
        u_k = u_next
        if np.all(grow):
            break
    q = z ** 0.25
    pref = np.exp(-zeta) / (2.0 * np.sqrt(np.pi))
    return pref / q * s_ai, -pref * q * s_aip


def _ai_values(z):
    """Vector (Ai, Ai') dispatching between series and expansion; no envelope cap."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    ai = np.empty_like(z)
    aip = np.empty_like(z)
    near = np.abs(z) <= _SERIES_RADIUS
    if near.any():
        ai[near], aip[near] = _ai_series(z[near])
    if (~near).any():
        ai[~near], aip[~near] = _ai_asymptotic(z[~near])
    return ai, aip


def airy_ai(z):
    """Evaluate (Ai(z), Ai'(z)) for |z| <= 40.

    Relative error is at or below 1e-10 across the envelope; the power
    series region is exact to double precision.
    """
    z = complex(z)
    if abs(z) > _ENVELOPE:
        raise EnvelopeExceededError(f"|z| = {abs(z):.3g} exceeds the envelope {_ENVELOPE}")
    method = AiryMethod.MACLAURIN if abs(z) <= _SERIES_RADIUS else AiryMethod.ASYMPTOTIC
    ai, aip = _ai_values(np.array([z]))
    return AiryEval(complex(ai[0]), complex(aip[0]), method)


# -- the rotated integral A0 --------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _a0_tail(w):
    """Two-term tail of int_w^inf Ai(t) dt for large w in the decay sector."""
    zeta = (2.0 / 3.0) * w ** 1.5
    return np.exp(-zeta) / (2.0 * np.sqrt(np.pi) * w ** 0.75) * (1.0 - 41.0 / (72.0 * zeta))


def a0(z, path_length=14.0, panel=0.5):
    """A0(z) = int_{e^{i pi/6} z}^{inf} Ai(t) dt by ray quadrature plus tail."""
    z = complex(z)
    if abs(z) > _ENVELOPE:
        raise EnvelopeExceededError(f"|z| = {abs(z):.3g} exceeds the envelope {_ENVELOPE}")
    n_panels = int(np.ceil(path_length / panel))
    edges = np.linspace(0.0, path_length, n_panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    s = (mids[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    ai, _ = _ai_values(_ROT * (z + s))
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    integral = np.dot(w, ai)
    return _ROT * integral + _a0_tail(_ROT * (z + path_length))


def a0_ratios(z, delta0=0.1):
    """(A0'/A0, A0''/A0) at z; intended for Im(z) <= delta0.

    A0'(z) = -e^{i pi/6} Ai(e^{i pi/6} z) and
    A0''(z) = -e^{i pi/3} Ai'(e^{i pi/6} z).
    """
    z = complex(z)
    if z.imag > delta0:
        raise EnvelopeExceededError(
            f"Im z = {z.imag:.3g} above the ratio-bound strip Im z <= {delta0}"
        )
    a = a0(z)
    ai, aip = _ai_values(np.array([_ROT * z]))
    return complex(-_ROT * ai[0] / a), complex(-_ROT**2 * aip[0] / a)


# -- fast mode ---------------------------------------------------------------


@dataclass
class FastMode:
    """Boundary-layer mode built from the Airy function.

    w_a solves i*eps*(d^2-alpha^2) w_a + U'(0)*Y*w_a = 0 up to the recorded
    residual; phi_a is its stream function with phi_a(0) = 0 and phi_af the
    fast-decay part with no e^{-alpha Y} component.
    """

    w_a: GridFunction
    phi_a: GridFunction
    phi_af: GridFunction
    kappa: float
    eta: complex
    boundary: dict
    residual_rel: float


def fast_mode(profile, alpha, eps, grid, residual_rtol=1e-6):
    """Construct the fast mode for parameters (alpha, eps) on a grid.

    Requires eps * |alpha|^3 <= the smallness threshold and a grid fine
    enough to resolve the eps^{1/3} layer; raises
    ResolutionInsufficientError when the defining-equation residual exceeds
    residual_rtol relative to ||w_a||.
    """
    if alpha == 0.0 or eps <= 0.0:
        raise ValueError("fast mode needs alpha != 0 and eps > 0")
    alpha = abs(alpha)  # the mode depends on alpha only through alpha^2
    if eps * abs(alpha) ** 3 > DELTA_STAR:
        raise EnvelopeExceededError(
            f"eps*|alpha|^3 = {eps * abs(alpha)**3:.3g} exceeds the threshold {DELTA_STAR}"
        )
    du0 = profile.uprime0
    kappa = (du0 / eps) ** (1.0 / 3.0)
    eta = -1j * eps * alpha**2 / du0
    y = grid.nodes

    args = _ROT * kappa * (y + eta)
    ai, _ = _ai_values(args)
    denom = _ROT * kappa * AI0_PRIME
    w_vals = ai / denom

    # defining-equation residual, measured spectrally
    res = 1j * eps * helm_apply(w_vals, alpha, grid) + du0 * y * w_vals
    nrm = grid.norm(w_vals)
    residual_rel = grid.norm(res) / nrm if nrm > 0 else 0.0
    if residual_rel > residual_rtol:
        raise ResolutionInsufficientError(
            f"fast-mode residual {residual_rel:.3e} above {residual_rtol:.1e}; "
            "increase the grid size"
        )

    phi_a = helmholtz.solve_dirichlet(w_vals, alpha, grid)
    phi_af = helmholtz.fast_decay_part(w_vals, alpha, grid)
    phi_af0, dphi_af0 = helmholtz.fast_decay_boundary(w_vals, alpha, grid)
    dphi_a0 = helmholtz.boundary_derivative(w_vals, alpha, grid)

    # leading boundary values of the fast-decay part; relative corrections
    # are O(eps^{2/3} alpha^2)
    phi_af0_leading = 1j * eps / du0
    dphi_af0_leading = -np.exp(-1j * np.pi / 3) * eps ** (2.0 / 3.0) / (
        3.0 * du0 ** (2.0 / 3.0) * AI0_PRIME
    )

    boundary = {
        "phi_af0": phi_af0,
        "dphi_af0": dphi_af0,
        "dphi_a0": dphi_a0,
        "phi_af0_leading": complex(phi_af0_leading),
        "dphi_af0_leading": complex(dphi_af0_leading),
        "phi_af0_gap": abs(phi_af0 - phi_af0_leading),
        "dphi_af0_gap": abs(dphi_af0 - dphi_af0_leading),
        "w_a_prime0": complex((grid.d1 @ w_vals)[0]),
    }
    return FastMode(
        w_a=GridFunction(w_vals, grid),
        phi_a=GridFunction(phi_a, grid),
        phi_af=GridFunction(phi_af, grid),
        kappa=float(kappa),
        eta=complex(eta),
        boundary=boundary,
        residual_rel=float(residual_rel),
    )
