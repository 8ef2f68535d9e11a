"""Background shear profiles U(Y) and their structure checks.

Built-in profiles are tanh(s*Y) and 1 - exp(-s*Y); both vanish at the wall,
increase to 1, and carry exponential tails, so (1+Y)^3-weighted derivative
bounds hold with room to spare.  Custom profiles come from monotone cubic
interpolation of tabulated (Y, U) data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.interpolate import PchipInterpolator

from .exceptions import InvalidParameterError


class ProfileKind(Enum):
    TANH = "tanh"
    EXP = "exp"
    TABLE = "table"


class ShearProfile:
    """Shear profile U with analytic first and second derivatives.

    Immutable; safe to share across concurrent solves.
    """

    def __init__(self, kind, u, du, d2u, decay_rate, params=(), curvature_ratio=None):
        self.kind = kind
        self._u = u
        self._du = du
        self._d2u = d2u
        self.decay_rate = float(decay_rate)
        self.params = tuple(params)
        self._curv = curvature_ratio
        self.uprime0 = float(du(0.0))
        if self.uprime0 <= 0:
            raise InvalidParameterError("profile must have positive wall shear U'(0)")

    def evaluate(self, y):
        """Return the triple (U, U', U'') at Y >= 0."""
        y = np.asarray(y, dtype=float)
        return self._u(y), self._du(y), self._d2u(y)

    def u(self, y):
        return self._u(np.asarray(y, dtype=float))

    def du(self, y):
        return self._du(np.asarray(y, dtype=float))

    def d2u(self, y):
        return self._d2u(np.asarray(y, dtype=float))

    def curvature_ratio(self, y):
        """U''(Y)/U(Y), using the closed form where one exists.

        Falls back to the quotient with the wall value replaced by its limit
        U'''(0)/U'(0) estimated by one-sided differencing.
        """
        y = np.asarray(y, dtype=float)
        if self._curv is not None:
            return self._curv(y)
        out = np.empty_like(y)
        pos = y > 1e-10
        out[pos] = self._d2u(y[pos]) / self._u(y[pos])
        if (~pos).any():
            h = 1e-5
            d3 = (self._d2u(h) - self._d2u(0.0)) / h
            out[~pos] = d3 / self.uprime0
        return out


@dataclass
class StructureReport:
    """Measured structure constants of a profile over a sample grid."""

    min_ratio: float          # min over sample of U(Y)/min(1,Y)
    max_weighted_d2u: float   # max of (1+Y)^3 |U''|
    max_weighted_deriv: float  # max of (1+Y)^3 (|U'| + |U''|)
    asymptote_gap: float      # |U(Y_max) - 1|
    wall_shear: float         # U'(0)
    positive: bool            # U > 0 on positive sample nodes
    passed: bool


def make_profile(kind, params=(1.0,)):
    """Build a built-in or tabulated shear profile.

    kind: 'tanh', 'exp', 'table' or a ProfileKind.  For the built-ins,
    params is [s] with s > 0 the steepness.  For tables, params is
    (y_array, u_array, decay_rate).
    """
    if isinstance(kind, str):
        try:
            kind = ProfileKind(kind.lower())
        except ValueError as exc:
            raise InvalidParameterError(f"unknown profile kind {kind!r}") from exc

    if kind is ProfileKind.TANH:
        (s,) = _steepness(params)

        def sech2(y):
            # overflow-safe sech^2(s y) = 4 e^{-2sy} / (1 + e^{-2sy})^2
            ex = np.exp(-2.0 * s * np.asarray(y, dtype=float))
            return 4.0 * ex / (1.0 + ex) ** 2

        return ShearProfile(
            kind,
            u=lambda y: np.tanh(s * y),
            du=lambda y: s * sech2(y),
            d2u=lambda y: -2 * s**2 * np.tanh(s * y) * sech2(y),
            decay_rate=2 * s,
            params=(s,),
            curvature_ratio=lambda y: -2 * s**2 * sech2(y),
        )

    if kind is ProfileKind.EXP:
        (s,) = _steepness(params)
        return ShearProfile(
            kind,
            u=lambda y: -np.expm1(-s * y),
            du=lambda y: s * np.exp(-s * y),
            d2u=lambda y: -s**2 * np.exp(-s * y),
            decay_rate=s,
            params=(s,),
        )

    if kind is ProfileKind.TABLE:
        y_tab, u_tab, decay_rate = params
        y_tab = np.asarray(y_tab, dtype=float)
        u_tab = np.asarray(u_tab, dtype=float)
        if y_tab[0] != 0.0 or u_tab[0] != 0.0:
            raise InvalidParameterError("table profile must start at (0, 0)")
        if abs(u_tab[-1] - 1.0) > 0.05:
            raise InvalidParameterError("table profile must approach 1")
        interp = PchipInterpolator(y_tab, u_tab, extrapolate=False)
        d1, d2 = interp.derivative(1), interp.derivative(2)
        y_top = y_tab[-1]

        def u(y):
            return np.where(y >= y_top, u_tab[-1], interp(np.minimum(y, y_top)))

        def du(y):
            return np.where(y >= y_top, 0.0, d1(np.minimum(y, y_top)))

        def d2u(y):
            return np.where(y >= y_top, 0.0, d2(np.minimum(y, y_top)))

        return ShearProfile(kind, u, du, d2u, decay_rate, params=(y_top,))

    raise InvalidParameterError(f"unknown profile kind {kind!r}")


def _steepness(params):
    if len(params) != 1 or params[0] <= 0:
        raise InvalidParameterError(f"steepness must be a single positive value, got {params}")
    return (float(params[0]),)


def profile_from_config(spec):
    """Build a profile from a {'kind': ..., 'params': [...]} mapping.

    Table profiles read a two-column CSV of (Y, U) named by 'path', with an
    optional 'decay_rate' (default 1.0, trusted as supplied).
    """
    kind = spec["kind"].lower()
    if kind == "table":
        y, u = [], []
        with open(spec["path"], newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                y.append(float(row[0]))
                u.append(float(row[1]))
        return make_profile(kind, (np.array(y), np.array(u), spec.get("decay_rate", 1.0)))
    return make_profile(kind, tuple(spec.get("params", [1.0])))


def verify_structure(profile, sample_grid, derivative_bound=100.0):
    """Measure the structure constants of a profile over a sample grid.

    The sample must reach Y >= 30.  Failures are recorded in the report, not
    raised.
    """
    y = sample_grid.nodes if hasattr(sample_grid, "nodes") else np.asarray(sample_grid)
    if y.max() < 30.0:
        raise InvalidParameterError("structure sample must cover [0, 30] at least")
    u, du, d2u = profile.evaluate(y)

    pos = y > 0
    ratio = u[pos] / np.minimum(1.0, y[pos])
    min_ratio = float(ratio.min())
    weighted_d2u = float(np.max((1 + y) ** 3 * np.abs(d2u)))
    weighted_deriv = float(np.max((1 + y) ** 3 * (np.abs(du) + np.abs(d2u))))
    # gauge the asymptote where the weight bound is still meaningful
    y_far = min(y.max(), 200.0)
    gap = float(abs(profile.u(np.array([y_far]))[0] - 1.0))

    passed = (
        u[0] == 0.0
        and profile.uprime0 > 0
        and bool(np.all(u[pos] > 0))
        and min_ratio > 0.0
        and weighted_deriv <= derivative_bound
        and gap <= 1e-6 + 2.0 * (1 + y_far) ** -3
    )
    return StructureReport(
        min_ratio=min_ratio,
        max_weighted_d2u=weighted_d2u,
        max_weighted_deriv=weighted_deriv,
        asymptote_gap=gap,
        wall_shear=profile.uprime0,
        positive=bool(np.all(u[pos] > 0)),
        passed=passed,
    )
