import math

import numpy as np
import pytest

from osstab.airy import (
    AI0,
    AI0_PRIME,
    AiryMethod,
    a0,
    a0_ratios,
    airy_ai,
    fast_mode,
)
from osstab.exceptions import EnvelopeExceededError, ResolutionInsufficientError
from osstab.grid import make_grid

import oracles


def test_airy_at_zero_closed_forms():
    # closed forms through the standard library's Gamma (independent path)
    c1 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
    c2 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))
    ev = airy_ai(0.0)
    assert abs(ev.ai - c1) <= 1e-14
    assert abs(ev.ai_prime - c2) <= 1e-14
    assert abs(AI0 - 0.3550280539) <= 1e-9
    assert abs(AI0_PRIME + 0.2588194038) <= 1e-9


def test_airy_against_series_oracle():
    for z in (1.0, 2.5 + 0.5j, -1.0 + 0.2j, 5.0):
        ev = airy_ai(z)
        ref = oracles.maclaurin_ai(z)
        assert abs(ev.ai - ref) <= 1e-12 * abs(ref)
    assert abs(airy_ai(1.0).ai - 0.1352924163) <= 1e-9


def test_airy_methods_and_envelope():
    assert airy_ai(2.0).method is AiryMethod.MACLAURIN
    assert airy_ai(12.0).method is AiryMethod.ASYMPTOTIC
    with pytest.raises(EnvelopeExceededError):
        airy_ai(45.0)
    with pytest.raises(EnvelopeExceededError):
        airy_ai(20.0 * np.exp(1j * (2 * np.pi / 3)))


def test_airy_ode_residual_along_ray():
    # numerical second derivative along a ray against z * Ai(z)
    h = 1e-3
    direction = np.exp(1j * np.pi / 6)
    for t in (1.0, 3.0, 6.5, 10.0):
        z = direction * t
        vals = [airy_ai(z + direction * s).ai for s in (-h, 0.0, h)]
        d2 = (vals[0] - 2 * vals[1] + vals[2]) / (h * h * direction**2)
        assert abs(d2 - z * vals[1]) <= 1e-5 * max(abs(z * vals[1]), 1e-12)


def test_a0_value_and_envelope():
    assert abs(a0(0.0) - 1.0 / 3.0) <= 1e-8
    with pytest.raises(EnvelopeExceededError):
        a0(50.0)
    with pytest.raises(EnvelopeExceededError):
        a0_ratios(1.0 + 1.0j)  # above the Im z strip


def test_a0_ratio_bounds():
    for z in (0.0, 1.0, 2.0 + 0.05j):
        r1, _ = a0_ratios(z)
        assert r1.real <= -1.0 / 3.0
    # 100-point sample with Im z <= 0.1
    rng = np.random.default_rng(7)
    zs = rng.uniform(0, 12, 100) + 1j * rng.uniform(-1.5, 0.1, 100)
    worst_c2 = 0.0
    for z in zs:
        r1, r2 = a0_ratios(complex(z))
        assert r1.real <= -1.0 / 3.0
        worst_c2 = max(worst_c2, abs(r2) / (1 + abs(z)))
    assert worst_c2 <= 2.0  # measured constant of the curvature ratio bound


def test_sqrt_kernel_inequality(rng):
    # int_0^t |z - s|^{1/2} ds >= (1/9) |z|^{1/2} t on random (z, t)
    s_nodes, s_weights = np.polynomial.legendre.leggauss(64)
    for _ in range(1000):
        z = complex(rng.normal() * 10, rng.normal() * 10)
        t = rng.uniform(1e-3, 20.0)
        s = 0.5 * t * (s_nodes + 1.0)
        integral = 0.5 * t * np.dot(s_weights, np.sqrt(np.abs(z - s)))
        assert integral >= (1.0 / 9.0) * np.sqrt(abs(z)) * t


def test_fast_mode_residual_and_wall_ratio(tanh_profile, grid192):
    fm = fast_mode(tanh_profile, 1.0, 1e-3, grid192)
    assert fm.residual_rel <= 1e-6
    assert fm.eta.imag < 0
    for eps in (1e-3, 1e-4):
        fm = fast_mode(tanh_profile, 1.0, eps, grid192)
        assert abs(fm.boundary["w_a_prime0"] - 1.0) <= 5.0 * eps ** (2 / 3)


def test_fast_mode_boundary_leading_terms(tanh_profile, grid192):
    gaps_f0 = []
    gaps_df0 = []
    for eps in (1e-2, 1e-3, 1e-4):
        fm = fast_mode(tanh_profile, 1.0, eps, grid192)
        b = fm.boundary
        gaps_f0.append(b["phi_af0_gap"] / abs(b["phi_af0_leading"]))
        gaps_df0.append(b["dphi_af0_gap"] / abs(b["dphi_af0_leading"]))
    assert gaps_f0[0] > gaps_f0[1] > gaps_f0[2]
    assert gaps_df0[0] > gaps_df0[1] > gaps_df0[2]
    assert gaps_f0[-1] <= 5e-3 and gaps_df0[-1] <= 5e-3


def test_fast_mode_norm_scalings(tanh_profile, grid192):
    eps_list = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    wn, pn, dp0 = [], [], []
    for eps in eps_list:
        fm = fast_mode(tanh_profile, 1.0, eps, grid192)
        wn.append(grid192.norm(fm.w_a.values))
        pn.append(grid192.pair_norm(fm.phi_a.values, 1.0))
        dp0.append(abs(fm.boundary["dphi_a0"]))
    logs = np.log(eps_list)
    assert abs(np.polyfit(logs, np.log(wn), 1)[0] - 0.5) <= 0.05
    assert abs(np.polyfit(logs, np.log(pn), 1)[0] - 5.0 / 6.0) <= 0.05
    assert abs(np.polyfit(logs, np.log(dp0), 1)[0] - 2.0 / 3.0) <= 0.05


def test_fast_mode_exponential_decay(tanh_profile, grid192):
    # |w_a| decays at least like e^{-c kappa Y (1 + |kappa eta|^{1/2})}
    fm = fast_mode(tanh_profile, 1.0, 1e-3, grid192)
    y = grid192.nodes
    w = np.abs(fm.w_a.values)
    sel = (w > 1e-12 * w.max()) & (y > 0.2 / fm.kappa)
    slope = np.polyfit(y[sel], np.log(w[sel]), 1)[0]
    rate = fm.kappa * (1 + abs(fm.kappa * fm.eta) ** 0.5)
    c = -slope / rate
    assert c > 0.3


def test_fast_mode_validity_checks(tanh_profile, grid192):
    with pytest.raises(EnvelopeExceededError):
        fast_mode(tanh_profile, 4.0, 1e-1, grid192)  # eps |alpha|^3 too large
    coarse = make_grid(24, 4.0)
    with pytest.raises(ResolutionInsufficientError):
        fast_mode(tanh_profile, 1.0, 1e-5, coarse)
