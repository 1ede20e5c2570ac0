import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIG1_LPS, quiet_star
from gravent.flat import DetectorConfig, x0_closed
from gravent.gcorr import (
    KernelPoint,
    coincident_bracket,
    coincident_bracket_psi,
    delta_p1,
    delta_p1_contour,
    delta_x1,
    delta_x1_prolate,
    g1_coincident,
    g1_kernel,
    radial_coincident,
    saddle_shift,
    tilde_p1,
    tilde_x1,
    v2_of,
    v_antiderivative,
    v_antiderivative_psi,
    x1g_brace,
    x1g_brace_direct,
)
from gravent.metric import Geometry, StarConfig, hbar00
from gravent.quad import QuadSpec, eps_limit, integrate_finite, integrate_semiinf_gauss

mp = pytest.importorskip("mpmath")
mp.mp.dps = 30

FIG1 = DetectorConfig(1.0, 0.00674)
STAR = StarConfig(0.001)


# ---------------------------------------------------------------- kernel

def test_kernel_point_validation():
    with pytest.raises(ValueError):
        KernelPoint(-1.0, 1.0, 0.0, 1e-3)
    with pytest.raises(ValueError):
        KernelPoint(1.0, 1.0, 0.0, 0.0)


def test_kernel_symmetry_random_points():
    rng = np.random.default_rng(2024)
    zx, zy = rng.uniform(0, 5, 1000), rng.uniform(0, 5, 1000)
    s = rng.uniform(-10, 10, 1000)
    a, b = g1_kernel(zx, zy, s, 1e-3), g1_kernel(zy, zx, s, 1e-3)
    assert np.max(np.abs(a - b) / np.abs(a)) <= 4 * np.finfo(float).eps


def test_kernel_accepts_point():
    p = KernelPoint(0.3, 0.7, 1.1, 1e-4)
    assert g1_kernel(p) == g1_kernel(0.3, 0.7, 1.1, 1e-4)


def test_kernel_coincident_equal_distance_limit():
    Z = 0.8
    res = eps_limit(lambda e: complex(g1_kernel(Z, Z, 0.0, e)), QuadSpec(eps0=1e-4))
    assert res.value.real == pytest.approx(-1.0 / (8 * Z**5), rel=1e-8)
    assert abs(res.value.imag) < 1e-8 * abs(res.value)


def test_kernel_large_s_decay():
    s = np.geomspace(1e2, 1e4, 20) * 1.5
    k = np.abs(g1_kernel(0.5, 1.0, s, 1e-12))
    slope = np.polyfit(np.log(s), np.log(k), 1)[0]
    assert slope == pytest.approx(-4.0, abs=0.05)
    # leading term 3 s^2 (Zx + Zy) / (Zx Zy s^6)
    assert k[-1] == pytest.approx(3 * 1.5 / (0.5 * s[-1] ** 4), rel=1e-3)


# ------------------------------------------------- v-antiderivatives

def mp_F(v, s):
    # the two terms cancel to (s/v)^3 at large v, hence the generous precision
    with mp.workdps(60):
        v, s = mp.mpf(v), mp.mpc(s)
        return +((mp.log(2 * v + s) - mp.log(2 * v - s)) / (4 * s**3)
                 - 2 * v * (2 * v**2 - s**2) / (s**2 * (4 * v**2 - s**2) ** 2))


@pytest.mark.parametrize("shat", [0.3 - 0.01j, 1e-5 - 1e-5j, -1e-6j, 2.0 - 1e-3j])
def test_v_antiderivative_against_mpmath(shat):
    for v in (1e-7, 2e-5, 0.1, 1.0, 30.0):
        got = complex(v_antiderivative(v, shat))
        want = complex(mp_F(v, shat))
        assert abs(got - want) <= 1e-12 * abs(want)


def test_v_antiderivative_derivatives():
    shat = 0.4 - 0.02j
    for v in (0.05, 0.3, 2.0):
        dv = complex(mp.diff(lambda x: mp_F(x, shat), v))
        assert dv == pytest.approx((3 * shat**2 + 4 * v * v) / (shat**2 - 4 * v * v) ** 3, rel=1e-9)
        h = 1e-6
        d_psi_dv = (v_antiderivative_psi(v + h, shat) - v_antiderivative_psi(v - h, shat)) / (2 * h)
        assert complex(d_psi_dv) == pytest.approx(shat / (shat**2 - 4 * v * v) ** 2, rel=1e-7)
        d_psi_ds = (v_antiderivative_psi(v, shat + h) - v_antiderivative_psi(v, shat - h)) / (2 * h)
        assert complex(d_psi_ds) == pytest.approx(-complex(v_antiderivative(v, shat)), rel=1e-7)


def test_series_switch_is_continuous():
    shat = 0.5 - 0.01j
    v = abs(shat) / (2 * 0.25)
    a = v_antiderivative(v * (1 - 1e-12), shat)
    b = v_antiderivative(v * (1 + 1e-12), shat)
    assert abs(a - b) <= 1e-10 * abs(a)
    a = v_antiderivative_psi(v * (1 - 1e-12), shat)
    b = v_antiderivative_psi(v * (1 + 1e-12), shat)
    assert abs(a - b) <= 1e-10 * abs(a)


def test_bracket_is_minus_shat_derivative_of_psi_bracket():
    h = 1e-6
    for shat in (0.3 - 0.01j, 2.5 - 0.02j):
        fd = (coincident_bracket_psi(shat + h, 2.0, 1.5) - coincident_bracket_psi(shat - h, 2.0, 1.5)) / (2 * h)
        assert complex(-fd) == pytest.approx(complex(coincident_bracket(shat, 2.0, 1.5)), rel=1e-7)


def test_radial_integral_double_pole():
    # H(shat) -> -r hbar00(r) / (4 shat^2) as shat -> 0
    unit = quiet_star(1.0)
    for r in (0.5, 2.0):
        shat = -1e-6j
        h, _, ok, _ = radial_coincident(r, [shat], unit, QuadSpec(rel_tol=1e-11))
        assert ok[0]
        assert (h[0] * shat**2).real == pytest.approx(-r * hbar00(r, unit) / 4, rel=1e-8)


# ---------------------------------------------------- coincident G1

@pytest.mark.parametrize("r", [0.5, 2.0, 5.0])
@pytest.mark.parametrize("s", [0.1, 0.5, 3.0])
def test_g1_coincident_analytic_vs_numeric_v(r, s):
    eps = 1e-3
    a = g1_coincident(r, s, STAR, eps)
    b = g1_coincident(r, s, STAR, eps, numeric_v=True)
    assert abs(a - b) <= 1e-6 * abs(a)


def test_g1_coincident_zero_mass_and_linearity():
    assert g1_coincident(2.0, 0.5, StarConfig(0.0), 1e-3) == 0
    a = g1_coincident(2.0, 0.5, StarConfig(0.0005), 1e-3)
    b = g1_coincident(2.0, 0.5, StarConfig(0.001), 1e-3)
    assert abs(b - 2 * a) <= 1e-12 * abs(b)
    with pytest.raises(ValueError):
        g1_coincident(0.0, 0.5, STAR, 1e-3)


# ------------------------------------------------- tilde corrections

def test_tilde_p1_examples():
    d0 = DetectorConfig(0.0, 1.0)
    assert tilde_p1(2.0, d0, StarConfig(0.0)) == 0.0
    assert tilde_p1(2.0, d0, STAR) == pytest.approx(-0.001 / (4 * math.pi), rel=1e-14)
    assert tilde_p1(2.0, d0, STAR) == pytest.approx(-7.958e-5, rel=1e-4)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 30.0), st.floats(0.0, 4.0), st.floats(1e-6, 1e-3))
def test_tilde_p1_negative(r, gap, m):
    assert tilde_p1(r, DetectorConfig(gap, 1.0), StarConfig(m)) < 0


def test_tilde_x1_product_rule():
    geom = Geometry(2.0, 0.0095)
    lam = 1e-5

    def scaled(l):
        return l * x0_closed(FIG1, l * geom.lp)

    fd = (scaled(1 + lam) - scaled(1 - lam)) / (2 * lam)
    want = -0.5 * hbar00(2.0, STAR) * fd
    assert abs(tilde_x1(geom, FIG1, STAR) - want) <= 1e-6 * abs(want)
    assert tilde_x1(geom, FIG1, StarConfig(0.0)) == 0


def test_tilde_linearity():
    geom = Geometry(2.0, 0.0095)
    a, b = StarConfig(0.0005), StarConfig(0.001)
    assert tilde_p1(2.0, FIG1, b) == pytest.approx(2 * tilde_p1(2.0, FIG1, a), rel=1e-12)
    assert abs(tilde_x1(geom, FIG1, b) - 2 * tilde_x1(geom, FIG1, a)) <= 1e-12 * abs(tilde_x1(geom, FIG1, b))


# --------------------------------------------------------- delta P

def test_delta_p1_zero_mass():
    assert delta_p1(2.0, FIG1, StarConfig(0.0)).value == 0.0
    with pytest.raises(ValueError):
        delta_p1(0.0, FIG1, STAR)


def test_delta_p1_matches_contour_route():
    a = delta_p1(2.0, FIG1, STAR)
    b = delta_p1_contour(2.0, FIG1, STAR)
    assert a.converged and b.converged
    assert a.value == pytest.approx(b.value, rel=1e-8)


def test_delta_p1_inside_star_matches_contour_route():
    d = DetectorConfig(1.0, 0.05)
    a = delta_p1(0.6, d, STAR)
    b = delta_p1_contour(0.6, d, STAR)
    assert a.converged
    assert a.value == pytest.approx(b.value, rel=1e-7)


def test_delta_p1_exactly_linear():
    a = delta_p1(2.0, FIG1, StarConfig(0.0005))
    b = delta_p1(2.0, FIG1, StarConfig(0.001))
    assert b.value == pytest.approx(2 * a.value, rel=1e-10)


def test_delta_p1_eps_extrapolation_cauchy():
    res = delta_p1(2.0, FIG1, STAR)
    inc = res.increments
    assert all(b < a for a, b in zip(inc, inc[1:]))
    assert res.err_estimate <= QuadSpec().tol(res.value)


@pytest.mark.xfail(strict=True, reason="the propagator correction slightly outweighs the "
                   "clock-rate correction, so the net noise change is positive; see ledger")
def test_total_noise_correction_sign_fig1():
    # the paper expects the local noise to decrease; see the decisions ledger
    total = tilde_p1(2.0, FIG1, STAR) + delta_p1(2.0, FIG1, STAR).value
    assert total < 0


# ---------------------------------------------------- delta X

def test_v2_examples():
    geom = Geometry(2.0, 0.01)
    for R in (0.5, 1.7, 2.5):
        assert v2_of(abs(2.0 - R), R, geom) == pytest.approx(abs(2.01 - R), abs=1e-12)
        assert v2_of(2.0 + R, R, geom) == pytest.approx(2.01 + R, rel=1e-12)
    tiny = Geometry(2.0, 1e-12)
    assert v2_of(1.3, 1.5, tiny) == pytest.approx(1.3, rel=1e-9)
    with pytest.raises(ValueError):
        v2_of(0.0, 3.0, geom)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.0, 1.0), st.floats(1e-3, 0.5))
def test_v2_is_distance(R, frac, lp):
    # v2 is the distance from the R-sphere point at distance v1 from detector 1
    r1 = 2.0
    geom = Geometry(r1, lp)
    v1 = abs(r1 - R) + frac * (r1 + R - abs(r1 - R))
    cos_t = (r1 * r1 + R * R - v1 * v1) / (2 * r1 * R)
    cos_t = min(1.0, max(-1.0, cos_t))
    want = math.sqrt(max(0.0, (r1 + lp) ** 2 + R * R - 2 * (r1 + lp) * R * cos_t))
    assert v2_of(v1, R, geom) == pytest.approx(want, rel=1e-7, abs=1e-7)


def test_x1g_brace_forms_agree():
    sigma = 0.2
    u = np.linspace(0.0, 2.0, 41)
    a, b = x1g_brace(u, sigma), x1g_brace_direct(u, sigma)
    assert np.allclose(a, b, rtol=1e-9, atol=1e-9 * np.max(np.abs(b)))
    # far from the switching width the real part falls as sqrt(pi) / (8 sigma^2 z^3)
    far = x1g_brace(np.array([50.0]), sigma)[0]
    z = 50.0 / (2 * sigma)
    # the next order is O(1/z^2) ~ 1e-4 here
    assert far.real == pytest.approx(math.sqrt(math.pi) / (8 * sigma**2 * z**3), rel=1e-3)


@pytest.mark.parametrize("u", [0.05, 0.3, 1.2])
def test_x1g_brace_against_numeric_s_integration(u):
    # the brace is minus int_0^inf e^{-s^2/4sigma^2} u (3 s^2 + u^2) / (s^2 - (u + i0)^2)^3 ds;
    # the pole sits above the axis, so the contour dips below it on [0, 2u]
    sigma = 0.2
    depth = 0.5 * u

    def f(s):
        return np.exp(-s * s / (4 * sigma**2)) * u * (3 * s * s + u * u) / (s * s - u * u) ** 3

    def bent(t):
        k = math.pi / (2 * u)
        s = t - 1j * depth * np.sin(k * t)
        ds = 1 - 1j * depth * k * np.cos(k * t)
        return f(s) * ds

    spec = QuadSpec(rel_tol=1e-11, abs_tol=0.0)
    near = integrate_finite(bent, 0.0, 2 * u, (), spec)
    far = integrate_semiinf_gauss(lambda s: np.where(s > 2 * u, f(np.maximum(s, 2 * u)), 0.0),
                                  sigma, spec, [2 * u])
    total = near.value + far.value
    assert complex(x1g_brace(u, sigma)) == pytest.approx(-total, rel=1e-8)


def test_delta_x1_zero_mass():
    assert delta_x1(Geometry(2.0, 0.0095), FIG1, StarConfig(0.0)).value == 0


@pytest.mark.parametrize("lp", FIG1_LPS)
def test_delta_x1_matches_prolate_route(lp):
    geom = Geometry(2.0, lp)
    a = delta_x1(geom, FIG1, STAR)
    b = delta_x1_prolate(geom, FIG1, STAR)
    assert a.converged
    assert abs(a.value - b.value) <= 1e-7 * abs(b.value)


def test_delta_x1_exactly_linear():
    geom = Geometry(2.0, 0.0095)
    a = delta_x1(geom, FIG1, StarConfig(0.0005))
    b = delta_x1(geom, FIG1, StarConfig(0.001))
    assert abs(b.value - 2 * a.value) <= 1e-10 * abs(b.value)


def test_delta_x1_eps_extrapolation_cauchy():
    # the increments reach rounding level after one step; below tol they
    # only have to stay there
    res = delta_x1(Geometry(2.0, 0.0095), FIG1, STAR)
    tol = QuadSpec().tol(res.value)
    inc = res.increments
    assert res.converged
    assert all(b < a or b <= tol for a, b in zip(inc, inc[1:]))


def test_exchange_magnitude_increases_fig1():
    geom = Geometry(2.0, 0.0095)
    x0 = x0_closed(FIG1, geom.lp)
    x = x0 + tilde_x1(geom, FIG1, STAR) + delta_x1(geom, FIG1, STAR).value
    assert abs(x) > abs(x0)


# ----------------------------------------- uniform-potential limit

@pytest.mark.parametrize("radius", [20.0, 100.0])
def test_uniform_potential_cancellation(radius):
    # deep inside a very large star the potential is nearly constant, and a
    # constant potential is a pure rescaling of t and x: the propagator and
    # clock-rate corrections must cancel up to gradient terms O((sigma/R_o)^2)
    d = DetectorConfig(1.0, 1.0)
    star = quiet_star(1.0, radius)
    geom = Geometry(1.0, 2.0)
    tp, dp = tilde_p1(1.0, d, star), delta_p1(1.0, d, star).value
    tx, dx = tilde_x1(geom, d, star), delta_x1_prolate(geom, d, star).value
    bound = 4.0 / radius**1.5
    assert abs(tp + dp) <= bound * abs(tp)
    assert abs(tx + dx) <= bound * abs(tx)


# ------------------------------------------------ far-field decay

def _totals(r1, lp=0.0095):
    geom = Geometry(r1, lp)
    dp = tilde_p1(r1, FIG1, STAR) + delta_p1(r1, FIG1, STAR).value
    x0 = x0_closed(FIG1, lp)
    dx = abs(x0 + tilde_x1(geom, FIG1, STAR) + delta_x1(geom, FIG1, STAR).value) - abs(x0)
    return abs(dp), abs(dx)


def test_corrections_decay_with_distance():
    near, far = _totals(2.0), _totals(8.0)
    assert far[0] < near[0] and far[1] < near[1]


@pytest.mark.xfail(strict=True, reason="net corrections fall off faster than R_o/r1 "
                   "(gradient effect after the uniform-potential cancellation); see ledger")
def test_far_field_loglog_slope():
    a, b = _totals(4.0), _totals(16.0)
    for x, y in zip(a, b):
        slope = math.log(y / x) / math.log(4.0)
        assert -1.5 <= slope <= -0.6


@pytest.mark.parametrize("sigma, gap", [(0.3, 1.2), (0.2, 1.0)])
def test_delta_p1_routes_agree_near_switch(sigma, gap):
    d = DetectorConfig(gap / sigma, sigma)
    a = delta_p1(2.0, d, STAR, route="eps")
    b = delta_p1(2.0, d, STAR, route="contour")
    assert a.converged and b.converged
    assert a.value == pytest.approx(b.value, rel=1e-8)


def test_delta_p1_auto_route_at_large_gap():
    # dE sigma = 3: the eps route needs ~1e9 evaluations here, the saddle
    # contour a few 1e4
    d = DetectorConfig(30.0, 0.1)
    assert saddle_shift(d) == pytest.approx(0.6)
    res = delta_p1(1.0, d, STAR)
    assert res.converged and res.levels == ()
    assert res.evaluations < 1_000_000
    # the shift is free: any depth below the real axis gives the same value
    other = delta_p1_contour(1.0, d, STAR, shift=0.1)
    assert res.value == pytest.approx(other.value, rel=1e-9)


def test_delta_p1_rejects_unknown_route():
    with pytest.raises(ValueError, match="route"):
        delta_p1(2.0, FIG1, STAR, route="fast")
