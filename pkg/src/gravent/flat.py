"""Minkowski baseline: zeroth-order propagator, local noise P0 and exchange
term X0 (closed forms and direct quadrature), dX0/dL_p, and the
large-gap / large-separation asymptotics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from gravent.quad import QuadResult, QuadSpec, eps_limit, integrate_semiinf_gauss
from gravent.specfun import faddeeva_w, faddeeva_w_prime

SQRT_PI = np.sqrt(np.pi)


@dataclass(frozen=True)
class DetectorConfig:
    """Gap ``delta_e``, Gaussian switching width ``sigma``, coupling ``alpha``."""

    delta_e: float
    sigma: float
    alpha: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("DetectorConfig.sigma must be > 0")
        if not self.delta_e >= 0:
            raise ValueError("DetectorConfig.delta_e must be >= 0")
        if not self.alpha > 0:
            raise ValueError("DetectorConfig.alpha must be > 0")

    @property
    def gap_width(self) -> float:
        """Dimensionless product delta_e * sigma."""
        return self.delta_e * self.sigma


@dataclass(frozen=True)
class FlatResult:
    p0: float
    x0: complex
    n0: float


def g0(space_sep, time_sep, eps):
    """Minkowski Feynman propagator -1 / (4 pi^2 [t^2 - r^2 - i eps])."""
    if not np.all(np.asarray(eps) > 0):
        raise ValueError("g0 needs eps > 0")
    t = np.asarray(time_sep)
    r = np.asarray(space_sep)
    return -1.0 / (4.0 * np.pi**2 * (t * t - r * r - 1j * eps))


def g0_shifted(space_sep, time_sep, eps):
    """Propagator with the time difference shifted to ``t - i eps``.

    For t > 0 this is the same time-ordered boundary condition as
    :func:`g0`, but the regulated integrals it produces are analytic in eps,
    which is what :func:`gravent.quad.eps_limit` assumes.
    """
    if not np.all(np.asarray(eps) > 0):
        raise ValueError("g0_shifted needs eps > 0")
    t = np.asarray(time_sep) - 1j * eps
    r = np.asarray(space_sep)
    return -1.0 / (4.0 * np.pi**2 * (t * t - r * r))


def p0_closed(d: DetectorConfig) -> float:
    x = d.gap_width
    return d.alpha**2 / (4.0 * np.pi) * (np.exp(-x * x) - x * SQRT_PI * erfc(x))


def _check_lp(lp):
    if not lp > 0:
        raise ValueError(f"proper separation must be > 0, got {lp}")


def _x0_prefactor(d: DetectorConfig) -> complex:
    return 1j * d.alpha**2 * d.sigma * np.exp(-d.gap_width**2) / (4.0 * SQRT_PI)


def x0_closed(d: DetectorConfig, lp: float) -> complex:
    """X0 = i alpha^2 sigma e^{-dE^2 sigma^2} w(L_p / 2 sigma) / (4 sqrt(pi) L_p)."""
    _check_lp(lp)
    z = lp / (2.0 * d.sigma)
    return complex(_x0_prefactor(d) * faddeeva_w(z) / lp)


def dx0_dlp(d: DetectorConfig, lp: float) -> complex:
    """Analytic dX0/dL_p from w'(z) = -2 z w(z) + 2i/sqrt(pi)."""
    _check_lp(lp)
    z = lp / (2.0 * d.sigma)
    c = _x0_prefactor(d)
    return complex(c * (faddeeva_w_prime(z) / (2.0 * d.sigma * lp) - faddeeva_w(z) / lp**2))


def _flat_spec(spec: QuadSpec, *scales) -> QuadSpec:
    return spec.with_eps0(1e-3 * min(scales))


def p0_numeric(d: DetectorConfig, spec: QuadSpec = QuadSpec()) -> QuadResult:
    """P0 from 2 alpha^2 sigma sqrt(pi) Re int_0^inf e^{-s^2/4sigma^2 - i dE s} G(x,x,s) ds.

    The coincidence double pole at s = 0 is regulated by s -> s - i eps and
    removed with :func:`eps_limit`.  At coincidence G = -1/(4 pi^2 (s - i eps)^2),
    so one integration by parts leaves a simple pole plus the boundary term
    -1/(4 pi^2 (-i eps)).  That term is purely imaginary and drops out of the
    real part, and only the real part of the remaining integrand is
    integrated, so the error estimate refers to P itself.
    """
    spec = _flat_spec(spec, d.sigma)
    pref = 2.0 * d.alpha**2 * d.sigma * SQRT_PI
    s2 = 4.0 * d.sigma**2

    def level(eps):
        def f(s):
            g = np.exp(-s * s / s2 - 1j * d.delta_e * s)
            dg = g * (-2.0 * s / s2 - 1j * d.delta_e)
            return np.real(-dg / (4.0 * np.pi**2 * (s - 1j * eps)))

        bps = eps * np.array([1.0, 10.0, 100.0, 1000.0])
        res = integrate_semiinf_gauss(f, d.sigma, spec.level_spec(), breakpoints=bps)
        return res.scaled(pref)

    return eps_limit(level, spec)


def x0_numeric(d: DetectorConfig, lp: float, spec: QuadSpec = QuadSpec()) -> QuadResult:
    """X0 from -alpha^2 e^{-sigma^2 dE^2} sigma sqrt(pi) int_0^inf e^{-s^2/4sigma^2} [G12 + G21] ds."""
    _check_lp(lp)
    spec = _flat_spec(spec, d.sigma, lp)
    pref = -d.alpha**2 * np.exp(-d.gap_width**2) * d.sigma * SQRT_PI
    s2 = 4.0 * d.sigma**2

    def level(eps):
        def f(s):
            # static detectors: G(x1, x2, s) = G(x2, x1, s)
            return 2.0 * np.exp(-s * s / s2) * g0(lp, s, eps)

        res = integrate_semiinf_gauss(f, d.sigma, spec.level_spec(), breakpoints=[lp])
        return res.scaled(pref)

    return eps_limit(level, spec)


@dataclass(frozen=True)
class Asymptotics:
    p_asym: float
    x_asym: float
    delta_e_opt: float
    n_opt: float


def asymptotics(d: DetectorConfig, lp: float) -> Asymptotics:
    """Leading forms for dE*sigma >> 1 and L_p/sigma >> 1 (not enforced)."""
    a2, s, x = d.alpha**2, d.sigma, d.gap_width
    g = np.exp(-x * x)
    p = a2 * g / (8.0 * np.pi * x * x) if x > 0 else np.inf
    return Asymptotics(
        p_asym=p,
        x_asym=a2 * s * s * g / (2.0 * np.pi * lp * lp),
        delta_e_opt=lp / (2.0 * s * s) * (1.0 + 2.0 * s * s / (lp * lp)),
        n_opt=4.0 * a2 * s**4 * np.exp(-lp * lp / (4.0 * s * s)) / (np.pi * lp**4),
    )
