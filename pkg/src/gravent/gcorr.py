"""First-order gravitational corrections to the local noise and exchange terms.

Two kinds of correction are kept apart everywhere:

* tilde corrections: time dilation of the detectors' clocks, evaluated
  exactly from the flat closed forms;
* delta corrections: the change of the Feynman propagator itself,
  G1(x, y) = (1 / 8 pi^3) int d^3z hbar00(z) kernel(|x - z|, |y - z|, s),
  integrated numerically.

Every correction is linear in the star mass.  The integrals are therefore
done once for a unit-mass star and multiplied by M, which makes the
M-linearity exact to rounding and lets M = 0 short-circuit to zero.

Lengths are in units of the star radius; time differences are shifted to
``s - i eps`` as in the noise-term integrand, and ``eps -> 0+`` is taken by
:func:`gravent.quad.eps_limit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from gravent.flat import DetectorConfig, SQRT_PI, dx0_dlp, p0_closed, x0_closed
from gravent.metric import Geometry, StarConfig, hbar00, r_hbar00
from gravent.quad import (
    QuadResult,
    QuadSpec,
    eps_limit,
    gauss_cutoff,
    integrate_batch,
    integrate_finite,
    integrate_semiinf_gauss,
)
from gravent.specfun import dawson_xderiv, faddeeva_w

# |s / 2v| below which the series form of the v-antiderivative is used
_SERIES_SWITCH = 0.25
_SERIES_TERMS = 40
_SERIES_COEF = np.array([k + 1.0 / (2 * k + 3) for k in range(1, _SERIES_TERMS + 1)])

# R-integrals are cut at R_MAX_FACTOR * (r + R_o); the remainder is added in
# closed form from the exterior profile R hbar00 = 4M.
R_MAX_FACTOR = 50.0

# accuracy demanded of the numeric-v cross-check path of g1_coincident
CROSSCHECK_TOL = 1e-7
# delta_p1 leaves the eps route above this dE sigma
CONTOUR_GAP = 1.0


@dataclass(frozen=True)
class KernelPoint:
    z_x: float
    z_y: float
    s: float
    eps: float

    def __post_init__(self):
        if self.z_x < 0 or self.z_y < 0:
            raise ValueError("KernelPoint distances must be >= 0")
        if not self.eps > 0:
            raise ValueError("KernelPoint.eps must be > 0")


@dataclass
class CorrectionBreakdown:
    """First-order parts of P1, P2 and X, plus the quadrature records."""

    tilde_p: tuple = (0.0, 0.0)
    delta_p: tuple = (0.0, 0.0)
    tilde_x: complex = 0j
    delta_x: complex = 0j
    eps_diagnostics: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.eps_diagnostics.values())


# ---------------------------------------------------------------------------
# kernels

def g1_kernel(z_x, z_y=None, s=None, eps=None):
    """Bracket of the residue-integrated first-order propagator.

    [3(s^2 + Zx Zy)(Zx + Zy) + Zx^3 + Zy^3] / [(Zx Zy + i eps)(s^2 - (Zx + Zy + i eps)^2)^3]

    The 1/(8 pi^3) hbar00 d^3z weighting is left to the caller.  Accepts a
    :class:`KernelPoint` as the sole argument as well.
    """
    if isinstance(z_x, KernelPoint):
        z_x, z_y, s, eps = z_x.z_x, z_x.z_y, z_x.s, z_x.eps
    zx, zy, s = np.asarray(z_x), np.asarray(z_y), np.asarray(s)
    num = 3.0 * (s * s + zx * zy) * (zx + zy) + zx**3 + zy**3
    den = (zx * zy + 1j * eps) * (s * s - (zx + zy + 1j * eps) ** 2) ** 3
    return num / den


def v_antiderivative(v, shat):
    """F(v) with dF/dv = (3 shat^2 + 4 v^2) / (shat^2 - 4 v^2)^3.

    F = [ln(2v + shat) - ln(2v - shat)] / (4 shat^3)
        - 2v (2v^2 - shat^2) / (shat^2 (4v^2 - shat^2)^2)

    For |shat/2v| < 0.25 the two terms cancel to O(v^-3); there the
    equivalent series F = phi(x) / (16 v^3), x = shat/2v,
    phi = 1/3 + sum_k (k + 1/(2k+3)) x^(2k), is used.  ``shat`` must have a
    negative imaginary part (or be real and the caller accept the pole).
    """
    v = np.asarray(v, dtype=float)
    shat = np.asarray(shat, dtype=complex)
    v, shat = np.broadcast_arrays(v, shat)
    out = np.empty(v.shape, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = shat / (2.0 * v)
    small = (v > 0) & (np.abs(x) < _SERIES_SWITCH)
    if np.any(small):
        xs2 = x[small] ** 2
        acc = np.zeros_like(xs2)
        for c in _SERIES_COEF[::-1]:
            acc = (acc + c) * xs2
        out[small] = (1.0 / 3.0 + acc) / (16.0 * v[small] ** 3)
    big = ~small
    if np.any(big):
        vb, sb = v[big], shat[big]
        logs = np.log(2.0 * vb + sb) - np.log(2.0 * vb - sb)
        out[big] = logs / (4.0 * sb**3) - 2.0 * vb * (2.0 * vb * vb - sb * sb) / (
            sb * sb * (4.0 * vb * vb - sb * sb) ** 2)
    return out


_PSI_COEF = np.array([(k + 1.0) / (2 * k + 3) for k in range(1, _SERIES_TERMS + 1)])


def v_antiderivative_psi(v, shat):
    """Psi(v) with dPsi/dv = shat / (shat^2 - 4v^2)^2 and dPsi/dshat = -F(v).

    Psi = [4 shat v - (shat^2 - 4v^2) (ln(v - shat/2) - ln(v + shat/2))]
          / (8 shat^2 (shat^2 - 4v^2))

    Large v uses the series Psi = -shat / (16 v^3) sum_k (k+1) x^(2k) / (2k+3).
    """
    v = np.asarray(v, dtype=float)
    shat = np.asarray(shat, dtype=complex)
    v, shat = np.broadcast_arrays(v, shat)
    out = np.empty(v.shape, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = shat / (2.0 * v)
    small = (v > 0) & (np.abs(x) < _SERIES_SWITCH)
    if np.any(small):
        xs2 = x[small] ** 2
        acc = np.zeros_like(xs2)
        for c in _PSI_COEF[::-1]:
            acc = (acc + c) * xs2
        out[small] = -shat[small] * (1.0 / 3.0 + acc) / (16.0 * v[small] ** 3)
    big = ~small
    if np.any(big):
        vb, sb = v[big], shat[big]
        q = sb * sb - 4.0 * vb * vb
        logs = np.log(vb - 0.5 * sb) - np.log(vb + 0.5 * sb)
        out[big] = (4.0 * sb * vb - q * logs) / (8.0 * sb * sb * q)
    return out


def coincident_bracket_psi(shat, r, R):
    """int_{|r-R|}^{r+R} shat / (shat^2 - 4v^2)^2 dv; minus its shat-derivative
    is :func:`coincident_bracket`."""
    R = np.asarray(R, dtype=float)
    return v_antiderivative_psi(r + R, shat) - v_antiderivative_psi(np.abs(r - R), shat)


def coincident_bracket(shat, r, R):
    """int_{|r-R|}^{r+R} (3 shat^2 + 4v^2) / (shat^2 - 4v^2)^3 dv in closed form."""
    R = np.asarray(R, dtype=float)
    return v_antiderivative(r + R, shat) - v_antiderivative(np.abs(r - R), shat)


def _radial_breakpoints(r, shat, star: StarConfig, extra=()):
    s_re, width = float(np.real(shat)), abs(float(np.imag(shat)))
    pts = [star.radius, r, *extra]
    for c in (r - s_re / 2.0, r + s_re / 2.0, s_re / 2.0 - r):
        if c > 0:
            pts.append(c)
            # geometric ladder out to O(r): the 1/v^3 flanks are too steep
            # for a single panel to sample reliably
            k = 1.0
            while k * width < 2.0 * (r + star.radius):
                pts.extend((c - k * width, c + k * width))
                k *= 8.0
    return [p for p in pts if p > 0]


def _coincident_tail(r, r_max, mass):
    """int_{r_max}^inf 4M [F(R + r) - F(R - r)] dR at leading order in 1/R."""
    return -(mass / 24.0) * (1.0 / (r_max - r) ** 2 - 1.0 / (r_max + r) ** 2)


def radial_coincident(r, shat, star: StarConfig, spec: QuadSpec, antiderivative=False):
    """int_0^inf R hbar00(R) bracket(shat_k; r, R) dR for every shat_k.

    Returns ``(values, errors, converged, evaluations)`` arrays as
    :func:`gravent.quad.integrate_batch` does; the closed-form exterior tail
    beyond the cut-off is included in the values.  With ``antiderivative``
    the shat-antiderivative bracket (:func:`coincident_bracket_psi`) is
    integrated instead, whose shat-derivative is minus the plain result.
    """
    shat = np.atleast_1d(np.asarray(shat, dtype=complex))
    r_max = R_MAX_FACTOR * (r + star.radius + np.abs(shat))
    bps = [_radial_breakpoints(r, z, star) for z in shat]
    bracket = coincident_bracket_psi if antiderivative else coincident_bracket

    def f(R, k):
        return r_hbar00(R, star) * bracket(shat[k], r, R)

    vals, errs, ok, nev = integrate_batch(f, np.zeros(shat.size), r_max, bps, spec)
    tail = _coincident_tail(r, r_max, star.mass)
    if antiderivative:
        tail = -shat * tail
    return vals + tail, errs + np.abs(tail) * (np.abs(shat) / (r_max - r)) ** 2, ok, nev


def g1_coincident(r: float, s: float, star: StarConfig, eps: float,
                  spec: QuadSpec = QuadSpec(), numeric_v: bool = False) -> complex:
    """G1(x, x, s) for a point at radius r, with s shifted to s - i eps.

    (1 / 2 r pi^2) int_0^inf dR R hbar00(R) int_{|r-R|}^{r+R} dv
        (3 s^2 + 4 v^2) / (s^2 - 4 v^2)^3

    The v integral is done in closed form unless ``numeric_v`` is set, in
    which case it is integrated by quadrature (cross-check path).
    """
    if not r > 0:
        raise ValueError("g1_coincident needs r > 0")
    if star.mass == 0:
        return 0j
    shat = complex(s, -eps)
    if not numeric_v:
        vals, errs, ok, _ = radial_coincident(r, [shat], star, spec)
        value, converged = vals[0], bool(ok[0])
    else:
        ladder = eps * 8.0 ** np.arange(0, 1 + int(np.log(4.0 * (r + star.radius) / eps) / np.log(8.0)))
        bps_v = sorted({abs(s) / 2.0, *(abs(s) / 2.0 + ladder), *(abs(s) / 2.0 - ladder)})

        def inner(Rs):
            def kern(v, k):
                return (3.0 * shat**2 + 4.0 * v * v) / (shat**2 - 4.0 * v * v) ** 3

            vals, errs, _, _ = integrate_batch(kern, np.abs(r - Rs), r + Rs,
                                               [bps_v] * Rs.size, spec)
            # v ranges ending next to the triple pole at s/2 cancel ~1/eps^2
            # of magnitude, so rel_tol can sit below the roundoff floor there;
            # the cross-check only needs CROSSCHECK_TOL
            if np.any(errs > CROSSCHECK_TOL * np.abs(vals) + spec.abs_tol):
                raise ArithmeticError("g1_coincident: inner v quadrature did not converge")
            return r_hbar00(Rs, star) * vals

        r_max = R_MAX_FACTOR * (r + star.radius + abs(shat))
        res = integrate_finite(inner, 0.0, r_max, _radial_breakpoints(r, shat, star), spec)
        value = res.value + _coincident_tail(r, r_max, star.mass)
        converged = res.converged
    if not converged:
        raise ArithmeticError(f"g1_coincident quadrature did not converge (r={r}, s={s})")
    return complex(value) / (2.0 * r * math.pi**2)


# ---------------------------------------------------------------------------
# time-dilation corrections

def tilde_p1(r_j: float, d: DetectorConfig, star: StarConfig) -> float:
    """-hbar00(r_j)/2 * P0."""
    if not r_j > 0:
        raise ValueError("tilde_p1 needs r_j > 0")
    return -0.5 * float(hbar00(r_j, star)) * p0_closed(d)


def tilde_x1(geom: Geometry, d: DetectorConfig, star: StarConfig) -> complex:
    """-hbar00(r1)/2 * (X0 + L_p dX0/dL_p)."""
    lp = geom.lp
    return -0.5 * float(hbar00(geom.r1, star)) * (x0_closed(d, lp) + lp * dx0_dlp(d, lp))


# ---------------------------------------------------------------------------
# propagator correction to the local noise

def default_eps0(d: DetectorConfig, *scales) -> float:
    """1e-3 times the smallest relevant length scale."""
    cand = [d.sigma, *[abs(x) for x in scales if x and abs(x) > 0]]
    return 1e-3 * min(cand)


def _s_breakpoints(r, star: StarConfig, eps):
    pts = list(eps * np.array([1.0, 10.0, 100.0, 1000.0]))
    for c in (2.0 * abs(r - star.radius), 2.0 * r, 2.0 * (r + star.radius)):
        if c > 0:
            pts.append(c)
    return pts


def delta_p1(r_j: float, d: DetectorConfig, star: StarConfig,
             spec: QuadSpec = QuadSpec(), route: str = "auto") -> QuadResult:
    """Propagator correction to the local noise of a detector at r_j.

    alpha^2 sigma sqrt(pi) / (pi^2 r_j) Re int_0^inf ds g(s)
        int_0^inf dR R hbar00(R) bracket(s - i eps; r_j, R),
    g(s) = e^{-s^2/4sigma^2 - i dE s}.

    The radial integral H has a real double pole -r_j hbar00(r_j) / (4 shat^2)
    at shat = 0, which makes the literal real part ill-conditioned as
    eps -> 0.  Since H = -dPhi/dshat with Phi the radial integral of
    :func:`coincident_bracket_psi`, the s integral is done by parts:
    int g H ds = Phi(-i eps) + int g'(s) Phi(s - i eps) ds.
    Phi is purely imaginary on the imaginary axis, so the boundary term
    drops out of the real part and only a simple pole is left.  The
    ``eps_limit`` record is returned (value real, scaled by M).

    For dE sigma > CONTOUR_GAP the answer is suppressed like e^{-dE^2 sigma^2}
    against an oscillating integrand and the eps route sinks below its own
    rounding floor; ``route="auto"`` then switches to
    :func:`delta_p1_contour` through the Gaussian saddle.  ``route`` may
    also be ``"eps"`` or ``"contour"``.
    """
    if not r_j > 0:
        raise ValueError("delta_p1 needs r_j > 0")
    if route not in ("auto", "eps", "contour"):
        raise ValueError(f"delta_p1: unknown route {route!r}")
    if star.mass == 0:
        return QuadResult(0.0, 0.0, 0, True)
    if route == "contour" or (route == "auto" and d.gap_width > CONTOUR_GAP):
        return delta_p1_contour(r_j, d, star, spec, shift=saddle_shift(d))
    unit = star.unit_mass()
    spec = spec.with_eps0(default_eps0(d, r_j - star.radius))
    pref = d.alpha**2 * d.sigma * SQRT_PI / (math.pi**2 * r_j)
    s2 = 4.0 * d.sigma**2

    lvl = spec.level_spec()

    def level(eps):
        nev = [0]
        ok = [True]

        def outer(s):
            phi, _, good, n = radial_coincident(r_j, s - 1j * eps, unit, lvl, antiderivative=True)
            nev[0] += n
            ok[0] = ok[0] and bool(np.all(good))
            g = np.exp(-s * s / s2 - 1j * d.delta_e * s)
            return np.real(g * (-2.0 * s / s2 - 1j * d.delta_e) * phi)

        res = integrate_semiinf_gauss(outer, d.sigma, lvl, _s_breakpoints(r_j, unit, eps))
        return QuadResult(pref * res.value, pref * res.err_estimate,
                          res.evaluations + nev[0], res.converged and ok[0])

    return eps_limit(level, spec).scaled(star.mass)


def saddle_shift(d: DetectorConfig) -> float:
    """Depth of the contour through the saddle of e^{-s^2/4sigma^2 - i dE s}
    (at s = -2i sigma^2 dE), never shallower than sigma."""
    return max(d.sigma, 2.0 * d.sigma**2 * d.delta_e)


def delta_p1_contour(r_j: float, d: DetectorConfig, star: StarConfig,
                     spec: QuadSpec = QuadSpec(), shift: float | None = None) -> QuadResult:
    """Independent route to :func:`delta_p1` without any eps.

    Twice the real part of the half-line s integral is the full-line
    integral, whose integrand is analytic below the real axis; moving the
    contour to Im s = -shift removes every light-cone singularity.
    """
    if star.mass == 0:
        return QuadResult(0.0, 0.0, 0, True)
    unit = star.unit_mass()
    c = d.sigma if shift is None else shift
    pref = d.alpha**2 * d.sigma * SQRT_PI / (2.0 * math.pi**2 * r_j)
    s2 = 4.0 * d.sigma**2
    t_max = gauss_cutoff(d.sigma, spec.tail_tol)
    nev = [0]

    def f(t):
        shat = t - 1j * c
        h, _, _, n = radial_coincident(r_j, shat, unit, spec)
        nev[0] += n
        return np.exp(-shat * shat / s2 - 1j * d.delta_e * shat) * h

    res = integrate_finite(f, -t_max, t_max, [0.0], spec)
    out = QuadResult(pref * res.value.real, pref * res.err_estimate,
                     res.evaluations + nev[0], res.converged)
    return out.scaled(star.mass)


# ---------------------------------------------------------------------------
# propagator correction to the exchange term

def v2_of(v1, R, geom: Geometry):
    """Distance from the field point to detector 2, given its distance v1 to
    detector 1 and its radius R (collinear setup, L_p = L at this order)."""
    r1, lp = geom.r1, geom.lp
    v1 = np.asarray(v1, dtype=float)
    rad = v1 * v1 * (1.0 + lp / r1) + lp * (r1 + lp - np.asarray(R) ** 2 / r1)
    scale = (r1 + lp + np.asarray(R)) ** 2
    if np.any(rad < -1e-12 * scale):
        raise ValueError("v2_of: negative radicand, v1 outside [|r1 - R|, r1 + R]")
    out = np.sqrt(np.maximum(rad, 0.0))
    return out[()] if out.ndim == 0 else out


def x1g_brace(u, sigma):
    """{i pi w(u/2sigma) [2sigma^2 - u^2] - 2 sqrt(pi) sigma u} / (16 sigma^4).

    The real part equals -sqrt(pi) d/dz[z D(z)] / (4 sigma^2) with D the
    Dawson integral and z = u/2sigma; it is evaluated in that form because
    the printed combination cancels to O(z^-3) for large z.
    """
    u = np.asarray(u, dtype=float)
    z = u / (2.0 * sigma)
    im = math.pi * np.real(faddeeva_w(z)) * (2.0 * sigma**2 - u * u)
    re = -4.0 * SQRT_PI * sigma**2 * dawson_xderiv(z)
    return (re + 1j * im) / (16.0 * sigma**4)


def x1g_brace_direct(u, sigma):
    """The printed brace of the delta-X integrand, evaluated literally."""
    u = np.asarray(u, dtype=float)
    w = faddeeva_w(u / (2.0 * sigma))
    return (1j * math.pi * w * (2.0 * sigma**2 - u * u)
            - 2.0 * SQRT_PI * sigma * u) / (16.0 * sigma**4)


def _x_prefactor(d: DetectorConfig, r1: float) -> float:
    return d.alpha**2 * d.sigma * SQRT_PI * math.exp(-d.gap_width**2) / (2.0 * math.pi**2 * r1)


def delta_x1(geom: Geometry, d: DetectorConfig, star: StarConfig,
             spec: QuadSpec = QuadSpec()) -> QuadResult:
    """Propagator correction to the exchange term.

    alpha^2 sigma sqrt(pi) e^{-sigma^2 dE^2} / (2 pi^2 r1) int_0^inf dR R hbar00(R)
        int_{|r1-R|}^{r1+R} dv1 brace(v1 + v2) / (v2 + i eps)
    """
    if star.mass == 0:
        return QuadResult(0j, 0.0, 0, True)
    unit = star.unit_mass()
    r1, lp = geom.r1, geom.lp
    r2 = r1 + lp
    # the 1/v2 singularity is integrable, so F(eps) carries eps*log(eps)
    # terms that Richardson cannot remove; a tiny eps0 makes them negligible
    spec = spec.with_eps0(1e-4 * default_eps0(d, lp, r1 - star.radius))
    pref = _x_prefactor(d, r1)
    r_max = R_MAX_FACTOR * (r2 + star.radius)

    lvl = spec.level_spec()

    def level(eps):
        nev = [0]
        ok = [True]

        def inner(v1, k, Rs):
            v2 = v2_of(v1, Rs[k], geom)
            return x1g_brace(v1 + v2, d.sigma) / (v2 + 1j * eps)

        def outer(Rs):
            vals, _, good, n = integrate_batch(lambda v1, k: inner(v1, k, Rs),
                                               np.abs(r1 - Rs), r1 + Rs,
                                               [[lp]] * Rs.size, lvl)
            nev[0] += n
            ok[0] = ok[0] and bool(np.all(good))
            return r_hbar00(Rs, unit) * vals

        bps = [unit.radius, r1, r2] + [r2 + k * d.sigma for k in (-3, -1, 1, 3)]
        res = integrate_finite(outer, 0.0, r_max, [b for b in bps if b > 0], lvl)
        return QuadResult(pref * res.value, pref * res.err_estimate,
                          res.evaluations + nev[0], res.converged and ok[0])

    return eps_limit(level, spec).scaled(star.mass)


def delta_x1_prolate(geom: Geometry, d: DetectorConfig, star: StarConfig,
                     spec: QuadSpec = QuadSpec()) -> QuadResult:
    """Independent route to :func:`delta_x1` in prolate spheroidal coordinates.

    With xi = v1 + v2 and eta = v1 - v2 (foci at the detectors) the volume
    element over v1 v2 is d(xi) d(eta) d(phi) / (2 L), so the 1/v2
    singularity disappears and no eps is needed.
    """
    if star.mass == 0:
        return QuadResult(0j, 0.0, 0, True)
    unit = star.unit_mass()
    r1, L = geom.r1, geom.lp
    pref = _x_prefactor(d, r1) * r1 / (2.0 * L)
    xi_max = R_MAX_FACTOR * (r1 + L + star.radius)

    def radius(xi, eta):
        a = r1 + 0.5 * L + xi * eta / (2.0 * L)       # axial coordinate
        v1 = 0.5 * (xi + eta)
        rho2 = np.maximum(v1 * v1 - (a - r1) ** 2, 0.0)
        return np.sqrt(a * a + rho2)

    nev = [0]

    def surface_crossings(xi):
        # R(xi, eta)^2 = R_o^2 is quadratic in eta
        a, b = 0.25, 0.5 * xi + r1 * xi / L
        c = 0.25 * xi * xi + r1 * r1 + r1 * L - unit.radius**2
        disc = b * b - 4 * a * c
        if disc <= 0:
            return []
        q = math.sqrt(disc)
        return [e for e in ((-b - q) / (2 * a), (-b + q) / (2 * a)) if -L < e < L]

    def outer(xis):
        def g(eta, k):
            return hbar00(radius(xis[k], eta), unit)

        vals, _, _, n = integrate_batch(g, np.full(xis.size, -L), np.full(xis.size, L),
                                        [surface_crossings(x) for x in xis], spec)
        nev[0] += n
        return vals

    def f(xis):
        return outer(xis) * x1g_brace(xis, d.sigma)

    bps = [L + k * d.sigma for k in (1, 3, 10)]
    res = integrate_finite(f, L, xi_max, [b for b in bps if b < xi_max], spec)
    out = QuadResult(pref * res.value, pref * res.err_estimate, res.evaluations + nev[0],
                     res.converged)
    return out.scaled(star.mass)
