"""Complex error-function family.

All Gaussian-times-erfc products in the physics modules go through
:func:`faddeeva_w` so that no caller ever multiplies a huge ``erfc`` by a tiny
Gaussian.  The heavy lifting is done by the Faddeeva package bundled in
``scipy.special`` (region-split: Taylor near the origin, continued fraction
far away), wrapped here with the domain checks this library relies on.
"""

from __future__ import annotations

import numpy as np
from scipy import special

# erfc(z) ~ exp(-z^2) and overflows once Re(-z^2) > ~709.
ERFC_MAX_ABS = 26.0

_TWO_OVER_SQRT_PI = 2.0 / np.sqrt(np.pi)


class SpecialFunctionRangeError(ValueError):
    """Argument outside the overflow-safe region of a direct evaluation."""


def erfc_cplx(z):
    """erfc(z) = 1 - erf(z) for complex ``z`` with ``|z| <= ERFC_MAX_ABS``.

    Beyond that bound erfc may overflow; use :func:`faddeeva_w`, which
    carries the Gaussian factor analytically.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > ERFC_MAX_ABS):
        raise SpecialFunctionRangeError(
            f"|z| > {ERFC_MAX_ABS}: erfc_cplx may overflow, use faddeeva_w instead"
        )
    out = special.erfc(z)
    return out[()] if out.ndim == 0 else out


def faddeeva_w(z, allow_reflection=True):
    """Faddeeva function w(z) = exp(-z^2) erfc(-iz).

    Bounded in the closed upper half-plane.  Lower half-plane arguments are
    mapped by ``w(z) = 2 exp(-z^2) - w(-z)`` when ``allow_reflection`` is set;
    otherwise they are rejected.
    """
    z = np.asarray(z, dtype=complex)
    lower = z.imag < 0
    if np.any(lower):
        if not allow_reflection:
            raise ValueError("faddeeva_w: Im(z) < 0 and reflection disabled")
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.where(lower, 2.0 * np.exp(-z * z) - special.wofz(-z), special.wofz(z))
        if not np.all(np.isfinite(out)):
            raise SpecialFunctionRangeError("faddeeva_w: reflected value overflows")
    else:
        out = special.wofz(z)
    return out[()] if out.ndim == 0 else out


def dawson(x):
    """Dawson's integral F(x) = exp(-x^2) * int_0^x exp(t^2) dt (real x)."""
    return special.dawsn(x)


def dawson_xderiv(x):
    """d/dx [x F(x)] = x + (1 - 2x^2) F(x), evaluated without cancellation.

    The direct combination loses about ``4 log10(x)`` digits; for ``x >= 8``
    the asymptotic series ``-sum_k 2k (2k-1)!! / (2^(k+1) x^(2k+1))`` is used
    instead (its truncation error is below 1e-17 there).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 8.0
    xs = x[small]
    out[small] = xs + (1.0 - 2.0 * xs * xs) * special.dawsn(xs)
    xl = x[~small]
    if xl.size:
        inv2 = 1.0 / (xl * xl)
        term = np.ones_like(xl)  # (2k-1)!! / 2^(k+1) * x^(-2k), built incrementally
        acc = np.zeros_like(xl)
        # k-th term: -2k * c_k / x^(2k+1), c_k = (2k-1)!!/2^(k+1)
        c = 0.5
        for k in range(1, 40):
            c *= (2 * k - 1) / 2.0
            term = term * inv2
            acc -= 2 * k * c * term
        out[~small] = acc / xl
    return out[()] if out.ndim == 0 else out


def faddeeva_w_prime(z):
    """w'(z) = -2 z w(z) + 2i/sqrt(pi)."""
    return -2.0 * z * faddeeva_w(z) + 1j * _TWO_OVER_SQRT_PI
