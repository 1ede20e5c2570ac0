"""Newtonian-limit background of a constant-density star.

Lengths are in units of the star radius throughout the curved-space code,
so ``StarConfig(mass=0.001, radius=1.0)`` is the usual working point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from gravent.quad import QuadSpec, integrate_finite

WEAK_FIELD_LIMIT = 0.01
WEAK_FIELD_WARN = 0.001


@dataclass(frozen=True)
class StarConfig:
    """Mass ``M`` (geometric units) and radius ``R_o``.

    ``mass = 0`` is accepted and means flat space.
    """

    mass: float
    radius: float = 1.0

    def __post_init__(self):
        if not self.mass >= 0:
            raise ValueError("StarConfig.mass must be >= 0")
        if not self.radius > 0:
            raise ValueError("StarConfig.radius must be > 0")
        c = self.compactness
        if c > WEAK_FIELD_LIMIT:
            warnings.warn(f"M/R_o = {c:g} exceeds the weak-field limit {WEAK_FIELD_LIMIT}",
                          stacklevel=3)
        elif c > WEAK_FIELD_WARN:
            warnings.warn(f"M/R_o = {c:g} is large for first-order perturbation theory",
                          stacklevel=3)

    @property
    def compactness(self) -> float:
        return self.mass / self.radius

    @property
    def density(self) -> float:
        return 3.0 * self.mass / (4.0 * math.pi * self.radius**3)

    def unit_mass(self) -> "StarConfig":
        """Same radius, M = 1: every first-order quantity is M times its unit-mass value."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return StarConfig(1.0, self.radius)


@dataclass(frozen=True)
class Geometry:
    """Collinear setup: star centre, detector 1 at ``r1``, detector 2 farther out."""

    r1: float
    lp: float

    def __post_init__(self):
        if not self.r1 > 0:
            raise ValueError("Geometry.r1 must be > 0")
        if not self.lp > 0:
            raise ValueError("Geometry.lp must be > 0")


def hbar00(r, star: StarConfig):
    """Trace-reversed h^00: (2M/R_o)(3 - r^2/R_o^2) inside, 4M/r outside."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("hbar00 needs r >= 0")
    m, ro = star.mass, star.radius
    with np.errstate(divide="ignore"):
        out = np.where(r < ro, 2.0 * m / ro * (3.0 - (r / ro) ** 2), 4.0 * m / np.maximum(r, ro))
    return out[()] if out.ndim == 0 else out


def r_hbar00(r, star: StarConfig):
    """R * hbar00(R), the radial weight of every propagator-correction integral."""
    r = np.asarray(r, dtype=float)
    m, ro = star.mass, star.radius
    out = np.where(r < ro, 2.0 * m / ro * (3.0 * r - r**3 / ro**2), 4.0 * m)
    return out[()] if out.ndim == 0 else out


def proper_distance(r1: float, l_coord: float, star: StarConfig,
                    spec: QuadSpec = QuadSpec(rel_tol=1e-13, abs_tol=0.0)) -> float:
    """int_{r1}^{r1+L} sqrt(1 + hbar00/2) dr."""
    if not (r1 > 0 and l_coord > 0):
        raise ValueError("proper_distance needs r1 > 0 and l_coord > 0")
    if star.mass == 0:
        return float(l_coord)
    res = integrate_finite(lambda r: np.sqrt(1.0 + 0.5 * hbar00(r, star)),
                           r1, r1 + l_coord, [star.radius], spec)
    if not res.converged:
        raise ArithmeticError("proper_distance quadrature did not converge")
    return float(res.value)


def coordinate_separation(r1: float, lp: float, star: StarConfig) -> float:
    """Coordinate length L with proper_distance(r1, L) == lp."""
    if not lp > 0:
        raise ValueError("coordinate_separation needs lp > 0")
    if star.mass == 0:
        return float(lp)
    # sqrt(1 + h/2) lies in [1, sqrt(1 + 3M/R_o)], which brackets the root
    lo = lp / math.sqrt(1.0 + 3.0 * star.compactness)
    return brentq(lambda L: proper_distance(r1, L, star) - lp, lo, lp,
                  xtol=1e-15 * lp, rtol=1e-13)


@dataclass(frozen=True)
class ClockRatio:
    exact: float
    first_order: float


def clock_ratio(r1: float, r2: float, star: StarConfig) -> ClockRatio:
    """d tau_2 / d tau_1 for static detectors at r1, r2."""
    if not (r1 > 0 and r2 > 0):
        raise ValueError("clock_ratio needs r1, r2 > 0")
    h1, h2 = float(hbar00(r1, star)), float(hbar00(r2, star))
    return ClockRatio(math.sqrt((1.0 - h2 / 2.0) / (1.0 - h1 / 2.0)),
                      1.0 - h2 / 4.0 + h1 / 4.0)


@dataclass(frozen=True)
class Validity:
    weak_field_ok: bool
    same_clock_ok: bool
    margin: float
    inside_star: bool = False


def validity_check(star: StarConfig, geom: Geometry) -> Validity:
    """Diagnose the perturbative regime; never refuses to compute.

    Outside the star the equal-clock condition is L <= 16 M; if either
    detector sits inside, the general |dh/4| <= h(r2)^2 test is used.
    """
    L = coordinate_separation(geom.r1, geom.lp, star)
    r2 = geom.r1 + L
    inside = geom.r1 < star.radius
    if star.mass == 0:
        same = True
        margin = math.inf
    else:
        margin = 16.0 * star.mass / L
        if inside:
            h1, h2 = float(hbar00(geom.r1, star)), float(hbar00(r2, star))
            same = abs(h2 - h1) / 4.0 <= h2 * h2
        else:
            same = L <= 16.0 * star.mass
    return Validity(star.compactness <= WEAK_FIELD_LIMIT, bool(same), margin, inside)
