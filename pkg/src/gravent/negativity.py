"""Negativity of the two-detector state at O(alpha^2): flat baseline,
first-order gravitational corrections and the r1 sweep.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from gravent.flat import DetectorConfig, p0_closed, x0_closed
from gravent.gcorr import CorrectionBreakdown, delta_p1, delta_x1, tilde_p1, tilde_x1
from gravent.metric import Geometry, StarConfig, Validity, coordinate_separation, validity_check
from gravent.quad import QuadSpec

# first-order parts above this fraction of their zeroth-order value are flagged
PERTURBATIVE_FRACTION = 0.1


def negativity_of(p1: float, p2: float, x: complex) -> float:
    """max(sqrt((p1 - p2)^2 + 4|x|^2) - p1 - p2, 0)."""
    if p1 < 0 or p2 < 0:
        raise ValueError(f"noise terms must be >= 0, got p1={p1}, p2={p2}")
    return max(math.hypot(p1 - p2, 2.0 * abs(x)) - p1 - p2, 0.0)


def n_prime(n: float, alpha: float = 1.0) -> float:
    """Normalised negativity 8 pi^2 N / alpha^2."""
    return 8.0 * math.pi**2 * n / alpha**2


@dataclass
class EntanglementResult:
    p1: float
    p2: float
    x: complex
    n: float
    n_prime: float
    p0: float
    x0: complex
    r1: float | None = None
    lp: float | None = None
    r2: float | None = None
    breakdown: CorrectionBreakdown = field(default_factory=CorrectionBreakdown)
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def converged(self) -> bool:
        return self.error is None and self.breakdown.converged

    @property
    def n0(self) -> float:
        return negativity_of(self.p0, self.p0, self.x0)


def _assemble(d, p1, p2, x, p0, x0, **kw) -> EntanglementResult:
    n = negativity_of(p1, p2, x)
    return EntanglementResult(p1=p1, p2=p2, x=x, n=n, n_prime=n_prime(n, d.alpha),
                              p0=p0, x0=x0, **kw)


def compute_flat(d: DetectorConfig, lp: float) -> EntanglementResult:
    """Minkowski values from the closed forms."""
    p0 = float(p0_closed(d))
    x0 = x0_closed(d, lp)
    return _assemble(d, p0, p0, x0, p0, x0, lp=lp)


def compute_perturbed(d: DetectorConfig, geom: Geometry, star: StarConfig,
                      spec: QuadSpec = QuadSpec()) -> EntanglementResult:
    """P_j = P0 + tilde_p1(r_j) + delta_p1(r_j), X = X0 + tilde_x1 + delta_x1.

    Detector 2 sits at r2 = r1 + L with L the coordinate separation whose
    proper length is ``geom.lp``.  Non-converged corrections are kept and
    flagged through ``breakdown.eps_diagnostics``.
    """
    p0 = float(p0_closed(d))
    x0 = x0_closed(d, geom.lp)
    r2 = geom.r1 + coordinate_separation(geom.r1, geom.lp, star)
    tp = (tilde_p1(geom.r1, d, star), tilde_p1(r2, d, star))
    dp_res = (delta_p1(geom.r1, d, star, spec), delta_p1(r2, d, star, spec))
    tx = tilde_x1(geom, d, star)
    dx_res = delta_x1(geom, d, star, spec)
    bd = CorrectionBreakdown(
        tilde_p=tp,
        delta_p=tuple(r.real for r in dp_res),
        tilde_x=tx,
        delta_x=complex(dx_res.value),
        eps_diagnostics={"delta_p1": dp_res[0], "delta_p2": dp_res[1], "delta_x": dx_res},
    )
    p1 = p0 + tp[0] + bd.delta_p[0]
    p2 = p0 + tp[1] + bd.delta_p[1]
    x = x0 + tx + bd.delta_x
    validity = validity_check(star, geom)
    small = max(abs(t) + abs(dp) for t, dp in zip(tp, bd.delta_p)) < PERTURBATIVE_FRACTION * p0
    small = small and abs(tx) + abs(bd.delta_x) < PERTURBATIVE_FRACTION * abs(x0)
    diag = {"validity": validity, "perturbative": bool(small)}
    return _assemble(d, p1, p2, x, p0, x0, r1=geom.r1, lp=geom.lp, r2=r2,
                     breakdown=bd, diagnostics=diag)


@dataclass
class SweepTable:
    """One row per r1 in input order, plus the flat-space asymptote."""

    rows: list
    flat: EntanglementResult

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def _sweep_point(args):
    d, r1, lp, star, spec = args
    try:
        return compute_perturbed(d, Geometry(r1, lp), star, spec)
    except (ArithmeticError, ValueError) as exc:
        p0 = float(p0_closed(d))
        return EntanglementResult(math.nan, math.nan, complex(math.nan, math.nan), math.nan,
                                  math.nan, p0, x0_closed(d, lp), r1=r1, lp=lp,
                                  error=f"{type(exc).__name__}: {exc}")


def sweep_r1(d: DetectorConfig, star: StarConfig, lp: float, r1_values,
             spec: QuadSpec = QuadSpec(), workers: int | None = None) -> SweepTable:
    """:func:`compute_perturbed` along r1 at fixed proper separation.

    A failing point is recorded on its row (``error``) and the sweep goes
    on.  ``workers > 1`` spreads the points over processes; rows keep the
    input order either way.
    """
    r1_values = [float(r) for r in r1_values]
    if any(r <= 0 for r in r1_values):
        raise ValueError("sweep_r1 needs r1 > 0")
    if any(b < a for a, b in zip(r1_values, r1_values[1:])):
        raise ValueError("sweep_r1 needs r1 values in ascending order")
    jobs = [(d, r, lp, star, spec) for r in r1_values]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    return SweepTable(rows, compute_flat(d, lp))


__all__ = [
    "EntanglementResult",
    "SweepTable",
    "Validity",
    "compute_flat",
    "compute_perturbed",
    "n_prime",
    "negativity_of",
    "sweep_r1",
]
