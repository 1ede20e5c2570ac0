"""Batch front end.

    python -m gravent CONFIG [--mode flat|curved|sweep|selfcheck] [--out PATH]

The config file holds ``key = value`` lines with ``#`` comments.  Lengths are
given in units of the star radius (curved modes) or of sigma (flat mode
without a star), which is also how they are reported.

Exit codes: 0 success, 1 invalid config, 2 non-converged quadrature,
3 self-check failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from gravent.flat import DetectorConfig, p0_closed, p0_numeric, x0_closed, x0_numeric
from gravent.gcorr import g1_kernel
from gravent.metric import Geometry, StarConfig
from gravent.negativity import (
    EntanglementResult,
    compute_flat,
    compute_perturbed,
    sweep_r1,
)
from gravent.quad import QuadSpec

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_SELFCHECK = 0, 1, 2, 3
MODES = ("flat", "curved", "sweep", "selfcheck")

COLUMNS = [
    "r1_over_Ro", "L_p_over_Ro", "P0", "tildeP1", "deltaP1", "P1", "tildeP2", "deltaP2", "P2",
    "absX0", "abs_tildeX", "abs_deltaX", "absX", "N", "Nprime", "Nprime_flat_asymptote",
    "converged_flags",
]


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


@dataclass(frozen=True)
class SweepGrid:
    r1_min: float
    r1_max: float
    steps: int
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.r1_min])
        if self.spacing == "log":
            return np.geomspace(self.r1_min, self.r1_max, self.steps)
        return np.linspace(self.r1_min, self.r1_max, self.steps)


@dataclass(frozen=True)
class RunConfig:
    mode: str
    detector: DetectorConfig
    lp_values: tuple
    star: StarConfig | None = None
    r1: float | None = None
    grid: SweepGrid | None = None
    quad: QuadSpec = field(default_factory=QuadSpec)
    out: str = "gravent_out.csv"
    workers: int = 1


# key -> (converter, default); None default means required where used
_KEYS = {
    "mode": (str, None),
    "delta_e": (float, None),
    "sigma": (float, None),
    "alpha": (float, 1.0),
    "mass": (float, None),
    "radius": (float, 1.0),
    "r1": (float, None),
    "lp": (str, None),
    "r1_min": (float, None),
    "r1_max": (float, None),
    "steps": (int, None),
    "spacing": (str, "linear"),
    "rel_tol": (float, 1e-8),
    "abs_tol": (float, 1e-14),
    "max_subdivisions": (int, 2000),
    "eps0": (float, None),
    "eps_ratio": (float, 2.0),
    "eps_levels": (int, 4),
    "out": (str, "gravent_out.csv"),
    "workers": (int, 1),
}


def _read_pairs(text: str) -> dict:
    pairs = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _get(pairs, key, required=False):
    conv, default = _KEYS[key]
    if key not in pairs:
        if required and default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return conv(pairs[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot read {pairs[key]!r} as {conv.__name__}") from None


def parse_config(source: str, mode: str | None = None, out: str | None = None) -> RunConfig:
    """Validate ``key = value`` text into a :class:`RunConfig`.

    ``mode`` and ``out`` override the file.  ``lp`` may list several
    comma-separated proper separations (one output file each in sweep mode).
    """
    pairs = _read_pairs(source)
    mode = mode or _get(pairs, "mode", required=True)
    if mode not in MODES:
        raise ConfigError(f"key 'mode': must be one of {', '.join(MODES)}, got {mode!r}")
    try:
        detector = DetectorConfig(_get(pairs, "delta_e", True), _get(pairs, "sigma", True),
                                  _get(pairs, "alpha"))
    except ValueError as exc:
        raise ConfigError(f"detector: {exc}") from None

    lp_values = ()
    if mode != "selfcheck":
        raw = _get(pairs, "lp", required=True)
        try:
            lp_values = tuple(float(x) for x in raw.split(","))
        except ValueError:
            raise ConfigError(f"key 'lp': cannot read {raw!r} as a list of numbers") from None
        if not all(v > 0 for v in lp_values):
            raise ConfigError("key 'lp': every separation must be > 0")

    star = None
    if mode in ("curved", "sweep") or "mass" in pairs:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                star = StarConfig(_get(pairs, "mass", True), _get(pairs, "radius"))
        except ValueError as exc:
            raise ConfigError(f"star: {exc}") from None

    r1 = grid = None
    if mode == "curved":
        r1 = _get(pairs, "r1", required=True)
        if not r1 > 0:
            raise ConfigError("key 'r1': must be > 0")
    if mode == "sweep":
        grid = SweepGrid(_get(pairs, "r1_min", True), _get(pairs, "r1_max", True),
                         _get(pairs, "steps", True), _get(pairs, "spacing"))
        if grid.steps < 1:
            raise ConfigError(f"key 'steps': grid needs steps >= 1, got {grid.steps}")
        if not 0 < grid.r1_min <= grid.r1_max:
            raise ConfigError("keys 'r1_min', 'r1_max': need 0 < r1_min <= r1_max")
        if grid.spacing not in ("linear", "log"):
            raise ConfigError(f"key 'spacing': must be linear or log, got {grid.spacing!r}")

    try:
        quad = QuadSpec(rel_tol=_get(pairs, "rel_tol"), abs_tol=_get(pairs, "abs_tol"),
                        max_subdivisions=_get(pairs, "max_subdivisions"),
                        eps0=_get(pairs, "eps0"), eps_ratio=_get(pairs, "eps_ratio"),
                        eps_levels=_get(pairs, "eps_levels"))
    except ValueError as exc:
        raise ConfigError(f"quadrature: {exc}") from None
    workers = _get(pairs, "workers")
    if workers < 1:
        raise ConfigError("key 'workers': must be >= 1")

    return RunConfig(mode=mode, detector=detector, lp_values=lp_values, star=star, r1=r1,
                     grid=grid, quad=quad, out=out or _get(pairs, "out"), workers=workers)


# ---------------------------------------------------------------------------
# output

def _fmt(x) -> str:
    return f"{float(x):.15e}"


def _flags(res: EntanglementResult) -> str:
    if res.error:
        return "error"
    diag = res.breakdown.eps_diagnostics
    if not diag:
        return "closed_form"
    return ";".join(f"{k}={'ok' if v.converged else 'FAIL'}" for k, v in diag.items())


def result_row(res: EntanglementResult, flat_nprime: float) -> list:
    bd = res.breakdown
    return [
        _fmt(res.r1 if res.r1 is not None else math.nan), _fmt(res.lp), _fmt(res.p0),
        _fmt(bd.tilde_p[0]), _fmt(bd.delta_p[0]), _fmt(res.p1),
        _fmt(bd.tilde_p[1]), _fmt(bd.delta_p[1]), _fmt(res.p2),
        _fmt(abs(res.x0)), _fmt(abs(bd.tilde_x)), _fmt(abs(bd.delta_x)), _fmt(abs(res.x)),
        _fmt(res.n), _fmt(res.n_prime), _fmt(flat_nprime), _flags(res),
    ]


def write_csv(path: str, rows: list) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    w.writerows(rows)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _out_paths(base: str, n: int) -> list:
    if n == 1:
        return [base]
    stem, dot, ext = base.rpartition(".")
    if not dot:
        stem, ext = base, "csv"
    return [f"{stem}_lp{k}.{ext}" for k in range(n)]


# ---------------------------------------------------------------------------
# self-check

def selfcheck(cfg: RunConfig) -> list:
    """Oracle-equivalence checks; returns (name, passed, detail) tuples."""
    out = []
    d = cfg.detector
    for lp in (0.5 * d.sigma, 5.0 * d.sigma):
        xn = x0_numeric(d, lp)
        rel = abs(xn.value / x0_closed(d, lp) - 1.0)
        out.append((f"x0_numeric vs closed form (lp/sigma={lp / d.sigma:g})",
                    rel <= 1e-6 and xn.converged, f"rel={rel:.2e}"))
    pn = p0_numeric(d)
    rel = abs(pn.real / p0_closed(d) - 1.0)
    out.append(("p0_numeric vs closed form", rel <= 1e-6 and pn.converged, f"rel={rel:.2e}"))

    rng = np.random.default_rng(12345)
    zx, zy = rng.uniform(0, 3, 1000), rng.uniform(0, 3, 1000)
    s, eps = rng.uniform(0, 5, 1000), 1e-3
    a, b = g1_kernel(zx, zy, s, eps), g1_kernel(zy, zx, s, eps)
    sym = float(np.max(np.abs(a - b) / np.abs(a)))
    out.append(("g1_kernel Zx<->Zy symmetry", sym <= 1e-14, f"max rel={sym:.1e}"))

    geom = Geometry(2.0, 0.0095)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        one, two = StarConfig(1e-3), StarConfig(2e-3)
        fd = DetectorConfig(1.0, 0.00674)
        r_a = compute_perturbed(fd, geom, one, cfg.quad)
        r_b = compute_perturbed(fd, geom, two, cfg.quad)
    pairs = [(r_a.breakdown.delta_p[0], r_b.breakdown.delta_p[0]),
             (r_a.breakdown.delta_x, r_b.breakdown.delta_x),
             (r_a.breakdown.tilde_p[0], r_b.breakdown.tilde_p[0]),
             (r_a.breakdown.tilde_x, r_b.breakdown.tilde_x)]
    lin = max(abs(b_ / (2.0 * a_) - 1.0) for a_, b_ in pairs)
    out.append(("first-order M-linearity", lin <= 1e-10, f"max rel={lin:.1e}"))
    return out


# ---------------------------------------------------------------------------

def run(cfg: RunConfig, stream=None) -> int:
    """Execute a validated config; returns the exit status."""
    stream = stream or sys.stdout
    if cfg.mode == "selfcheck":
        checks = selfcheck(cfg)
        for name, ok, detail in checks:
            print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})", file=stream)
        return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_SELFCHECK

    status = EXIT_OK
    paths = _out_paths(cfg.out, len(cfg.lp_values))
    for lp, path in zip(cfg.lp_values, paths):
        flat = compute_flat(cfg.detector, lp)
        if cfg.mode == "flat":
            results = [flat]
        elif cfg.mode == "curved":
            results = [compute_perturbed(cfg.detector, Geometry(cfg.r1, lp), cfg.star, cfg.quad)]
        else:
            table = sweep_r1(cfg.detector, cfg.star, lp, cfg.grid.values(), cfg.quad,
                             workers=cfg.workers)
            results = table.rows
        write_csv(path, [result_row(r, flat.n_prime) for r in results])
        print(f"wrote {path} ({len(results)} rows)", file=stream)
        if not all(r.converged for r in results):
            status = EXIT_NONCONVERGED
    return status


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="gravent", description=__doc__.splitlines()[0])
    ap.add_argument("config", help="key = value configuration file")
    ap.add_argument("--mode", choices=MODES, help="override the config's mode")
    ap.add_argument("--out", help="override the output CSV path")
    args = ap.parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read(), mode=args.mode, out=args.out)
    except (OSError, ConfigError) as exc:
        print(f"gravent: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


__all__ = ["ConfigError", "RunConfig", "SweepGrid", "main", "parse_config", "run", "selfcheck"]
