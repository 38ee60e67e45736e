"""Command-line harness: every verification suite with JSON/CSV reports.

Exit codes: 0 all records pass (warnings allowed), 2 a record failed,
3 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import boundary as bd
from .conformal import conformal_factor
from .errors import BudgetExhausted, GJMSError, KernelSingularity, NonPositiveValue, PoleError, UnimplementedCase
from .gjms import (
    distance_power_eigenvalues,
    distance_power_eigenvalues_closed,
    gjms_multiplier,
    gjms_spectrum,
    inverse_kernel_constant,
    inverse_spectral_apply,
)
from .inequalities import (
    DeficitReport,
    beckner_deficit,
    counterexample_search,
    duality_gap,
    extremal_profile,
    hls_extremal,
    nonneg_energy_check,
    reverse_hls_constant,
    reverse_hls_ratio,
    sobolev_constant,
    sobolev_deficit,
    stability_bound,
)
from .scattering import (
    NearBoundaryWarning,
    PoissonSolution,
    boundary_trend,
    branch_two_lead,
    c_gamma,
    origin_value_integral,
    origin_value_series,
    pde_residual,
    scattering_multipliers,
)
from .zonal import SphereGeometry, ZonalFunction, from_callable, random_positive

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 2, 3

COMMANDS = ("funk-hecke", "sobolev", "reverse-sobolev", "beckner", "reverse-hls", "duality",
            "stability", "scattering", "boundary", "counterexample")


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    command: str
    n: list | None = None
    gamma: list | None = None
    grid: int = 256
    modes: int = 20
    jet_order: int | None = None
    tol: float = 1e-8
    eq_tol: float = 1e-6
    samples: int = 100
    budget: int = 400
    seed: int = 0
    out: str | None = None
    format: str = "json"
    parallel: int = 1
    plots: bool = False
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        for name in ("grid", "modes", "samples", "parallel"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.tol <= 0 or self.eq_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.jet_order is not None and self.jet_order <= 0:
            raise ConfigError("jet order must be positive")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        for n in self.n or []:
            if n < 1:
                raise ConfigError("n must be a positive integer")
        for g in self.gamma or []:
            if g <= 0:
                raise ConfigError("gamma must be positive")

    def digest(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "extra"}


def _parse_list(text: str, conv) -> list:
    return [conv(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def _parse_range(text: str) -> list:
    try:
        a, b, k = str(text).split(":")
        return [float(x) for x in np.linspace(float(a), float(b), int(k))]
    except ValueError as exc:
        raise ConfigError(f"gamma range must be start:stop:count, got {text!r}") from exc


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"bad config line: {raw.strip()!r}")
                k, v = line.split("=", 1)
                out[k.strip().replace("-", "_")] = v.strip()
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    return out


_CONVERTERS = {
    "n": lambda v: _parse_list(v, int),
    "gamma": lambda v: _parse_list(v, float),
    "gamma_range": _parse_range,
    "grid": int, "modes": int, "jet_order": int, "samples": int, "budget": int, "seed": int, "parallel": int,
    "tol": float, "eq_tol": float, "out": str, "format": str,
    "plots": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
}


def build_config(args: argparse.Namespace) -> RunConfig:
    merged: dict = {}
    if args.config:
        merged.update(read_config_file(args.config))
    for key in _CONVERTERS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            merged[key] = val
    values = {}
    for key, raw in merged.items():
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            values[key] = _CONVERTERS[key](raw) if isinstance(raw, str) or key in ("n", "gamma") else raw
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    if "gamma_range" in values:
        values["gamma"] = values.pop("gamma_range")
    cfg = RunConfig(command=args.command, **values)
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------
# records

def _rec(name: str, lhs: float, rhs: float, kind: str, tol: float, case: str = "",
         refinement=None, note: str = "") -> dict:
    """kind 'geq': lhs >= rhs up to tol; 'equal': |lhs-rhs| within tol relative; 'small': |lhs| <= tol."""
    lhs, rhs = float(lhs), float(rhs)
    deficit = lhs - rhs
    scale = max(abs(lhs), abs(rhs), 1e-300)
    relative = deficit / scale
    if kind == "geq":
        ok = deficit >= -tol * max(abs(lhs), abs(rhs), 1.0)
    elif kind == "equal":
        ok = abs(relative) <= tol or abs(deficit) <= tol * 1e-3
    elif kind == "small":
        ok = abs(lhs) <= tol
    else:
        raise ValueError(kind)
    if not math.isfinite(deficit):
        ok = False
    out = {"name": name, "case": case, "lhs": lhs, "rhs": rhs, "deficit": deficit, "relative": relative,
           "refinement": list(refinement) if refinement is not None else None,
           "verdict": "pass" if ok else "fail"}
    if note:
        out["note"] = note
    return out


def _note(name: str, case: str, verdict: str, note: str) -> dict:
    return {"name": name, "case": case, "lhs": None, "rhs": None, "deficit": None, "relative": None,
            "refinement": None, "verdict": verdict, "note": note}


def _cell_rng(cfg: RunConfig, n: int, gamma: float, tag: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, n, int(round(gamma * 1e6)), tag]))


def _run_cells(cfg: RunConfig, func, cells) -> list:
    cells = list(cells)
    if cfg.parallel > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel) as ex:
            chunks = list(ex.map(func, [cfg] * len(cells), cells))
    else:
        chunks = [func(cfg, c) for c in cells]
    return [r for chunk in chunks for r in chunk]


# --------------------------------------------------------------------------
# plot data

def write_svg(path: str, series: dict, xlabel: str, ylabel: str, width: int = 480, height: int = 320) -> None:
    """Minimal self-contained line plot; ``series`` maps label -> (xs, ys)."""
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys) if math.isfinite(y)]
    if not pts:
        return
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    pad = 50
    sx = lambda x: pad + (x - x0) / (x1 - x0) * (width - 2 * pad)
    sy = lambda y: height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">{xlabel}</text>',
             f'<text x="14" y="{height / 2}" font-size="12" transform="rotate(-90 14 {height / 2})" '
             f'text-anchor="middle">{ylabel}</text>',
             f'<text x="{pad}" y="{height - pad + 14}" font-size="10">{x0:.3g}</text>',
             f'<text x="{width - pad}" y="{height - pad + 14}" font-size="10" text-anchor="end">{x1:.3g}</text>',
             f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{y0:.3g}</text>',
             f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{y1:.3g}</text>']
    for i, (label, (xs, ys)) in enumerate(series.items()):
        c = colors[i % len(colors)]
        poly = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(y))
        parts.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{poly}"/>')
        parts.append(f'<text x="{width - pad}" y="{pad + 14 * i}" font-size="11" fill="{c}" '
                     f'text-anchor="end">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def _write_plot(cfg: RunConfig, stem: str, header: list, rows: list, series: dict, xlabel: str, ylabel: str):
    if not cfg.out:
        return
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, stem + ".csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    if cfg.plots:
        write_svg(os.path.join(cfg.out, stem + ".svg"), series, xlabel, ylabel)


# --------------------------------------------------------------------------
# funk-hecke

def _fh_cell(cfg: RunConfig, cell) -> list:
    n, gamma = cell
    geo = SphereGeometry(n)
    case = f"n={n} gamma={gamma:g}"
    expo = 2 * gamma - n
    k = gamma - n / 2
    if k >= 0 and abs(k - round(k)) < 1e-12:
        return [_note("funk-hecke", case, "skip",
                      "pole cell skipped: Gamma(n/2 - gamma) is singular, the inverse kernel is logarithmic")]
    try:
        quad = distance_power_eigenvalues(geo, expo, cfg.modes, cfg.grid)
        closed = distance_power_eigenvalues_closed(geo, expo, cfg.modes)
    except (KernelSingularity, PoleError) as exc:
        return [_note("funk-hecke", case, "skip", f"pole cell skipped: {exc}")]
    rel = np.where(np.abs(closed) > 0, np.abs(quad - closed) / np.maximum(np.abs(closed), 1e-300), np.abs(quad))
    worst = int(np.argmax(rel))
    rec = _rec("funk-hecke", quad[worst], closed[worst], "equal", 1e-9, f"{case} l={worst}")
    if rec["verdict"] == "fail":
        rec["note"] = f"max rel err {rel[worst]:.2e}; increase --grid (now {cfg.grid})"
    # the normalised kernel inverts P_{2 gamma}
    inv = inverse_kernel_constant(n, gamma) * quad * gjms_spectrum(geo, gamma, cfg.modes).multipliers
    err = np.abs(inv - 1.0)
    bad = int(np.argmax(err))
    rec2 = _rec("inverse-kernel", inv[bad], 1.0, "equal", 1e-9, f"{case} l={bad}")
    if rec2["verdict"] == "fail":
        rec2["note"] = f"increase --grid (now {cfg.grid})"
    rows = [[n, gamma, l, quad[l], closed[l]] for l in range(cfg.modes + 1)]
    return [rec, rec2, {"_table": rows}]


def cmd_funk_hecke(cfg: RunConfig) -> tuple[list, dict]:
    ns = cfg.n or [2, 3, 4]
    gs = cfg.gamma or [0.4, 0.7, 1.3, 2.2, 2.6]
    out = _run_cells(cfg, _fh_cell, [(n, g) for n in ns for g in gs])
    table = [r for o in out if "_table" in o for r in o["_table"]]
    records = [o for o in out if "_table" not in o]
    _write_plot(cfg, "funk_hecke_eigenvalues", ["n", "gamma", "l", "quadrature", "closed"], table,
                {}, "l", "lambda_l")
    consts = {f"lambda_0(n={n},gamma={g:g})": repr(float(distance_power_eigenvalues_closed(SphereGeometry(n), 2 * g - n, 0)[0]))
              for n in ns for g in gs}
    return records, consts


# --------------------------------------------------------------------------
# Sobolev family

def _sobolev_cell(cfg: RunConfig, cell) -> list:
    n, gamma, kind = cell
    geo = SphereGeometry(n)
    case = f"n={n} gamma={gamma:g}"
    recs = []
    L = min(cfg.modes, 24)
    for a in (0.0, 0.3, -0.3, 0.6, -0.6):
        f = extremal_profile(a, gamma, geo, L=48, M=max(cfg.grid, 97))
        r = sobolev_deficit(f, gamma, cfg.grid)
        recs.append(_rec(r.name + "-extremal", r.lhs, r.rhs, "equal", cfg.eq_tol, f"{case} a={a:g}", r.refinement))
    rng = _cell_rng(cfg, n, gamma)
    for k in range(cfg.samples):
        f = random_positive(geo, min(L, 8), rng)
        r = sobolev_deficit(f, gamma, cfg.grid)
        recs.append(_rec(r.name + "-random", r.lhs, r.rhs, "geq", cfg.tol, f"{case} sample={k}", r.refinement))
    if kind == "reverse":
        # nonnegative input with a zero: the energy stays nonnegative
        f = from_callable(lambda t: (1 - t) ** 2, geo, L=4)
        r = nonneg_energy_check(f, gamma, cfg.grid)
        recs.append(_rec("nonneg-energy", r.lhs, r.rhs, "geq", cfg.tol, f"{case} f=(1-t)^2",
                         note="input with a zero routed to the nonnegative-energy diagnostic"))
    return recs


def _sobolev_sweep(cfg: RunConfig, n: int, gamma: float, stem: str):
    geo = SphereGeometry(n)
    amps = np.linspace(0.0, 0.5, 11)
    ys = []
    for e in amps:
        f = ZonalFunction(geo, np.array([1.0, 0.0, e]))
        ys.append(sobolev_deficit(f, gamma, cfg.grid).deficit)
    _write_plot(cfg, stem, ["amplitude", "deficit"], [[a, y] for a, y in zip(amps, ys)],
                {f"n={n} gamma={gamma:g}": (list(amps), ys)}, "amplitude of B_2", "deficit")


def _default_cells(cfg: RunConfig, kind: str) -> list:
    ns = cfg.n or [1, 2, 3]
    if cfg.gamma:
        cells = []
        for n in ns:
            for g in cfg.gamma:
                if kind == "usual" and g < n / 2:
                    cells.append((n, g, kind))
                elif kind == "reverse" and n / 2 < g < n / 2 + 2 and g != n / 2 + 1 and not float(g).is_integer():
                    cells.append((n, g, kind))
        if not cells:
            raise ConfigError(f"no gamma in the supported {kind} range")
        return cells
    if kind == "usual":
        return [(n, g, kind) for n in ns for g in (0.2 * n, 0.35 * n) if g < n / 2]
    table = {1: (0.7, 1.8, 2.3), 2: (1.4, 2.5), 3: (1.7, 2.2, 2.7, 3.3)}
    return [(n, g, kind) for n in ns for g in table.get(n, (n / 2 + 0.4, n / 2 + 1.4))]


def cmd_sobolev(cfg: RunConfig, kind: str = "usual") -> tuple[list, dict]:
    cells = _default_cells(cfg, kind)
    recs = _run_cells(cfg, _sobolev_cell, cells)
    n, g, _ = cells[0]
    _sobolev_sweep(cfg, n, g, f"{'reverse_' if kind == 'reverse' else ''}sobolev_sweep")
    consts = {f"C(n={n},g={g:g})": repr(sobolev_constant(n, g)) for n, g, _ in cells}
    return recs, consts


def cmd_reverse_sobolev(cfg: RunConfig) -> tuple[list, dict]:
    return cmd_sobolev(cfg, "reverse")


def cmd_beckner(cfg: RunConfig) -> tuple[list, dict]:
    recs = []
    for n in cfg.n or [1, 2, 3]:
        geo = SphereGeometry(n)
        case = f"n={n}"
        for a in (0.0, 0.3, -0.3, 0.6, -0.6):
            f = from_callable(lambda t, a=a: n * np.log(conformal_factor(a, t)), geo, L=64, warn_tol=np.inf)
            r = beckner_deficit(f, cfg.grid)
            recs.append(_rec("beckner-extremal", r.lhs, r.rhs, "equal", cfg.eq_tol, f"{case} a={a:g}"))
        rng = _cell_rng(cfg, n, n / 2)
        for k in range(cfg.samples):
            c = rng.standard_normal(7) * 0.7 ** np.arange(7)
            r = beckner_deficit(ZonalFunction(geo, c), cfg.grid)
            recs.append(_rec("beckner-random", r.lhs, r.rhs, "geq", cfg.tol, f"{case} sample={k}"))
    geo = SphereGeometry((cfg.n or [1])[0])
    amps = np.linspace(0, 2, 11)
    ys = [beckner_deficit(ZonalFunction(geo, np.array([0.0, 0.0, e])), cfg.grid).deficit for e in amps]
    _write_plot(cfg, "beckner_sweep", ["amplitude", "deficit"], [[a, y] for a, y in zip(amps, ys)],
                {"beckner": (list(amps), ys)}, "amplitude of B_2", "deficit")
    return recs, {}


def _rhls_cell(cfg: RunConfig, cell) -> list:
    n, lam = cell
    geo = SphereGeometry(n)
    case = f"n={n} lambda={lam:g}"
    recs = []
    for a in (0.0, 0.3, -0.5):
        f = hls_extremal(a, lam, geo, L=48)
        r = reverse_hls_ratio(f, f, lam, cfg.grid)
        recs.append(_rec("reverse-hls-extremal", r.lhs, r.rhs, "equal", 1e-7, f"{case} a={a:g}", r.refinement))
    rng = _cell_rng(cfg, n, lam)
    for k in range(cfg.samples):
        f = random_positive(geo, 6, rng)
        g = random_positive(geo, 6, rng)
        r = reverse_hls_ratio(f, g, lam, cfg.grid)
        recs.append(_rec("reverse-hls-random", r.extras["ratio"], 1.0, "geq", cfg.tol, f"{case} sample={k}",
                         r.refinement))
    return recs


def cmd_reverse_hls(cfg: RunConfig) -> tuple[list, dict]:
    ns = cfg.n or [1, 2, 3]
    lams = cfg.gamma or [0.5, 1.0, 2.0]
    cells = [(n, lam) for n in ns for lam in lams]
    consts = {f"N(n={n},lambda={lam:g})": repr(reverse_hls_constant(n, lam)) for n, lam in cells}
    return _run_cells(cfg, _rhls_cell, cells), consts


def _duality_cell(cfg: RunConfig, cell) -> list:
    n, gamma = cell
    geo = SphereGeometry(n)
    case = f"n={n} gamma={gamma:g}"
    rng = _cell_rng(cfg, n, gamma)
    recs = []
    for k in range(cfg.samples):
        f = random_positive(geo, 6, rng)
        g = random_positive(geo, 6, rng)
        r = duality_gap(f, g, gamma, cfg.grid)
        recs.append(_rec("duality-random", r.lhs, r.rhs, "geq", cfg.tol, f"{case} sample={k}"))
        if k < 5:
            recs.append(_rec("duality-identity", r.extras["identity_residual"], 0.0, "small", 1e-9,
                             f"{case} sample={k}"))
    for k in range(3):
        g = random_positive(geo, 6, rng)
        f = -1.0 * inverse_spectral_apply(g, gamma)
        try:
            r = duality_gap(f, g, gamma, cfg.grid)
        except NonPositiveValue:
            recs.append(_note("duality-equality", f"{case} k={k}", "skip", "-P^{-1}g not positive"))
            continue
        recs.append(_rec("duality-equality", r.lhs, r.rhs, "equal", 1e-7, f"{case} k={k}"))
    return recs


def cmd_duality(cfg: RunConfig) -> tuple[list, dict]:
    ns = cfg.n or [1, 2, 3]
    cells = []
    for n in ns:
        gs = [g for g in (cfg.gamma or [n / 2 + 0.25, n / 2 + 0.6]) if n / 2 < g < n / 2 + 1]
        cells += [(n, g) for g in gs]
    if not cells:
        raise ConfigError("duality needs gamma in (n/2, n/2 + 1)")
    return _run_cells(cfg, _duality_cell, cells), {}


# --------------------------------------------------------------------------
# stability

def _stability_cell(cfg: RunConfig, cell) -> list:
    n, gamma = cell
    geo = SphereGeometry(n)
    case = f"n={n} gamma={gamma:g}"
    rng = _cell_rng(cfg, n, gamma)
    recs = []
    for k in range(cfg.samples):
        f = random_positive(geo, 6, rng)
        try:
            r = stability_bound(f, gamma, L=64, M=cfg.grid)
        except GJMSError as exc:
            recs.append(_note("stability", f"{case} sample={k}", "fail", f"solver failure: {exc}"))
            continue
        recs.append(_rec("stability-bound", r.deficit, r.lower_bound, "geq", cfg.tol, f"{case} sample={k}"))
        recs.append(_rec("stability-lower-nonneg", r.lower_bound, 0.0, "geq", cfg.tol, f"{case} sample={k}"))
        recs.append(_rec("stability-agreement", r.lower_bound, r.lower_bound_alt, "equal", 1e-7,
                         f"{case} sample={k}"))
    f = extremal_profile(0.4, gamma, geo, L=48)
    r = stability_bound(f, gamma, L=48, M=cfg.grid)
    recs.append(_rec("stability-extremal-deficit", r.deficit, 0.0, "small", 1e-6 * abs(r.sobolev.lhs) + 1e-9, case))
    recs.append(_rec("stability-extremal-lower", r.lower_bound, 0.0, "small", 1e-6 * abs(r.sobolev.lhs) + 1e-9, case))
    return recs


def cmd_stability(cfg: RunConfig) -> tuple[list, dict]:
    ns = cfg.n or [1]
    cells = []
    for n in ns:
        for g in cfg.gamma or [n / 2 + 1.1, n / 2 + 1.3, n / 2 + 1.7, n / 2 + 1.9]:
            if not n / 2 + 1 < g < n / 2 + 2 or float(g).is_integer():
                raise ConfigError(f"stability needs non-integer gamma in ({n / 2 + 1}, {n / 2 + 2}), got {g}")
            cells.append((n, g))
    recs = _run_cells(cfg, _stability_cell, cells)
    n, g = cells[0]
    geo = SphereGeometry(n)
    amps = np.linspace(0.02, 0.4, 10)
    rows = []
    for e in amps:
        r = stability_bound(ZonalFunction(geo, np.array([1.0, 0.2, e, 0.1 * e])), g, L=32, M=cfg.grid)
        rows.append([e, r.deficit, r.lower_bound])
    _write_plot(cfg, "stability_sweep", ["amplitude", "deficit", "lower_bound"], rows,
                {"deficit": (list(amps), [r[1] for r in rows]), "lower bound": (list(amps), [r[2] for r in rows])},
                "amplitude", "value")
    return recs, {}


# --------------------------------------------------------------------------
# scattering

def _scattering_cell(cfg: RunConfig, cell) -> list:
    n, gamma = cell
    geo = SphereGeometry(n)
    case = f"n={n} gamma={gamma:g}"
    rng = _cell_rng(cfg, n, gamma)
    f = ZonalFunction(geo, rng.standard_normal(7) * 0.6 ** np.arange(7))
    sol = PoissonSolution(geo, gamma, f)
    recs = []
    worst = (-1.0, 0.0, 0.0, "")
    for r in np.linspace(0.1, 0.9, 5):
        for t in np.linspace(-0.8, 0.8, 5):
            s = float(sol.eval_series(r, t))
            i = float(sol.eval_integral(r, t, M=cfg.grid))
            rel = abs(s - i) / max(abs(s), 1e-12)
            if rel > worst[0]:
                worst = (rel, i, s, f"r={r:.2f} t={t:.2f}")
    recs.append(_rec("series-vs-integral", worst[1], worst[2], "equal", 1e-8, f"{case} {worst[3]}"))
    recs.append(_rec("origin-value", origin_value_integral(n, gamma), origin_value_series(n, gamma), "equal", 1e-12,
                     case))
    res = max(pde_residual(sol, r, t) for r in (0.3, 0.6) for t in (-0.4, 0.5))
    recs.append(_rec("pde-residual", res, 0.0, "small", 1e-5, case))
    tr = boundary_trend(sol, 0.3)
    target = float(np.asarray(f.evaluate(np.array([0.3])))[0])
    errs = np.abs(tr.ravel() - target)
    recs.append(_rec("boundary-trend", errs[-1], 0.0, "small", 1e-2 * max(1.0, abs(target)), case,
                     refinement=errs.tolist(), note="error at r = 1 - 10^-k, k = 2, 3, 4"))
    recs.append(_rec("boundary-trend-decreasing", errs[0] - errs[-1], 0.0, "geq", 0.0, case))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sol.eval_integral(0.99, 0.1, M=cfg.grid)
    flagged = any(issubclass(w.category, NearBoundaryWarning) for w in caught)
    recs.append(_note("near-boundary-flag", f"{case} r=0.99", "pass" if flagged else "fail",
                      "integral route flagged as unstable" if flagged else "no warning raised"))
    cinv = 1.0 / c_gamma(gamma)
    m = scattering_multipliers(n, gamma, cfg.modes)
    worst = max(range(cfg.modes + 1), key=lambda l: abs(m[l] - branch_two_lead(n, gamma, l)) / max(abs(m[l]), 1e-300))
    recs.append(_rec("scattering-vs-jet", m[worst], branch_two_lead(n, gamma, worst), "equal", 1e-10,
                     f"{case} l={worst}"))
    recs.append(_rec("scattering-multiplier", m[worst], cinv * gjms_multiplier(n, gamma, worst), "equal", 1e-12,
                     f"{case} l={worst}"))
    zero = PoissonSolution(geo, gamma, ZonalFunction(geo, np.zeros(3)))
    recs.append(_rec("zero-datum", float(np.max(np.abs(zero.eval_series(np.array([0.2, 0.7]), np.array([0.1, -0.3]))))),
                     0.0, "small", 0.0, case))
    return recs


def cmd_scattering(cfg: RunConfig) -> tuple[list, dict]:
    ns = cfg.n or [1, 2, 3]
    gs = cfg.gamma or [0.4, 1.3, 2.6]
    for g in gs:
        if float(g).is_integer():
            raise ConfigError("scattering needs non-integer gamma")
    cells = [(n, g) for n in ns for g in gs]
    consts = {f"c_gamma({g:g})": repr(c_gamma(g)) for g in gs}
    return _run_cells(cfg, _scattering_cell, cells), consts


# --------------------------------------------------------------------------
# boundary calculus

def _boundary_cell(cfg: RunConfig, cell) -> list:
    n, gamma = cell
    geo = SphereGeometry(n)
    case = f"n={n} gamma={gamma:g}"
    rng = _cell_rng(cfg, n, gamma)
    F, h = math.floor(gamma), math.floor(gamma / 2)
    fr = gamma - F
    order = cfg.jet_order or bd.default_order(gamma)
    L = 5
    recs = []
    # normalisation, annihilation and cross-branch annihilation
    worst_norm = worst_ann = worst_cross = 0.0
    for family, rg in ((bd.INTEGER, range(h + 1)), (bd.FRACTIONAL, range(F - h))):
        for j in rg:
            own = 2 * j + (2 * fr if family == bd.FRACTIONAL else 0)
            other = 2 * j + (0 if family == bd.FRACTIONAL else 2 * fr)
            c = rng.standard_normal(L + 1)
            for e, slot in ((own, "norm"), (own + 2, "ann"), (own + 4, "ann"), (other, "cross"), (other + 2, "cross")):
                U = bd.RhoJet.zeros(geo, gamma, 0.0, order, L)
                U.add_term(e, c)
                got = bd.boundary_op_small(U, j, family).coeffs
                if slot == "norm":
                    worst_norm = max(worst_norm, float(np.max(np.abs(got - c))))
                elif slot == "ann":
                    worst_ann = max(worst_ann, float(np.max(np.abs(got))) / float(np.max(np.abs(c))))
                else:
                    worst_cross = max(worst_cross, float(np.max(np.abs(got))))
    recs.append(_rec("normalization", worst_norm, 0.0, "small", 1e-10, case))
    recs.append(_rec("annihilation", worst_ann, 0.0, "small", 1e-10, case))
    recs.append(_rec("cross-branch", worst_cross, 0.0, "small", 0.0, case))
    # peel-off on a random two-branch jet
    U = bd.RhoJet.zeros(geo, gamma, 0.0, order, L)
    for m in range(order + 1):
        U.add_term(2 * m, rng.standard_normal(L + 1))
        U.add_term(2 * m + 2 * fr, rng.standard_normal(L + 1))
    peel = max(float(np.max(np.abs(c.coeffs - U.coefficient(e)))) for e, c in bd.peel_expansion(U))
    recs.append(_rec("peel-off", peel, 0.0, "small", 1e-10, case))
    # extension, intrinsic identity, symmetry, integral identity
    data = bd.BoundaryData.random(geo, gamma, L, rng)
    Ut = bd.dirichlet_extend(data, order=order)
    back = bd.small_data(Ut)
    rec_err = max(float(np.max(np.abs((a - b).coeffs))) for a, b in
                  zip(back.integer + back.fractional, data.integer + data.fractional))
    recs.append(_rec("dirichlet-recovery", rec_err, 0.0, "small", 1e-9, case))
    ii = [bd.intrinsic_identity_residual(Ut, j, bd.INTEGER) for j in range(h + 1, F + 1)]
    ii += [bd.intrinsic_identity_residual(Ut, j, bd.FRACTIONAL) for j in range(F - h, F + 1)]
    recs.append(_rec("intrinsic-identity", max(ii), 0.0, "small", 1e-9, case))
    Vt = bd.dirichlet_extend(bd.BoundaryData.random(geo, gamma, L, rng), order=order)
    q1, q2 = bd.dirichlet_form(Ut, Vt).value, bd.dirichlet_form(Vt, Ut).value
    recs.append(_rec("q-symmetry", q1, q2, "equal", 1e-8, case))
    qu = bd.dirichlet_form(Ut, Ut)
    recs.append(_rec("q-zeta-equality", qu.value, qu.zeta_form, "equal", 1e-9, case))
    for eps in (0.01, 0.02):
        e = bd.energy_identity_check(data, l=1, eps=eps)
        recs.append(_rec("energy-inequality", e.excess, 0.0, "geq", cfg.tol, f"{case} eps={eps:g}"))
        recs.append(_rec("energy-identity", e.excess, e.A1, "equal", 1e-8, f"{case} eps={eps:g}"))
    # covariance for small indices
    tau = ZonalFunction.mode(geo, 1, 0.3)
    tau2 = ZonalFunction.mode(geo, 2, 0.1)
    for family, rg in ((bd.INTEGER, range(h + 1)), (bd.FRACTIONAL, range(F - h))):
        for j in rg:
            c = bd.conformal_covariance_check(Ut, tau, j, family, tau2=tau2)
            recs.append(_rec("covariance", c.residual, 0.0, "small", 1e-8, f"{case} {family} j={j}"))
    return recs


def format_coefficient_table(co) -> str:
    """Plain-text b / sigma / zeta display for one gamma."""
    lines = [f"gamma = {co.gamma:g}", f"{'J':>3} {'sigma_J':>22} {'zeta_J':>22}"]
    for J, (s, z) in enumerate(zip(co.sigma, co.zeta)):
        lines.append(f"{J:>3} {s:>22.15g} {z:>22.15g}")
    lines.append(f"{'j':>3} {'b (integer family)':>22} {'b (fractional family)':>22}")
    for j in range(max(len(co.b_integer), len(co.b_fractional))):
        bi = f"{co.b_integer[j]:.15g}" if j < len(co.b_integer) else "-"
        bf = f"{co.b_fractional[j]:.15g}" if j < len(co.b_fractional) else "-"
        lines.append(f"{j:>3} {bi:>22} {bf:>22}")
    return "\n".join(lines)


def _trace_cells(cfg: RunConfig) -> list:
    recs = []
    for n in (1, 2):
        geo = SphereGeometry(n)
        if n == 2:
            f = extremal_profile(0.4, 0.5, geo, L=48)
            name = "escobar"
        else:
            f = from_callable(lambda t: np.log(conformal_factor(0.4, t)), geo, L=64, warn_tol=np.inf)
            name = "lebedev-milin"
        r = bd.trace_deficit(bd.BoundaryData(0.5, [f], []))
        recs.append(_rec(f"{name}-extremal", r.lhs, r.rhs, "equal", cfg.eq_tol, f"n={n} gamma=0.5"))
        rng = _cell_rng(cfg, n, 0.5, 7)
        for k in range(10):
            g = random_positive(geo, 6, rng) if n == 2 else ZonalFunction(geo, rng.standard_normal(7) * 0.7 ** np.arange(7))
            r = bd.trace_deficit(bd.BoundaryData(0.5, [g], []))
            recs.append(_rec(f"{name}-random", r.lhs, r.rhs, "geq", cfg.tol, f"n={n} gamma=0.5 sample={k}"))
    geo = SphereGeometry(3)
    rng = _cell_rng(cfg, 3, 2.6, 7)
    for k in range(5):
        data = bd.BoundaryData(2.6, [random_positive(geo, 4, rng), ZonalFunction(geo, rng.standard_normal(5))],
                               [ZonalFunction(geo, rng.standard_normal(5))])
        r = bd.trace_deficit(data)
        recs.append(_rec("trace-case-ii", r.lhs, r.rhs, "geq", cfg.tol, f"n=3 gamma=2.6 sample={k}"))
    geo = SphereGeometry(1)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            data = bd.BoundaryData(1.5, [ZonalFunction(geo, np.array([0.0, 0.3, 0.1, 0.2]))], [ZonalFunction(geo, np.zeros(4))])
            r = bd.trace_deficit(data)
        warned = any("empty sum" in str(w.message) for w in caught)
        recs.append(_rec("trace-empty-range", r.rhs, 0.0, "small", 0.0, "n=1 gamma=1.5",
                         note="empty-range warning raised" if warned else "no warning"))
        if not warned:
            recs[-1]["verdict"] = "fail"
    except UnimplementedCase as exc:
        recs.append(_note("trace-empty-range", "n=1 gamma=1.5", "skip", str(exc)))
    return recs


def cmd_boundary(cfg: RunConfig) -> tuple[list, dict]:
    ns = cfg.n or [1, 2, 3]
    gs = cfg.gamma or [0.5, 1.3, 2.6, 3.4]
    for g in gs:
        if float(g).is_integer():
            raise ConfigError("boundary calculus needs non-integer gamma")
    cells = [(n, g) for n in ns for g in gs]
    recs = []
    grid = [g for g in np.linspace(0.005, 3.995, 400) if abs(g - round(g)) > 1e-9]
    zmin = min(min(bd.boundary_coeffs(float(g)).zeta) for g in grid)
    recs.append(_rec("zeta-positive", zmin, 0.0, "geq", 0.0, "400-point grid"))
    worst = 0.0
    for g in grid:
        co = bd.boundary_coeffs(float(g))
        h = math.floor(g / 2)
        for J in range(len(co.sigma)):
            worst = max(worst, abs(co.sigma[J] - co.sigma_closed[J]) / abs(co.sigma_closed[J]))
            if J <= h:
                worst = max(worst, abs(co.zeta[J] - co.zeta_closed[J]) / abs(co.zeta_closed[J]))
        for a, b in zip(co.b_integer, co.b_integer_closed):
            worst = max(worst, abs(a - b) / abs(b))
    recs.append(_rec("coefficient-identities", worst, 0.0, "small", 1e-10, "400-point grid",
                     note="sigma, small-index zeta and integer b against their closed forms"))
    recs += _run_cells(cfg, _boundary_cell, cells)
    recs += _trace_cells(cfg)
    consts = {f"gamma={g:g}": json.dumps(bd.boundary_coeffs(g).table()) for g in gs}
    for g in gs:
        sys.stderr.write(format_coefficient_table(bd.boundary_coeffs(g)) + "\n")
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, "boundary_coefficients.json"), "w") as fh:
            json.dump([bd.boundary_coeffs(g).table() for g in gs], fh, indent=2)
    return recs, consts


# --------------------------------------------------------------------------
# counterexample

def cmd_counterexample(cfg: RunConfig) -> tuple[list, dict]:
    recs = []
    for n in cfg.n or [1]:
        for g in cfg.gamma or [2.7]:
            if g <= n / 2 + 2 or float(g - n / 2).is_integer():
                raise ConfigError(f"counterexample search needs non-resonant gamma > n/2 + 2, got {g}")
            geo = SphereGeometry(n)
            case = f"n={n} gamma={g:g}"
            try:
                r = counterexample_search(g, geo, budget=cfg.budget, seed=cfg.seed, M=cfg.grid)
                rec = _rec("counterexample", r.lhs, r.rhs, "geq", 0.0, case, r.refinement)
                # a certified negative deficit is the desired outcome
                rec["verdict"] = "pass" if rec["deficit"] < 0 else "warn"
                rec["note"] = f"negative deficit certified after {r.extras['evaluations']} evaluations"
                recs.append(rec)
            except BudgetExhausted as exc:
                b = exc.best
                rec = _rec("counterexample", b.lhs, b.rhs, "geq", 0.0, case)
                rec["verdict"] = "warn"
                rec["note"] = str(exc)
                recs.append(rec)
    return recs, {}


HANDLERS = {
    "funk-hecke": cmd_funk_hecke,
    "sobolev": cmd_sobolev,
    "reverse-sobolev": cmd_reverse_sobolev,
    "beckner": cmd_beckner,
    "reverse-hls": cmd_reverse_hls,
    "duality": cmd_duality,
    "stability": cmd_stability,
    "scattering": cmd_scattering,
    "boundary": cmd_boundary,
    "counterexample": cmd_counterexample,
}


# --------------------------------------------------------------------------
# driver

def run(cfg: RunConfig) -> dict:
    t0 = time.perf_counter()
    records, consts = HANDLERS[cfg.command](cfg)
    verdict = "fail" if any(r["verdict"] == "fail" for r in records) else "pass"
    return {"command": cfg.command, "config": cfg.digest(), "records": records, "verdict": verdict,
            "seconds": time.perf_counter() - t0, "constants": consts}


_CSV_FIELDS = ["name", "case", "lhs", "rhs", "deficit", "relative", "refinement", "verdict", "note"]


def write_report(report: dict, cfg: RunConfig, stream=None) -> None:
    if cfg.format == "json":
        text = json.dumps(report, indent=2, default=float)
        if cfg.out:
            os.makedirs(cfg.out, exist_ok=True)
            with open(os.path.join(cfg.out, "report.json"), "w") as fh:
                fh.write(text)
        (stream or sys.stdout).write(text + "\n")
        return
    rows = []
    for r in report["records"]:
        row = {k: r.get(k) for k in _CSV_FIELDS}
        if row["refinement"] is not None:
            row["refinement"] = ";".join(repr(x) for x in row["refinement"])
        rows.append(row)
    targets = [stream or sys.stdout]
    fh = None
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        fh = open(os.path.join(cfg.out, "report.csv"), "w", newline="")
        targets.append(fh)
    try:
        for t in targets:
            w = csv.DictWriter(t, fieldnames=_CSV_FIELDS)
            w.writeheader()
            w.writerows(rows)
    finally:
        if fh:
            fh.close()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gjmslab", description="Verification suites for the fractional GJMS calculus on S^n.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--n", help="sphere dimension(s), comma separated")
    p.add_argument("--gamma", help="gamma value(s), comma separated (lambda for reverse-hls)")
    p.add_argument("--gamma-range", dest="gamma_range", help="start:stop:count sweep, overrides --gamma")
    p.add_argument("--grid", type=int, help="quadrature nodes M")
    p.add_argument("--modes", type=int, help="spectral truncation L")
    p.add_argument("--jet-order", dest="jet_order", type=int, help="rho-jet order")
    p.add_argument("--tol", type=float, help="inequality tolerance")
    p.add_argument("--eq-tol", dest="eq_tol", type=float, help="equality-case tolerance")
    p.add_argument("--samples", type=int, help="random inputs per cell")
    p.add_argument("--budget", type=int, help="evaluation budget of the counterexample search")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory for report and plot data")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--parallel", type=int, help="worker processes for suite cells")
    p.add_argument("--plots", action="store_true", default=None, help="also write SVG plots next to the CSV data")
    p.add_argument("--config", help="flat key = value file; flags override it")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        report = run(cfg)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    write_report(report, cfg)
    n_fail = sum(r["verdict"] == "fail" for r in report["records"])
    n_warn = sum(r["verdict"] == "warn" for r in report["records"])
    sys.stderr.write(f"{cfg.command}: {len(report['records'])} records, {n_fail} failed, {n_warn} warnings, "
                     f"{report['seconds']:.1f} s -> {report['verdict'].upper()}\n")
    return EXIT_FAIL if report["verdict"] == "fail" else EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
