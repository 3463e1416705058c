"""End-to-end convergence studies: empirical sup errors across an n grid,
bound comparison, log-log rate fitting, and deterministic report emission.

Per-n rows are independent of each other and are assembled in n order; all
randomness flows from the single root seed through SeedSequence children,
so identical configs produce byte-identical reports.  Wall times are kept
out of the canonical outputs (they can never be reproducible) and live in
a separate sidecar.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import InsufficientDataError, ParameterError, ReportIOError
from .families import RNG_NAME, Family, bernoulli_family, poisson_family
from .functions import TargetFunction, builtin_catalog, trial_function
from .grids import GridSpec
from .modulus import ModulusProfile, WeightSpec, modulus_profile
from .operators import sup_error
from .bounds import poisson_curve, stieltjes_bound
from .tails import (
    PowerTailSpec,
    TailCurve,
    atf_curve,
    conjugate_pair_for_family,
    empirical_atf,
    power_tail_curve,
    tail_z_max,
)

FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, immutable description of one convergence study."""

    function_name: str = "square"
    function_x0: float = 0.5
    function_alpha: float = 1.0
    function_c: float = 1.0
    function_freq: float = 1.0
    family_kind: str = "bernoulli"
    family_eps: float = 1e-3
    family_x_min: float = 1.0
    family_x_max: float = 64.0
    weight_kind: str = "family-sigma"
    weight_c: float = 1.0
    weight_alpha_exp: float = 0.5
    weight_beta_exp: float = 0.5
    x_grid_kind: str = "uniform"
    x_grid_size: int = 257
    h_grid_size: int = 65
    delta_grid_size: int = 49
    z_grid_size: int = 257
    modulus_window: float = 64.0
    tail_source: str = "exact-conjugate"
    tail_p: Optional[float] = None
    tail_k: Optional[float] = None
    tail_n_max: int = 4096
    tail_lambda_cap: float = 50.0
    tail_lambda_size: int = 1001
    tail_floor: float = 1e-12
    tail_z_cap: float = 64.0
    tail_trials: int = 100_000
    tail_x: Optional[float] = None
    trial_x0: Optional[float] = None
    trial_alpha: Optional[float] = None
    n_grid: tuple[int, ...] = (16, 64, 256, 1024, 4096)
    seed: int = 20240809
    mode: str = "exact"
    szasz_tail_tol: float = 1e-12
    mc_trials: int = 10_000

    def __post_init__(self):
        if len(self.n_grid) == 0 or any(
            b <= a for a, b in zip(self.n_grid, self.n_grid[1:])
        ) or min(self.n_grid) < 1:
            raise ParameterError("n grid must be a strictly increasing positive sequence")
        if self.tail_source not in ("exact-conjugate", "power-tail", "empirical"):
            raise ParameterError(f"unknown tail source {self.tail_source!r}")
        if self.tail_source == "power-tail" and (self.tail_p is None or self.tail_k is None):
            raise ParameterError("power-tail source needs both tail.p and tail.k (no default K exists)")
        if self.mode not in ("exact", "monte-carlo"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if (self.trial_x0 is None) != (self.trial_alpha is None):
            raise ParameterError("trial.x0 and trial.alpha must be set together")


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    empirical_delta: float
    argmax_x: float
    error_radius: float
    lower_bracket: float
    upper_stieltjes: float
    upper_bracket: float
    lower_ratio: Optional[float] = None


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr: float


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple[ConvergenceRow, ...]
    config: dict
    seed: int
    rng: str = RNG_NAME
    version: str = __version__
    fit: Optional[RateFit] = None
    wall_times: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        ns = [r.n for r in self.rows]
        if ns != sorted(ns):
            raise ParameterError("rows must be sorted by n")


@dataclass(frozen=True)
class ValiditySummary:
    passed: bool
    violations: tuple[dict, ...]
    checked_rows: int
    warning: Optional[str] = None


def build_function(cfg: ExperimentConfig) -> TargetFunction:
    name = cfg.function_name
    if name == "power-cusp":
        return builtin_catalog(name, x0=cfg.function_x0, alpha=cfg.function_alpha)
    if name == "constant":
        return builtin_catalog(name, c=cfg.function_c)
    if name == "sine":
        return builtin_catalog(name, freq=cfg.function_freq)
    return builtin_catalog(name)


def build_family(cfg: ExperimentConfig) -> Family:
    if cfg.family_kind == "bernoulli":
        return bernoulli_family(cfg.family_eps)
    if cfg.family_kind == "poisson":
        return poisson_family(cfg.family_x_min, cfg.family_x_max)
    raise ParameterError(f"unknown family kind {cfg.family_kind!r}")


def build_weight(cfg: ExperimentConfig, fam: Family) -> WeightSpec:
    if cfg.weight_kind == "family-sigma":
        return WeightSpec(kind="family-sigma", family=fam)
    if cfg.weight_kind == "unit":
        return WeightSpec(kind="unit")
    return WeightSpec(
        kind="jacobi", c=cfg.weight_c, alpha_exp=cfg.weight_alpha_exp, beta_exp=cfg.weight_beta_exp
    )


def build_tail_curve(cfg: ExperimentConfig, fam: Family) -> TailCurve:
    """Tail curve per configured source.

    The default exact-conjugate source takes the closed Poisson conjugate
    for the Poisson family and the envelope conjugate built from the exact
    log-MGF on the restricted x-domain for Bernoulli.
    """
    if cfg.tail_source == "power-tail":
        return power_tail_curve(PowerTailSpec(p=cfg.tail_p, K=cfg.tail_k))
    if cfg.tail_source == "empirical":
        x = cfg.tail_x
        if x is None:
            x = 0.5 if fam.kind == "bernoulli" else fam.x_domain[0]
        u_grid = np.linspace(0.0, 16.0, 129)
        return empirical_atf(fam, x, u_grid, list(cfg.n_grid), cfg.tail_trials, seed=cfg.seed)
    if fam.kind == "poisson":
        return poisson_curve()
    xg = GridSpec(cfg.x_grid_kind, cfg.x_grid_size).points(*fam.x_domain)
    u_probe = np.linspace(0.0, cfg.tail_z_cap / 4.0, 65)
    pair = conjugate_pair_for_family(
        fam,
        xg,
        u_probe,
        n_max=cfg.tail_n_max,
        lambda_cap=cfg.tail_lambda_cap,
        grid_size=cfg.tail_lambda_size,
    )
    return atf_curve(pair)


def build_modulus_profile(
    cfg: ExperimentConfig, f: TargetFunction, w: WeightSpec, delta_max: float
) -> ModulusProfile:
    if f.interval.finite:
        window = (f.interval.a, f.interval.b)
    else:
        window = (f.interval.a, cfg.modulus_window)
    xs = GridSpec("uniform", cfg.x_grid_size).points(*window)
    deltas = np.concatenate([[0.0], np.geomspace(1e-4, max(delta_max, 1e-3), cfg.delta_grid_size - 1)])
    return modulus_profile(f, w, deltas, xs, cfg.h_grid_size, metadata={"window": window})


def run_convergence(cfg: ExperimentConfig) -> ConvergenceTable:
    """Compute per-n sup errors, Stieltjes brackets and optional trial ratios."""
    f = build_function(cfg)
    fam = build_family(cfg)
    w = build_weight(cfg, fam)
    curve = build_tail_curve(cfg, fam)
    z_max = tail_z_max(curve, floor=cfg.tail_floor, cap=cfg.tail_z_cap)
    z_grid = np.linspace(0.0, max(z_max, 1e-6), cfg.z_grid_size)
    profile = build_modulus_profile(cfg, f, w, delta_max=z_max / math.sqrt(min(cfg.n_grid)))
    x_grid = GridSpec(cfg.x_grid_kind, cfg.x_grid_size).points(*fam.x_domain)

    trial = None
    if cfg.trial_alpha is not None:
        trial = trial_function(cfg.trial_x0, cfg.trial_alpha, fam.interval)

    rows = []
    times = []
    for n in cfg.n_grid:
        t0 = time.perf_counter()
        se = sup_error(
            f, fam, n, x_grid,
            mode=cfg.mode, tail_tol=cfg.szasz_tail_tol, trials=cfg.mc_trials, seed=cfg.seed,
        )
        rep = stieltjes_bound(profile, curve, n, z_grid=z_grid, f_sup=f.sup_abs)
        ratio = None
        if trial is not None:
            tse = sup_error(trial, fam, n, x_grid, mode="exact", tail_tol=cfg.szasz_tail_tol)
            ratio = tse.delta * n ** (cfg.trial_alpha / 2.0) / trial.holder.seminorm
        rows.append(
            ConvergenceRow(
                n=n,
                empirical_delta=se.delta,
                argmax_x=se.argmax_x,
                error_radius=se.error_radius,
                lower_bracket=rep.enclosure[0],
                upper_stieltjes=rep.upper_stieltjes,
                upper_bracket=rep.enclosure[1],
                lower_ratio=ratio,
            )
        )
        times.append(time.perf_counter() - t0)

    table = ConvergenceTable(
        rows=tuple(rows),
        config=asdict(cfg),
        seed=cfg.seed,
        wall_times=tuple(times),
    )
    try:
        fit = rate_fit(table)
    except InsufficientDataError:
        fit = None
    return replace(table, fit=fit)


def rate_fit(table: ConvergenceTable) -> RateFit:
    """OLS fit of log(delta) on log(n); zero-delta rows are excluded."""
    pts = [(r.n, r.empirical_delta) for r in table.rows if r.empirical_delta > 0.0]
    if len(pts) < 4:
        raise InsufficientDataError(
            f"rate fit needs at least 4 rows with positive delta, have {len(pts)}"
        )
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    m = x.size
    xbar = x.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    s2 = float(np.sum(resid**2) / (m - 2))
    return RateFit(slope=slope, intercept=intercept, stderr=math.sqrt(s2 / sxx))


def validity_check(table: ConvergenceTable) -> ValiditySummary:
    """Row-wise check empirical <= upper bracket + operator radius.

    Violations are returned as data with their row context, never raised.
    """
    if not table.rows:
        return ValiditySummary(
            passed=True, violations=(), checked_rows=0, warning="empty table: vacuous pass"
        )
    violations = []
    for r in table.rows:
        allowance = r.upper_bracket + r.error_radius
        if r.empirical_delta > allowance:
            violations.append(
                {
                    "n": r.n,
                    "empirical_delta": r.empirical_delta,
                    "upper_bracket": r.upper_bracket,
                    "error_radius": r.error_radius,
                    "excess": r.empirical_delta - allowance,
                }
            )
    return ValiditySummary(
        passed=not violations, violations=tuple(violations), checked_rows=len(table.rows)
    )


# ---------------------------------------------------------------------------
# Serialization: bit-stable CSV / JSON
# ---------------------------------------------------------------------------

CSV_COLUMNS = (
    "n",
    "empirical_delta",
    "argmax_x",
    "error_radius",
    "lower_bracket",
    "upper_stieltjes",
    "upper_bracket",
    "lower_ratio",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FMT % float(value)


def _table_payload(table: ConvergenceTable) -> dict:
    payload = {
        "config": _jsonable(table.config),
        "seed": table.seed,
        "rng": table.rng,
        "version": table.version,
        "fit": None if table.fit is None else asdict(table.fit),
        "rows": [asdict(r) for r in table.rows],
    }
    return payload


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_report(table: ConvergenceTable, fmt: str, destination) -> None:
    """Emit a bit-stable CSV or JSON file (UTF-8, LF, sorted JSON keys)."""
    path = Path(destination)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in table.rows:
            writer.writerow(
                [
                    str(r.n),
                    _fmt(r.empirical_delta),
                    _fmt(r.argmax_x),
                    _fmt(r.error_radius),
                    _fmt(r.lower_bracket),
                    _fmt(r.upper_stieltjes),
                    _fmt(r.upper_bracket),
                    _fmt(r.lower_ratio),
                ]
            )
        data = buf.getvalue()
    elif fmt == "json":
        data = json.dumps(_table_payload(table), sort_keys=True, indent=2) + "\n"
    else:
        raise ParameterError(f"unknown report format {fmt!r}")
    try:
        path.write_text(data, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc}") from exc


def read_report(path) -> ConvergenceTable:
    """Parse a JSON report back into an equal ConvergenceTable."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    rows = tuple(
        ConvergenceRow(
            n=r["n"],
            empirical_delta=r["empirical_delta"],
            argmax_x=r["argmax_x"],
            error_radius=r["error_radius"],
            lower_bracket=r["lower_bracket"],
            upper_stieltjes=r["upper_stieltjes"],
            upper_bracket=r["upper_bracket"],
            lower_ratio=r["lower_ratio"],
        )
        for r in payload["rows"]
    )
    fit = payload["fit"]
    cfg = dict(payload["config"])
    if isinstance(cfg.get("n_grid"), list):
        cfg["n_grid"] = tuple(cfg["n_grid"])
    return ConvergenceTable(
        rows=rows,
        config=cfg,
        seed=payload["seed"],
        rng=payload["rng"],
        version=payload["version"],
        fit=None if fit is None else RateFit(**fit),
    )


def write_timings(table: ConvergenceTable, destination) -> None:
    """Non-canonical per-row wall times for the performance suite."""
    path = Path(destination)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "wall_time_s"])
    for r, t in zip(table.rows, table.wall_times):
        writer.writerow([str(r.n), _fmt(t)])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")
