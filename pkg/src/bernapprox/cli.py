"""Command-line entry point: evaluate / modulus / tail / bound / run.

Exit codes: 0 success (and bound validity holds), 1 validity violation,
2 usage error, 3 runtime error.  Every failure prints a single
machine-parsable line to stderr of the form
``error kind=<usage|runtime> msg="..."``.
"""

from __future__ import annotations

import csv
import difflib
import io
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from . import __version__, config as cfgmod
from .bounds import hdt_bound, stieltjes_bound
from .errors import BernApproxError, ParameterError
from .experiments import (
    FLOAT_FMT,
    ExperimentConfig,
    build_family,
    build_function,
    build_modulus_profile,
    build_tail_curve,
    build_weight,
    run_convergence,
    validity_check,
    write_report,
    write_timings,
)
from .grids import GridSpec
from .modulus import holder_seminorm
from .operators import operator_value, sup_error
from .tails import tail_z_max


def _fmt(value) -> str:
    if value is None:
        return ""
    return FLOAT_FMT % float(value)


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def _write_json(path: Path, payload: dict):
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
    )


def _resolve_config(config_path, overrides, seed) -> ExperimentConfig:
    if config_path and config_path.startswith("demo:"):
        config_path = str(cfgmod.demo_config_path(config_path.split(":", 1)[1]))
    return cfgmod.resolve(config_path, cfgmod.parse_overrides(overrides), seed)


def _outdir(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ParameterError as exc:
        click.echo(f'error kind=usage msg="{exc}"', err=True)
        sys.exit(2)
    except BernApproxError as exc:
        click.echo(f'error kind=runtime msg="{exc}"', err=True)
        sys.exit(3)
    except click.ClickException:
        raise
    except Exception as exc:  # anything unexpected is a runtime failure
        click.echo(f'error kind=runtime msg="{type(exc).__name__}: {exc}"', err=True)
        sys.exit(3)


class SuggestingGroup(click.Group):
    def resolve_command(self, ctx, args):
        try:
            return super().resolve_command(ctx, args)
        except click.UsageError:
            name = args[0]
            hints = difflib.get_close_matches(name, self.list_commands(ctx), n=3)
            extra = f" Did you mean: {', '.join(hints)}?" if hints else ""
            raise click.UsageError(
                f"unknown subcommand {name!r}. Valid: {', '.join(self.list_commands(ctx))}.{extra}"
            )


_EPILOG = (
    "Config schema (INI sections or JSON; every key shown with the default "
    "used at runtime; override any key with --set key=value):\n\n"
    + "\n\n".join("\b\n" + block for block in cfgmod.schema_sections())
)


def _common_options(fn):
    fn = click.option("--config", "config_path", default=None,
                      help="Config file (INI or JSON); 'demo:bernstein' loads the bundled demo.")(fn)
    fn = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                      help="Override a schema key; may repeat.")(fn)
    fn = click.option("--out", "out", default="results", envvar="BERNAPPROX_OUT",
                      show_default=True, help="Output directory (env: BERNAPPROX_OUT).")(fn)
    fn = click.option("--seed", "seed", type=int, default=None, help="Override run.seed.")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
                      show_default=True, help="Primary table format for the run subcommand.")(fn)
    return fn


@click.group(cls=SuggestingGroup, epilog=_EPILOG)
@click.version_option(version=__version__, prog_name="bernapprox")
def main():
    """Bernstein-type approximation operators, tail calculus and error bounds."""


@main.command()
@_common_options
def evaluate(config_path, overrides, out, seed, fmt):
    """Operator values A_n[f](x) on the x grid, one CSV per n."""

    def body():
        cfg = _resolve_config(config_path, overrides, seed)
        f = build_function(cfg)
        fam = build_family(cfg)
        xs = GridSpec(cfg.x_grid_kind, cfg.x_grid_size).points(*fam.x_domain)
        outdir = _outdir(out)
        summary_rows = []
        for n in cfg.n_grid:
            rows = []
            for x in xs:
                ov = operator_value(
                    f, fam, n, float(x), mode=cfg.mode, tail_tol=cfg.szasz_tail_tol,
                    trials=cfg.mc_trials, seed=cfg.seed,
                )
                rows.append([_fmt(x), _fmt(ov.value), _fmt(ov.error_radius)])
            _write_csv(outdir / f"evaluate_n{n}.csv", ["x", "value", "error_radius"], rows)
            se = sup_error(f, fam, n, xs, mode=cfg.mode, tail_tol=cfg.szasz_tail_tol,
                           trials=cfg.mc_trials, seed=cfg.seed)
            summary_rows.append(
                {"n": n, "delta": se.delta, "argmax_x": se.argmax_x, "error_radius": se.error_radius}
            )
        _write_json(outdir / "evaluate.json", {
            "config": asdict(cfg), "seed": cfg.seed, "version": __version__,
            "sup_errors": summary_rows,
        })
        click.echo(f"evaluate: wrote {len(cfg.n_grid)} tables to {outdir}")

    _guard(body)


@main.command()
@_common_options
def modulus(config_path, overrides, out, seed, fmt):
    """Weighted modulus profile: CSV columns delta, omega, slack."""

    def body():
        cfg = _resolve_config(config_path, overrides, seed)
        f = build_function(cfg)
        fam = build_family(cfg)
        w = build_weight(cfg, fam)
        delta_max = (f.interval.b - f.interval.a) if f.interval.finite else 8.0
        profile = build_modulus_profile(cfg, f, w, delta_max=delta_max)
        outdir = _outdir(out)
        rows = [
            [_fmt(d), _fmt(v), _fmt(profile.enclosure_slack)]
            for d, v in zip(profile.deltas, profile.values)
        ]
        _write_csv(outdir / "modulus.csv", ["delta", "omega", "slack"], rows)
        payload = {
            "config": asdict(cfg), "seed": cfg.seed, "version": __version__,
            "metadata": {k: list(v) if isinstance(v, tuple) else v
                         for k, v in profile.metadata.items()},
            "enclosure_slack": profile.enclosure_slack,
        }
        if f.holder is not None:
            h = holder_seminorm(f, w, f.holder.alpha, profile)
            payload["holder"] = {"alpha": h.alpha, "seminorm": h.seminorm}
        _write_json(outdir / "modulus.json", payload)
        click.echo(f"modulus: wrote profile ({profile.deltas.size} deltas) to {outdir}")

    _guard(body)


@main.command()
@_common_options
def tail(config_path, overrides, out, seed, fmt):
    """Tail curve: CSV columns u, value, half_width plus a JSON header."""

    def body():
        cfg = _resolve_config(config_path, overrides, seed)
        fam = build_family(cfg)
        curve = build_tail_curve(cfg, fam)
        z_max = tail_z_max(curve, floor=cfg.tail_floor, cap=cfg.tail_z_cap)
        us = np.linspace(0.0, max(z_max, 1e-6), cfg.z_grid_size)
        vals = np.asarray(curve.at(us), dtype=float)
        if curve.half_widths is not None:
            hw = np.interp(us, curve.u_grid, curve.half_widths)
            hw_col = [_fmt(v) for v in hw]
        else:
            hw_col = ["" for _ in us]
        outdir = _outdir(out)
        _write_csv(
            outdir / "tail.csv",
            ["u", "value", "half_width"],
            [[_fmt(u), _fmt(v), h] for u, v, h in zip(us, vals, hw_col)],
        )
        header = {
            "config": asdict(cfg), "seed": cfg.seed, "version": __version__,
            "method": curve.kind, "z_max": z_max,
            "lambda_cap": curve.params.get("lambda_cap"),
            "n_max": cfg.tail_n_max, "rng": "pcg64",
        }
        _write_json(outdir / "tail.json", header)
        click.echo(f"tail: wrote {curve.kind} curve ({us.size} points) to {outdir}")

    _guard(body)


@main.command()
@_common_options
def bound(config_path, overrides, out, seed, fmt):
    """Bound table: Stieltjes brackets, closed form, empirical delta, ratio."""

    def body():
        cfg = _resolve_config(config_path, overrides, seed)
        f = build_function(cfg)
        fam = build_family(cfg)
        w = build_weight(cfg, fam)
        curve = build_tail_curve(cfg, fam)
        z_max = tail_z_max(curve, floor=cfg.tail_floor, cap=cfg.tail_z_cap)
        z_grid = np.linspace(0.0, max(z_max, 1e-6), cfg.z_grid_size)
        profile = build_modulus_profile(
            cfg, f, w, delta_max=z_max / math.sqrt(min(cfg.n_grid))
        )
        xs = GridSpec(cfg.x_grid_kind, cfg.x_grid_size).points(*fam.x_domain)
        holder = None
        if f.holder is not None:
            holder = holder_seminorm(f, w, f.holder.alpha, profile)
        rows = []
        payload_rows = []
        for n in cfg.n_grid:
            rep = stieltjes_bound(profile, curve, n, z_grid=z_grid, f_sup=f.sup_abs)
            se = sup_error(f, fam, n, xs, mode=cfg.mode, tail_tol=cfg.szasz_tail_tol,
                           trials=cfg.mc_trials, seed=cfg.seed)
            closed = None
            if holder is not None:
                closed = hdt_bound(holder, curve, n).value
            ratio = se.delta / rep.enclosure[1] if rep.enclosure[1] > 0 else None
            rows.append([
                str(n), _fmt(rep.enclosure[0]), _fmt(rep.enclosure[1]),
                _fmt(closed), _fmt(se.delta), _fmt(ratio),
            ])
            payload_rows.append({
                "n": n, "lower_bracket": rep.enclosure[0], "upper_bracket": rep.enclosure[1],
                "upper_stieltjes": rep.upper_stieltjes, "closed_form": closed,
                "empirical": se.delta, "error_radius": se.error_radius, "ratio": ratio,
            })
        outdir = _outdir(out)
        _write_csv(
            outdir / "bound.csv",
            ["n", "lower_bracket", "upper_bracket", "closed_form", "empirical", "ratio"],
            rows,
        )
        _write_json(outdir / "bound.json", {
            "config": asdict(cfg), "seed": cfg.seed, "version": __version__,
            "rows": payload_rows,
            "holder": None if holder is None else {"alpha": holder.alpha, "seminorm": holder.seminorm},
        })
        click.echo(f"bound: wrote {len(rows)} rows to {outdir}")

    _guard(body)


@main.command()
@_common_options
def run(config_path, overrides, out, seed, fmt):
    """Full convergence study; exit 0 iff the bound validity check passes."""

    def body():
        cfg = _resolve_config(config_path, overrides, seed)
        table = run_convergence(cfg)
        outdir = _outdir(out)
        write_report(table, "csv", outdir / "table.csv")
        write_report(table, "json", outdir / "report.json")
        write_timings(table, outdir / "timings.csv")
        summary = validity_check(table)
        slope = "n/a" if table.fit is None else f"{table.fit.slope:.4f}"
        click.echo(
            f"run: {len(table.rows)} rows, fitted slope {slope}, "
            f"validity {'pass' if summary.passed else 'FAIL'} -> {outdir}"
        )
        if not summary.passed:
            for v in summary.violations:
                click.echo(
                    f'error kind=validation msg="n={v["n"]} empirical {v["empirical_delta"]:.6g} '
                    f'exceeds bracket {v["upper_bracket"]:.6g}"',
                    err=True,
                )
            sys.exit(1)

    _guard(body)


if __name__ == "__main__":
    main()
