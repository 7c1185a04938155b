"""Command-line orchestration.

One subcommand per experiment.  Each run writes ``results.csv`` plus any
extra tables the driver produced, and ``report.json`` with one
``{criterion_id, measured, threshold, pass}`` entry per criterion.  Output
is deterministic for a fixed config and seed: rows are sorted by the
drivers and floats are written with round-trip ``repr``.  ``--emit-figures``
renders the matplotlib figures next to the delimited output.
"""
from __future__ import annotations

import csv
import json
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .config import ConfigError, EXPERIMENTS, default_config, load_config
from .experiments import RunReport, run

__all__ = ["main", "run", "write_report", "emit_figures"]


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def write_report(report: RunReport, out_dir) -> list:
    """Persist every artifact and the machine-readable criterion report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for art in report.artifacts:
        if art.kind == "csv":
            path = out_dir / f"{art.name}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(art.fieldnames)
                for row in art.rows:
                    writer.writerow([_fmt(row.get(k, "")) for k in art.fieldnames])
        else:
            path = out_dir / f"{art.name}.json"
            payload = [_jsonable(dict(row)) for row in art.rows]
            path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        written.append(path)
    payload = {
        "experiment": report.experiment,
        "criteria": [
            {
                "criterion_id": c.criterion_id,
                "measured": _jsonable(c.measured),
                "threshold": _jsonable(c.threshold),
                "pass": bool(c.passed),
            }
            for c in report.criteria
        ],
        "pass": bool(report.passed),
        "errors": list(report.errors),
    }
    path = out_dir / "report.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written


def emit_figures(report: RunReport, out_dir, render: bool = True) -> list:
    """Write figure data (and, by default, rendered PNGs) for a report.

    The data lives in the report's artifacts and is written by
    ``write_report``; rendering draws from exactly those rows.
    """
    written = write_report(report, out_dir)
    if render:
        from .figures import render_report

        written += render_report(report, out_dir)
    return written


_HELP = {
    "kirillov": "Orbit mass identity and trace-formula order sweep.",
    "star": "Star-product truncation orders on the rotation and Heisenberg algebras.",
    "compose": "Composition, adjoint, and polynomial operator identities.",
    "stability": "Three-way stability agreement sweep plus the multiset shadow.",
    "torsor": "Transport residuals and uniqueness on stable fibers.",
    "disintegrate": "Volume-form slice identity with one-time calibration.",
    "relchar": "Relative-character asymptotics and Plancherel residuals.",
    "nilcone": "Figure reproduction: strips, level sets, rescaling frames.",
    "microlocal": "Weight-vector concentration heatmap on the rescaled orbit.",
}


@click.group()
def main():
    """Numerical experiments for the quantitative orbit method."""


def _register(name: str):
    @main.command(name=name, help=_HELP[name])
    @click.option("--config", "config_path",
                  type=click.Path(exists=True, dir_okay=False),
                  default=None, help="TOML experiment file; defaults to the shipped configuration.")
    @click.option("--out", "out_override", type=click.Path(file_okay=False),
                  default=None, help="Output directory (default runs/<experiment>).")
    @click.option("--seed", "seed_override", type=int, default=None,
                  help="Override the config seed.")
    @click.option("--jobs", "jobs_override", type=int, default=None,
                  help="Thread pool width for independent sweep cells.")
    @click.option("--emit-figures", "figures_flag", is_flag=True,
                  help="Render PNG figures alongside the CSV output.")
    def command(config_path, out_override, seed_override, jobs_override,
                figures_flag, _name=name):
        try:
            cfg = load_config(config_path) if config_path else default_config(_name)
        except ConfigError as exc:
            raise click.ClickException(str(exc))
        if cfg.experiment != _name:
            raise click.ClickException(
                f"experiment: config declares {cfg.experiment!r} but the "
                f"subcommand is {_name!r}")
        updates = {}
        if seed_override is not None:
            updates["seed"] = seed_override
        if jobs_override is not None:
            updates["jobs"] = jobs_override
        if out_override is not None:
            updates["out"] = out_override
        if updates:
            cfg = replace(cfg, **updates)
        out_dir = Path(cfg.out or f"runs/{_name}")

        report = run(cfg)
        written = write_report(report, out_dir)
        if figures_flag:
            from .figures import render_report

            written += render_report(report, out_dir)
        for c in report.criteria:
            verdict = "PASS" if c.passed else "FAIL"
            click.echo(f"{c.criterion_id}: measured={c.measured:.6g} "
                       f"threshold={c.threshold:.6g} {verdict}")
        for err in report.errors:
            click.echo(f"cell error: {err}", err=True)
        click.echo(f"wrote {len(written)} files under {out_dir}")
        if not report.passed:
            raise SystemExit(1)

    return command


for _name in EXPERIMENTS:
    _register(_name)


if __name__ == "__main__":
    main()
