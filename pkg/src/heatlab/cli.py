"""Command-line entry points.

    heatlab run       --config cfg.json --report out.json [--figures DIR]
    heatlab transform --config cfg.json --report out.json
    heatlab sample    --group su2 --t 0.5 --mesh 1000 --samples 100000
                      --seed 42 --report out.json [--csv raw.csv]
    heatlab kernel    --group su2 --t 0.5 --csv kernel.csv [--figure out.png]

Exit status is zero exactly when every executed check passes.
"""

from __future__ import annotations

import json
import math
import sys

import click
import numpy as np

from .reporting import (validate_config, build_report, write_report,
                        write_results_csv, ConfigError, DEFAULT_CONFIG)
from .suites import run_suites, SUITES
from .errors import HeatLabError


@click.group()
def main():
    """Verification suites for heat-kernel harmonic analysis."""


def _load_config(path, seed, suite):
    cfg = dict(DEFAULT_CONFIG) if path is None else json.load(open(path))
    try:
        cfg = validate_config(cfg)
    except ConfigError as exc:
        raise click.ClickException(f"invalid config: {exc}")
    if seed is not None:
        cfg["seed"] = seed
    if suite:
        cfg["suites"] = list(suite)
    return cfg


def _execute(cfg, report, figures, jobs):
    try:
        rows, ok = run_suites(cfg, jobs=jobs)
    except HeatLabError as exc:
        raise click.ClickException(str(exc))
    payload = build_report(cfg, rows)
    if report:
        write_report(payload, report)
        write_results_csv(rows, report.rsplit(".", 1)[0] + ".csv")
        click.echo(f"report: {report}")
    if figures:
        from .figures import render_report_figures
        for p in render_report_figures(payload, figures):
            click.echo(f"figure: {p}")
    n_pass = sum(1 for r in rows if r.get("pass"))
    click.echo(f"{n_pass}/{len(rows)} checks passed")
    if not ok:
        for r in rows:
            if not r.get("pass"):
                click.echo(f"FAIL {r.get('suite')}:{r.get('test')} rel_err={r.get('rel_err')}")
        sys.exit(1)


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None,
              help="JSON config; defaults are used when omitted.")
@click.option("--report", type=click.Path(), default=None, help="Report JSON path.")
@click.option("--suite", multiple=True, help="Override the suite list (repeatable).")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--jobs", type=int, default=1, help="Suite-level thread parallelism.")
@click.option("--figures", type=click.Path(), default=None,
              help="Directory for rendered figures.")
def run(config, report, suite, seed, jobs, figures):
    """Run named verification suites from a config."""
    cfg = _load_config(config, seed, suite)
    _execute(cfg, report, figures, jobs)


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--report", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--figures", type=click.Path(), default=None)
def transform(config, report, seed, figures):
    """Run the transform-side suites (norms, bounds, phase density)."""
    cfg = _load_config(config, seed, None)
    cfg["suites"] = [s for s in ("transform-unitarity", "taylor-isometry",
                                 "bounds", "phase-density") if s in SUITES]
    _execute(cfg, report, figures, 1)


@main.command()
@click.option("--group", default="su2", help="Group descriptor, e.g. su2 or torus:1.")
@click.option("--t", "tval", type=float, default=0.5)
@click.option("--mesh", type=int, default=1000)
@click.option("--samples", type=int, default=100000)
@click.option("--seed", type=int, default=42)
@click.option("--report", type=click.Path(), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="Optional raw holonomy export.")
def sample(group, tval, mesh, samples, seed, report, csv_path):
    """Monte-Carlo holonomy sampling with the heat-kernel pushforward check."""
    from .groups import make_group, irreps_up_to, TorusFactor
    from .stochastic import pushforward_check, sample_holonomies
    from .suites import _band_to_casimir
    g = make_group(group)
    reps = [r for r in irreps_up_to(g, _band_to_casimir(g, 2)) if r.casimir > 1e-9]
    rep = pushforward_check(g, tval, reps[:4], mesh, samples, seed)
    for row in rep["rows"]:
        click.echo(f"{row['irrep']}: mc={row['mc_mean']:.6f} +- {row['stderr']:.6f} "
                   f"target={row['target']:.6f} z={row['z']:+.2f}")
    if csv_path:
        import csv as _csv
        with open(csv_path, "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["sample", "coordinates"])
            i = 0
            for parts in sample_holonomies(g, tval, mesh, min(samples, 100000), seed):
                flat = np.concatenate([np.asarray(p).reshape(len(p), -1).view(float)
                                       if np.iscomplexobj(p) else np.asarray(p)
                                       for p in parts], axis=1)
                for row in flat:
                    w.writerow([i] + [f"{v:.17g}" for v in row])
                    i += 1
        click.echo(f"raw samples: {csv_path}")
    if report:
        payload = build_report({"group": group, "t": tval, "mesh": mesh,
                                "samples": samples, "seed": seed},
                               [dict(rep, suite="stochastic")])
        write_report(payload, report)
        click.echo(f"report: {report}")
    if not rep["pass"]:
        sys.exit(1)


@main.command()
@click.option("--group", default="su2")
@click.option("--t", "tval", type=float, default=0.5)
@click.option("--csv", "csv_path", type=click.Path(), required=True)
@click.option("--points", type=int, default=256)
@click.option("--figure", type=click.Path(), default=None)
def kernel(group, tval, csv_path, points, figure):
    """Export heat-kernel evaluations (coordinates, value, tail bound)."""
    from .groups import make_group, TorusFactor, exp_map
    from .heat import HeatKernel, export_kernel_csv
    g = make_group(group)
    kern = HeatKernel(g, tval)
    s = np.linspace(-math.pi, math.pi, points)
    batch = []
    for fi, f in enumerate(g.factors):
        if isinstance(f, TorusFactor):
            arr = np.zeros((points, f.dim))
            if fi == 0:
                arr[:, 0] = np.mod(s, 2 * math.pi)
            batch.append(arr)
        else:
            ydir = np.zeros(g.dim)
            ydir[g.factor_slices()[fi].start] = 1.0
            mats = np.stack([exp_map(g, v * ydir).parts[fi] for v in s])
            batch.append(mats)
    export_kernel_csv(kern, batch, csv_path)
    click.echo(f"csv: {csv_path}")
    if figure:
        from .figures import render_kernel_figure
        render_kernel_figure(kern, figure)
        click.echo(f"figure: {figure}")


if __name__ == "__main__":
    main()
