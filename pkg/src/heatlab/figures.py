"""Figure rendering for report payloads and kernel traces.

Everything draws from report rows (or a kernel object) and writes PNG files
next to the delimited output; no interactive backends.
"""

from __future__ import annotations

import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def render_report_figures(payload, outdir):
    """Render one summary figure plus per-suite detail figures present in
    the payload.  Returns the list of written paths."""
    os.makedirs(outdir, exist_ok=True)
    written = []
    results = payload.get("results", [])
    written.append(_summary_figure(results, os.path.join(outdir, "summary.png")))
    gauge = [r for r in results if r.get("test") == "loop-gauge-invariance"]
    if gauge and max(gauge[0].get("mean_errors", [0.0])) > 0:
        written.append(_convergence_figure(gauge[0], os.path.join(outdir, "gauge_convergence.png")))
    ladder = [r for r in results if r.get("test") == "a_t-ladder" and r.get("ladder")]
    if ladder:
        written.append(_ladder_figure(ladder[0], os.path.join(outdir, "phase_density_ladder.png")))
    push = [r for r in results if r.get("test") == "pushforward" and r.get("rows")]
    if push:
        written.append(_pushforward_figure(push[0], os.path.join(outdir, "pushforward.png")))
    return [w for w in written if w]


def _summary_figure(results, path):
    labels = [f"{r.get('suite', '?')}:{r.get('test', '?')}" for r in results]
    errs = [max(float(r.get("rel_err", 0.0)), 1e-18) for r in results]
    colors = ["tab:blue" if r.get("pass") else "tab:red" for r in results]
    fig, ax = plt.subplots(figsize=(10, max(3, 0.22 * len(labels))))
    ax.barh(range(len(labels)), errs, color=colors)
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels, fontsize=6)
    ax.set_xscale("log")
    ax.set_xlabel("relative error")
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _convergence_figure(row, path):
    meshes = np.asarray(row.get("meshes", [250, 1000, 4000]), dtype=float)
    errs = np.asarray(row["mean_errors"], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(meshes, errs, "o-", label="gauged holonomy error")
    ax.loglog(meshes, errs[0] * meshes[0] / meshes, "k--", label="order 1 reference")
    ax.set_xlabel("mesh")
    ax.set_ylabel("mean distance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _ladder_figure(row, path):
    ladder = row["ladder"]
    ts = [p[0] for p in ladder]
    ats = [p[1] for p in ladder]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.semilogy(ts, [max(a - 1.0, 1e-16) for a in ats], "o-")
    ax.set_xlabel("t")
    ax.set_ylabel("measured a_t - 1")
    ax.set_title("phase-density constant approaching one")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _pushforward_figure(row, path):
    rows = row["rows"]
    labels = [r["irrep"] for r in rows]
    z = [r["z"] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(range(len(labels)), z)
    ax.axhline(3.0, color="tab:red", ls="--")
    ax.axhline(-3.0, color="tab:red", ls="--")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, fontsize=7)
    ax.set_ylabel("z-score vs heat kernel")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_kernel_figure(kernel, path, n_points=400):
    """Trace of the kernel along a one-parameter direction of the group."""
    from .groups import TorusFactor, exp_map
    group = kernel.group
    s = np.linspace(-math.pi, math.pi, n_points)
    batch = []
    for f in group.factors:
        if isinstance(f, TorusFactor):
            arr = np.zeros((n_points, f.dim))
            arr[:, 0] = np.mod(s, 2 * math.pi)
            batch.append(arr)
        else:
            mats = np.stack([exp_map(group, _unit_dir(group, f, v)).parts[_fidx(group, f)]
                             for v in s])
            batch.append(mats)
    vals = kernel.value(batch)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(s, vals)
    ax.set_xlabel("arc parameter")
    ax.set_ylabel("kernel value")
    ax.set_title(f"{group.kind}, t={kernel.t}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _fidx(group, f):
    return list(group.factors).index(f)


def _unit_dir(group, f, v):
    y = np.zeros(group.dim)
    y[group.factor_slices()[_fidx(group, f)].start] = v
    return y
