"""Figure rendering for experiment reports.

Every plot is derived from the same rows that land in the CSV artifacts,
so a rendered figure never shows anything the delimited output does not.
Rendering is headless (Agg) and deterministic.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .experiments import RunReport

__all__ = ["render_report"]

_RC = {
    "figure.figsize": (6.0, 4.2),
    "figure.dpi": 130,
    "savefig.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "lines.markersize": 4,
}


def _save(fig, out_dir: Path, stem: str) -> Path:
    path = Path(out_dir) / f"{stem}.png"
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def _order_plot(rows, title):
    fig, ax = plt.subplots()
    hs = np.array([r["h"] for r in rows])
    res = np.array([r["residual"] for r in rows])
    ax.loglog(hs, res, "o-")
    fit = rows[-1].get("fitted_order_so_far", float("nan"))
    if np.isfinite(fit):
        ref = res[0] * (hs / hs[0]) ** fit
        ax.loglog(hs, ref, "--", alpha=0.6, label=f"fitted order {fit:.3f}")
        ax.legend()
    ax.set_xlabel("h")
    ax.set_ylabel("residual")
    ax.set_title(title)
    return fig


def _fig_kirillov(report, out_dir):
    paths = [_save(_order_plot(report.artifact("results").rows,
                               "trace formula residual"), out_dir, "trace_order")]
    rows = report.artifact("orbit_mass").rows
    fig, ax = plt.subplots()
    ax.semilogy([r["j"] for r in rows],
                [max(r["error"], 1e-17) for r in rows], "o")
    ax.set_xlabel("j")
    ax.set_ylabel("|mass - (2j+1)|")
    ax.set_title("orbit mass identity")
    paths.append(_save(fig, out_dir, "orbit_mass"))
    return paths


def _fig_star(report, out_dir):
    rows = report.artifact("results").rows
    fig, ax = plt.subplots()
    keys = sorted({(r["algebra"], r["grade"]) for r in rows})
    for alg, J in keys:
        sel = [r for r in rows if r["algebra"] == alg and r["grade"] == J]
        ax.loglog([r["h"] for r in sel], [r["residual"] for r in sel],
                  "o-", label=f"{alg}, J={J}")
    ax.set_xlabel("h")
    ax.set_ylabel("sup residual")
    ax.set_title("star expansion truncation error")
    ax.legend()
    return [_save(fig, out_dir, "star_orders")]


def _fig_compose(report, out_dir):
    rows = report.artifact("results").rows
    fig, ax = plt.subplots()
    checks = sorted({r["check"] for r in rows})
    for k, check in enumerate(checks):
        sel = [r for r in rows if r["check"] == check]
        ax.semilogy([k + 0.05 * i for i in range(len(sel))],
                    [max(r["value"], 1e-17) for r in sel], "o", label=check)
    ax.set_xticks(range(len(checks)))
    ax.set_xticklabels(checks, rotation=20)
    ax.set_ylabel("residual")
    ax.set_title("operator identity residuals")
    return [_save(fig, out_dir, "identities")]


def _fig_stability(report, out_dir):
    rows = report.artifact("results").rows
    cases = sorted({r["case"] for r in rows})
    fig, ax = plt.subplots()
    for case in cases:
        margins = [r["margin"] for r in rows if r["case"] == case and r["margin"] > 0]
        if margins:
            ax.hist(np.log10(margins), bins=40, alpha=0.5, label=case)
    ax.set_xlabel("log10 eigenvalue gap")
    ax.set_ylabel("samples")
    ax.set_title("stability margins")
    ax.legend()
    return [_save(fig, out_dir, "margins")]


def _fig_torsor(report, out_dir):
    rows = report.artifact("results").rows
    fig, ax = plt.subplots()
    for case in sorted({r["case"] for r in rows}):
        sel = [r for r in rows if r["case"] == case]
        ax.loglog([max(r["max_residual"], 1e-18) for r in sel],
                  [max(r["max_uniqueness_gap"], 1e-18) for r in sel], "o", label=case)
    ax.set_xlabel("transport residual")
    ax.set_ylabel("uniqueness gap")
    ax.set_title("torsor transport")
    ax.legend()
    return [_save(fig, out_dir, "transport")]


def _fig_disintegrate(report, out_dir):
    rows = report.artifact("results").rows
    fig, ax = plt.subplots()
    ax.plot(range(len(rows)), [r["ratio"] for r in rows], "o")
    ax.axhline(rows[0]["calibration"], ls="--", alpha=0.6,
               label=f"calibration {rows[0]['calibration']:.9f}")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels([r["symbol"] for r in rows], rotation=45, ha="right")
    ax.set_ylabel("lhs / rhs")
    ax.set_title("disintegration ratios")
    ax.legend()
    return [_save(fig, out_dir, "ratios")]


def _fig_relchar(report, out_dir):
    paths = [_save(_order_plot(report.artifact("results").rows,
                               "relative character residual"), out_dir, "relchar_order")]
    rows = report.artifact("plancherel").rows
    fig, ax = plt.subplots()
    ax.semilogy(range(len(rows)), [max(r["residual"], 1e-17) for r in rows], "o")
    ax.set_xlabel("sample")
    ax.set_ylabel("residual")
    ax.set_title("Plancherel disintegration residuals")
    paths.append(_save(fig, out_dir, "plancherel"))
    return paths


def _fig_nilcone(report, out_dir):
    paths = []
    cloud = report.artifact("nilcone_cloud").rows
    hs = sorted({r["h"] for r in cloud}, reverse=True)
    fig, axes = plt.subplots(1, len(hs), figsize=(3.0 * len(hs), 3.2), sharey=True)
    for ax, h in zip(np.atleast_1d(axes), hs):
        sel = [r for r in cloud if r["h"] == h]
        rho = [np.hypot(r["x"], r["y"]) for r in sel]
        z = [r["z"] for r in sel]
        ax.plot(rho, z, ".", ms=1)
        lim = max(rho) * 1.05
        ax.plot([0, lim], [0, lim], "k--", lw=0.7, alpha=0.6)
        ax.plot([0, lim], [0, -lim], "k--", lw=0.7, alpha=0.6)
        ax.set_title(f"h = {h:g}")
        ax.set_xlabel("rho")
    np.atleast_1d(axes)[0].set_ylabel("z")
    fig.suptitle("orbit family rescaling onto the null cone")
    paths.append(_save(fig, out_dir, "nilcone_frames"))

    strips = report.artifact("strips_cloud").rows
    fig = plt.figure(figsize=(5.4, 5.0))
    ax = fig.add_subplot(projection="3d")
    bands = np.array([r["band"] for r in strips])
    ax.scatter([r["x"] for r in strips], [r["y"] for r in strips],
               [r["z"] for r in strips], c=bands, s=2, cmap="viridis")
    fibers = report.artifact("fiber_circles").rows
    ax.plot([r["x"] for r in fibers], [r["y"] for r in fibers],
            [r["z"] for r in fibers], ".", color="k", ms=1)
    ax.set_title("equal-volume strips and fiber level sets")
    paths.append(_save(fig, out_dir, "strips"))

    hyp = report.artifact("hyperboloid_fibers").rows
    fig = plt.figure(figsize=(5.4, 5.0))
    ax = fig.add_subplot(projection="3d")
    levels = np.array([r["level"] for r in hyp])
    ax.scatter([r["x"] for r in hyp], [r["y"] for r in hyp],
               [r["z"] for r in hyp], c=levels, s=2, cmap="plasma")
    ax.set_title("subgroup-orbit fibers on the hyperboloid")
    paths.append(_save(fig, out_dir, "hyperboloid_fibers"))
    return paths


def _fig_microlocal(report, out_dir):
    rows = report.artifact("results").rows
    xs = sorted({r["x"] for r in rows})
    zs = sorted({r["z"] for r in rows})
    grid = np.full((len(xs), len(zs)), np.nan)
    xi = {v: i for i, v in enumerate(xs)}
    zi = {v: i for i, v in enumerate(zs)}
    for r in rows:
        grid[xi[r["x"]], zi[r["z"]]] = r["value"]
    fig, ax = plt.subplots(figsize=(5.2, 4.6))
    mesh = ax.pcolormesh(xs, zs, grid.T, shading="nearest", cmap="magma")
    fig.colorbar(mesh, ax=ax, label="<Op(a) e_n, e_n>")
    ax.set_xlabel("x")
    ax.set_ylabel("z")
    ax.set_title("microlocal support of a weight vector")
    ax.set_aspect("equal")
    return [_save(fig, out_dir, "heatmap")]


_RENDERERS = {
    "kirillov": _fig_kirillov,
    "star": _fig_star,
    "compose": _fig_compose,
    "stability": _fig_stability,
    "torsor": _fig_torsor,
    "disintegrate": _fig_disintegrate,
    "relchar": _fig_relchar,
    "nilcone": _fig_nilcone,
    "microlocal": _fig_microlocal,
}


def render_report(report: RunReport, out_dir) -> list:
    """Render the report's figures as PNG files next to its tables."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    renderer = _RENDERERS[report.experiment]
    with plt.rc_context(_RC):
        return renderer(report, out_dir)
