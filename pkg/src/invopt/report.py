"""Figure rendering for the CLI report paths.

Every helper takes already-computed results and writes one PNG next to the
delimited output; nothing here feeds back into the numbers.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .pareto import ParetoPoint
from .partial import CycleResult, ModeBoundaryMap
from .pipeline import PipelineResult

_MODE_COLORS = {"2L": "tab:blue", "3L": "tab:orange",
                "Y": "tab:green", "H": "tab:red"}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_area_vs_fsw(f_grid, a_tot, delta_u, du_max: float, label: str,
                     path: str | Path) -> Path:
    """Minimal chip area and DC-link ripple against switching frequency."""
    f_khz = np.asarray(f_grid) / 1e3
    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.step(f_khz, a_tot, where="mid", color="tab:blue", marker="o")
    ax1.set_xlabel("switching frequency [kHz]")
    ax1.set_ylabel("total chip area [mm$^2$]", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(f_khz, delta_u, color="tab:red", marker="s")
    ax2.axhline(du_max, color="tab:red", linestyle="--", linewidth=1)
    ax2.set_ylabel("DC-link ripple [V]", color="tab:red")
    ax1.set_title(f"full-load sizing vs switching frequency: {label}")
    return _save(fig, Path(path))


def plot_area_bars(labels, totals, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(labels, totals, color="tab:blue")
    ax.set_ylabel("total chip area [mm$^2$]")
    ax.set_title("full-load chip area per topology")
    ax.tick_params(axis="x", rotation=30)
    return _save(fig, Path(path))


def plot_boundary_map(bmap: ModeBoundaryMap, label: str, path: str | Path) -> Path:
    """Best-mode regions over the torque-speed plane plus the loss margin."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    modes = sorted({m for row in bmap.best_mode for m in row if m is not None})
    code = {m: i for i, m in enumerate(modes)}
    grid = np.full((len(bmap.torques_nm), len(bmap.speeds_rpm)), np.nan)
    for i, row in enumerate(bmap.best_mode):
        for j, m in enumerate(row):
            if m is not None:
                grid[i, j] = code[m]
    cmap = matplotlib.colors.ListedColormap(
        [_MODE_COLORS.get(m, "gray") for m in modes] or ["gray"])
    ax1.pcolormesh(bmap.speeds_rpm, bmap.torques_nm, grid, cmap=cmap,
                   vmin=-0.5, vmax=max(len(modes) - 0.5, 0.5))
    ax1.set_xlabel("speed [rpm]")
    ax1.set_ylabel("torque [Nm]")
    ax1.set_title(f"best mode: {label}")
    handles = [plt.Rectangle((0, 0), 1, 1, color=_MODE_COLORS.get(m, "gray"))
               for m in modes]
    ax1.legend(handles, modes, loc="upper right", fontsize=8)
    pm = ax2.pcolormesh(bmap.speeds_rpm, bmap.torques_nm, bmap.loss_diff_w,
                        cmap="viridis")
    fig.colorbar(pm, ax=ax2, label="loss margin over fallback [W]")
    ax2.set_xlabel("speed [rpm]")
    ax2.set_title("loss difference")
    return _save(fig, Path(path))


def plot_loss_decomposition(labels, results: list[CycleResult],
                            path: str | Path) -> Path:
    """Stacked mean-loss bars per design, split into the four components."""
    comps = ["conduction", "switching", "harmonic_motor", "fundamental_motor"]
    colors = ["tab:blue", "tab:orange", "tab:red", "tab:gray"]
    fig, ax = plt.subplots(figsize=(7, 4))
    bottom = np.zeros(len(results))
    for comp, color in zip(comps, colors):
        vals = np.array([r.decomposition_j[comp] for r in results])
        # mean power over the cycle
        vals = vals / np.array([r.e_tot_cycle_j / r.p_tot_mean_w for r in results])
        ax.bar(labels, vals, bottom=bottom, label=comp.replace("_", " "),
               color=color)
        bottom += vals
    ax.set_ylabel("mean partial-load loss [W]")
    ax.legend(fontsize=8)
    ax.tick_params(axis="x", rotation=30)
    return _save(fig, Path(path))


def plot_pareto(front: list[ParetoPoint], dominated: list[ParetoPoint],
                path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    families = sorted({p.family for p in front + dominated})
    cmap = plt.get_cmap("tab10")
    for i, fam in enumerate(families):
        pts = [p for p in front + dominated if p.family == fam]
        pts.sort(key=lambda p: p.a_tot_mm2)
        ax.plot([p.a_tot_mm2 for p in pts],
                [p.delta_e_kwh_100km for p in pts],
                marker="o", linestyle=":", color=cmap(i % 10), label=fam)
    if front:
        fr = sorted(front, key=lambda p: p.a_tot_mm2)
        ax.plot([p.a_tot_mm2 for p in fr],
                [p.delta_e_kwh_100km for p in fr],
                color="black", linewidth=1.5, label="front")
    ax.set_xlabel("total chip area [mm$^2$]")
    ax.set_ylabel("cycle energy loss [kWh/100 km]")
    ax.legend(fontsize=8)
    return _save(fig, Path(path))


def render_run_figures(result: PipelineResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    paths = []
    labels = [f"{o.spec.label} x{f:g}"
              for o in result.outcomes for f in o.factors]
    totals = [a for o in result.outcomes for a in o.a_tot]
    paths.append(plot_area_bars(labels, totals, out / "chip_area.png"))
    flat = [r for o in result.outcomes for r in o.results]
    paths.append(plot_loss_decomposition(labels, flat,
                                         out / "loss_decomposition.png"))
    paths.append(plot_pareto(result.front, result.dominated,
                             out / "pareto.png"))
    return paths
