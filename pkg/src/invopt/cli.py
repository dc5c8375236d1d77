"""Command-line surface: sizing, partial-load evaluation, boundary maps,
Pareto fronts and the full pipeline."""

from __future__ import annotations

import csv
import json
import sys
import time
from pathlib import Path

import click

from . import pwm
from .config import ConfigError, load_config
from .evaluation import Evaluator
from .families import build_design_family
from .pipeline import (PipelineError, _evaluator_for, _topo_cfg, run_pipeline,
                       write_bundle)
from .partial import mode_boundary_map
from .sizing import SizingError, TopologyConfig, min_feasible_fsw, size_topology
from .vehicle import full_load_envelope


def _parse_fsw(value: str) -> tuple[str, float | None]:
    if value == "opt":
        return "opt", None
    try:
        f = float(value)
    except ValueError:
        raise click.BadParameter("--fsw must be a frequency in Hz or 'opt'")
    if f <= 0:
        raise click.BadParameter("--fsw must be positive")
    return "fixed", f


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="configuration file (defaults to the packaged config)")
@click.option("--out", "out_dir", type=click.Path(), default="out",
              show_default=True, help="output directory")
@click.option("--fsw", default="10000", show_default=True,
              help="switching frequency in Hz, or 'opt' for per-point optimization")
@click.option("--threads", default=1, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int,
              help="recorded in the manifest; the pipeline itself is deterministic")
@click.pass_context
def main(ctx, config_path, out_dir, fsw, threads, seed):
    ctx.ensure_object(dict)
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    policy, f_sw = _parse_fsw(fsw)
    ctx.obj.update(cfg=cfg, out=Path(out_dir), policy=policy,
                   f_sw=f_sw if f_sw is not None else cfg.f_sw_default,
                   threads=max(1, threads), seed=seed)


def _families_or_fail(cfg, names):
    specs = cfg.families()
    if not names:
        return specs
    by_label = {s.label: s for s in specs}
    missing = [n for n in names if n not in by_label]
    if missing:
        raise click.ClickException(
            f"unknown families {missing}; configured: {sorted(by_label)}")
    return [by_label[n] for n in names]


@main.command("size-full-load")
@click.option("--family", "names", multiple=True,
              help="restrict to configured family labels (repeatable)")
@click.pass_context
def size_full_load(ctx, names):
    """Size every topology's full-load chip area and sweep the ripple grid."""
    from .report import plot_area_bars, plot_area_vs_fsw

    cfg, out = ctx.obj["cfg"], ctx.obj["out"]
    out.mkdir(parents=True, exist_ok=True)
    envelope = full_load_envelope(cfg.motor(), cfg.envelope_points)
    f_grid = cfg.sizing_f_grid
    dc = cfg.raw["dc_link"]
    mode_for = {"B6": "2L", "TNPC": "3L", "B62Y": "H"}
    rows, labels, totals = [], [], []
    for spec in _families_or_fail(cfg, names):
        evaluator = _evaluator_for(cfg, spec.topology)
        tc = TopologyConfig(spec.topology, mode_for[spec.topology],
                            spec.variant, cfg.f_sw_default, cfg.v_dc,
                            cfg.devices(), cfg.samples_per_carrier)
        try:
            design, report = size_topology(tc, evaluator, envelope)
        except SizingError as exc:
            raise click.ClickException(f"{spec.label}: {exc}")
        worst = max(envelope, key=lambda p: p.torque_nm * p.speed_rpm)
        a_grid = []
        for f in f_grid:
            d_f, _ = size_topology(tc, evaluator, envelope, f_sw=f,
                                   c_dc=dc["c_dc_f"])
            a_grid.append(d_f.a_tot)
        ripple = min_feasible_fsw(tc, evaluator, worst, f_grid,
                                  c_dc=dc["c_dc_f"], du_max=dc["du_max_v"])
        labels.append(spec.label)
        totals.append(design.a_tot)
        for sid in sorted(design.switches):
            bp = report.binding_point[sid]
            rows.append([spec.label, sid, design.switches[sid].area_mm2,
                         bp.speed_rpm, bp.torque_nm])
        plot_area_vs_fsw(f_grid, a_grid, ripple.delta_u, dc["du_max_v"],
                         spec.label, out / f"area_vs_fsw_{spec.label}.png")
        click.echo(f"{spec.label}: A_tot = {design.a_tot:g} mm^2, "
                   f"min ripple-feasible f_sw = {ripple.f_min_feasible}")
    with (out / "full_load_sizing.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "switch", "area_mm2", "binding_speed_rpm",
                    "binding_torque_nm"])
        w.writerows(rows)
    plot_area_bars(labels, totals, out / "chip_area_full_load.png")


@main.command("evaluate-partial-load")
@click.option("--family", "names", multiple=True)
@click.pass_context
def evaluate_partial_load(ctx, names):
    """Evaluate drive-cycle losses for the configured design families."""
    cfg, out = ctx.obj["cfg"], ctx.obj["out"]
    result = _run(ctx, names)
    write_bundle(result, out)
    from .report import render_run_figures
    render_run_figures(result, out)
    for o in result.outcomes:
        for factor, res in zip(o.factors, o.results):
            click.echo(f"{o.spec.label} x{factor:g}: "
                       f"dE = {res.delta_e_kwh_100km:.4f} kWh/100km, "
                       f"P_mean = {res.p_tot_mean_w:.1f} W")


@main.command("boundary-map")
@click.option("--family", "names", multiple=True)
@click.option("--factor", "factor_sel", type=float, default=None,
              help="restrict to one area factor")
@click.pass_context
def boundary_map(ctx, names, factor_sel):
    """Operating-mode boundary maps over the torque-speed plane."""
    from .report import plot_boundary_map

    cfg, out = ctx.obj["cfg"], ctx.obj["out"]
    out.mkdir(parents=True, exist_ok=True)
    settings = cfg.partial_settings()
    envelope = full_load_envelope(cfg.motor(), cfg.envelope_points)
    n_grid = cfg.boundary_grid
    rows = []
    for spec in _families_or_fail(cfg, names):
        evaluator = _evaluator_for(cfg, spec.topology)
        build = build_design_family(spec, _topo_cfg(cfg, spec), evaluator,
                                    envelope, _baseline_area(cfg))
        for factor, design in zip(build.factors, build.designs):
            if factor_sel is not None and abs(factor - factor_sel) > 1e-9:
                continue
            bmap = mode_boundary_map(design, evaluator, ctx.obj["f_sw"],
                                     settings, n_speed=n_grid,
                                     n_torque=n_grid)
            label = f"{spec.label} x{factor:g}"
            plot_boundary_map(bmap, label,
                              out / f"boundary_{spec.label}_x{factor:g}.png")
            for i, m_nm in enumerate(bmap.torques_nm):
                for j, n_rpm in enumerate(bmap.speeds_rpm):
                    best = bmap.best_mode[i][j]
                    if best is None:
                        continue
                    rows.append([label, f"{n_rpm:.9g}", f"{m_nm:.9g}", best,
                                 "+".join(sorted(bmap.feasible[i][j])),
                                 f"{bmap.loss_diff_w[i, j]:.9g}"])
            click.echo(f"{label}: boundary map done")
    with (out / "boundary_maps.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["design", "speed_rpm", "torque_nm", "best_mode",
                    "feasible_modes", "loss_diff_w"])
        w.writerows(rows)


@main.command("pareto")
@click.pass_context
def pareto(ctx):
    """Compute the chip-area / energy-loss Pareto fronts."""
    out = ctx.obj["out"]
    result = _run(ctx, ())
    write_bundle(result, out)
    from .report import plot_pareto
    plot_pareto(result.front, result.dominated, out / "pareto.png")
    for p in result.front:
        click.echo(f"front: {p.label}  A={p.a_tot_mm2:g} mm^2  "
                   f"dE={p.delta_e_kwh_100km:.4f} kWh/100km")


@main.command("run")
@click.pass_context
def run(ctx):
    """Full pipeline: size, build families, evaluate the cycle, Pareto."""
    out = ctx.obj["out"]
    t0 = time.monotonic()
    result = _run(ctx, ())
    write_bundle(result, out)
    from .report import render_run_figures
    render_run_figures(result, out)
    (out / "run_info.json").write_text(json.dumps(
        {"seed": ctx.obj["seed"], "threads": ctx.obj["threads"]},
        sort_keys=True) + "\n")
    click.echo(f"run complete in {time.monotonic() - t0:.1f} s; "
               f"bundle written to {out}")


def _baseline_area(cfg) -> float:
    evaluator = _evaluator_for(cfg, pwm.TOPOLOGY_B6)
    envelope = full_load_envelope(cfg.motor(), cfg.envelope_points)
    design, _ = size_topology(
        TopologyConfig("B6", "2L", "A", cfg.f_sw_default, cfg.v_dc,
                       cfg.devices(), cfg.samples_per_carrier),
        evaluator, envelope)
    return design.a_tot


def _run(ctx, names):
    cfg = ctx.obj["cfg"]
    if names:
        raw = dict(cfg.raw)
        keep = {n for n in names}
        raw["families"] = [f for f in raw["families"]
                           if f"{f['topology']}_{f['variant']}" in keep]
        if not raw["families"]:
            raise click.ClickException(f"no configured families match {names}")
        cfg = type(cfg)(raw=raw, source=cfg.source)
    try:
        return run_pipeline(cfg, fsw_policy=ctx.obj["policy"],
                            f_sw=ctx.obj["f_sw"], threads=ctx.obj["threads"])
    except PipelineError as exc:
        raise click.ClickException(str(exc))


if __name__ == "__main__":
    sys.exit(main())
