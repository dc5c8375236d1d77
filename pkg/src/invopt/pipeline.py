"""End-to-end run: full-load sizing, design-family construction, drive-cycle
evaluation and Pareto extraction, written as a deterministic output bundle.

Families are independent and can be evaluated in worker processes; all
writing happens in the parent so reruns with the same configuration produce
byte-identical numeric outputs.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
from dataclasses import dataclass
from pathlib import Path

from . import pwm
from .config import AppConfig
from .evaluation import Evaluator
from .families import FamilyBuild, FamilySpec, build_design_family
from .motor import scale_motor
from .pareto import ParetoPoint, pareto_front
from .partial import CycleResult, evaluate_cycle
from .sizing import TopologyConfig, size_topology
from .vehicle import cycle_to_operating_points, clamp_to_envelope, full_load_envelope


class PipelineError(Exception):
    pass


@dataclass
class FamilyOutcome:
    spec: FamilySpec
    min_factor: float
    factors: list[float]
    a_tot: list[float]
    areas: list[dict[str, float]]
    results: list[CycleResult]


@dataclass
class PipelineResult:
    config_sha256: str
    fsw_policy: str
    f_sw: float
    baseline_a_tot: float
    outcomes: list[FamilyOutcome]
    front: list[ParetoPoint]
    dominated: list[ParetoPoint]


def _evaluator_for(cfg: AppConfig, topology: str) -> Evaluator:
    motor = cfg.motor()
    harm = cfg.harmonic_motor()
    if topology == pwm.TOPOLOGY_B62Y:
        k = cfg.turn_ratio
        return Evaluator(scale_motor(motor, k), harm.scaled(k))
    return Evaluator(motor, harm)


def _topo_cfg(cfg: AppConfig, spec: FamilySpec) -> TopologyConfig:
    mode = {"B6": "2L", "TNPC": "2L", "B62Y": "H"}[spec.topology]
    return TopologyConfig(spec.topology, mode, spec.variant, cfg.f_sw_default,
                          cfg.v_dc, cfg.devices(), cfg.samples_per_carrier)


def _run_family(args) -> FamilyOutcome:
    """Worker: size one family and evaluate every design over the cycle."""
    raw, source, family_index, baseline_a_tot, fsw_policy, f_sw = args
    cfg = AppConfig(raw=raw, source=source)
    spec = cfg.families()[family_index]
    evaluator = _evaluator_for(cfg, spec.topology)
    envelope = full_load_envelope(cfg.motor(), cfg.envelope_points)
    build = build_design_family(spec, _topo_cfg(cfg, spec), evaluator,
                                envelope, baseline_a_tot)
    cycle = cfg.cycle()
    points = clamp_to_envelope(
        cycle_to_operating_points(cycle, cfg.vehicle()), cfg.motor())
    settings = cfg.partial_settings()
    results, a_tot, areas = [], [], []
    for design in build.designs:
        res = evaluate_cycle(design, evaluator, points, cycle.distance_m,
                             cycle.duration_s, settings,
                             f_sw=f_sw, policy=fsw_policy)
        results.append(res)
        a_tot.append(design.a_tot)
        areas.append({sid: sw.area_mm2 for sid, sw in design.switches.items()})
    return FamilyOutcome(spec=spec, min_factor=build.min_factor,
                         factors=build.factors, a_tot=a_tot, areas=areas,
                         results=results)


def run_pipeline(cfg: AppConfig, fsw_policy: str = "fixed",
                 f_sw: float | None = None, threads: int = 1) -> PipelineResult:
    if fsw_policy not in ("fixed", "opt"):
        raise PipelineError("fsw policy must be 'fixed' or 'opt'")
    f_sw = f_sw if f_sw is not None else cfg.f_sw_default

    try:
        baseline_eval = _evaluator_for(cfg, pwm.TOPOLOGY_B6)
        envelope = full_load_envelope(cfg.motor(), cfg.envelope_points)
        baseline, _ = size_topology(
            TopologyConfig("B6", "2L", "A", cfg.f_sw_default, cfg.v_dc,
                           cfg.devices(), cfg.samples_per_carrier),
            baseline_eval, envelope)
    except Exception as exc:
        raise PipelineError(f"full-load sizing stage failed: {exc}") from exc

    tasks = [(cfg.raw, cfg.source, i, baseline.a_tot, fsw_policy, f_sw)
             for i in range(len(cfg.families()))]
    try:
        if threads > 1:
            with multiprocessing.Pool(processes=threads) as pool:
                outcomes = pool.map(_run_family, tasks)
        else:
            outcomes = [_run_family(t) for t in tasks]
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"family evaluation stage failed: {exc}") from exc

    points = []
    for out in outcomes:
        for factor, a, res in zip(out.factors, out.a_tot, out.results):
            points.append(ParetoPoint(
                label=f"{out.spec.label} x{factor:g}", family=out.spec.label,
                a_tot_mm2=a, delta_e_kwh_100km=res.delta_e_kwh_100km,
                factor=factor))
    front, dominated = pareto_front(points)
    return PipelineResult(config_sha256=cfg.sha256, fsw_policy=fsw_policy,
                          f_sw=f_sw, baseline_a_tot=baseline.a_tot,
                          outcomes=outcomes, front=front, dominated=dominated)


# -- bundle writing -------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_bundle(result: PipelineResult, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    manifest = {
        "config_sha256": result.config_sha256,
        "fsw_policy": result.fsw_policy,
        "f_sw_hz": result.f_sw,
        "baseline_a_tot_mm2": result.baseline_a_tot,
        "families": [
            {"label": o.spec.label, "min_factor": round(o.min_factor, 6),
             "factors": o.factors, "a_tot_mm2": o.a_tot,
             "delta_e_kwh_100km": [r.delta_e_kwh_100km for r in o.results]}
            for o in result.outcomes
        ],
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    with (out / "designs.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "factor", "a_tot_mm2", "delta_e_kwh_100km",
                    "p_tot_mean_w", "e_conduction_j", "e_switching_j",
                    "e_harmonic_motor_j", "e_fundamental_motor_j"])
        for o in result.outcomes:
            for factor, a, res in zip(o.factors, o.a_tot, o.results):
                d = res.decomposition_j
                w.writerow([o.spec.label, _fmt(factor), _fmt(a),
                            _fmt(res.delta_e_kwh_100km), _fmt(res.p_tot_mean_w),
                            _fmt(d["conduction"]), _fmt(d["switching"]),
                            _fmt(d["harmonic_motor"]),
                            _fmt(d["fundamental_motor"])])

    with (out / "areas.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "factor", "switch", "area_mm2"])
        for o in result.outcomes:
            for factor, areas in zip(o.factors, o.areas):
                for sid in sorted(areas):
                    w.writerow([o.spec.label, _fmt(factor), sid, _fmt(areas[sid])])

    with (out / "pareto.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "family", "a_tot_mm2", "delta_e_kwh_100km",
                    "on_front"])
        for p in result.front:
            w.writerow([p.label, p.family, _fmt(p.a_tot_mm2),
                        _fmt(p.delta_e_kwh_100km), "1"])
        for p in result.dominated:
            w.writerow([p.label, p.family, _fmt(p.a_tot_mm2),
                        _fmt(p.delta_e_kwh_100km), "0"])
    return out
