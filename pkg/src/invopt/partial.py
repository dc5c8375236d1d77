"""Partial-load evaluation: per-point total system losses, operating-mode
feasibility and selection, optimal switching frequency, drive-cycle
aggregation and torque-speed boundary maps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import pwm
from .devices import T_J_MAX_C, junction_temperature, switch_losses
from .evaluation import Evaluator
from .sizing import InverterDesign
from .vehicle import OperatingPoint

# tie-break preference: fewer active switches wins
_MODE_RANK = {"2L": 0, "Y": 0, "3L": 1, "H": 1}


class UnservablePoint(Exception):
    pass


@dataclass(frozen=True)
class PartialLoadSettings:
    v_dc: float = 800.0
    c_dc: float = 500e-6
    du_max: float = 15.0
    samples_per_carrier: int = 500
    f_grid: tuple[float, ...] = (6e3, 8e3, 10e3, 12e3, 14e3, 16e3, 18e3)

    def modulation(self, design: InverterDesign, mode: str, f_sw: float) -> pwm.ModulationConfig:
        return pwm.ModulationConfig(
            topology=design.topology, mode=mode, variant=design.variant,
            f_sw=f_sw, v_dc=self.v_dc, samples_per_carrier=self.samples_per_carrier)


@dataclass(frozen=True)
class PointEvaluation:
    mode: str
    f_sw: float
    p_inv: float
    p_mot_f: float
    p_mot_h: float
    p_tot: float
    p_con_total: float
    p_sw_total: float
    t_j: dict[str, float]
    delta_u: float
    electrical_feasible: bool
    thermal_feasible: bool
    ripple_feasible: bool

    @property
    def feasible(self) -> bool:
        return self.electrical_feasible and self.thermal_feasible and self.ripple_feasible


def _infeasible(mode: str, f_sw: float) -> PointEvaluation:
    return PointEvaluation(mode, f_sw, math.nan, math.nan, math.nan, math.nan,
                           math.nan, math.nan, {}, math.nan,
                           electrical_feasible=False, thermal_feasible=False,
                           ripple_feasible=False)


def evaluate_point(design: InverterDesign, evaluator: Evaluator, point: OperatingPoint,
                   mode: str, f_sw: float,
                   settings: PartialLoadSettings) -> PointEvaluation:
    """Total system loss of one operating point in one mode at one switching
    frequency; electrical infeasibility yields an infeasible evaluation, not
    an exception."""
    if mode not in design.modes:
        raise ValueError(f"mode {mode!r} not in design modes {design.modes}")
    cfg = settings.modulation(design, mode, f_sw)
    phys = evaluator.physics(cfg, point)
    if not phys.feasible:
        return _infeasible(mode, f_sw)

    p_con_total = p_sw_total = 0.0
    t_j = {}
    thermal_ok = True
    active = _active_switches(design.topology, mode)
    for sid, sw in design.switches.items():
        stats = phys.switch_stats[sid]
        losses = switch_losses(sw, stats.mean_sq_current, stats.events, phys.period_freq)
        p_con_total += losses.p_con
        p_sw_total += losses.p_sw
        thermal = junction_temperature(losses.p_mos, sw.area_mm2)
        t_j[sid] = thermal.t_j
        if sid in active and not thermal.feasible:
            thermal_ok = False

    p_inv = p_con_total + p_sw_total
    p_mot_h = phys.harmonic.p_mot_h
    p_mot_f = phys.p_mot_f
    p_tot = p_inv + p_mot_h + p_mot_f
    delta_u = phys.delta_u(settings.c_dc)
    return PointEvaluation(
        mode=mode, f_sw=f_sw, p_inv=p_inv, p_mot_f=p_mot_f, p_mot_h=p_mot_h,
        p_tot=p_tot, p_con_total=p_con_total, p_sw_total=p_sw_total, t_j=t_j,
        delta_u=delta_u, electrical_feasible=True, thermal_feasible=thermal_ok,
        ripple_feasible=delta_u <= settings.du_max)


def _active_switches(topology: str, mode: str) -> set[str]:
    ids = set(pwm.SWITCH_IDS[topology])
    if topology == pwm.TOPOLOGY_TNPC and mode == "2L":
        ids = {s for s in ids if s[-1] in "12"}
    if topology == pwm.TOPOLOGY_B62Y and mode == "Y":
        ids = {s for s in ids if s.startswith("Td") or s[-1] in "12"}
    return ids


def _evaluate_with_ripple_escalation(design, evaluator, point, mode, f_sw,
                                     settings: PartialLoadSettings) -> PointEvaluation:
    """If only the ripple constraint fails at the requested frequency,
    escalate along the grid before declaring the mode infeasible."""
    ev = evaluate_point(design, evaluator, point, mode, f_sw, settings)
    if ev.feasible or not ev.electrical_feasible or not ev.thermal_feasible:
        return ev
    for f in settings.f_grid:
        if f <= f_sw:
            continue
        ev2 = evaluate_point(design, evaluator, point, mode, f, settings)
        if ev2.feasible:
            return ev2
    return ev


def feasible_modes(design: InverterDesign, evaluator: Evaluator, point: OperatingPoint,
                   f_sw: float, settings: PartialLoadSettings) -> set[str]:
    return {m for m in design.modes
            if evaluate_point(design, evaluator, point, m, f_sw, settings).feasible}


def best_mode(design: InverterDesign, evaluator: Evaluator, point: OperatingPoint,
              f_sw: float, settings: PartialLoadSettings,
              escalate: bool = True) -> tuple[str, PointEvaluation]:
    """Loss-minimal feasible mode; ties prefer the mode with fewer active
    switches."""
    candidates = []
    for m in design.modes:
        if escalate:
            ev = _evaluate_with_ripple_escalation(design, evaluator, point, m, f_sw, settings)
        else:
            ev = evaluate_point(design, evaluator, point, m, f_sw, settings)
        if ev.feasible:
            candidates.append((ev.p_tot, _MODE_RANK[m], m, ev))
    if not candidates:
        raise UnservablePoint(
            f"no feasible mode at ({point.speed_rpm:.0f} rpm, {point.torque_nm:.1f} Nm)")
    candidates.sort(key=lambda c: (c[0], c[1]))
    _, _, m, ev = candidates[0]
    return m, ev


def optimal_fsw(design: InverterDesign, evaluator: Evaluator, point: OperatingPoint,
                f_grid: tuple[float, ...],
                settings: PartialLoadSettings) -> tuple[float, str, PointEvaluation]:
    """Exhaustive argmin of P_tot over (grid frequency, feasible mode);
    deterministic tie-break toward lower frequency, then fewer switches."""
    if any(b <= a for a, b in zip(f_grid, f_grid[1:])):
        raise ValueError("frequency grid must be ascending")
    candidates = []
    for f in f_grid:
        for m in design.modes:
            ev = evaluate_point(design, evaluator, point, m, f, settings)
            if ev.feasible:
                candidates.append((ev.p_tot, f, _MODE_RANK[m], m, ev))
    if not candidates:
        raise UnservablePoint(
            f"no feasible (f_sw, mode) at ({point.speed_rpm:.0f} rpm, "
            f"{point.torque_nm:.1f} Nm)")
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    p_tot, f, _, m, ev = candidates[0]
    return f, m, ev


@dataclass
class CycleResult:
    evaluations: list[tuple[OperatingPoint, PointEvaluation]]
    e_tot_cycle_j: float
    delta_e_kwh_100km: float
    p_tot_mean_w: float
    decomposition_j: dict[str, float]


def evaluate_cycle(design: InverterDesign, evaluator: Evaluator,
                   points: list[OperatingPoint], distance_m: float, duration_s: float,
                   settings: PartialLoadSettings, f_sw: float = 10e3,
                   policy: str = "fixed") -> CycleResult:
    """Aggregate the loss of every weighted cycle point into total energy,
    energy per 100 km and the mean partial-load power."""
    if policy not in ("fixed", "opt"):
        raise ValueError("policy must be 'fixed' or 'opt'")
    if distance_m <= 0:
        raise ValueError("cycle distance is zero; energy per 100 km is undefined")
    if duration_s <= 0:
        raise ValueError("cycle duration must be positive")

    evaluations = []
    failures = []
    for p in points:
        try:
            if policy == "fixed":
                _, ev = best_mode(design, evaluator, p, f_sw, settings)
            else:
                _, _, ev = optimal_fsw(design, evaluator, p, settings.f_grid, settings)
        except UnservablePoint as exc:
            failures.append(str(exc))
            continue
        evaluations.append((p, ev))
    if failures:
        raise UnservablePoint("unservable cycle points:\n" + "\n".join(failures))

    e_tot = sum(ev.p_tot * p.weight_s for p, ev in evaluations)
    decomposition = {
        "conduction": sum(ev.p_con_total * p.weight_s for p, ev in evaluations),
        "switching": sum(ev.p_sw_total * p.weight_s for p, ev in evaluations),
        "harmonic_motor": sum(ev.p_mot_h * p.weight_s for p, ev in evaluations),
        "fundamental_motor": sum(ev.p_mot_f * p.weight_s for p, ev in evaluations),
    }
    delta_e = e_tot * (100e3 / distance_m) / 3.6e6
    return CycleResult(
        evaluations=evaluations, e_tot_cycle_j=e_tot,
        delta_e_kwh_100km=delta_e, p_tot_mean_w=e_tot / duration_s,
        decomposition_j=decomposition)


@dataclass
class ModeBoundaryMap:
    speeds_rpm: np.ndarray
    torques_nm: np.ndarray
    best_mode: list[list[str | None]]          # None outside envelope / unservable
    feasible: list[list[frozenset]]
    loss_diff_w: np.ndarray                    # P_tot(fallback) - P_tot(best), NaN outside

    def mode_region(self, mode: str) -> set[tuple[int, int]]:
        return {(i, j)
                for i in range(len(self.torques_nm))
                for j in range(len(self.speeds_rpm))
                if mode in self.feasible[i][j]}


def mode_boundary_map(design: InverterDesign, evaluator: Evaluator,
                      f_sw: float, settings: PartialLoadSettings,
                      n_speed: int = 41, n_torque: int = 41,
                      max_speed_rpm: float | None = None,
                      max_torque_nm: float | None = None) -> ModeBoundaryMap:
    """Feasible mode set, best mode and the loss margin over the fallback
    mode on a rectangular torque-speed grid covering the envelope."""
    motor = evaluator.motor
    speeds = np.linspace(0.0, max_speed_rpm or motor.max_speed_rpm, n_speed)
    torques = np.linspace(-(max_torque_nm or motor.m_max),
                          max_torque_nm or motor.m_max, n_torque)
    fallback = design.full_load_mode
    best = [[None] * n_speed for _ in range(n_torque)]
    feas = [[frozenset()] * n_speed for _ in range(n_torque)]
    diff = np.full((n_torque, n_speed), np.nan)
    for i, m_nm in enumerate(torques):
        for j, n_rpm in enumerate(speeds):
            if abs(m_nm) > motor.envelope_torque(n_rpm) + 1e-9:
                continue
            point = OperatingPoint(n_rpm, m_nm)
            evs = {m: evaluate_point(design, evaluator, point, m, f_sw, settings)
                   for m in design.modes}
            fset = frozenset(m for m, ev in evs.items() if ev.feasible)
            feas[i][j] = fset
            if not fset:
                continue
            chosen = min(fset, key=lambda m: (evs[m].p_tot, _MODE_RANK[m]))
            best[i][j] = chosen
            if fallback in fset:
                diff[i, j] = evs[fallback].p_tot - evs[chosen].p_tot
    return ModeBoundaryMap(speeds_rpm=speeds, torques_nm=torques,
                           best_mode=best, feasible=feas, loss_diff_w=diff)
