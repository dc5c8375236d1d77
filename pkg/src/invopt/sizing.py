"""Full-load chip-area sizing: per-switch minimum die area over the full-load
envelope under the junction-temperature limit, the ripple-voltage check over a
switching-frequency grid, and topology totals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import pwm
from .devices import (CHIP_GRANULE_MM2, DeviceTech, SwitchDesign, T_HS_C, T_J_MAX_C,
                      junction_temperature, switch_losses)
from .evaluation import Evaluator, PointPhysics
from .vehicle import OperatingPoint

AREA_CAP_MM2 = 1000.0

# TNPC mid-point switches block only half the DC link
_TNPC_MIDPOINT = {"3", "4"}


class SizingError(Exception):
    pass


def device_class_for_switch(topology: str, switch_id: str) -> float:
    if topology == pwm.TOPOLOGY_TNPC and switch_id[-1] in _TNPC_MIDPOINT:
        return 750.0
    return 1200.0


@dataclass(frozen=True)
class TopologyConfig:
    """What a topology is sized as: modulation config of its full-load mode
    plus the device technologies per voltage class."""
    topology: str
    mode: str
    variant: str
    f_sw: float
    v_dc: float
    devices: dict[float, DeviceTech]
    samples_per_carrier: int = 500

    def modulation(self, mode: str | None = None, f_sw: float | None = None) -> pwm.ModulationConfig:
        return pwm.ModulationConfig(
            topology=self.topology, mode=mode or self.mode, variant=self.variant,
            f_sw=f_sw if f_sw is not None else self.f_sw, v_dc=self.v_dc,
            samples_per_carrier=self.samples_per_carrier)

    def tech_for(self, switch_id: str) -> DeviceTech:
        return self.devices[device_class_for_switch(self.topology, switch_id)]


@dataclass
class InverterDesign:
    topology: str
    variant: str
    switches: dict[str, SwitchDesign]
    modes: tuple[str, ...]
    full_load_mode: str
    is_baseline: bool = False
    label: str = ""

    def __post_init__(self):
        expected = set(pwm.SWITCH_IDS[self.topology])
        if set(self.switches) != expected:
            raise ValueError(f"switch set does not match topology {self.topology}")

    @property
    def a_tot(self) -> float:
        return sum(sw.area_mm2 for sw in self.switches.values())

    def with_areas(self, areas: dict[str, float], label: str | None = None) -> "InverterDesign":
        new = {sid: sw.with_area(areas.get(sid, sw.area_mm2))
               for sid, sw in self.switches.items()}
        return InverterDesign(self.topology, self.variant, new, self.modes,
                              self.full_load_mode, self.is_baseline,
                              label if label is not None else self.label)


@dataclass(frozen=True)
class PointSizingRow:
    point: OperatingPoint
    areas: dict[str, float]
    t_j: dict[str, float]
    p_sw_over_p_con: float
    delta_u: float


@dataclass(frozen=True)
class SizingReport:
    rows: list[PointSizingRow]
    binding_point: dict[str, OperatingPoint]
    a_tot: float


def _min_area_for_switch(tech: DeviceTech, stats, period_freq: float,
                         granule: float, cap: float) -> tuple[float, float, float, float] | None:
    """Ascending granule search; returns (area, t_j, p_con, p_sw) of the first
    thermally feasible area, or None below the cap. The loss profile is
    re-evaluated per step because R_on and the Q_oss term depend on area."""
    area = granule
    while area <= cap + 1e-9:
        sw = SwitchDesign("probe", tech, area)
        losses = switch_losses(sw, stats.mean_sq_current, stats.events, period_freq)
        thermal = junction_temperature(losses.p_mos, area)
        if thermal.feasible:
            return area, thermal.t_j, losses.p_con, losses.p_sw
        area += granule
    return None


def size_point(topo_cfg: TopologyConfig, evaluator: Evaluator, point: OperatingPoint,
               f_sw: float | None = None, granule: float = CHIP_GRANULE_MM2,
               area_cap: float = AREA_CAP_MM2, c_dc: float = 500e-6) -> PointSizingRow:
    """Independently size every switch of the topology at one envelope point."""
    cfg = topo_cfg.modulation(f_sw=f_sw)
    phys = evaluator.physics(cfg, point)
    if not phys.feasible:
        raise SizingError(f"point ({point.speed_rpm} rpm, {point.torque_nm} Nm) "
                          f"electrically infeasible in {cfg.mode}-mode")
    areas, t_j = {}, {}
    p_sw_tot = p_con_tot = 0.0
    for sid, stats in phys.switch_stats.items():
        found = _min_area_for_switch(topo_cfg.tech_for(sid), stats,
                                     phys.period_freq, granule, area_cap)
        if found is None:
            raise SizingError(f"switch {sid} infeasible below {area_cap} mm^2 at "
                              f"({point.speed_rpm} rpm, {point.torque_nm} Nm)")
        areas[sid], t_j[sid], p_con, p_sw = found
        p_con_tot += p_con
        p_sw_tot += p_sw
    ratio = p_sw_tot / p_con_tot if p_con_tot > 0 else math.inf
    return PointSizingRow(point=point, areas=areas, t_j=t_j,
                          p_sw_over_p_con=ratio, delta_u=phys.delta_u(c_dc))


def size_topology(topo_cfg: TopologyConfig, evaluator: Evaluator,
                  envelope: list[OperatingPoint], f_sw: float | None = None,
                  c_dc: float = 500e-6) -> tuple[InverterDesign, SizingReport]:
    """Per-switch area = maximum of the per-point requirements; records the
    binding envelope point per switch."""
    if not envelope:
        raise SizingError("empty envelope")
    rows = [size_point(topo_cfg, evaluator, p, f_sw=f_sw, c_dc=c_dc) for p in envelope]
    switch_ids = pwm.SWITCH_IDS[topo_cfg.topology]
    areas, binding = {}, {}
    for sid in switch_ids:
        worst = max(rows, key=lambda r: r.areas[sid])
        areas[sid] = worst.areas[sid]
        binding[sid] = worst.point
    switches = {sid: SwitchDesign(sid, topo_cfg.tech_for(sid), areas[sid])
                for sid in switch_ids}
    design = InverterDesign(
        topology=topo_cfg.topology, variant=topo_cfg.variant, switches=switches,
        modes=(topo_cfg.mode,), full_load_mode=topo_cfg.mode,
        is_baseline=(topo_cfg.topology == pwm.TOPOLOGY_B6))
    report = SizingReport(rows=rows, binding_point=binding, a_tot=design.a_tot)
    return design, report


@dataclass(frozen=True)
class RippleCurve:
    f_sw: list[float]
    delta_u: list[float]
    f_min_feasible: float | None


def min_feasible_fsw(topo_cfg: TopologyConfig, evaluator: Evaluator,
                     worst_point: OperatingPoint, f_grid: list[float],
                     c_dc: float = 500e-6, du_max: float = 15.0) -> RippleCurve:
    """Smallest grid frequency meeting the ripple constraint at the worst-case
    point, with the full (f_sw, delta U) curve."""
    if any(b <= a for a, b in zip(f_grid, f_grid[1:])):
        raise ValueError("frequency grid must be ascending")
    dus = []
    f_ok = None
    for f in f_grid:
        phys = evaluator.physics(topo_cfg.modulation(f_sw=f), worst_point)
        if not phys.feasible:
            dus.append(math.inf)
            continue
        du = phys.delta_u(c_dc)
        dus.append(du)
        if f_ok is None and du <= du_max:
            f_ok = f
    return RippleCurve(f_sw=list(f_grid), delta_u=dus, f_min_feasible=f_ok)
