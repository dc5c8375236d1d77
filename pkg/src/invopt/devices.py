"""Parametric power-semiconductor model: area-scaled conduction, switching and
output-charge losses, junction temperature via a heat-balance model, and chip
area quantization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

T_J_MAX_C = 175.0
T_HS_C = 65.0
CHIP_GRANULE_MM2 = 25.0

# R_th(A) = RTH_COEFF * A**RTH_EXP  [K/W], A in mm^2
RTH_COEFF = 3.0
RTH_EXP = -0.4


@dataclass(frozen=True)
class DeviceTech:
    """Area-normalized technology parameters of one switch voltage class."""

    voltage_class: float              # V, 750 or 1200
    r_on_specific: float              # Ohm*mm^2
    k_on: float                       # J/(V*A), turn-on energy per switched V*A
    k_off: float                      # J/(V*A), turn-off energy per switched V*A
    q_oss_specific: float             # C/mm^2 at v_ref
    v_ref: float = 0.0                # reference voltage for Q_oss, 0 -> voltage_class
    r_on_temp_coeff: float = 0.0      # 1/K, optional linear R_on(T) slope

    def __post_init__(self):
        if self.voltage_class not in (750.0, 1200.0):
            raise ValueError(f"unsupported voltage class {self.voltage_class}")
        for name in ("r_on_specific", "k_on", "k_off", "q_oss_specific"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.v_ref == 0.0:
            object.__setattr__(self, "v_ref", self.voltage_class)

    def r_on(self, area_mm2: float) -> float:
        return self.r_on_specific / area_mm2

    def q_oss(self, area_mm2: float, v_sw: float) -> float:
        """Output charge at switched voltage, linearized around v_ref."""
        return self.q_oss_specific * area_mm2 * (v_sw / self.v_ref)


@dataclass(frozen=True)
class SwitchDesign:
    """One switch position with its assigned (quantized) die area."""

    switch_id: str
    tech: DeviceTech
    area_mm2: float

    def __post_init__(self):
        if self.area_mm2 <= 0:
            raise ValueError("die area must be positive")

    def with_area(self, area_mm2: float) -> "SwitchDesign":
        return SwitchDesign(self.switch_id, self.tech, area_mm2)


@dataclass(frozen=True)
class SwitchLossBreakdown:
    p_con: float
    p_sw: float

    @property
    def p_mos(self) -> float:
        return self.p_con + self.p_sw


@dataclass(frozen=True)
class ThermalResult:
    r_th: float
    t_j: float
    feasible: bool


@dataclass(frozen=True)
class SwitchingEvents:
    """Aggregated switching events of one switch over one fundamental period.

    sum_on_vi / sum_off_vi are sums of V_sw*|I_sw| over turn-on / turn-off
    events; sum_on_v2 is the sum of V_sw^2 over hard turn-ons (Q_oss term).
    """

    sum_on_vi: float = 0.0
    sum_off_vi: float = 0.0
    sum_on_v2: float = 0.0
    n_on: int = 0
    n_off: int = 0

    @staticmethod
    def from_arrays(v_on, i_on, v_off, i_off) -> "SwitchingEvents":
        v_on = np.asarray(v_on, dtype=float)
        i_on = np.asarray(i_on, dtype=float)
        v_off = np.asarray(v_off, dtype=float)
        i_off = np.asarray(i_off, dtype=float)
        return SwitchingEvents(
            sum_on_vi=float(np.sum(v_on * np.abs(i_on))),
            sum_off_vi=float(np.sum(v_off * np.abs(i_off))),
            sum_on_v2=float(np.sum(v_on**2)),
            n_on=int(v_on.size),
            n_off=int(v_off.size),
        )


def conduction_loss(sw: SwitchDesign, current_samples, conducting=None) -> float:
    """Mean i^2*R_on over one period; samples outside conduction must be zero
    or masked via `conducting`."""
    i = np.asarray(current_samples, dtype=float)
    if i.size == 0:
        return 0.0
    if conducting is not None:
        i = np.where(np.asarray(conducting, dtype=bool), i, 0.0)
    return float(np.mean(i**2) * sw.tech.r_on(sw.area_mm2))


def conduction_loss_from_mean_square(sw: SwitchDesign, mean_sq_current: float) -> float:
    return mean_sq_current * sw.tech.r_on(sw.area_mm2)


def switching_loss(sw: SwitchDesign, events: SwitchingEvents, f_f: float) -> float:
    """Per-switch switching power over one fundamental period at frequency f_f.

    E_on/E_off are linear in switched V*I; every hard turn-on additionally
    dissipates 0.5*Q_oss(V_sw)*V_sw of stored output-capacitance energy.
    """
    tech = sw.tech
    e_hard = tech.k_on * events.sum_on_vi + tech.k_off * events.sum_off_vi
    e_qoss = 0.5 * tech.q_oss_specific * sw.area_mm2 * events.sum_on_v2 / tech.v_ref
    return f_f * (e_hard + e_qoss)


def switch_losses(sw: SwitchDesign, mean_sq_current: float,
                  events: SwitchingEvents, f_f: float) -> SwitchLossBreakdown:
    return SwitchLossBreakdown(
        p_con=conduction_loss_from_mean_square(sw, mean_sq_current),
        p_sw=switching_loss(sw, events, f_f),
    )


def thermal_resistance(area_mm2: float) -> float:
    if area_mm2 <= 0:
        raise ValueError("die area must be positive")
    return RTH_COEFF * area_mm2**RTH_EXP


def junction_temperature(p_mos: float, area_mm2: float,
                         t_hs: float = T_HS_C, t_j_max: float = T_J_MAX_C) -> ThermalResult:
    if p_mos < 0:
        raise ValueError("loss power must be non-negative")
    r_th = thermal_resistance(area_mm2)
    t_j = t_hs + r_th * p_mos
    return ThermalResult(r_th=r_th, t_j=t_j, feasible=t_j <= t_j_max)


def quantize_area(raw_mm2: float, granule: float = CHIP_GRANULE_MM2) -> float:
    """Smallest granule multiple >= raw."""
    if raw_mm2 <= 0:
        raise ValueError("raw area must be positive")
    n = math.ceil(raw_mm2 / granule - 1e-12)
    return max(1, n) * granule
