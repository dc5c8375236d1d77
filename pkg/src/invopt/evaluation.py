"""Point-level evaluation machinery shared by the full-load sizer and the
partial-load optimizer.

The expensive artifacts of one (modulation config, operating point) pair --
electrical solution, switching trace statistics, ripple charge and harmonic
motor losses -- do not depend on chip areas, so they are computed once and
cached. Chip-area dependent device losses are then cheap per design."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import pwm
from .devices import SwitchingEvents
from .motor import (HarmonicMotorParameters, HarmonicLossBreakdown,
                    InfeasibleOperatingPoint, MotorModel, OperatingPointSolution,
                    fundamental_losses, harmonic_losses, solve_operating_point)
from .vehicle import OperatingPoint

F_HARMONIC_MAX = 1.0e6


@dataclass(frozen=True)
class SwitchStats:
    """Area-independent per-switch statistics over one fundamental period."""
    mean_sq_current: float
    events: SwitchingEvents


@dataclass(frozen=True)
class PointPhysics:
    """Cached area-independent physics of one (config, point) pair."""
    feasible: bool
    sol: OperatingPointSolution | None = None
    period_freq: float = 0.0
    switch_stats: dict[str, SwitchStats] | None = None
    charge_ripple_pp: float = 0.0          # C, peak-to-peak capacitor charge
    harmonic: HarmonicLossBreakdown | None = None
    p_mot_f: float = 0.0

    def delta_u(self, c_dc: float) -> float:
        return self.charge_ripple_pp / c_dc


def summarize_trace(trace: pwm.SwitchingTrace) -> dict[str, SwitchStats]:
    stats = {}
    for sid, cur in trace.switch_currents.items():
        mean_sq = float(np.mean(cur**2)) if cur.size else 0.0
        stats[sid] = SwitchStats(
            mean_sq_current=mean_sq,
            events=SwitchingEvents.from_arrays(*trace.event_arrays(sid)))
    return stats


class Evaluator:
    """Computes and caches point physics for one motor/harmonic-parameter
    pair. Instances are cheap to create; the cache is keyed on rounded
    operating points and the full modulation config."""

    def __init__(self, motor: MotorModel, harmonic_params: HarmonicMotorParameters):
        self.motor = motor
        self.harmonic_params = harmonic_params
        self._cache: dict = {}

    def _key(self, cfg: pwm.ModulationConfig, point: OperatingPoint):
        return (cfg.topology, cfg.mode, cfg.variant, cfg.f_sw, cfg.v_dc,
                cfg.samples_per_carrier,
                round(point.speed_rpm, 3), round(point.torque_nm, 4))

    def physics(self, cfg: pwm.ModulationConfig, point: OperatingPoint) -> PointPhysics:
        key = self._key(cfg, point)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        result = self._compute(cfg, point)
        self._cache[key] = result
        return result

    def _compute(self, cfg: pwm.ModulationConfig, point: OperatingPoint) -> PointPhysics:
        try:
            sol = solve_operating_point(self.motor, point, cfg.voltage_limit())
        except InfeasibleOperatingPoint:
            return PointPhysics(feasible=False)
        trace = pwm.synthesize_period(cfg, sol)
        stats = summarize_trace(trace)
        charge = np.cumsum(trace.cap_current) * trace.dt
        charge_pp = float(charge.max() - charge.min())
        spectrum = pwm.dq_ripple_spectrum(trace, sol, (cfg.f_sw / 2.0, F_HARMONIC_MAX))
        harm = harmonic_losses(spectrum, self.harmonic_params)
        p_mot_f = fundamental_losses(self.motor, sol)
        return PointPhysics(
            feasible=True, sol=sol, period_freq=trace.period_freq,
            switch_stats=stats, charge_ripple_pp=charge_pp,
            harmonic=harm, p_mot_f=p_mot_f)

    def cache_clear(self):
        self._cache.clear()
