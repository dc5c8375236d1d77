"""Analytic PMSM plant model: dq current/voltage solution per operating point
(MTPA below base speed, minimum-current field weakening above), fundamental
losses, tabulated harmonic loss-factor curves, and turn-ratio scaling for the
open-winding machine variant."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * math.pi


class InfeasibleOperatingPoint(Exception):
    """Voltage and current limits cannot both be met at the requested point."""


@dataclass(frozen=True)
class MotorModel:
    pole_pairs: int
    stator_resistance: float      # Ohm
    l_d: float                    # H
    l_q: float                    # H
    psi_pm: float                 # Wb
    i_max: float                  # A, peak phase current
    p_max: float                  # W, mechanical
    m_max: float                  # Nm
    max_speed_rpm: float
    turn_ratio: float = 1.0
    c_hys: float = 0.0            # W/(Wb^2*Hz)
    c_eddy: float = 0.0           # W/(Wb^2*Hz^2)

    def __post_init__(self):
        for name in ("stator_resistance", "l_d", "l_q", "psi_pm", "i_max",
                     "p_max", "m_max", "max_speed_rpm", "turn_ratio"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.pole_pairs < 1:
            raise ValueError("pole_pairs must be >= 1")

    def electrical_frequency(self, speed_rpm: float) -> float:
        return self.pole_pairs * speed_rpm / 60.0

    @property
    def corner_speed_rpm(self) -> float:
        return self.p_max / self.m_max * 60.0 / TWO_PI

    def envelope_torque(self, speed_rpm: float) -> float:
        """Full-load torque magnitude at a given speed."""
        if speed_rpm <= self.corner_speed_rpm:
            return self.m_max
        omega = speed_rpm * TWO_PI / 60.0
        return self.p_max / omega

    def torque(self, i_d: float, i_q: float) -> float:
        return 1.5 * self.pole_pairs * (self.psi_pm * i_q + (self.l_d - self.l_q) * i_d * i_q)


@dataclass(frozen=True)
class OperatingPointSolution:
    u_d: float
    u_q: float
    i_d: float
    i_q: float
    f_fund: float                 # Hz, electrical
    power_factor: float
    modulation_index: float       # fundamental amplitude / voltage limit
    i_rms: float                  # A, phase rms
    voltage_limit: float          # V, peak phase amplitude of the active mode
    feasible: bool = True

    @property
    def u_amp(self) -> float:
        return math.hypot(self.u_d, self.u_q)

    @property
    def i_amp(self) -> float:
        return math.hypot(self.i_d, self.i_q)

    @property
    def current_angle(self) -> float:
        """Phase of the current fundamental relative to the voltage fundamental."""
        if self.u_amp == 0.0 or self.i_amp == 0.0:
            return 0.0
        return math.atan2(self.i_q, self.i_d) - math.atan2(self.u_q, self.u_d)


def _dq_voltages(motor: MotorModel, i_d: float, i_q: float, omega_e: float) -> tuple[float, float]:
    u_d = motor.stator_resistance * i_d - omega_e * motor.l_q * i_q
    u_q = motor.stator_resistance * i_q + omega_e * (motor.l_d * i_d + motor.psi_pm)
    return u_d, u_q


def _iq_for_torque(motor: MotorModel, i_d: float, torque: float) -> float:
    denom = 1.5 * motor.pole_pairs * (motor.psi_pm + (motor.l_d - motor.l_q) * i_d)
    if denom == 0.0:
        return math.inf
    return torque / denom


def _u_amp(motor: MotorModel, i_d: float, torque: float, omega_e: float) -> float:
    i_q = _iq_for_torque(motor, i_d, torque)
    if not math.isfinite(i_q):
        return math.inf
    return math.hypot(*_dq_voltages(motor, i_d, i_q, omega_e))


def _mtpa_current(motor: MotorModel, torque: float) -> tuple[float, float]:
    """Minimum current magnitude achieving the torque, ignoring voltage."""
    if torque == 0.0:
        return 0.0, 0.0
    dl = motor.l_d - motor.l_q
    if dl == 0.0:
        return 0.0, torque / (1.5 * motor.pole_pairs * motor.psi_pm)

    def mag(i_d: float) -> float:
        i_q = _iq_for_torque(motor, i_d, torque)
        return math.hypot(i_d, i_q)

    # current magnitude is unimodal in i_d on (-psi/dl-side, 0]; golden section
    lo = -0.999 * abs(motor.psi_pm / dl) if dl < 0 else 0.0
    hi = 0.0 if dl < 0 else 0.999 * abs(motor.psi_pm / dl)
    if dl > 0:
        lo, hi = 0.0, hi
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = mag(c), mag(d)
    for _ in range(120):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = mag(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = mag(d)
    i_d = (a + b) / 2.0
    return i_d, _iq_for_torque(motor, i_d, torque)


def solve_operating_point(motor: MotorModel, point, voltage_limit: float) -> OperatingPointSolution:
    """Electrical solution for a torque-speed point under a peak phase-voltage
    limit. MTPA where the voltage limit is inactive, otherwise the
    minimum-|i_d| field-weakening solution found by bisection on i_d.

    Raises InfeasibleOperatingPoint when no (i_d, i_q) within the current
    limit satisfies both torque and voltage constraints.
    """
    n = point.speed_rpm
    torque = point.torque_nm
    f_f = motor.electrical_frequency(n)
    omega_e = TWO_PI * f_f

    if n == 0.0 and torque == 0.0:
        return OperatingPointSolution(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, voltage_limit)

    # device losses are direction-symmetric; solve with |M|, keep the sign in i_q
    sign = 1.0 if torque >= 0 else -1.0
    m_abs = abs(torque)

    i_d0, i_q0 = _mtpa_current(motor, m_abs)
    if math.hypot(i_d0, i_q0) > motor.i_max * (1.0 + 1e-9):
        raise InfeasibleOperatingPoint(f"torque {torque} Nm exceeds current limit")

    if _u_amp(motor, i_d0, m_abs, omega_e) <= voltage_limit:
        i_d, i_q = i_d0, i_q0
    else:
        # walk i_d negative until the voltage constraint is met, then bisect
        # to the minimum-|i_d| (minimum-current) boundary solution
        i_d_lo = i_d0
        i_d_hi = None
        step = max(10.0, 0.02 * motor.i_max)
        i_d_try = i_d0
        while i_d_try > -1.5 * motor.i_max:
            i_d_try -= step
            u = _u_amp(motor, i_d_try, m_abs, omega_e)
            if u <= voltage_limit:
                i_d_hi = i_d_try
                break
            i_d_lo = i_d_try
        if i_d_hi is None:
            raise InfeasibleOperatingPoint(f"no field-weakening solution at {n} rpm, {torque} Nm")
        for _ in range(200):
            mid = 0.5 * (i_d_lo + i_d_hi)
            if _u_amp(motor, mid, m_abs, omega_e) <= voltage_limit:
                i_d_hi = mid
            else:
                i_d_lo = mid
        i_d = i_d_hi
        i_q = _iq_for_torque(motor, i_d, m_abs)
        if math.hypot(i_d, i_q) > motor.i_max * (1.0 + 1e-6):
            raise InfeasibleOperatingPoint(
                f"voltage-feasible solution exceeds current limit at {n} rpm, {torque} Nm")

    i_q *= sign
    u_d, u_q = _dq_voltages(motor, i_d, i_q, omega_e)
    u_amp = math.hypot(u_d, u_q)
    i_amp = math.hypot(i_d, i_q)
    if u_amp > 0 and i_amp > 0:
        p_el = 1.5 * (u_d * i_d + u_q * i_q)
        pf = p_el / (1.5 * u_amp * i_amp)
    else:
        pf = 1.0
    return OperatingPointSolution(
        u_d=u_d, u_q=u_q, i_d=i_d, i_q=i_q, f_fund=f_f,
        power_factor=pf, modulation_index=u_amp / voltage_limit,
        i_rms=i_amp / math.sqrt(2.0), voltage_limit=voltage_limit)


def fundamental_losses(motor: MotorModel, sol: OperatingPointSolution) -> float:
    """Copper loss plus a two-term (hysteresis + eddy) iron loss on the total
    flux linkage."""
    p_cu = 1.5 * motor.stator_resistance * (sol.i_d**2 + sol.i_q**2)
    psi_sq = (motor.l_d * sol.i_d + motor.psi_pm)**2 + (motor.l_q * sol.i_q)**2
    p_fe = motor.c_hys * psi_sq * sol.f_fund + motor.c_eddy * psi_sq * sol.f_fund**2
    return p_cu + p_fe


def scale_motor(motor: MotorModel, kappa: float) -> MotorModel:
    """Turn-ratio scaling: impedances x kappa^2, flux x kappa, current limit
    / kappa; the mechanical envelope is unchanged."""
    if kappa <= 0:
        raise ValueError("turn ratio must be positive")
    return replace(
        motor,
        stator_resistance=motor.stator_resistance * kappa**2,
        l_d=motor.l_d * kappa**2,
        l_q=motor.l_q * kappa**2,
        psi_pm=motor.psi_pm * kappa,
        i_max=motor.i_max / kappa,
        c_hys=motor.c_hys / kappa**2,
        c_eddy=motor.c_eddy / kappa**2,
        turn_ratio=motor.turn_ratio * kappa,
    )


# ---------------------------------------------------------------------------
# harmonic losses

@dataclass(frozen=True)
class HarmonicMotorParameters:
    """Tabulated harmonic loss-factor curves on a frequency grid; interpolated
    linearly in log-frequency. The curves are synthetic stand-ins fitted to
    give skin-effect-like growth."""

    freq_grid: np.ndarray         # Hz, strictly increasing
    l_d_h: np.ndarray             # H
    l_q_h: np.ndarray             # H
    r_iron_h: np.ndarray          # Ohm-equivalent
    r_mag_h: np.ndarray           # Ohm-equivalent
    r_cu_h: np.ndarray            # Ohm
    k_iron: float = 1.0
    k_mag: float = 1.0
    k_cu: float = 1.0
    f_max: float = 1.0e6

    def __post_init__(self):
        f = np.asarray(self.freq_grid, dtype=float)
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        for name in ("l_d_h", "l_q_h", "r_iron_h", "r_mag_h", "r_cu_h"):
            c = np.asarray(getattr(self, name), dtype=float)
            if c.shape != f.shape:
                raise ValueError(f"{name} must match the frequency grid")
            if np.any(c <= 0):
                raise ValueError(f"{name} must be positive on the grid")
            object.__setattr__(self, name, c)
        object.__setattr__(self, "freq_grid", f)

    def _interp(self, curve: np.ndarray, f: np.ndarray) -> np.ndarray:
        if np.any(f < self.freq_grid[0]) or np.any(f > self.freq_grid[-1]):
            raise ValueError("harmonic frequency outside the tabulated grid")
        return np.interp(np.log(f), np.log(self.freq_grid), curve)

    def scaled(self, kappa: float) -> "HarmonicMotorParameters":
        """Turn-ratio scaling consistent with scale_motor."""
        return replace(
            self,
            l_d_h=self.l_d_h * kappa**2,
            l_q_h=self.l_q_h * kappa**2,
            r_iron_h=self.r_iron_h * kappa**2,
            r_mag_h=self.r_mag_h * kappa**2,
            r_cu_h=self.r_cu_h * kappa**2,
        )


@dataclass(frozen=True)
class HarmonicLossBreakdown:
    p_cu_h: float
    p_iron_h: float
    p_mag_h: float

    @property
    def p_mot_h(self) -> float:
        return self.p_cu_h + self.p_iron_h + self.p_mag_h


def harmonic_losses(spectrum, params: HarmonicMotorParameters) -> HarmonicLossBreakdown:
    """Ripple-voltage driven copper, iron and magnet losses summed over the
    spectrum bins."""
    f = np.asarray(spectrum.freq_hz, dtype=float)
    if f.size == 0:
        return HarmonicLossBreakdown(0.0, 0.0, 0.0)
    u_d = np.asarray(spectrum.u_d, dtype=float)
    u_q = np.asarray(spectrum.u_q, dtype=float)
    l_d = params._interp(params.l_d_h, f)
    l_q = params._interp(params.l_q_h, f)
    r_iron = params._interp(params.r_iron_h, f)
    r_mag = params._interp(params.r_mag_h, f)
    r_cu = params._interp(params.r_cu_h, f)
    p_cu = params.k_cu * float(np.sum(r_cu / f**2 * (u_d**2 / l_d**2 + u_q**2 / l_q**2)))
    p_iron = params.k_iron * float(np.sum((u_d**2 + u_q**2) / r_iron))
    p_mag = params.k_mag * float(np.sum(u_d**2 / r_mag))
    return HarmonicLossBreakdown(p_cu_h=p_cu, p_iron_h=p_iron, p_mag_h=p_mag)
