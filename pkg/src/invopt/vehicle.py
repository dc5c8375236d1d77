"""Longitudinal vehicle model: drive-cycle ingestion and conversion of the
velocity profile into motor torque-speed operating points, plus the full-load
envelope point set."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

RPM_PER_RAD_S = 60.0 / (2.0 * math.pi)


class CycleFormatError(ValueError):
    pass


@dataclass(frozen=True)
class VehicleParameters:
    frontal_area: float          # m^2
    drag_coefficient: float
    air_density: float           # kg/m^3
    rolling_coefficient: float
    gravity: float               # m/s^2
    wheel_radius: float          # m
    mass: float                  # kg
    gear_ratio: float
    gear_efficiency: float
    axle_inertia: float = 0.0    # kg*m^2
    machine_inertia: float = 0.0  # kg*m^2
    machine_count: int = 1

    def __post_init__(self):
        for name in ("frontal_area", "air_density", "wheel_radius", "mass", "gear_ratio"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("drag_coefficient", "rolling_coefficient", "gravity"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not (0.0 < self.gear_efficiency <= 1.0):
            raise ValueError("gear_efficiency must be in (0, 1]")
        if self.machine_count < 1:
            raise ValueError("machine_count must be >= 1")


@dataclass(frozen=True)
class DriveCycle:
    name: str
    time_s: np.ndarray
    velocity_ms: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.time_s, dtype=float)
        v = np.asarray(self.velocity_ms, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise CycleFormatError("cycle needs matching 1-D time/velocity arrays, >= 2 samples")
        if t[0] != 0.0:
            raise CycleFormatError("first sample must be at t = 0")
        if np.any(np.diff(t) <= 0):
            raise CycleFormatError("time must be strictly increasing")
        if np.any(v < 0):
            raise CycleFormatError("velocity must be non-negative")
        object.__setattr__(self, "time_s", t)
        object.__setattr__(self, "velocity_ms", v)

    @property
    def duration_s(self) -> float:
        return float(self.time_s[-1])

    @property
    def distance_m(self) -> float:
        return float(np.trapezoid(self.velocity_ms, self.time_s))


@dataclass(frozen=True)
class OperatingPoint:
    """Torque-speed point; weight is the dwell time in seconds for cycle
    points and 1 for envelope points."""

    speed_rpm: float
    torque_nm: float
    weight_s: float = 1.0

    def __post_init__(self):
        if self.speed_rpm < 0:
            raise ValueError("speed must be non-negative")
        if self.weight_s <= 0:
            raise ValueError("weight must be positive")


def load_cycle(path, name: str | None = None) -> DriveCycle:
    """Read a two-column (t, v) CSV with a `# unit=kmh|ms` header line.

    Comment lines other than the unit header are ignored; malformed rows,
    non-monotone time and negative velocities are rejected with row numbers.
    """
    path = Path(path)
    unit = None
    times, velocities = [], []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.startswith("unit="):
                    unit = body.split("=", 1)[1].strip()
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise CycleFormatError(f"{path}:{lineno}: expected 't,v', got {line!r}")
            try:
                t = float(parts[0])
                v = float(parts[1])
            except ValueError as exc:
                raise CycleFormatError(f"{path}:{lineno}: non-numeric row {line!r}") from exc
            if times and t <= times[-1]:
                raise CycleFormatError(f"{path}:{lineno}: non-monotone time {t}")
            if v < 0:
                raise CycleFormatError(f"{path}:{lineno}: negative velocity {v}")
            times.append(t)
            velocities.append(v)
    if unit is None:
        raise CycleFormatError(f"{path}: missing '# unit=kmh|ms' header")
    if unit not in ("kmh", "ms"):
        raise CycleFormatError(f"{path}: unknown unit {unit!r}")
    v = np.asarray(velocities, dtype=float)
    if unit == "kmh":
        v = v / 3.6
    return DriveCycle(name=name or path.stem, time_s=np.asarray(times), velocity_ms=v)


def _acceleration(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    # central differences inside, one-sided at the ends (np.gradient semantics)
    return np.gradient(v, t)


def tractive_force(veh: VehicleParameters, v: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Road-load force at the wheels; resistive terms vanish at standstill."""
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    moving = v > 0
    f_aero = 0.5 * veh.air_density * veh.drag_coefficient * veh.frontal_area * v**2
    f_roll = veh.mass * veh.gravity * veh.rolling_coefficient * np.sign(v)
    f_resist = np.where(moving, f_aero + f_roll, 0.0)
    return f_resist + veh.mass * a


def _wheel_force_to_motor_torque(veh: VehicleParameters, f: np.ndarray) -> np.ndarray:
    # gear losses oppose the power flow: divide torque demand when motoring,
    # multiply the recovered torque when generating
    base = f * veh.wheel_radius / (veh.gear_ratio * veh.machine_count)
    return np.where(f >= 0, base / veh.gear_efficiency, base * veh.gear_efficiency)


def speed_to_rpm(veh: VehicleParameters, v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=float) * veh.gear_ratio / veh.wheel_radius * RPM_PER_RAD_S


def cycle_to_operating_points(cycle: DriveCycle, veh: VehicleParameters) -> list[OperatingPoint]:
    """One operating point per cycle sample, weighted by the local dwell time."""
    t, v = cycle.time_s, cycle.velocity_ms
    a = _acceleration(t, v)
    f = tractive_force(veh, v, a)
    torque = _wheel_force_to_motor_torque(veh, f)
    speed = speed_to_rpm(veh, v)
    torque = np.where(v > 0, torque, np.where(a != 0, torque, 0.0))

    # dwell weight: half the span to each neighbour
    w = np.empty_like(t)
    w[1:-1] = (t[2:] - t[:-2]) / 2.0
    w[0] = (t[1] - t[0]) / 2.0
    w[-1] = (t[-1] - t[-2]) / 2.0

    return [OperatingPoint(float(n), float(m), float(wi))
            for n, m, wi in zip(speed, torque, w)]


def clamp_to_envelope(points: list[OperatingPoint], motor) -> list[OperatingPoint]:
    """Clamp user-supplied points that exceed the motor envelope, with a
    logged warning per offending point."""
    clamped = []
    n_clamped = 0
    for p in points:
        n = min(p.speed_rpm, motor.max_speed_rpm)
        m_lim = motor.envelope_torque(n)
        m = p.torque_nm
        if abs(m) > m_lim:
            m = math.copysign(m_lim, m)
        if n != p.speed_rpm or m != p.torque_nm:
            n_clamped += 1
            clamped.append(OperatingPoint(n, m, p.weight_s))
        else:
            clamped.append(p)
    if n_clamped:
        log.warning("%d operating points clamped to the motor envelope", n_clamped)
    return clamped


def full_load_envelope(motor, count: int, include_generating: bool = False) -> list[OperatingPoint]:
    """Maximum-torque boundary of the motor map: constant torque up to the
    corner speed, constant power along the field-weakening hyperbola beyond.

    Returns `count` points per torque sign over [0, n_max], endpoints included.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    speeds = np.linspace(0.0, motor.max_speed_rpm, count)
    points = [OperatingPoint(float(n), motor.envelope_torque(n)) for n in speeds]
    if include_generating:
        points += [OperatingPoint(p.speed_rpm, -p.torque_nm) for p in points]
    return points
