"""Configuration loading: one structured YAML file drives the whole tool.

The loader validates the file, exposes typed builder methods for the model
objects, and hashes the canonicalized content so output bundles can state
exactly which configuration produced them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import devices as dev_mod
from .devices import DeviceTech
from .families import FamilySpec
from .motor import HarmonicMotorParameters, MotorModel, scale_motor
from .partial import PartialLoadSettings
from .vehicle import DriveCycle, VehicleParameters, load_cycle

_REQUIRED_SECTIONS = ("vehicle", "cycle", "motor", "harmonic_motor", "devices",
                      "thermal", "chip", "dc_link", "pwm", "sizing",
                      "partial_load", "families")

# the R_th(A) fit and its temperature anchors are baked into the loss engine
_FIXED_THERMAL = {"t_j_max_c": dev_mod.T_J_MAX_C, "t_hs_c": dev_mod.T_HS_C,
                  "rth_coeff_k_w": dev_mod.RTH_COEFF,
                  "rth_exponent": dev_mod.RTH_EXP}


class ConfigError(Exception):
    pass


def data_path(name: str) -> Path:
    return Path(str(resources.files("invopt").joinpath("data").joinpath(name)))


@dataclass
class AppConfig:
    raw: dict
    source: str

    @property
    def sha256(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    # -- builders ---------------------------------------------------------

    def vehicle(self) -> VehicleParameters:
        v = self.raw["vehicle"]
        return VehicleParameters(
            frontal_area=v["frontal_area_m2"],
            drag_coefficient=v["drag_coefficient"],
            air_density=v["air_density_kg_m3"],
            rolling_coefficient=v["rolling_coefficient"],
            gravity=v["gravity_m_s2"],
            wheel_radius=v["wheel_radius_m"],
            mass=v["mass_kg"],
            gear_ratio=v["gear_ratio"],
            gear_efficiency=v["gear_efficiency"],
            axle_inertia=v.get("axle_inertia_kg_m2", 0.0),
            machine_inertia=v.get("machine_inertia_kg_m2", 0.0),
            machine_count=v.get("machine_count", 1))

    def cycle(self) -> DriveCycle:
        ref = self.raw["cycle"]["file"]
        if ref.startswith("builtin:"):
            path = data_path(ref.split(":", 1)[1])
        else:
            path = Path(ref)
            if not path.is_absolute():
                path = Path(self.source).parent / path
        return load_cycle(path)

    def motor(self) -> MotorModel:
        m = self.raw["motor"]
        return MotorModel(
            pole_pairs=m["pole_pairs"],
            stator_resistance=m["stator_resistance_ohm"],
            l_d=m["l_d_h"], l_q=m["l_q_h"], psi_pm=m["psi_pm_wb"],
            i_max=m["i_max_a"], p_max=m["p_max_w"], m_max=m["m_max_nm"],
            max_speed_rpm=m["max_speed_rpm"],
            c_hys=m.get("c_hys_w_wb2_hz", 0.0),
            c_eddy=m.get("c_eddy_w_wb2_hz2", 0.0))

    @property
    def turn_ratio(self) -> float:
        return self.raw["motor"]["open_winding_turn_ratio"]

    def open_winding_motor(self) -> MotorModel:
        return scale_motor(self.motor(), self.turn_ratio)

    def harmonic_motor(self) -> HarmonicMotorParameters:
        h = self.raw["harmonic_motor"]
        f = np.geomspace(h["f_grid_min_hz"], h["f_grid_max_hz"],
                         int(h["f_grid_points"]))
        ones = np.ones_like(f)
        return HarmonicMotorParameters(
            freq_grid=f,
            l_d_h=h["l_d_h"] * ones,
            l_q_h=h["l_q_h"] * ones,
            r_iron_h=h["r_iron_coeff"] * f**h["r_iron_exponent"],
            r_mag_h=h["r_mag_coeff"] * f**h["r_mag_exponent"],
            r_cu_h=h["r_cu_coeff"] * f**h["r_cu_exponent"],
            k_iron=h.get("k_iron", 1.0), k_mag=h.get("k_mag", 1.0),
            k_cu=h.get("k_cu", 1.0), f_max=h.get("f_max_hz", 1.0e6))

    def devices(self) -> dict[float, DeviceTech]:
        out = {}
        for cls, d in self.raw["devices"].items():
            vc = float(cls)
            out[vc] = DeviceTech(
                voltage_class=vc,
                r_on_specific=d["r_on_specific_ohm_mm2"],
                k_on=d["k_on_j_per_va"], k_off=d["k_off_j_per_va"],
                q_oss_specific=d["q_oss_specific_c_mm2"],
                v_ref=d.get("v_ref_v", vc))
        return out

    def partial_settings(self, samples_per_carrier: int | None = None) -> PartialLoadSettings:
        dc = self.raw["dc_link"]
        return PartialLoadSettings(
            v_dc=dc["v_dc_v"], c_dc=dc["c_dc_f"], du_max=dc["du_max_v"],
            samples_per_carrier=samples_per_carrier
            or self.raw["pwm"]["samples_per_carrier"],
            f_grid=tuple(float(f) for f in self.raw["partial_load"]["f_grid_hz"]))

    def families(self) -> list[FamilySpec]:
        return [FamilySpec(topology=f["topology"], variant=f["variant"],
                           factors=tuple(float(x) for x in f["factors"]))
                for f in self.raw["families"]]

    @property
    def v_dc(self) -> float:
        return self.raw["dc_link"]["v_dc_v"]

    @property
    def f_sw_default(self) -> float:
        return self.raw["pwm"]["f_sw_default_hz"]

    @property
    def samples_per_carrier(self) -> int:
        return int(self.raw["pwm"]["samples_per_carrier"])

    @property
    def sizing_f_grid(self) -> list[float]:
        return [float(f) for f in self.raw["sizing"]["f_sw_grid_hz"]]

    @property
    def envelope_points(self) -> int:
        return int(self.raw["sizing"]["envelope_points"])

    @property
    def boundary_grid(self) -> int:
        return int(self.raw["partial_load"].get("boundary_grid", 41))


def _validate(raw: dict, source: str) -> None:
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    missing = [s for s in _REQUIRED_SECTIONS if s not in raw]
    if missing:
        raise ConfigError(f"{source}: missing sections {missing}")
    th = raw["thermal"]
    for key, want in _FIXED_THERMAL.items():
        got = th.get(key)
        if got != want:
            raise ConfigError(
                f"{source}: thermal.{key}={got!r} is not supported; the thermal "
                f"stack is a fixed fit with {key}={want}")
    chip = raw["chip"]
    if chip["granule_mm2"] != dev_mod.CHIP_GRANULE_MM2:
        raise ConfigError(f"{source}: chip.granule_mm2 must be "
                          f"{dev_mod.CHIP_GRANULE_MM2}")
    for sec, key in (("dc_link", "v_dc_v"), ("dc_link", "c_dc_f"),
                     ("dc_link", "du_max_v"), ("pwm", "f_sw_default_hz"),
                     ("pwm", "samples_per_carrier")):
        if raw[sec].get(key, 0) <= 0:
            raise ConfigError(f"{source}: {sec}.{key} must be positive")


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load a config file, or the packaged defaults when no path is given."""
    if path is None:
        path = data_path("default_config.yaml")
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})")
    _validate(raw, str(path))
    return AppConfig(raw=raw, source=str(path))
