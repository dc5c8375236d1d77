import math

import numpy as np
import pytest

from invopt.motor import MotorModel, solve_operating_point
from invopt.pwm import (ModulationConfig, ModulationConfigError,
                        dc_link_ripple, dq_ripple_spectrum, synthesize_period)
from invopt.vehicle import OperatingPoint

MOTOR = MotorModel(pole_pairs=4, stator_resistance=0.005, l_d=0.15e-3,
                   l_q=0.34e-3, psi_pm=0.095, i_max=720.0, p_max=300e3,
                   m_max=589.0, max_speed_rpm=16000.0)

V_DC = 800.0


def _sol(rpm=3000.0, torque=300.0, limit=V_DC / math.sqrt(3.0)):
    return solve_operating_point(MOTOR, OperatingPoint(rpm, torque, 1.0),
                                 limit)


def _cfg(**kw):
    base = dict(topology="B6", mode="2L", variant="A", f_sw=10e3, v_dc=V_DC,
                samples_per_carrier=200)
    base.update(kw)
    return ModulationConfig(**base)


class TestConfigValidation:
    @pytest.mark.parametrize("topology,mode,variant", [
        ("B6", "3L", "A"),       # B6 has no three-level mode
        ("B6", "2L", "B"),       # no zero-vector choice without midpoint
        ("TNPC", "Y", "A"),      # Y is a star-mode of the open-winding family
        ("B62Y", "2L", "A"),
        ("B62Y", "H", "C"),
    ])
    def test_invalid_combo(self, topology, mode, variant):
        with pytest.raises(ModulationConfigError):
            ModulationConfig(topology=topology, mode=mode, variant=variant)

    def test_valid_combos(self):
        for topo, mode, variants in [("B6", "2L", "A"), ("TNPC", "2L", "ABC"),
                                     ("TNPC", "3L", "ABC"),
                                     ("B62Y", "Y", "AB"), ("B62Y", "H", "AB")]:
            for v in variants:
                ModulationConfig(topology=topo, mode=mode, variant=v)

    def test_sampling_floor(self):
        with pytest.raises(ModulationConfigError):
            _cfg(samples_per_carrier=100)


class TestSynthesis:
    def test_carrier_snapped_to_fundamental(self):
        sol = _sol()
        trace = synthesize_period(_cfg(), sol)
        ratio = trace.f_carrier / sol.f_fund
        assert ratio == pytest.approx(round(ratio), abs=1e-9)
        assert abs(trace.f_carrier - 10e3) < sol.f_fund

    def test_standstill_excerpt(self):
        sol = _sol(rpm=0.0, torque=0.0)
        assert sol.f_fund == 0.0
        trace = synthesize_period(_cfg(), sol)
        assert trace.f_carrier == pytest.approx(10e3)
        assert trace.period_s == pytest.approx(100 / 10e3)

    @pytest.mark.parametrize("topology,mode,variant", [
        ("B6", "2L", "A"), ("TNPC", "3L", "A"), ("TNPC", "3L", "B"),
        ("B62Y", "H", "A"), ("B62Y", "Y", "A")])
    def test_volt_second_balance(self, topology, mode, variant):
        # the recovered fundamental of the synthesized winding voltage must
        # match the commanded dq voltage
        limit = V_DC if (topology, mode) == ("B62Y", "H") else V_DC / math.sqrt(3)
        sol = _sol(limit=limit)
        cfg = _cfg(topology=topology, mode=mode, variant=variant)
        trace = synthesize_period(cfg, sol)
        th = 2 * np.pi * sol.f_fund * trace.time
        v = trace.winding_voltages[0]
        u_d = 2.0 * np.mean(v * np.cos(th))
        u_q = -2.0 * np.mean(v * np.sin(th))
        amp = math.hypot(u_d, u_q)
        assert amp == pytest.approx(sol.u_amp, rel=1e-2)

    def test_tnpc_up_clamp_avoids_bottom_zero_vector(self):
        sol = _sol()
        trace = synthesize_period(_cfg(topology="TNPC", mode="3L",
                                       variant="B"), sol)
        bottom = np.all(trace.levels == -1, axis=0)
        assert not bottom.any()

    def test_three_level_uses_three_levels(self):
        sol = _sol()
        trace = synthesize_period(_cfg(topology="TNPC", mode="3L"), sol)
        assert set(np.unique(trace.levels)) == {-1, 0, 1}

    def test_cap_current_zero_mean(self):
        sol = _sol()
        trace = synthesize_period(_cfg(), sol)
        i_amp = sol.i_amp
        assert abs(np.mean(trace.cap_current)) < 0.01 * i_amp


class TestSpectrumAndRipple:
    def test_window_filters_frequencies(self):
        sol = _sol()
        trace = synthesize_period(_cfg(), sol)
        spec = dq_ripple_spectrum(trace, sol, (1e3, 1e6))
        assert spec.freq_hz.min() >= 1e3
        assert spec.freq_hz.max() <= 1e6
        assert np.all(spec.u_d >= 0) and np.all(spec.u_q >= 0)

    def test_empty_window_rejected(self):
        sol = _sol()
        trace = synthesize_period(_cfg(), sol)
        with pytest.raises(ValueError):
            dq_ripple_spectrum(trace, sol, (1e5, 1e3))

    def test_three_level_reduces_ripple_rms(self):
        # in-phase stacked carriers keep the carrier-frequency component in
        # the common mode, so the differential ripple drops
        sol = _sol()
        rms = {}
        for topo, mode in [("B6", "2L"), ("TNPC", "3L")]:
            trace = synthesize_period(_cfg(topology=topo, mode=mode), sol)
            spec = dq_ripple_spectrum(trace, sol, (1e3, 1e6))
            rms[topo] = math.sqrt(float(np.sum(spec.u_d**2 + spec.u_q**2)))
        assert rms["TNPC"] < 0.7 * rms["B6"]

    def test_ripple_falls_with_frequency(self):
        sol = _sol()
        du = [dc_link_ripple(synthesize_period(_cfg(f_sw=f), sol), 500e-6)
              for f in (6e3, 10e3, 20e3)]
        assert du[0] > du[1] > du[2] > 0.0

    def test_ripple_scales_with_capacitance(self):
        sol = _sol()
        trace = synthesize_period(_cfg(), sol)
        assert dc_link_ripple(trace, 250e-6) == pytest.approx(
            2.0 * dc_link_ripple(trace, 500e-6), rel=1e-12)
        with pytest.raises(ValueError):
            dc_link_ripple(trace, 0.0)
