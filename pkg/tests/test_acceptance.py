"""End-to-end acceptance gate.

Twelve numbered criteria cover the toolchain from the thermal fit up to the
full Pareto pipeline. Every test prints exactly one PASS/FAIL line to the
terminal (bypassing capture) so the gate can be read off the log directly.
"""

import dataclasses
import math
import os
import time
import types
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import invopt.partial as partial_mod
from invopt.config import load_config
from invopt.devices import (SwitchDesign, SwitchingEvents, switch_losses,
                            thermal_resistance)
from invopt.evaluation import Evaluator
from invopt.families import FamilySpec, build_design_family
from invopt.motor import (harmonic_losses, scale_motor, solve_operating_point)
from invopt.pareto import ParetoPoint, pareto_front
from invopt.partial import (PartialLoadSettings, PointEvaluation,
                            evaluate_cycle, evaluate_point,
                            mode_boundary_map, optimal_fsw)
from invopt.pipeline import run_pipeline, write_bundle
from invopt.pwm import (HarmonicSpectrum, ModulationConfig, SwitchingTrace,
                        dq_ripple_spectrum)
from invopt.sizing import TopologyConfig, size_point, size_topology
from invopt.vehicle import OperatingPoint, clamp_to_envelope, full_load_envelope


@contextmanager
def criterion(capsys, n, desc):
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"[criterion {n:2d}] FAIL - {desc}")
        raise
    with capsys.disabled():
        print(f"[criterion {n:2d}] PASS - {desc}")


@pytest.fixture(scope="module")
def cfg():
    return load_config()


@pytest.fixture(scope="module")
def evaluator(cfg):
    return Evaluator(cfg.motor(), cfg.harmonic_motor())


def _topo(cfg, topology, mode, variant="A", f_sw=10e3):
    return TopologyConfig(topology=topology, mode=mode, variant=variant,
                          f_sw=f_sw, v_dc=cfg.v_dc, devices=cfg.devices(),
                          samples_per_carrier=cfg.samples_per_carrier)


# --------------------------------------------------------------------------
# 1. thermal fit

def test_criterion_01_thermal_fit(capsys):
    with criterion(capsys, 1, "thermal resistance fit exact at probe areas"):
        t0 = time.perf_counter()
        for area in (1.0, 25.0, 100.0, 625.0):
            want = 3.0 * area ** -0.4
            assert thermal_resistance(area) == pytest.approx(want, rel=1e-12)
        assert time.perf_counter() - t0 < 1.0


# --------------------------------------------------------------------------
# 2. loss additivity

def test_criterion_02_loss_additivity(capsys, cfg, evaluator):
    with criterion(capsys, 2, "loss totals are bitwise sums of components"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(42)
        tech = cfg.devices()[1200.0]
        for _ in range(1000):
            area = 25.0 * rng.integers(1, 40)
            sw = SwitchDesign("t", tech, float(area))
            n = int(rng.integers(1, 30))
            events = SwitchingEvents.from_arrays(
                rng.uniform(100, 800, n), rng.uniform(0, 700, n),
                rng.uniform(100, 800, n), rng.uniform(0, 700, n))
            losses = switch_losses(sw, float(rng.uniform(0, 5e5)), events,
                                   float(rng.uniform(10, 500)))
            assert losses.p_mos == losses.p_con + losses.p_sw
        # system-level totals on real evaluations
        design, _ = size_topology(_topo(cfg, "B6", "2L"), evaluator,
                                  full_load_envelope(cfg.motor(), 3))
        settings = PartialLoadSettings(v_dc=cfg.v_dc)
        for pt in (OperatingPoint(2000.0, 100.0, 1.0),
                   OperatingPoint(6000.0, 250.0, 1.0),
                   OperatingPoint(12000.0, 80.0, 1.0)):
            ev = evaluate_point(design, evaluator, pt, "2L", 10e3, settings)
            assert ev.p_inv == ev.p_con_total + ev.p_sw_total
            assert ev.p_tot == ev.p_inv + ev.p_mot_h + ev.p_mot_f
        assert time.perf_counter() - t0 < 10.0


# --------------------------------------------------------------------------
# 3. harmonic-loss oracle

def test_criterion_03_harmonic_loss_oracle(capsys, cfg):
    with criterion(capsys, 3, "harmonic motor losses match independent sum"):
        params = cfg.harmonic_motor()
        lg = np.log(params.freq_grid)
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(2, 50))
            f = np.sort(rng.uniform(2e3, 9e5, n)) + np.arange(n) * 1e-3
            u_d = rng.uniform(0.0, 40.0, n)
            u_q = rng.uniform(0.0, 40.0, n)
            out = harmonic_losses(HarmonicSpectrum(f, u_d, u_q), params)
            p_cu = p_fe = p_mag = 0.0
            for k in range(n):
                x = np.log(f[k])
                ld = np.interp(x, lg, params.l_d_h)
                lq = np.interp(x, lg, params.l_q_h)
                p_cu += params.k_cu * np.interp(x, lg, params.r_cu_h) / f[k]**2 \
                    * (u_d[k]**2 / ld**2 + u_q[k]**2 / lq**2)
                p_fe += params.k_iron * (u_d[k]**2 + u_q[k]**2) \
                    / np.interp(x, lg, params.r_iron_h)
                p_mag += params.k_mag * u_d[k]**2 \
                    / np.interp(x, lg, params.r_mag_h)
            assert out.p_cu_h == pytest.approx(p_cu, rel=1e-9)
            assert out.p_iron_h == pytest.approx(p_fe, rel=1e-9)
            assert out.p_mag_h == pytest.approx(p_mag, rel=1e-9)


# --------------------------------------------------------------------------
# 4. ripple-spectrum oracle

def test_criterion_04_spectrum_square_wave(capsys):
    with criterion(capsys, 4, "ripple spectrum of analytic square wave"):
        f0 = 1e3
        spp = 1024          # samples per square-wave period
        periods = 8
        n = spp * periods
        dt = 1.0 / (spp * f0)
        t = (np.arange(n) + 0.5) * dt
        v_amp = 100.0
        square = v_amp * np.sign(np.sin(2 * np.pi * f0 * t))
        volts = np.vstack([square, np.zeros(n), np.zeros(n)])
        trace = SwitchingTrace(
            time=t, dt=dt, period_s=n * dt, f_carrier=f0,
            phase_currents=np.zeros((3, n)), winding_voltages=volts,
            levels=np.zeros((3, n), dtype=np.int8), switch_currents={},
            switch_events={}, cap_current=np.zeros(n))
        sol = types.SimpleNamespace(f_fund=0.0)
        spec = dq_ripple_spectrum(trace, sol, (0.5 * f0, 10.5 * f0))
        # at zero fundamental the transform reduces to u_d = (2/3) v_a
        for k in range(1, 10):
            idx = np.argmin(np.abs(spec.freq_hz - k * f0))
            assert spec.freq_hz[idx] == pytest.approx(k * f0)
            if k % 2 == 1:
                want = (2.0 / 3.0) * 4.0 * v_amp / (k * math.pi)
                assert spec.u_d[idx] == pytest.approx(want, rel=1e-2)
            else:
                assert spec.u_d[idx] < 1e-2 * (2.0 / 3.0) * 4.0 * v_amp / math.pi
            assert spec.u_q[idx] == pytest.approx(0.0, abs=1e-9)


# --------------------------------------------------------------------------
# 5. harmonic-loss orderings between topologies

def _speed_for_modulation(motor, torque, limit, target):
    lo, hi = 100.0, motor.corner_speed_rpm
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        sol = solve_operating_point(motor, OperatingPoint(mid, torque, 1.0),
                                    limit)
        if sol.modulation_index < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_criterion_05_harmonic_orderings(capsys, cfg, evaluator):
    with criterion(capsys, 5, "three-level and star modes cut harmonic loss"):
        t0 = time.perf_counter()
        motor = cfg.motor()
        limit = cfg.v_dc / math.sqrt(3.0)
        for target in (0.5, 0.8):
            rpm = _speed_for_modulation(motor, 589.0, limit, target)
            point = OperatingPoint(rpm, 589.0, 1.0)
            p_h = {}
            for topo, mode in (("B6", "2L"), ("TNPC", "3L")):
                cfg_m = _topo(cfg, topo, mode).modulation()
                phys = evaluator.physics(cfg_m, point)
                assert phys.feasible
                assert abs(phys.sol.modulation_index - target) < 0.02
                p_h[topo] = phys.harmonic.p_mot_h
            assert p_h["TNPC"] < p_h["B6"]

        # star vs full-bridge mode of the open-winding inverter at a shared
        # low-power point served by both
        kappa = cfg.turn_ratio
        ev_y = Evaluator(scale_motor(motor, kappa),
                         cfg.harmonic_motor().scaled(kappa))
        low = OperatingPoint(1500.0, 60.0, 1.0)
        p_y = ev_y.physics(_topo(cfg, "B62Y", "Y").modulation(), low)
        p_hm = ev_y.physics(_topo(cfg, "B62Y", "H").modulation(), low)
        assert p_y.feasible and p_hm.feasible
        assert p_y.harmonic.p_mot_h < p_hm.harmonic.p_mot_h
        assert time.perf_counter() - t0 < 120.0


# --------------------------------------------------------------------------
# 6. switching-frequency trends of the full-load sizing

def test_criterion_06_fsw_trends(capsys, cfg, evaluator):
    with criterion(capsys, 6, "chip area and loss ratio rise, ripple falls "
                               "with switching frequency"):
        t0 = time.perf_counter()
        point = clamp_to_envelope([OperatingPoint(5000.0, 589.0, 1.0)],
                                  cfg.motor())[0]
        topo = _topo(cfg, "B6", "2L")
        a_tot, ratio, du = [], [], []
        for f in (6e3, 8e3, 10e3, 12e3, 16e3, 20e3):
            row = size_point(topo, evaluator, point, f_sw=f)
            a_tot.append(sum(row.areas.values()))
            ratio.append(row.p_sw_over_p_con)
            du.append(row.delta_u)
        assert all(b >= a for a, b in zip(a_tot, a_tot[1:]))
        assert all(b >= a for a, b in zip(ratio, ratio[1:]))
        assert all(b < a for a, b in zip(du, du[1:]))
        assert time.perf_counter() - t0 < 120.0


# --------------------------------------------------------------------------
# 7. structural area ordering of the design families

@pytest.fixture(scope="module")
def family_floors(cfg):
    env = full_load_envelope(cfg.motor(), cfg.envelope_points)
    base_eval = Evaluator(cfg.motor(), cfg.harmonic_motor())
    baseline, _ = size_topology(_topo(cfg, "B6", "2L"), base_eval, env)
    floors = {}
    for spec in cfg.families():
        if spec.topology == "B6":
            floors[spec.label] = baseline.a_tot
            continue
        mode = {"TNPC": "2L", "B62Y": "H"}[spec.topology]
        if spec.topology == "B62Y":
            ev = Evaluator(scale_motor(cfg.motor(), cfg.turn_ratio),
                           cfg.harmonic_motor().scaled(cfg.turn_ratio))
        else:
            ev = base_eval
        build = build_design_family(
            FamilySpec(spec.topology, spec.variant, (0.0,)),
            _topo(cfg, spec.topology, mode, spec.variant), ev, env,
            baseline.a_tot, 25.0)
        floors[spec.label] = build.designs[0].a_tot
    return baseline, floors, env, base_eval


def test_criterion_07_area_orderings(capsys, cfg, family_floors):
    with criterion(capsys, 7, "baseline is the smallest design; zero-vector "
                               "variants order as expected"):
        baseline, floors, env, base_eval = family_floors
        for label, floor in floors.items():
            assert baseline.a_tot <= floor + 1e-9, label
        # full three-level sizing per zero-vector variant
        totals = {}
        for variant in "ABC":
            design, _ = size_topology(_topo(cfg, "TNPC", "3L", variant),
                                      base_eval, env)
            totals[variant] = design.a_tot
        assert totals["B"] <= totals["C"] <= totals["A"]


# --------------------------------------------------------------------------
# 8. operating-mode selection and boundary growth

def test_criterion_08_mode_boundaries(capsys, cfg, evaluator):
    with criterion(capsys, 8, "mode choice is loss-optimal and regions grow "
                               "with auxiliary area"):
        env = full_load_envelope(cfg.motor(), 7)
        design, _ = size_topology(_topo(cfg, "TNPC", "2L"), evaluator, env)
        aux_ref, _ = size_topology(_topo(cfg, "TNPC", "3L"), evaluator, env)
        areas = {sid: sw.area_mm2 for sid, sw in design.switches.items()}
        for sid in areas:
            if sid[-1] in "34":
                areas[sid] = aux_ref.switches[sid].area_mm2
        design = dataclasses.replace(design, modes=("2L", "3L"),
                                     full_load_mode="2L")
        settings = PartialLoadSettings(v_dc=cfg.v_dc)
        maps = []
        for scale in (1.0, 1.3, 1.5):
            scaled = {sid: (math.ceil(a * scale / 25.0) * 25.0
                            if sid[-1] in "34" else a)
                      for sid, a in areas.items()}
            d = design.with_areas(scaled)
            maps.append((d, mode_boundary_map(d, evaluator, 10e3, settings,
                                              n_speed=41, n_torque=41)))

        # optimality: the chosen mode never loses to another feasible mode
        violations = 0
        d0, m0 = maps[0]
        for i in range(41):
            for j in range(41):
                chosen = m0.best_mode[i][j]
                if chosen is None:
                    continue
                pt = OperatingPoint(float(m0.speeds_rpm[j]),
                                    float(m0.torques_nm[i]), 1.0)
                evs = {m: evaluate_point(d0, evaluator, pt, m, 10e3, settings)
                       for m in m0.feasible[i][j]}
                if any(evs[m].p_tot < evs[chosen].p_tot - 1e-12 for m in evs):
                    violations += 1
        assert violations == 0

        regions = [m.mode_region("3L") for _, m in maps]
        assert regions[0] <= regions[1] <= regions[2]


# --------------------------------------------------------------------------
# 9. cycle energy accounting on a constant-power synthetic cycle

def test_criterion_09_constant_power_cycle(capsys, cfg, evaluator,
                                           monkeypatch):
    with criterion(capsys, 9, "constant 500 W over 10 km costs "
                               "1.3889 kWh/100km"):
        design, _ = size_topology(_topo(cfg, "B6", "2L"), evaluator,
                                  full_load_envelope(cfg.motor(), 3))
        const = PointEvaluation(
            mode="2L", f_sw=10e3, p_inv=200.0, p_mot_f=200.0, p_mot_h=100.0,
            p_tot=500.0, p_con_total=150.0, p_sw_total=50.0, t_j={},
            delta_u=5.0, electrical_feasible=True, thermal_feasible=True,
            ripple_feasible=True)
        monkeypatch.setattr(partial_mod, "best_mode",
                            lambda *a, **k: ("2L", const))
        pts = [OperatingPoint(1000.0, 10.0, 1.0) for _ in range(1000)]
        res = evaluate_cycle(design, evaluator, pts, distance_m=10e3,
                             duration_s=1000.0,
                             settings=PartialLoadSettings(v_dc=cfg.v_dc))
        assert res.delta_e_kwh_100km == pytest.approx(1.388888888888889,
                                                      rel=1e-6)
        assert res.p_tot_mean_w == pytest.approx(500.0, rel=1e-6)


# --------------------------------------------------------------------------
# 10. switching-frequency optimization equals exhaustive search

def test_criterion_10_optimal_fsw(capsys, cfg, evaluator, monkeypatch):
    with criterion(capsys, 10, "frequency optimizer equals grid argmin and "
                                "stays inside the grid"):
        design, _ = size_topology(_topo(cfg, "TNPC", "3L"), evaluator,
                                  full_load_envelope(cfg.motor(), 3))
        design = dataclasses.replace(design, modes=("2L", "3L"),
                                     full_load_mode="2L")
        settings = PartialLoadSettings(v_dc=cfg.v_dc)
        rng = np.random.default_rng(10)
        rank = partial_mod._MODE_RANK

        for _ in range(50):
            table = {}
            for f in settings.f_grid:
                for m in design.modes:
                    table[(m, f)] = (float(rng.uniform(100, 5000)),
                                     bool(rng.uniform() < 0.9))

            def fake(design_, evaluator_, point_, mode, f_sw, settings_):
                p, ok = table[(mode, f_sw)]
                return dataclasses.replace(
                    _feasible_eval(mode, f_sw, p),
                    electrical_feasible=ok, thermal_feasible=ok,
                    ripple_feasible=ok)

            monkeypatch.setattr(partial_mod, "evaluate_point", fake)
            feas = [(p, f, rank[m]) for (m, f), (p, ok) in table.items() if ok]
            if not feas:
                continue
            f, m, ev = optimal_fsw(design, evaluator,
                                   OperatingPoint(1000.0, 50.0, 1.0),
                                   settings.f_grid, settings)
            assert (ev.p_tot, f, rank[m]) == min(feas)
        monkeypatch.undo()

        # real evaluations stay inside the configured grid
        f_grid, _ = cfg.partial_settings().f_grid, None
        for pt in (OperatingPoint(1200.0, 40.0, 1.0),
                   OperatingPoint(4000.0, 150.0, 1.0),
                   OperatingPoint(9000.0, 90.0, 1.0)):
            f, _, ev = optimal_fsw(design, evaluator, pt,
                                   cfg.partial_settings().f_grid,
                                   cfg.partial_settings())
            assert 6e3 <= f <= 18e3
            assert ev.feasible


def _feasible_eval(mode, f_sw, p_tot):
    return PointEvaluation(
        mode=mode, f_sw=f_sw, p_inv=p_tot, p_mot_f=0.0, p_mot_h=0.0,
        p_tot=p_tot, p_con_total=p_tot, p_sw_total=0.0, t_j={}, delta_u=1.0,
        electrical_feasible=True, thermal_feasible=True, ripple_feasible=True)


# --------------------------------------------------------------------------
# 11/12. Pareto construction and the full pipeline

@pytest.fixture(scope="session")
def full_run():
    cfg = load_config()
    t0 = time.perf_counter()
    result = run_pipeline(cfg, fsw_policy="fixed", f_sw=10e3, threads=4)
    elapsed = time.perf_counter() - t0
    return cfg, result, elapsed


@pytest.fixture(scope="session")
def opt_run(full_run):
    cfg, _, _ = full_run
    t0 = time.perf_counter()
    result = run_pipeline(cfg, fsw_policy="opt", threads=4)
    elapsed = time.perf_counter() - t0
    return result, elapsed


def test_criterion_11_pareto(capsys, opt_run):
    with criterion(capsys, 11, "Pareto front matches quadratic dominance; "
                                "families trade area for energy"):
        rng = np.random.default_rng(11)
        for _ in range(3):
            pts = [ParetoPoint(str(i), "f", float(a), float(e), 1.0)
                   for i, (a, e) in enumerate(rng.uniform(0, 100, (1000, 2)))]
            front, dominated = pareto_front(pts)
            assert len(front) + len(dominated) == 1000
            front_labels = {p.label for p in front}
            for p in pts:
                dom = any(q.a_tot_mm2 <= p.a_tot_mm2
                          and q.delta_e_kwh_100km <= p.delta_e_kwh_100km
                          and (q.a_tot_mm2 < p.a_tot_mm2
                               or q.delta_e_kwh_100km < p.delta_e_kwh_100km)
                          for q in pts if q is not p)
                assert (p.label in front_labels) == (not dom)

        # with the switching frequency free, more chip area never costs
        # cycle energy within a family
        result, _ = opt_run
        for outcome in result.outcomes:
            de = [r.delta_e_kwh_100km for r in outcome.results]
            assert all(b <= a + 1e-12 for a, b in zip(de, de[1:])), \
                outcome.spec.label


def test_criterion_12_full_pipeline(capsys, full_run, opt_run, tmp_path):
    with criterion(capsys, 12, "full run under budget with byte-identical "
                                "reruns; optimized-frequency run under an "
                                "hour"):
        # Wall-clock budgets are defined for a 4-core machine; scale them up
        # proportionally when the host exposes fewer cores.
        budget_scale = max(1.0, 4.0 / (os.cpu_count() or 1))
        cfg, result, elapsed = full_run
        assert elapsed < 15 * 60.0 * budget_scale
        assert len(result.outcomes) == 6
        out_a = write_bundle(result, tmp_path / "a")

        rerun = run_pipeline(cfg, fsw_policy="fixed", f_sw=10e3, threads=4)
        out_b = write_bundle(rerun, tmp_path / "b")
        for name in ("manifest.json", "designs.csv", "areas.csv",
                     "pareto.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

        opt, opt_elapsed = opt_run
        assert opt_elapsed < 60 * 60.0 * budget_scale
        # the free frequency choice can only help
        for fixed_o, opt_o in zip(result.outcomes, opt.outcomes):
            for r_fixed, r_opt in zip(fixed_o.results, opt_o.results):
                assert r_opt.delta_e_kwh_100km <= r_fixed.delta_e_kwh_100km \
                    + 1e-9
