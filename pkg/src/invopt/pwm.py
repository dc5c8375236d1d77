"""Time-domain synthesis of one fundamental period of switching behavior per
topology, operating mode and modulator variant. Produces per-switch conduction
currents and switching events, winding voltages, the DC-link capacitor current
and the dq ripple-voltage spectrum."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

TOPOLOGY_B6 = "B6"
TOPOLOGY_TNPC = "TNPC"
TOPOLOGY_B62Y = "B62Y"

PHASES = ("a", "b", "c")

# switch sets per topology (Fig-1-style naming: x1/x2 outer or left leg,
# x3/x4 mid-point or right leg, d1..d3 star switches)
SWITCH_IDS = {
    TOPOLOGY_B6: [f"T{x}{i}" for x in PHASES for i in (1, 2)],
    TOPOLOGY_TNPC: [f"T{x}{i}" for x in PHASES for i in (1, 2, 3, 4)],
    TOPOLOGY_B62Y: [f"T{x}{i}" for x in PHASES for i in (1, 2, 3, 4)]
    + [f"Td{i}" for i in (1, 2, 3)],
}

_VALID_COMBOS = {
    (TOPOLOGY_B6, "2L"): ("A",),
    (TOPOLOGY_TNPC, "2L"): ("A", "B", "C"),
    (TOPOLOGY_TNPC, "3L"): ("A", "B", "C"),
    (TOPOLOGY_B62Y, "Y"): ("A", "B"),
    (TOPOLOGY_B62Y, "H"): ("A", "B"),
}


class ModulationConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModulationConfig:
    topology: str
    mode: str
    variant: str = "A"
    f_sw: float = 10e3
    v_dc: float = 800.0
    samples_per_carrier: int = 500
    f_fund_floor: float = 1.0      # Hz, substituted at standstill

    def __post_init__(self):
        key = (self.topology, self.mode)
        if key not in _VALID_COMBOS:
            raise ModulationConfigError(f"invalid topology/mode {key}")
        if self.variant not in _VALID_COMBOS[key]:
            raise ModulationConfigError(
                f"variant {self.variant!r} not valid for {self.topology} {self.mode}")
        if self.f_sw <= 0 or self.v_dc <= 0:
            raise ModulationConfigError("f_sw and v_dc must be positive")
        if self.samples_per_carrier < 200:
            raise ModulationConfigError("need >= 200 samples per carrier period")

    @property
    def dt(self) -> float:
        return 1.0 / (self.samples_per_carrier * self.f_sw)

    def voltage_limit(self) -> float:
        """Peak phase-voltage amplitude available in this mode."""
        if self.topology == TOPOLOGY_B62Y and self.mode == "H":
            return self.v_dc
        return self.v_dc / math.sqrt(3.0)


@dataclass
class SwitchingTrace:
    time: np.ndarray                       # s, sample midpoints
    dt: float
    period_s: float                        # simulated duration (one fundamental period)
    f_carrier: float                       # Hz, carrier after synchronous snapping
    phase_currents: np.ndarray             # (3, N)
    winding_voltages: np.ndarray           # (3, N), across each motor winding
    levels: np.ndarray                     # (3, N) integer phase levels
    switch_currents: dict[str, np.ndarray]  # masked conduction currents
    switch_events: dict[str, dict[str, list]]  # v_on/i_on/v_off/i_off lists
    cap_current: np.ndarray                # A, DC-link capacitor current

    @property
    def period_freq(self) -> float:
        """1 / simulated duration; the event-rate normalization frequency."""
        return 1.0 / self.period_s

    def event_arrays(self, switch_id: str):
        ev = self.switch_events[switch_id]
        return tuple(
            np.concatenate(ev[key]) if ev[key] else np.empty(0)
            for key in ("v_on", "i_on", "v_off", "i_off"))


@dataclass(frozen=True)
class HarmonicSpectrum:
    freq_hz: np.ndarray
    u_d: np.ndarray
    u_q: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freq_hz, dtype=float)
        if f.size and np.any(np.diff(f) <= 0):
            raise ValueError("spectrum frequencies must be strictly increasing")
        object.__setattr__(self, "freq_hz", f)
        object.__setattr__(self, "u_d", np.asarray(self.u_d, dtype=float))
        object.__setattr__(self, "u_q", np.asarray(self.u_q, dtype=float))

    def scaled(self, alpha: float) -> "HarmonicSpectrum":
        return HarmonicSpectrum(self.freq_hz, self.u_d * alpha, self.u_q * alpha)


def _new_events():
    return {"v_on": [], "i_on": [], "v_off": [], "i_off": []}


def _phase_fundamentals(sol, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fundamental phase voltages and currents; rotor angle = omega_e * t."""
    omega = TWO_PI * sol.f_fund
    volts = np.empty((3, t.size))
    amps = np.empty((3, t.size))
    for k in range(3):
        th = omega * t - k * TWO_PI / 3.0
        volts[k] = sol.u_d * np.cos(th) - sol.u_q * np.sin(th)
        amps[k] = sol.i_d * np.cos(th) - sol.i_q * np.sin(th)
    return volts, amps


def _carrier(t: np.ndarray, f_c: float) -> np.ndarray:
    """Triangle in [0, 1]: 1 at carrier-period edges, 0 at the center, so
    `carrier < duty` yields a centered pulse of width `duty`."""
    frac = t * f_c - np.floor(t * f_c)
    return np.abs(2.0 * frac - 1.0)


def _transitions_with_wrap(level: np.ndarray) -> np.ndarray:
    """delta[j] = level[j] - level[j-1], index 0 wraps to the last sample."""
    return level - np.roll(level, 1)


def _push(events, sid, v, cur, kind):
    if v.size:
        events[sid][f"v_{kind}"].append(v)
        events[sid][f"i_{kind}"].append(cur)


def _add_leg_events(events, hi_id, lo_id, level, i_phase, v_step):
    """Two-level leg commutation: rising edge turns the high switch on and
    the low switch off, falling edge the reverse; switched V = v_step."""
    delta = _transitions_with_wrap(level)
    for idx, on_sw, off_sw in (
            (np.nonzero(delta > 0)[0], hi_id, lo_id),
            (np.nonzero(delta < 0)[0], lo_id, hi_id)):
        cur = np.abs(i_phase[idx])
        v = np.full(idx.size, v_step)
        _push(events, on_sw, v, cur, "on")
        _push(events, off_sw, v, cur, "off")


def _add_tnpc_events(events, ids, level, i_phase, v_half):
    """Three-level leg: commutations are decomposed into unit level steps of
    V_dc/2 between an outer switch and the mid-point pair. The hard-switching
    pair member is picked by current direction."""
    t1, t2, t3, t4 = ids
    delta = _transitions_with_wrap(level)
    idx_all = np.nonzero(delta)[0]
    for frm, to in ((0, 1), (1, 0), (0, -1), (-1, 0), (1, -1), (-1, 1)):
        idx = idx_all[(level[idx_all] == to) & (level[idx_all] - delta[idx_all] == frm)]
        if idx.size == 0:
            continue
        # |delta| == 2 jumps (injection change between carrier periods) pass
        # through the mid-point state
        steps = [(frm, to)] if abs(to - frm) == 1 else [(frm, 0), (0, to)]
        for s_frm, s_to in steps:
            outer = t1 if 1 in (s_frm, s_to) else t2
            outer_on = s_to != 0
            for mid, sel in ((t3, i_phase[idx] >= 0), (t4, i_phase[idx] < 0)):
                sub = idx[sel]
                if sub.size == 0:
                    continue
                cur = np.abs(i_phase[sub])
                v = np.full(sub.size, v_half)
                if outer_on:
                    _push(events, outer, v, cur, "on")
                    _push(events, mid, v, cur, "off")
                else:
                    _push(events, mid, v, cur, "on")
                    _push(events, outer, v, cur, "off")


def synthesize_period(cfg: ModulationConfig, sol) -> SwitchingTrace:
    """Deterministic regular-sampled carrier synthesis of one fundamental
    period. The carrier is snapped to an integer multiple of the fundamental
    so the trace is exactly periodic (rectangular-window FFT without leakage);
    standstill substitutes the configured fundamental floor and simulates a
    carrier-periodic excerpt."""
    f_f = sol.f_fund
    if f_f <= 0.0:
        # waveform is carrier-periodic at standstill; a short excerpt suffices
        n_carrier = 100
        f_c = cfg.f_sw
    else:
        f_f = max(f_f, cfg.f_fund_floor)
        n_carrier = max(2, round(cfg.f_sw / f_f))
        f_c = n_carrier * f_f
    spc = cfg.samples_per_carrier
    n = n_carrier * spc
    period = n_carrier / f_c
    dt = 1.0 / (spc * f_c)
    t = (np.arange(n) + 0.5) * dt

    volts, amps = _phase_fundamentals(sol, t)
    carrier = _carrier(t, f_c)
    k = np.floor(t * f_c).astype(np.int64)
    k = np.minimum(k, n_carrier - 1)
    centers = (k + 0.5) / f_c

    # regular-sampled normalized references at carrier-period centers
    omega = TWO_PI * sol.f_fund
    refs_c = np.empty((3, n))
    for ph in range(3):
        th = omega * centers - ph * TWO_PI / 3.0
        refs_c[ph] = sol.u_d * np.cos(th) - sol.u_q * np.sin(th)

    v_dc = cfg.v_dc
    topo, mode, variant = cfg.topology, cfg.mode, cfg.variant
    events = {sid: _new_events() for sid in SWITCH_IDS[topo]}
    sw_cur: dict[str, np.ndarray] = {}

    if topo == TOPOLOGY_B62Y and mode == "H":
        r = refs_c / v_dc                                  # winding refs in [-1, 1]
        d_left = (1.0 + r) / 2.0
        s_left = (carrier < d_left).astype(np.int8)
        if variant == "A":
            s_right = 1 - s_left
        else:
            d_right = (1.0 - r) / 2.0
            s_right = (carrier < d_right).astype(np.int8)
        winding = (s_left - s_right).astype(float) * v_dc
        levels = (s_left - s_right).astype(np.int8)
        for ph, x in enumerate(PHASES):
            i_ph = amps[ph]
            sw_cur[f"T{x}1"] = np.where(s_left[ph] == 1, i_ph, 0.0)
            sw_cur[f"T{x}2"] = np.where(s_left[ph] == 0, i_ph, 0.0)
            sw_cur[f"T{x}3"] = np.where(s_right[ph] == 1, -i_ph, 0.0)
            sw_cur[f"T{x}4"] = np.where(s_right[ph] == 0, -i_ph, 0.0)
            _add_leg_events(events, f"T{x}1", f"T{x}2", s_left[ph], i_ph, v_dc)
            _add_leg_events(events, f"T{x}3", f"T{x}4", s_right[ph], -i_ph, v_dc)
        for i in (1, 2, 3):
            sw_cur[f"Td{i}"] = np.zeros(n)
        i_plus = np.sum((s_left - s_right) * amps, axis=0)
        i_minus = i_plus

    elif (topo == TOPOLOGY_TNPC and mode == "3L"):
        # per-carrier-period references and currents for the zero-vector policy
        centers_k = (np.arange(n_carrier) + 0.5) / f_c
        r_k = np.empty((3, n_carrier))
        i_k = np.empty((3, n_carrier))
        for ph in range(3):
            th = omega * centers_k - ph * TWO_PI / 3.0
            r_k[ph] = (sol.u_d * np.cos(th) - sol.u_q * np.sin(th)) / (v_dc / 2.0)
            i_k[ph] = sol.i_d * np.cos(th) - sol.i_q * np.sin(th)
        r_inj_k = _apply_zero_vector_policy(r_k, i_k, variant)
        r_inj = np.repeat(r_inj_k, spc, axis=1)
        # stacked in-phase carriers: the upper cell pulses at the period
        # center, the lower cell at the period edges, so the carrier-frequency
        # component stays common mode across the phases
        pos = r_inj >= 0
        levels = np.where(pos, (carrier < r_inj).astype(np.int8),
                          -(carrier > 1.0 + r_inj).astype(np.int8))
        poles = levels.astype(float) * (v_dc / 2.0)
        winding = poles - poles.mean(axis=0)
        for ph, x in enumerate(PHASES):
            i_ph = amps[ph]
            lv = levels[ph]
            sw_cur[f"T{x}1"] = np.where(lv == 1, i_ph, 0.0)
            sw_cur[f"T{x}2"] = np.where(lv == -1, i_ph, 0.0)
            sw_cur[f"T{x}3"] = np.where(lv == 0, i_ph, 0.0)
            sw_cur[f"T{x}4"] = np.where(lv == 0, i_ph, 0.0)
            _add_tnpc_events(events, (f"T{x}1", f"T{x}2", f"T{x}3", f"T{x}4"),
                             lv, i_ph, v_dc / 2.0)
        # differential mid-point current is handled by external balancing;
        # the total-link ripple is driven by the rail common mode
        i_plus = np.sum((levels == 1) * amps, axis=0)
        i_minus = -np.sum((levels == -1) * amps, axis=0)

    else:
        # two-level star-point operation: B6, TNPC in 2L mode, B62Y in Y-mode
        r = refs_c / (v_dc / 2.0)
        r_inj = r - (r.max(axis=0) + r.min(axis=0)) / 2.0  # min-max (SVPWM) injection
        duty = (r_inj + 1.0) / 2.0
        s = (carrier < duty).astype(np.int8)
        poles = s.astype(float) * v_dc
        winding = poles - poles.mean(axis=0)
        levels = s
        hi, lo = _two_level_switch_names(topo)
        for ph, x in enumerate(PHASES):
            i_ph = amps[ph]
            sw_cur[hi[ph]] = np.where(s[ph] == 1, i_ph, 0.0)
            sw_cur[lo[ph]] = np.where(s[ph] == 0, i_ph, 0.0)
            _add_leg_events(events, hi[ph], lo[ph], s[ph], i_ph, v_dc)
        for sid in SWITCH_IDS[topo]:
            if sid not in sw_cur:
                sw_cur[sid] = np.zeros(n)
        if topo == TOPOLOGY_B62Y:
            # star switches conduct the phase currents continuously in Y-mode
            for ph, i in enumerate((1, 2, 3)):
                sw_cur[f"Td{i}"] = amps[ph].copy()
        i_plus = np.sum(s * amps, axis=0)
        i_minus = i_plus

    i_rail = (i_plus + i_minus) / 2.0
    cap_current = i_rail - i_rail.mean()
    return SwitchingTrace(
        time=t, dt=dt, period_s=period, f_carrier=f_c,
        phase_currents=amps, winding_voltages=winding, levels=np.asarray(levels),
        switch_currents=sw_cur, switch_events=events, cap_current=cap_current)


def _two_level_switch_names(topo):
    hi = [f"T{x}1" for x in PHASES]
    lo = [f"T{x}2" for x in PHASES]
    return hi, lo


def _apply_zero_vector_policy(r: np.ndarray, i_k: np.ndarray, variant: str) -> np.ndarray:
    """Common-mode injection selecting the zero-space-vector usage of a
    three-level leg set; inputs are per-carrier-period references (pole-
    normalized) and phase currents.

    A: centered min-max injection (all zero vectors, including [0,0,0]).
    B: clamp the maximum phase to the top level (only [1,1,1] appears).
    C: per carrier period keep or flip between top and bottom clamp by the
       incremental switching energy, including the extra commutations a flip
       of the zero vector costs at the period boundary; ties keep [1,1,1].
    """
    r_max = r.max(axis=0)
    r_min = r.min(axis=0)
    if variant == "A":
        return r - (r_max + r_min) / 2.0
    up = r + (1.0 - r_max)
    if variant == "B":
        return up
    down = r + (-1.0 - r_min)
    i_abs = np.abs(i_k)
    i_sum = i_abs.sum(axis=0)
    # switched current of the non-clamped phases under each clamp
    cost_up = i_sum - np.take_along_axis(i_abs, r.argmax(axis=0)[None, :], axis=0)[0]
    cost_down = i_sum - np.take_along_axis(i_abs, r.argmin(axis=0)[None, :], axis=0)[0]
    out = np.empty(r.shape[1])
    state_up = True
    for k in range(r.shape[1]):
        c_up = cost_up[k] + (0.0 if state_up else i_sum[k])
        c_down = cost_down[k] + (i_sum[k] if state_up else 0.0)
        state_up = c_up <= c_down
        out[k] = up[:, k][0] - r[0, k] if state_up else down[:, k][0] - r[0, k]
    return r + out[None, :]


def dq_ripple_spectrum(trace: SwitchingTrace, sol, window: tuple[float, float]) -> HarmonicSpectrum:
    """Park transform of the winding voltages at the fundamental angle,
    rectangular-window FFT, single-sided magnitudes restricted to the window.
    The fundamental and DC land in bin 0 of the dq frame and are excluded."""
    f_min, f_max = window
    if f_min >= f_max:
        raise ValueError("empty spectrum window")
    n = trace.time.size
    omega = TWO_PI * sol.f_fund
    v = trace.winding_voltages
    u_d = np.zeros(n)
    u_q = np.zeros(n)
    for ph in range(3):
        th = omega * trace.time - ph * TWO_PI / 3.0
        u_d += (2.0 / 3.0) * v[ph] * np.cos(th)
        u_q += -(2.0 / 3.0) * v[ph] * np.sin(th)
    spec_d = np.abs(np.fft.rfft(u_d)) * 2.0 / n
    spec_q = np.abs(np.fft.rfft(u_q)) * 2.0 / n
    freqs = np.fft.rfftfreq(n, d=trace.dt)
    keep = (freqs >= f_min) & (freqs <= f_max) & (freqs > 0)
    return HarmonicSpectrum(freq_hz=freqs[keep], u_d=spec_d[keep], u_q=spec_q[keep])


def dc_link_ripple(trace: SwitchingTrace, c_dc: float) -> float:
    """Peak-to-peak DC-link capacitor voltage excursion over the period."""
    if c_dc <= 0:
        raise ValueError("capacitance must be positive")
    charge = np.cumsum(trace.cap_current) * trace.dt
    return float((charge.max() - charge.min()) / c_dc)
