"""Design-family construction: scale a topology's total chip area relative to
the six-switch baseline and hand all surplus area to the auxiliary switches
that only partial-load operation benefits from."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import pwm
from .devices import CHIP_GRANULE_MM2, SwitchDesign
from .evaluation import Evaluator
from .motor import InfeasibleOperatingPoint, solve_operating_point
from .sizing import InverterDesign, SizingReport, TopologyConfig, size_topology
from .vehicle import OperatingPoint


class FamilyError(Exception):
    pass


# per topology: mandatory full-load mode, partial-load mode set, switches that
# receive surplus area, and switches that exist only for the auxiliary mode
# (these carry no full-load current, so their single-granule floor is not
# charged against the area factor)
_TNPC_MID = tuple(f"T{x}{i}" for x in pwm.PHASES for i in (3, 4))
_STAR = tuple(f"Td{i}" for i in (1, 2, 3))
_FAMILY_SHAPE = {
    pwm.TOPOLOGY_B6: ("2L", ("2L",), (), ()),
    pwm.TOPOLOGY_TNPC: ("2L", ("2L", "3L"), _TNPC_MID, _TNPC_MID),
    pwm.TOPOLOGY_B62Y: ("H", ("Y", "H"),
                        tuple(f"T{x}{i}" for x in pwm.PHASES for i in (1, 2)) + _STAR,
                        ()),
}

# the mode whose sizing sets the surplus-allocation weights of the auxiliaries
_AUX_REFERENCE_MODE = {pwm.TOPOLOGY_TNPC: "3L", pwm.TOPOLOGY_B62Y: "Y"}


@dataclass(frozen=True)
class FamilySpec:
    """One Pareto family: a topology/variant pair with its area factors."""
    topology: str
    variant: str
    factors: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.factors, self.factors[1:])):
            raise FamilyError("area factors must be strictly ascending")
        if not self.label:
            object.__setattr__(self, "label", f"{self.topology}_{self.variant}")


@dataclass
class FamilyBuild:
    spec: FamilySpec
    min_factor: float
    designs: list  # list[InverterDesign], ascending by factor
    factors: list[float]
    mandatory_report: SizingReport


def _quantize_shares(surplus: float, weights: dict[str, float],
                     granule: float) -> dict[str, float]:
    """Split ``surplus`` area over the auxiliary switches proportional to
    ``weights``, floor every share to the granule, then hand the remaining
    whole granules to the largest fractional shares so the distributed total
    equals surplus rounded down to a whole number of granules."""
    total_w = sum(weights.values()) or 1.0
    raw = {sid: surplus * w / total_w for sid, w in weights.items()}
    out = {sid: math.floor(v / granule) * granule for sid, v in raw.items()}
    budget = math.floor(surplus / granule) * granule
    leftover = budget - sum(out.values())
    order = sorted(weights, key=lambda s: (raw[s] - out[s], s), reverse=True)
    i = 0
    while leftover >= granule - 1e-9 and order:
        out[order[i % len(order)]] += granule
        leftover -= granule
        i += 1
    return out


def feasible_subset(evaluator: Evaluator, envelope: list[OperatingPoint],
                    voltage_limit: float) -> list[OperatingPoint]:
    """Envelope points electrically reachable under the given voltage limit."""
    keep = []
    for p in envelope:
        try:
            solve_operating_point(evaluator.motor, p, voltage_limit)
            keep.append(p)
        except InfeasibleOperatingPoint:
            pass
    return keep


def build_design_family(spec: FamilySpec, topo_cfg: TopologyConfig,
                        evaluator: Evaluator, envelope: list[OperatingPoint],
                        baseline_a_tot: float,
                        granule: float = CHIP_GRANULE_MM2) -> FamilyBuild:
    """Construct the family's designs at every area factor.

    The full-load mode's switches keep the areas their own sizing demands;
    every factor's surplus over that mandatory total goes to the auxiliary
    switches (TNPC mid-point legs; open-winding star switches plus the leg
    half they conduct with), weighted by an auxiliary-mode reference sizing
    and quantized to whole granules. Each auxiliary switch always gets at
    least one granule so the auxiliary mode stays physically present.
    """
    mode, modes, aux_ids, pure_aux = _FAMILY_SHAPE[spec.topology]
    cfg = TopologyConfig(spec.topology, mode, spec.variant, topo_cfg.f_sw,
                         topo_cfg.v_dc, topo_cfg.devices,
                         topo_cfg.samples_per_carrier)
    mandatory, report = size_topology(cfg, evaluator, envelope)
    base_areas = {sid: sw.area_mm2 for sid, sw in mandatory.switches.items()}

    weights = {sid: 1.0 for sid in aux_ids}
    ref_design = None
    if aux_ids:
        ref_mode = _AUX_REFERENCE_MODE[spec.topology]
        ref_cfg = TopologyConfig(spec.topology, ref_mode, spec.variant,
                                 topo_cfg.f_sw, topo_cfg.v_dc, topo_cfg.devices,
                                 topo_cfg.samples_per_carrier)
        ref_env = feasible_subset(evaluator, envelope,
                                  ref_cfg.modulation().voltage_limit())
        if ref_env:
            ref_design, _ = size_topology(ref_cfg, evaluator, ref_env)
            # a switch the reference mode sizes at the bare granule draws no
            # benefit from extra area in that mode (it is idle there), while
            # still paying the charge-cycling cost in the main mode -- give
            # it no share of the surplus
            weights = {sid: max(ref_design.switches[sid].area_mm2 - granule, 0.0)
                       for sid in aux_ids}
            if not any(weights.values()):
                weights = {sid: 1.0 for sid in aux_ids}

    if spec.topology == pwm.TOPOLOGY_B62Y and ref_design is not None:
        # the star switches conduct continuously whenever the star mode runs,
        # so buying the mode at all costs real area: the family floor must
        # serve the full envelope in H-mode and the star-reachable part of it
        # in Y-mode
        base_areas = {sid: max(a, ref_design.switches[sid].area_mm2)
                      for sid, a in base_areas.items()}
    mandatory_total = sum(a for sid, a in base_areas.items() if sid not in pure_aux)
    min_factor = mandatory_total / baseline_a_tot

    designs, factors = [], []
    for factor in spec.factors:
        if factor <= 0:  # 0 marks "the structural floor of this family"
            factor = min_factor
        target = factor * baseline_a_tot
        surplus = target - mandatory_total
        if surplus < -1e-9:
            raise FamilyError(
                f"{spec.label}: factor {factor:g} is below the family floor "
                f"{min_factor:.3f} (full-load sizing needs {mandatory_total:g} mm^2)")
        areas = dict(base_areas)
        if aux_ids:
            shares = _quantize_shares(max(surplus, 0.0), weights, granule)
            for sid in aux_ids:
                areas[sid] = max(base_areas[sid], granule) + shares[sid]
        switches = {sid: SwitchDesign(sid, cfg.tech_for(sid), areas[sid])
                    for sid in pwm.SWITCH_IDS[spec.topology]}
        designs.append(
            InverterDesign(topology=spec.topology, variant=spec.variant,
                            switches=switches, modes=modes, full_load_mode=mode,
                            is_baseline=(spec.topology == pwm.TOPOLOGY_B6),
                            label=f"{spec.label} x{factor:g}"))
        factors.append(factor)
    return FamilyBuild(spec=spec, min_factor=min_factor, designs=designs,
                      factors=factors, mandatory_report=report)
