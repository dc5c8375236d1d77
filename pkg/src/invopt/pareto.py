"""Pareto-front extraction over (total chip area, cycle energy loss)."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ParetoPoint:
    label: str
    family: str
    a_tot_mm2: float
    delta_e_kwh_100km: float
    factor: float = 1.0


def _dominates(p: ParetoPoint, q: ParetoPoint) -> bool:
    return (p.a_tot_mm2 <= q.a_tot_mm2
            and p.delta_e_kwh_100km <= q.delta_e_kwh_100km
            and (p.a_tot_mm2 < q.a_tot_mm2
                 or p.delta_e_kwh_100km < q.delta_e_kwh_100km))


def pareto_front(points: list[ParetoPoint]) -> tuple[list[ParetoPoint], list[ParetoPoint]]:
    """Split points into the non-dominated front (ascending by area, then by
    energy loss) and the dominated remainder, both orders stable."""
    front, dominated = [], []
    for p in points:
        if any(_dominates(q, p) and q is not p for q in points):
            dominated.append(p)
        else:
            front.append(p)
    front.sort(key=lambda p: (p.a_tot_mm2, p.delta_e_kwh_100km))
    return front, dominated
