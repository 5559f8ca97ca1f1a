"""Cost-based selection of the cheapest join sub-operator.

The dispatcher prices exactly the three core strategies (the PRPD variants
are manual choices, not part of the comparison) and picks the smallest
total. Ties go to the least network-intrusive candidate first, in the
fixed order grahj, prpd, pnr.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import costmodel
from .cluster import ClusterSpec
from .costmodel import CostBreakdown
from .stats import FrequencyMap, SkewClassification

CORE_STRATEGIES = ("grahj", "prpd", "pnr")


@dataclass(frozen=True)
class Decision:
    """Outcome of one dispatch: winner, all three costs, elapsed seconds."""

    chosen: str
    costs: dict[str, CostBreakdown]
    decision_time: float

    def as_dict(self) -> dict:
        return {
            "chosen": self.chosen,
            "costs": {name: c.as_dict() for name, c in self.costs.items()},
            "decision_time_ms": self.decision_time * 1e3,
        }


def choose(costs: dict[str, CostBreakdown]) -> str:
    """Argmin by total over the core strategies, ties in fixed order."""
    return min(CORE_STRATEGIES, key=lambda name: costs[name].total)


def dispatch(
    cls: SkewClassification,
    freq_r: FrequencyMap,
    freq_s: FrequencyMap,
    spec: ClusterSpec,
    merge_mode: str = "local",
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> Decision:
    """Price grahj, prpd and pnr on the workload and pick the cheapest."""
    start = time.perf_counter()
    costs = {
        name: costmodel.estimate(
            name, cls, freq_r, freq_s, spec, merge_mode, weights=weights
        )
        for name in CORE_STRATEGIES
    }
    chosen = choose(costs)
    return Decision(
        chosen=chosen, costs=costs, decision_time=time.perf_counter() - start
    )
