"""Analytic three-phase cost model for the join sub-operators.

Costs are tuple volumes. Redistribution counts rows crossing the network,
the join phase counts max per-node work (build + probe + materialized
pairs), and the merge phase counts result rows shipped to the gateway.
Per-value costs depend only on the action pair the plan assigns to the
value's class, so the model and the router can never disagree about what a
strategy does.

All values are real-valued; nothing is truncated to integers, since the
dispatcher only compares magnitudes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cluster import ClusterSpec
from .stats import FrequencyMap, KeyClass, SkewClassification
from .strategies import Action, RoutePlan, plan_for

_SIDES = ("R", "S")

_CLASS_FIELDS = (
    (KeyClass.PARTIAL_R, "partial_r"),
    (KeyClass.PARTIAL_S, "partial_s"),
    (KeyClass.COMPLETE_LEFT, "complete_left"),
    (KeyClass.COMPLETE_RIGHT, "complete_right"),
)


@dataclass(frozen=True)
class CostBreakdown:
    """Per-phase cost of one sub-operator; total is the plain sum."""

    re: float
    comp: float
    summ: float
    total: float

    @classmethod
    def of(cls, re: float, comp: float, summ: float) -> "CostBreakdown":
        return cls(re=re, comp=comp, summ=summ, total=re + comp + summ)

    def as_dict(self) -> dict[str, float]:
        return {"re": self.re, "comp": self.comp, "summ": self.summ, "total": self.total}


def _check_side(side: str) -> None:
    if side not in _SIDES:
        raise ValueError(f"side must be one of {_SIDES}")


def redist_cost_hash(q_r: float, q_s: float, n: int) -> float:
    """Crossing volume when both sides of a value are hash-redistributed."""
    return (q_r + q_s) * (n - 1) / n


def redist_cost_local(side: str, q_other: float, n: int) -> float:
    """Crossing volume when ``side`` keeps the value local: the other
    table's rows are broadcast, one copy per remote node."""
    _check_side(side)
    return q_other * (n - 1)


def redist_cost_random(side: str, q_r: float, q_s: float, n: int) -> float:
    """Crossing volume when ``side`` round-robins the value and the other
    table broadcasts it."""
    _check_side(side)
    if side == "R":
        return q_r * (n - 1) / n + q_s * (n - 1)
    return q_s * (n - 1) / n + q_r * (n - 1)


def join_cost_hash(q_r: float, q_s: float) -> float:
    """Join work for a hash-routed value, all landing on one node."""
    return q_r + q_s + q_r * q_s


def join_cost_local(side: str, q_i_self: float, q_other: float) -> float:
    """Join work on node i for a value kept local on ``side`` there."""
    _check_side(side)
    return q_i_self + q_other + q_i_self * q_other


def join_cost_random(side: str, q_r: float, q_s: float, n: int) -> float:
    """Join work per node (identical on all) for a round-robined value."""
    _check_side(side)
    if side == "R":
        return q_r / n + q_s + (q_r / n) * q_s
    return q_s / n + q_r + (q_s / n) * q_r


def plan_cost(
    plan: RoutePlan,
    cls: SkewClassification,
    freq_r: FrequencyMap,
    freq_s: FrequencyMap,
    spec: ClusterSpec,
    merge_mode: str = "local",
    include_baseline: bool = True,
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> CostBreakdown:
    """Cost a concrete route plan.

    Per-node quantities are kept as a node-indexed part plus one uniform
    scalar (for actions that load all nodes equally), so the running time
    is linear in the number of skewed values rather than in their node
    spread. ``include_baseline`` adds the hash-path cost of the non-skewed
    values; it is identical for every strategy and only makes absolute
    totals meaningful.
    """
    spec.validate()
    plan.validate()
    n = spec.n_nodes
    re = 0.0
    comp_node = [0.0] * n
    comp_uniform = 0.0
    res_node = [0.0] * n
    res_uniform = 0.0

    if include_baseline:
        skewed = cls.skewed
        for key in freq_r.counts.keys() | freq_s.counts.keys():
            if key in skewed:
                continue
            qr = freq_r.count(key)
            qs = freq_s.count(key)
            re += redist_cost_hash(qr, qs, n)
            i = spec.node_for(key)
            comp_node[i] += join_cost_hash(qr, qs)
            res_node[i] += qr * qs

    for key_class, field_name in _CLASS_FIELDS:
        keys = getattr(cls, field_name)
        if not keys:
            continue
        pair = (plan.r_action[key_class], plan.s_action[key_class])
        for x in keys:
            qr = freq_r.count(x)
            qs = freq_s.count(x)
            if pair == (Action.HASH, Action.HASH):
                re += redist_cost_hash(qr, qs, n)
                i = spec.node_for(x)
                comp_node[i] += join_cost_hash(qr, qs)
                res_node[i] += qr * qs
            elif pair == (Action.LOCAL, Action.BROADCAST):
                re += redist_cost_local("R", qs, n)
                comp_uniform += qs
                for i, q_i in freq_r.node_counts(x).items():
                    comp_node[i] += q_i * (1 + qs)
                    res_node[i] += q_i * qs
            elif pair == (Action.BROADCAST, Action.LOCAL):
                re += redist_cost_local("S", qr, n)
                comp_uniform += qr
                for i, q_i in freq_s.node_counts(x).items():
                    comp_node[i] += q_i * (1 + qr)
                    res_node[i] += q_i * qr
            elif pair == (Action.RANDOM, Action.BROADCAST):
                re += redist_cost_random("R", qr, qs, n)
                comp_uniform += join_cost_random("R", qr, qs, n)
                res_uniform += (qr / n) * qs
            elif pair == (Action.BROADCAST, Action.RANDOM):
                re += redist_cost_random("S", qr, qs, n)
                comp_uniform += join_cost_random("S", qr, qs, n)
                res_uniform += (qs / n) * qr
            elif pair == (Action.SFR_ROW, Action.SFR_COL):
                gr, gc = plan.sfr_grid
                re += qr * (gc - 1) + qs * (gr - 1)
                comp_uniform += qr / gr + qs / gc + (qr / gr) * (qs / gc)
                res_uniform += (qr / gr) * (qs / gc)
            else:  # unreachable once the plan validates
                raise ValueError(f"uncosted action pair {pair}")

    comp = max(comp_node) + comp_uniform
    if merge_mode == "gather":
        summ = sum(res_node) + n * res_uniform - (res_node[spec.gateway] + res_uniform)
    elif merge_mode == "local":
        summ = 0.0
    else:
        raise ValueError(f"unknown merge mode {merge_mode!r}")
    w_re, w_comp, w_summ = weights
    return CostBreakdown.of(w_re * re, w_comp * comp, w_summ * summ)


def estimate(
    strategy: str,
    cls: SkewClassification,
    freq_r: FrequencyMap,
    freq_s: FrequencyMap,
    spec: ClusterSpec,
    merge_mode: str = "local",
    include_baseline: bool = True,
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> CostBreakdown:
    """Three-phase cost of a named strategy on the given workload."""
    plan = plan_for(strategy, cls, spec.n_nodes)
    return plan_cost(
        plan, cls, freq_r, freq_s, spec, merge_mode, include_baseline, weights
    )
