"""Per-value frequency statistics and the skew taxonomy of a join.

A value is skewed in a table when its count reaches the threshold fraction
``p`` of the table size. A value skewed in exactly one table is partially
skewed; skewed in both, completely skewed, with the dominant side decided
by the larger count (ties count as probe-dominated-by-build, i.e. right).
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

from .datagen import NodeShare

# Absolute slack on `count >= p * size`: a workload built to sit exactly at
# the threshold (say 5% of 19500 rows) must classify as skewed even though
# p * size carries float representation error.
_THRESHOLD_SLACK = 1e-6


class KeyClass(enum.Enum):
    """Routing class of a join-key value for one (probe, build) pair."""

    NON_SKEWED = "non_skewed"
    PARTIAL_R = "partial_r"
    PARTIAL_S = "partial_s"
    COMPLETE_LEFT = "complete_left"
    COMPLETE_RIGHT = "complete_right"


@dataclass
class FrequencyMap:
    """Exact per-value counts for one table, total and per node."""

    table_size: int
    counts: dict[int, int]
    per_node: dict[int, dict[int, int]] = field(default_factory=dict)

    def count(self, key: int) -> int:
        return self.counts.get(key, 0)

    def node_count(self, node: int, key: int) -> int:
        return self.per_node.get(key, {}).get(node, 0)

    def node_counts(self, key: int) -> dict[int, int]:
        """Nonzero per-node counts for ``key`` (node -> count)."""
        return self.per_node.get(key, {})


@dataclass(frozen=True)
class SkewClassification:
    """Skew sets for one join at threshold ``threshold_p``.

    ``partial_r``/``partial_s`` hold values skewed in exactly one table;
    ``complete_left``/``complete_right`` split the values skewed in both by
    which side dominates. The four sets are pairwise disjoint and cover
    ``rho_r | rho_s``.
    """

    threshold_p: float
    rho_r: frozenset[int]
    rho_s: frozenset[int]
    partial_r: frozenset[int]
    partial_s: frozenset[int]
    complete_left: frozenset[int]
    complete_right: frozenset[int]

    @property
    def skewed(self) -> frozenset[int]:
        return self.rho_r | self.rho_s

    def key_class(self, key: int) -> KeyClass:
        if key in self.partial_r:
            return KeyClass.PARTIAL_R
        if key in self.partial_s:
            return KeyClass.PARTIAL_S
        if key in self.complete_left:
            return KeyClass.COMPLETE_LEFT
        if key in self.complete_right:
            return KeyClass.COMPLETE_RIGHT
        return KeyClass.NON_SKEWED

    def class_map(self) -> dict[int, KeyClass]:
        """key -> class for every skewed key (absent keys are non-skewed)."""
        out: dict[int, KeyClass] = {}
        for keys, cls in (
            (self.partial_r, KeyClass.PARTIAL_R),
            (self.partial_s, KeyClass.PARTIAL_S),
            (self.complete_left, KeyClass.COMPLETE_LEFT),
            (self.complete_right, KeyClass.COMPLETE_RIGHT),
        ):
            for k in keys:
                out[k] = cls
        return out


def build_frequency(shares: list[NodeShare]) -> FrequencyMap:
    """Count values exactly, per table and per node, from placed shares."""
    if not shares:
        raise ValueError("shares must be nonempty")
    counts: Counter[int] = Counter()
    per_node: dict[int, dict[int, int]] = {}
    total = 0
    for share in shares:
        node_counter = Counter(t.key for t in share.tuples)
        total += len(share.tuples)
        counts.update(node_counter)
        for key, c in node_counter.items():
            per_node.setdefault(key, {})[share.node] = c
    return FrequencyMap(table_size=total, counts=dict(counts), per_node=per_node)


def skewed_keys(counts: dict[int, int], table_size: int, p: float) -> frozenset[int]:
    """Values whose count reaches ``p * table_size`` (with float slack)."""
    threshold = p * table_size - _THRESHOLD_SLACK
    return frozenset(k for k, c in counts.items() if c >= threshold)


def classify(
    freq_r: FrequencyMap, freq_s: FrequencyMap, p: float
) -> SkewClassification:
    """Split the skewed values of a join into the four routing classes."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    rho_r = skewed_keys(freq_r.counts, freq_r.table_size, p)
    rho_s = skewed_keys(freq_s.counts, freq_s.table_size, p)
    complete = rho_r & rho_s
    left = frozenset(x for x in complete if freq_r.count(x) > freq_s.count(x))
    return SkewClassification(
        threshold_p=p,
        rho_r=rho_r,
        rho_s=rho_s,
        partial_r=rho_r - rho_s,
        partial_s=rho_s - rho_r,
        complete_left=left,
        complete_right=complete - left,
    )


def selectivity(freq: FrequencyMap, key: int) -> float:
    """Fraction of the table carrying ``key``; 0 for absent keys."""
    if freq.table_size <= 0:
        raise ValueError("selectivity undefined for empty table")
    return freq.count(key) / freq.table_size
