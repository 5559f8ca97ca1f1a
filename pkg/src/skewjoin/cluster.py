"""Shared-nothing cluster simulation: routed delivery and per-node execution.

Delivery is instantaneous and exactly accounted: every copy of a row that
lands on a node other than its source bumps the cross-node counters. Rows
are never serialized; inbox lanes hold references, so replication is free
in memory but still metered as network volume.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datagen import NodeShare, Row
from .stats import KeyClass
from .strategies import Action, RoutePlan


@dataclass(frozen=True)
class ClusterSpec:
    """Node count, gateway node, and the key -> node hash mapping."""

    n_nodes: int
    gateway: int = 0
    hash_offset: int = 0

    def validate(self) -> None:
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if not 0 <= self.gateway < self.n_nodes:
            raise ValueError("gateway out of range")

    def node_for(self, key: int) -> int:
        return (key + self.hash_offset) % self.n_nodes


@dataclass
class NodeInbox:
    """Arrival lanes of one node, split by how the rows were routed.

    Keeping the lanes separate is what makes the per-node join emit each
    matching pair exactly once: lanes are joined pairwise, never merged.
    """

    r_hash: list[Row] = field(default_factory=list)
    r_loc: list[Row] = field(default_factory=list)
    r_rand: list[Row] = field(default_factory=list)
    r_repl: list[Row] = field(default_factory=list)
    s_hash: list[Row] = field(default_factory=list)
    s_rand: list[Row] = field(default_factory=list)
    s_repl: list[Row] = field(default_factory=list)

    def r_total(self) -> int:
        return len(self.r_hash) + len(self.r_loc) + len(self.r_rand) + len(self.r_repl)

    def s_total(self) -> int:
        return len(self.s_hash) + len(self.s_rand) + len(self.s_repl)


# Where each action's deliveries land. Scatter-style actions on the build
# side (local / random) share the rand lane; replicated copies (broadcast /
# grid fragments) share the repl lane. Grid row copies of the probe side
# ride the rand lane so the rand x repl lane join covers them: a grid row
# and a grid column intersect in exactly one node.
_R_LANE = {
    Action.HASH: "r_hash",
    Action.LOCAL: "r_loc",
    Action.RANDOM: "r_rand",
    Action.BROADCAST: "r_repl",
    Action.SFR_ROW: "r_rand",
}
_S_LANE = {
    Action.HASH: "s_hash",
    Action.LOCAL: "s_rand",
    Action.RANDOM: "s_rand",
    Action.BROADCAST: "s_repl",
    Action.SFR_COL: "s_repl",
}


@dataclass
class NetMetrics:
    """Exact tuple/byte accounting of one redistribution + join run."""

    n_nodes: int
    cross_node_tuples: int = 0
    cross_node_bytes: int = 0
    cross_node_tracked: int = 0
    per_node_received: list[int] = field(default_factory=list)
    per_node_processed: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.per_node_received:
            self.per_node_received = [0] * self.n_nodes
        if not self.per_node_processed:
            self.per_node_processed = [0] * self.n_nodes


class Router:
    """Resolves (row, source, action) to destination nodes, with metering.

    Round-robin destinations keep one counter per (source, key class), so
    each source spreads a class's rows over the nodes with imbalance at
    most one; a seeded-uniform mode exists for fidelity experiments.
    Tracked keys (normally the skewed ones) get their own crossing counter
    so model costs can be compared against measured skew traffic.
    """

    def __init__(
        self,
        spec: ClusterSpec,
        sfr_grid: tuple[int, int] | None = None,
        tracked_keys: frozenset[int] = frozenset(),
        rand_mode: str = "round_robin",
        seed: int = 0,
    ) -> None:
        spec.validate()
        if rand_mode not in ("round_robin", "uniform"):
            raise ValueError(f"unknown rand_mode {rand_mode!r}")
        if sfr_grid is not None and sfr_grid[0] * sfr_grid[1] != spec.n_nodes:
            raise ValueError("sfr_grid must factor the node count")
        self.spec = spec
        self.sfr_grid = sfr_grid
        self.tracked_keys = tracked_keys
        self.rand_mode = rand_mode
        self.metrics = NetMetrics(spec.n_nodes)
        self._rr: dict[tuple[int, KeyClass], int] = {}
        self._rng = np.random.default_rng(seed)
        self._all_nodes = list(range(spec.n_nodes))

    def route(
        self,
        row: Row,
        source_node: int,
        action: Action,
        key_class: KeyClass = KeyClass.NON_SKEWED,
    ) -> list[int]:
        """Destination nodes for one row; updates delivery/crossing meters."""
        n = self.spec.n_nodes
        if action is Action.HASH:
            dests = [self.spec.node_for(row.key)]
        elif action is Action.LOCAL:
            dests = [source_node]
        elif action is Action.RANDOM:
            if self.rand_mode == "round_robin":
                rr_key = (source_node, key_class)
                step = self._rr.get(rr_key, 0)
                self._rr[rr_key] = step + 1
                dests = [(source_node + step) % n]
            else:
                dests = [int(self._rng.integers(0, n))]
        elif action is Action.BROADCAST:
            dests = self._all_nodes
        elif action is Action.SFR_ROW:
            r, c = self._require_grid()
            base = (source_node // c) * c
            dests = list(range(base, base + c))
        elif action is Action.SFR_COL:
            r, c = self._require_grid()
            col = source_node % c
            dests = [col + i * c for i in range(r)]
        else:
            raise ValueError(f"unroutable action {action}")

        m = self.metrics
        crossings = sum(1 for d in dests if d != source_node)
        if crossings:
            m.cross_node_tuples += crossings
            m.cross_node_bytes += crossings * (len(row.payload) + 8)
            if row.key in self.tracked_keys:
                m.cross_node_tracked += crossings
        for d in dests:
            m.per_node_received[d] += 1
        return dests

    def _require_grid(self) -> tuple[int, int]:
        if self.sfr_grid is None:
            raise ValueError("router has no SFR grid configured")
        return self.sfr_grid


def distribute(
    r_shares: list[NodeShare],
    s_shares: list[NodeShare],
    plan: RoutePlan,
    class_map: dict[int, KeyClass],
    router: Router,
) -> list[NodeInbox]:
    """Apply a route plan to both tables' shares, filling per-node inboxes."""
    plan.validate()
    inboxes = [NodeInbox() for _ in range(router.spec.n_nodes)]
    non_skewed = KeyClass.NON_SKEWED
    for shares, actions, lanes in (
        (r_shares, plan.r_action, _R_LANE),
        (s_shares, plan.s_action, _S_LANE),
    ):
        lane_of = {cls: lanes[action] for cls, action in actions.items()}
        for share in shares:
            source = share.node
            for row in share.tuples:
                cls = class_map.get(row.key, non_skewed)
                action = actions[cls]
                lane = lane_of[cls]
                for dest in router.route(row, source, action, cls):
                    getattr(inboxes[dest], lane).append(row)
    return inboxes


def run_nodes(
    inboxes: list[NodeInbox],
    join_fn,
    metrics: NetMetrics | None = None,
    workers: int = 1,
):
    """Run ``join_fn`` on every node's inbox; results come back in node order.

    Results and meters are identical for any worker count: each node's work
    is independent and the merge below happens in node index order.
    """
    if workers <= 1 or len(inboxes) <= 1:
        results = [join_fn(ib) for ib in inboxes]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(join_fn, inboxes))
    if metrics is not None:
        for i, (ib, res) in enumerate(zip(inboxes, results)):
            metrics.per_node_processed[i] = (
                ib.r_total() + ib.s_total() + getattr(res, "count", 0)
            )
    return results
