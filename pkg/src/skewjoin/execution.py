"""Per-node hash joins over routed inboxes and the final merge phase.

Each node joins its lanes pairwise: hash lane against hash lane, locally
kept and round-robined probe rows against the replicated build lane, and
replicated probe rows against the scattered build lane. The lane pairing
is what guarantees every matching pair is produced exactly once across the
cluster. Matched pairs are identified by row ids; pair materialization can
be switched off when only counts are needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import NodeInbox
from .datagen import Row

_EMPTY = np.empty(0, dtype=np.int64)


@dataclass
class NodeResult:
    """Join output of one node: pair count plus optional (r, s) id arrays."""

    count: int
    r_ids: np.ndarray | None = None
    s_ids: np.ndarray | None = None


@dataclass
class JoinResult:
    """Cluster-wide join output; ids refer to row positions in the inputs."""

    per_node_counts: list[int]
    r_ids: np.ndarray | None = None
    s_ids: np.ndarray | None = None

    @property
    def count(self) -> int:
        return sum(self.per_node_counts)


def _component_join(
    r_lane: list[Row], s_lane: list[Row], collect: bool
) -> tuple[int, list[np.ndarray], list[np.ndarray]]:
    """Hash-join one probe lane against one build lane (build side = S)."""
    if not r_lane or not s_lane:
        return 0, [], []
    build: dict[int, list[int]] = {}
    for s in s_lane:
        build.setdefault(s.key, []).append(s.tid)
    probe: dict[int, list[int]] = {}
    for r in r_lane:
        if r.key in build:
            probe.setdefault(r.key, []).append(r.tid)
    count = 0
    r_parts: list[np.ndarray] = []
    s_parts: list[np.ndarray] = []
    for key, r_ids in probe.items():
        s_ids = build[key]
        count += len(r_ids) * len(s_ids)
        if collect:
            r_arr = np.asarray(r_ids, dtype=np.int64)
            s_arr = np.asarray(s_ids, dtype=np.int64)
            r_parts.append(np.repeat(r_arr, len(s_arr)))
            s_parts.append(np.tile(s_arr, len(r_arr)))
    return count, r_parts, s_parts


def local_join(inbox: NodeInbox, collect_pairs: bool = True) -> NodeResult:
    """Union of the four component joins of one node's inbox."""
    components = (
        (inbox.r_hash, inbox.s_hash),
        (inbox.r_loc, inbox.s_repl),
        (inbox.r_rand, inbox.s_repl),
        (inbox.r_repl, inbox.s_rand),
    )
    count = 0
    r_parts: list[np.ndarray] = []
    s_parts: list[np.ndarray] = []
    for r_lane, s_lane in components:
        c, rp, sp = _component_join(r_lane, s_lane, collect_pairs)
        count += c
        r_parts.extend(rp)
        s_parts.extend(sp)
    if not collect_pairs:
        return NodeResult(count=count)
    r_ids = np.concatenate(r_parts) if r_parts else _EMPTY
    s_ids = np.concatenate(s_parts) if s_parts else _EMPTY
    return NodeResult(count=count, r_ids=r_ids, s_ids=s_ids)


def merge(
    results: list[NodeResult], mode: str, gateway: int = 0
) -> tuple[JoinResult, int]:
    """Combine per-node results; returns the result and the merge traffic.

    ``gather`` ships every non-gateway node's pairs to the gateway, so the
    traffic is the total count minus the gateway's own. ``local`` keeps
    results where they were produced at zero cost.
    """
    if mode not in ("gather", "local"):
        raise ValueError(f"unknown merge mode {mode!r}")
    counts = [res.count for res in results]
    if mode == "gather":
        if not 0 <= gateway < len(results):
            raise ValueError("gateway out of range")
        traffic = sum(c for i, c in enumerate(counts) if i != gateway)
    else:
        traffic = 0
    collected = [res for res in results if res.r_ids is not None]
    if collected and len(collected) == len(results):
        r_ids = np.concatenate([res.r_ids for res in collected])
        s_ids = np.concatenate([res.s_ids for res in collected])
    else:
        r_ids = s_ids = None
    return JoinResult(per_node_counts=counts, r_ids=r_ids, s_ids=s_ids), traffic
