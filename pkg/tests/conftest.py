"""Shared helpers for building small tables, shares and frequency maps."""

from __future__ import annotations

import itertools

from skewjoin.datagen import Dataset, NodeShare, Row
from skewjoin.stats import FrequencyMap


def make_dataset(keys: list[int], payload_width: int = 0) -> Dataset:
    pad = bytes(payload_width)
    return Dataset(
        tuples=[Row(k, i, pad) for i, k in enumerate(keys)],
        payload_width=payload_width,
    )


def make_shares(per_node_keys: list[list[int]], payload_width: int = 0):
    """Build one table spread over nodes; node i holds per_node_keys[i].

    Returns (dataset, shares); row ids are unique across the table.
    """
    flat = list(itertools.chain.from_iterable(per_node_keys))
    ds = make_dataset(flat, payload_width)
    shares = []
    tid = 0
    for node, keys in enumerate(per_node_keys):
        rows = [ds.tuples[tid + i] for i in range(len(keys))]
        shares.append(NodeShare(node, rows))
        tid += len(keys)
    return ds, shares


def freq_of(
    counts: dict[int, int],
    per_node: dict[int, dict[int, int]] | None = None,
    size: int | None = None,
) -> FrequencyMap:
    """FrequencyMap from plain count dicts; per-node defaults to node 0."""
    total = size if size is not None else sum(counts.values())
    if per_node is None:
        per_node = {k: {0: c} for k, c in counts.items()}
    return FrequencyMap(table_size=total, counts=dict(counts), per_node=per_node)
