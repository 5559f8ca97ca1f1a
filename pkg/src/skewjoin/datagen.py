"""Synthetic table generation with controlled skew and initial placement.

Tables are flat lists of rows (join key + opaque payload). Key frequencies
follow either a Zipf profile or a single-hot-key profile; frequencies are
rounded deterministically so repeated runs produce identical tables and the
per-key counts are exact rather than sampled. The seed only affects row
order and payload bytes.
"""

from __future__ import annotations

import csv
import itertools
import struct
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

MAGIC = b"SKJN"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQI")


class DatasetFormatError(ValueError):
    """Raised when a dataset file fails structural validation."""


class Row(NamedTuple):
    """One table row: 64-bit join key, position id, payload filler bytes."""

    key: int
    tid: int
    payload: bytes


@dataclass
class Dataset:
    """An ordered list of rows plus the payload width they were built with."""

    tuples: list[Row]
    payload_width: int
    _keys: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.tuples)

    def key_array(self) -> np.ndarray:
        """Keys as an int64 array, indexable by row id. Cached."""
        if self._keys is None:
            self._keys = np.fromiter(
                (t.key for t in self.tuples), dtype=np.int64, count=len(self.tuples)
            )
        return self._keys


@dataclass
class NodeShare:
    """The slice of one table sitting on one node before redistribution."""

    node: int
    tuples: list[Row]


@dataclass(frozen=True)
class ZipfSpec:
    """Zipf-profiled table: rank-r key gets a share proportional to 1/r**z."""

    n_distinct: int
    z: float
    rows: int
    seed: int = 0

    def validate(self) -> None:
        if self.n_distinct < 1:
            raise ValueError("n_distinct must be >= 1")
        if self.rows < 0:
            raise ValueError("rows must be >= 0")
        if self.z < 0:
            raise ValueError("z must be >= 0")


@dataclass(frozen=True)
class SingleSkewSpec:
    """One hot key at a fixed fraction; the rest uniform over other keys."""

    skew_key: int
    skew_fraction: float
    rows: int
    distinct_rest: int
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.skew_fraction <= 1.0:
            raise ValueError("skew_fraction must be in [0, 1]")
        if self.rows < 0:
            raise ValueError("rows must be >= 0")
        if self.distinct_rest == 0 and self.skew_fraction < 1.0:
            raise ValueError("distinct_rest must be > 0 when skew_fraction < 1")


@dataclass(frozen=True)
class PlacementSpec:
    """How a table's rows are spread over nodes before the join starts.

    balanced  round-robin by row index; per-node counts differ by at most 1.
    hot       rows whose key is in the designated skew set all land on
              ``hot_node``; everything else is balanced.
    random    uniform seeded choice per row (models randomized replica reads).
    """

    mode: str
    n_nodes: int
    hot_node: int | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if self.mode not in ("balanced", "hot", "random"):
            raise ValueError(f"unknown placement mode {self.mode!r}")
        if self.mode == "hot":
            if self.hot_node is None:
                raise ValueError("hot placement requires hot_node")
            if not 0 <= self.hot_node < self.n_nodes:
                raise ValueError("hot_node out of range")


def harmonic(n: int, z: float) -> float:
    """Generalized harmonic number: sum of 1/i**z for i in 1..n."""
    ranks = np.arange(1, n + 1, dtype=np.float64)
    return float(np.sum(ranks**-z))


def zipf_counts(n_distinct: int, z: float, rows: int) -> np.ndarray:
    """Exact per-rank counts: largest-remainder rounding of the Zipf shares.

    Shares sum to 1 by construction, so the rounded counts sum to ``rows``
    exactly; ties in the remainders are broken toward lower ranks, which
    keeps the counts non-increasing in rank.
    """
    ranks = np.arange(1, n_distinct + 1, dtype=np.float64)
    weights = ranks**-z
    quotas = rows * weights / weights.sum()
    counts = np.floor(quotas).astype(np.int64)
    leftover = rows - int(counts.sum())
    if leftover:
        remainders = quotas - counts
        winners = np.argsort(-remainders, kind="stable")[:leftover]
        counts[winners] += 1
    return counts


def _assemble(keys_in_rank_order: np.ndarray, payload_width: int, seed: int) -> Dataset:
    """Shuffle keys and attach payload filler; both driven by one RNG."""
    rng = np.random.default_rng(seed)
    rows = len(keys_in_rank_order)
    keys = keys_in_rank_order[rng.permutation(rows)] if rows else keys_in_rank_order
    raw = rng.bytes(rows * payload_width) if payload_width else b""
    w = payload_width
    tuples = [
        Row(int(keys[i]), i, raw[i * w : (i + 1) * w]) for i in range(rows)
    ]
    return Dataset(tuples=tuples, payload_width=payload_width)


def gen_zipf(spec: ZipfSpec, payload_width: int = 8) -> Dataset:
    """Generate a Zipf table; rank r (r = 1..n) is used directly as the key."""
    spec.validate()
    counts = zipf_counts(spec.n_distinct, spec.z, spec.rows)
    keys = np.repeat(np.arange(1, spec.n_distinct + 1, dtype=np.int64), counts)
    return _assemble(keys, payload_width, spec.seed)


def gen_single_skew(spec: SingleSkewSpec, payload_width: int = 8) -> Dataset:
    """Generate a table where round(fraction * rows) rows carry the hot key.

    The remaining rows are spread as evenly as possible over
    ``distinct_rest`` keys disjoint from the hot key (counts differ by at
    most 1, extras going to the lowest keys).
    """
    spec.validate()
    n_skew = round(spec.skew_fraction * spec.rows)
    rest = spec.rows - n_skew
    parts = [np.full(n_skew, spec.skew_key, dtype=np.int64)]
    if rest:
        others = list(
            itertools.islice(
                (k for k in itertools.count(1) if k != spec.skew_key),
                spec.distinct_rest,
            )
        )
        base, extra = divmod(rest, spec.distinct_rest)
        rest_counts = [base + (1 if i < extra else 0) for i in range(spec.distinct_rest)]
        parts.append(np.repeat(np.asarray(others, dtype=np.int64), rest_counts))
    return _assemble(np.concatenate(parts), payload_width, spec.seed)


def place(
    ds: Dataset, spec: PlacementSpec, skew_keys: frozenset[int] = frozenset()
) -> list[NodeShare]:
    """Split a table into per-node shares according to the placement mode.

    The union of the shares is exactly the input table: no row is lost or
    duplicated. ``skew_keys`` designates which keys the hot mode pins.
    """
    spec.validate()
    shares = [NodeShare(i, []) for i in range(spec.n_nodes)]
    if spec.mode == "balanced":
        for i, t in enumerate(ds.tuples):
            shares[i % spec.n_nodes].tuples.append(t)
    elif spec.mode == "hot":
        cold = 0
        for t in ds.tuples:
            if t.key in skew_keys:
                shares[spec.hot_node].tuples.append(t)
            else:
                shares[cold % spec.n_nodes].tuples.append(t)
                cold += 1
    else:  # random
        rng = np.random.default_rng(spec.seed)
        nodes = rng.integers(0, spec.n_nodes, size=len(ds.tuples))
        for t, node in zip(ds.tuples, nodes):
            shares[int(node)].tuples.append(t)
    return shares


def save_dataset(ds: Dataset, path: str) -> None:
    """Write the binary table format (see ``load_dataset``)."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, len(ds.tuples), ds.payload_width))
        pack_key = struct.Struct("<q").pack
        fh.write(b"".join(pack_key(t.key) + t.payload for t in ds.tuples))


def load_dataset(path: str) -> Dataset:
    """Read a table file: "SKJN" magic, u32 version, u64 rows, u32 payload
    width, then (i64 key, payload) per row, all little-endian."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise DatasetFormatError(f"{path}: truncated header")
    magic, version, rows, width = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version}")
    stride = 8 + width
    if len(blob) != _HEADER.size + rows * stride:
        raise DatasetFormatError(
            f"{path}: expected {rows} rows of {stride} bytes after header"
        )
    unpack_key = struct.Struct("<q").unpack_from
    tuples = []
    off = _HEADER.size
    for tid in range(rows):
        (key,) = unpack_key(blob, off)
        tuples.append(Row(key, tid, blob[off + 8 : off + stride]))
        off += stride
    return Dataset(tuples=tuples, payload_width=width)


def export_keys_csv(ds: Dataset, path: str) -> None:
    """Debug export: header ``key``, one key per line."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["key"])
        for t in ds.tuples:
            writer.writerow([t.key])
