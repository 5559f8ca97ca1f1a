"""Experiment harness: dataset prep, single runs, sweeps, verification.

A run takes two tables (generated or loaded), places them over the cluster,
classifies skew, plans and executes the requested strategy (or dispatches
the cheapest one), and reports exact traffic/load metrics next to the model
costs. Randomized placement runs are repeated with per-repeat seeds and the
metrics averaged; everything else in a report is deterministic for fixed
seeds, wall-clock fields aside.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .cluster import ClusterSpec, Router, distribute, run_nodes
from .costmodel import estimate
from .datagen import (
    Dataset,
    PlacementSpec,
    SingleSkewSpec,
    ZipfSpec,
    gen_single_skew,
    gen_zipf,
    load_dataset,
    place,
)
from .dispatcher import CORE_STRATEGIES, dispatch
from .execution import JoinResult, local_join, merge
from .stats import build_frequency, classify, skewed_keys
from .strategies import STRATEGY_NAMES, plan_for

logger = logging.getLogger(__name__)

DatasetSource = Union[str, ZipfSpec, SingleSkewSpec, Dataset]

_ORACLE_CELL_BUDGET = 4_000_000


class ConfigError(ValueError):
    """Bad run or sweep configuration; maps to CLI exit code 2."""


@dataclass
class RunConfig:
    """Everything one experiment needs; sources may be files, generator
    specs, or in-memory datasets."""

    r_source: DatasetSource
    s_source: DatasetSource
    nodes: int
    strategy: str = "auto"
    threshold: float = 0.05
    gateway: int = 0
    hash_offset: int = 0
    merge: str = "gather"
    placement: str = "balanced"
    placement_r: str | None = None
    placement_s: str | None = None
    seed: int = 0
    repeats: int | None = None
    workers: int = 1
    verify: bool = False
    collect_pairs: bool | None = None
    payload_width: int = 8
    rand_mode: str = "round_robin"

    def validate(self) -> None:
        if self.strategy not in STRATEGY_NAMES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.nodes < 1:
            raise ConfigError("nodes must be >= 1")
        if not 0 <= self.gateway < self.nodes:
            raise ConfigError("gateway out of range")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError("threshold must be in (0, 1]")
        if self.merge not in ("gather", "local"):
            raise ConfigError(f"unknown merge mode {self.merge!r}")


def resolve_dataset(source: DatasetSource, payload_width: int = 8) -> Dataset:
    if isinstance(source, Dataset):
        return source
    if isinstance(source, ZipfSpec):
        return gen_zipf(source, payload_width)
    if isinstance(source, SingleSkewSpec):
        return gen_single_skew(source, payload_width)
    return load_dataset(source)


def parse_placement(text: str, n_nodes: int, seed: int = 0) -> PlacementSpec:
    """Parse a CLI placement string: ``balanced``, ``hot:K`` or ``random``."""
    if text == "balanced":
        return PlacementSpec("balanced", n_nodes)
    if text == "random":
        return PlacementSpec("random", n_nodes, seed=seed)
    if text.startswith("hot:"):
        try:
            node = int(text.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad hot placement {text!r}") from exc
        return PlacementSpec("hot", n_nodes, hot_node=node)
    raise ConfigError(f"unknown placement {text!r}")


def dataset_skew_keys(ds: Dataset, p: float) -> frozenset[int]:
    counts = Counter(t.key for t in ds.tuples)
    return skewed_keys(dict(counts), len(ds.tuples), p)


def oracle_join(r_ds: Dataset, s_ds: Dataset) -> JoinResult:
    """Ground truth: compare every probe row against every build row.

    Vectorized all-pairs comparison, chunked over the probe side to bound
    the boolean matrix size.
    """
    r_keys = r_ds.key_array()
    s_keys = s_ds.key_array()
    if len(r_keys) == 0 or len(s_keys) == 0:
        empty = np.empty(0, dtype=np.int64)
        return JoinResult(per_node_counts=[0], r_ids=empty, s_ids=empty)
    chunk = max(1, _ORACLE_CELL_BUDGET // len(s_keys))
    r_parts = []
    s_parts = []
    for start in range(0, len(r_keys), chunk):
        block = r_keys[start : start + chunk]
        hit_r, hit_s = np.nonzero(block[:, None] == s_keys[None, :])
        r_parts.append(hit_r.astype(np.int64) + start)
        s_parts.append(hit_s.astype(np.int64))
    r_ids = np.concatenate(r_parts)
    s_ids = np.concatenate(s_parts)
    return JoinResult(per_node_counts=[len(r_ids)], r_ids=r_ids, s_ids=s_ids)


def encoded_pairs(result: JoinResult) -> np.ndarray:
    """Sorted uint64 encoding of the pair multiset, for exact comparison."""
    if result.r_ids is None:
        raise ValueError("result was produced without pair collection")
    enc = (result.r_ids.astype(np.uint64) << np.uint64(32)) | result.s_ids.astype(
        np.uint64
    )
    return np.sort(enc)


def same_result(a: JoinResult, b: JoinResult) -> bool:
    """Exact multiset equality of two join results."""
    return bool(np.array_equal(encoded_pairs(a), encoded_pairs(b)))


def execute_plan(
    r_shares,
    s_shares,
    plan,
    cls,
    spec: ClusterSpec,
    merge_mode: str,
    workers: int = 1,
    collect_pairs: bool = True,
    rand_mode: str = "round_robin",
    seed: int = 0,
):
    """Route both tables, join per node, merge. Returns (result, traffic,
    metrics)."""
    router = Router(
        spec,
        sfr_grid=plan.sfr_grid,
        tracked_keys=cls.skewed,
        rand_mode=rand_mode,
        seed=seed,
    )
    inboxes = distribute(r_shares, s_shares, plan, cls.class_map(), router)
    results = run_nodes(
        inboxes,
        lambda ib: local_join(ib, collect_pairs=collect_pairs),
        metrics=router.metrics,
        workers=workers,
    )
    joined, traffic = merge(results, merge_mode, spec.gateway)
    return joined, traffic, router.metrics


def run_experiment(config: RunConfig) -> dict:
    """Run one configured experiment and build its report."""
    config.validate()
    r_ds = resolve_dataset(config.r_source, config.payload_width)
    s_ds = resolve_dataset(config.s_source, config.payload_width)
    swapped = False
    if len(r_ds) < len(s_ds):
        logger.warning(
            "probe table smaller than build table (%d < %d); swapping roles",
            len(r_ds),
            len(s_ds),
        )
        r_ds, s_ds = s_ds, r_ds
        swapped = True

    spec = ClusterSpec(config.nodes, config.gateway, config.hash_offset)
    spec.validate()
    placement_r = config.placement_r or config.placement
    placement_s = config.placement_s or config.placement
    random_placement = "random" in (placement_r, placement_s)
    repeats = config.repeats or (10 if random_placement else 1)
    collect = config.collect_pairs if config.collect_pairs is not None else config.verify
    oracle = oracle_join(r_ds, s_ds) if config.verify else None

    rep_metrics = []
    result_count = None
    costs_report: dict[str, dict] = {}
    decision_report = None
    chosen = config.strategy
    verified: bool | None = None

    for rep in range(repeats):
        pr = parse_placement(placement_r, config.nodes, config.seed + 2 * rep)
        ps = parse_placement(placement_s, config.nodes, config.seed + 2 * rep + 1)
        r_keys = (
            dataset_skew_keys(r_ds, config.threshold) if pr.mode == "hot" else frozenset()
        )
        s_keys = (
            dataset_skew_keys(s_ds, config.threshold) if ps.mode == "hot" else frozenset()
        )
        r_shares = place(r_ds, pr, r_keys)
        s_shares = place(s_ds, ps, s_keys)

        freq_r = build_frequency(r_shares)
        freq_s = build_frequency(s_shares)
        cls = classify(freq_r, freq_s, config.threshold)

        if config.strategy == "auto":
            decision = dispatch(cls, freq_r, freq_s, spec, config.merge)
            chosen = decision.chosen
            decision_report = decision.as_dict()
            costs = dict(decision.costs)
        else:
            chosen = config.strategy
            costs = {
                name: estimate(name, cls, freq_r, freq_s, spec, config.merge)
                for name in CORE_STRATEGIES
            }
            if chosen not in costs:
                costs[chosen] = estimate(
                    chosen, cls, freq_r, freq_s, spec, config.merge
                )
        costs_report = {name: c.as_dict() for name, c in costs.items()}

        plan = plan_for(chosen, cls, config.nodes)
        start = time.perf_counter()
        joined, traffic, metrics = execute_plan(
            r_shares,
            s_shares,
            plan,
            cls,
            spec,
            config.merge,
            workers=config.workers,
            collect_pairs=collect,
            rand_mode=config.rand_mode,
            seed=config.seed + rep,
        )
        wall = time.perf_counter() - start

        if result_count is None:
            result_count = joined.count
        elif result_count != joined.count:
            raise AssertionError("result count changed across repeats")
        if oracle is not None:
            ok = same_result(joined, oracle)
            verified = ok if verified is None else (verified and ok)

        rep_metrics.append(
            {
                "cross_node_tuples": metrics.cross_node_tuples,
                "cross_node_bytes": metrics.cross_node_bytes,
                "cross_node_tracked": metrics.cross_node_tracked,
                "per_node_processed": list(metrics.per_node_processed),
                "per_node_received": list(metrics.per_node_received),
                "max_node_load": max(metrics.per_node_processed),
                "merge_traffic": traffic,
                "wall_s": wall,
            }
        )

    def avg(name: str) -> float:
        return sum(m[name] for m in rep_metrics) / len(rep_metrics)

    def avg_list(name: str) -> list[float]:
        arrs = np.asarray([m[name] for m in rep_metrics], dtype=np.float64)
        return list(arrs.mean(axis=0))

    wall_s = avg("wall_s")
    total_rows = len(r_ds) + len(s_ds)
    report = {
        "config": {
            "strategy": config.strategy,
            "executed": chosen,
            "nodes": config.nodes,
            "gateway": config.gateway,
            "hash_offset": config.hash_offset,
            "threshold": config.threshold,
            "merge": config.merge,
            "placement": {"r": placement_r, "s": placement_s},
            "seed": config.seed,
            "repeats": repeats,
            "workers": config.workers,
            "rows_r": len(r_ds),
            "rows_s": len(s_ds),
            "swapped": swapped,
        },
        "metrics": {
            "result_count": result_count,
            "cross_node_tuples": avg("cross_node_tuples"),
            "cross_node_bytes": avg("cross_node_bytes"),
            "cross_node_tracked": avg("cross_node_tracked"),
            "per_node_processed": avg_list("per_node_processed"),
            "per_node_received": avg_list("per_node_received"),
            "max_node_load": avg("max_node_load"),
            "merge_traffic": avg("merge_traffic"),
            "wall_ms": wall_s * 1e3,
            "throughput_tuples_per_s": total_rows / wall_s if wall_s > 0 else 0.0,
        },
        "cost_model": costs_report,
        "decision": decision_report,
        "verified": verified,
    }
    return report


def compute_costs(config: RunConfig) -> dict:
    """Model costs and dispatch decision only; nothing is executed."""
    config.validate()
    r_ds = resolve_dataset(config.r_source, config.payload_width)
    s_ds = resolve_dataset(config.s_source, config.payload_width)
    if len(r_ds) < len(s_ds):
        r_ds, s_ds = s_ds, r_ds
    spec = ClusterSpec(config.nodes, config.gateway, config.hash_offset)
    placement_r = config.placement_r or config.placement
    placement_s = config.placement_s or config.placement
    pr = parse_placement(placement_r, config.nodes, config.seed)
    ps = parse_placement(placement_s, config.nodes, config.seed + 1)
    r_shares = place(
        r_ds, pr, dataset_skew_keys(r_ds, config.threshold) if pr.mode == "hot" else frozenset()
    )
    s_shares = place(
        s_ds, ps, dataset_skew_keys(s_ds, config.threshold) if ps.mode == "hot" else frozenset()
    )
    freq_r = build_frequency(r_shares)
    freq_s = build_frequency(s_shares)
    cls = classify(freq_r, freq_s, config.threshold)
    decision = dispatch(cls, freq_r, freq_s, spec, config.merge)
    costs = {name: c.as_dict() for name, c in decision.costs.items()}
    for name in ("prpd-u", "prpd-sfr"):
        costs[name] = estimate(name, cls, freq_r, freq_s, spec, config.merge).as_dict()
    return {
        "nodes": config.nodes,
        "threshold": config.threshold,
        "merge": config.merge,
        "cost_model": costs,
        "decision": decision.as_dict(),
    }


# --- sweeps ----------------------------------------------------------------

_AXIS_ORDER = ("ratio", "z", "nodes", "probe_skew", "gateway")

_TABLE_KINDS = ("zipf", "single", "file")


@dataclass
class SweepConfig:
    base: dict
    axes: dict[str, list] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepConfig":
        if not isinstance(raw, dict):
            raise ConfigError("sweep config must be a JSON object")
        axes = raw.get("axes", {})
        if not isinstance(axes, dict):
            raise ConfigError("'axes' must be an object of axis -> list")
        for name, values in axes.items():
            if name not in _AXIS_ORDER:
                raise ConfigError(
                    f"unknown axis {name!r}; expected one of {_AXIS_ORDER}"
                )
            if not isinstance(values, list) or not values:
                raise ConfigError(f"axis {name!r} must be a nonempty list")
        for side in ("r", "s"):
            table = raw.get(side)
            if not isinstance(table, dict):
                raise ConfigError(f"missing table spec {side!r}")
            kind = table.get("kind")
            if kind not in _TABLE_KINDS:
                raise ConfigError(
                    f"table {side!r}: kind must be one of {_TABLE_KINDS}"
                )
        return cls(base=raw, axes=dict(axes))


def load_sweep_config(path: str) -> SweepConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return SweepConfig.from_dict(raw)


def _table_source(table: dict, scale: float, overrides: dict) -> DatasetSource:
    kind = table["kind"]
    if kind == "file":
        return table["path"]
    rows = int(round(table["rows"] * scale))
    seed = table.get("seed", 0)
    if kind == "zipf":
        z = overrides.get("z", table.get("z", 1.0))
        return ZipfSpec(
            n_distinct=table.get("distinct", 1000), z=z, rows=rows, seed=seed
        )
    frac = overrides.get("skew_frac", table.get("skew_frac", 0.0))
    return SingleSkewSpec(
        skew_key=table.get("skew_key", 1),
        skew_fraction=frac,
        rows=rows,
        distinct_rest=table.get("distinct_rest", 1000),
        seed=seed,
    )


def sweep(config: SweepConfig, scale: float = 1.0) -> list[dict]:
    """Run the sweep grid; one row per (grid point, strategy), in grid order."""
    base = config.base
    axis_names = [a for a in _AXIS_ORDER if a in config.axes]
    axis_values = [config.axes[a] for a in axis_names]
    strategies = base.get("strategies", ["auto"])
    for s in strategies:
        if s not in STRATEGY_NAMES:
            raise ConfigError(f"unknown strategy {s!r} in sweep config")
    effective_scale = scale * base.get("scale", 1.0)

    rows: list[dict] = []
    for point in itertools.product(*axis_values) if axis_names else [()]:
        bound = dict(zip(axis_names, point))
        nodes = int(bound.get("nodes", base.get("nodes", 4)))
        gateway = int(bound.get("gateway", base.get("gateway", 0)))
        s_table = dict(base["s"])
        r_table = dict(base["r"])
        if "ratio" in bound:
            if r_table["kind"] == "file" or s_table["kind"] == "file":
                raise ConfigError("ratio axis needs generated tables")
            r_table["rows"] = int(round(bound["ratio"] * s_table["rows"]))
        r_over = {k: v for k, v in (("z", bound.get("z")),) if v is not None}
        if "probe_skew" in bound:
            if r_table["kind"] != "single":
                raise ConfigError("probe_skew axis needs a single-kind probe table")
            r_over["skew_frac"] = bound["probe_skew"]
        s_over = {k: v for k, v in (("z", bound.get("z")),) if v is not None}
        r_source = _table_source(r_table, effective_scale, r_over)
        s_source = _table_source(s_table, effective_scale, s_over)

        for strategy in strategies:
            run_cfg = RunConfig(
                r_source=r_source,
                s_source=s_source,
                nodes=nodes,
                strategy=strategy,
                threshold=base.get("threshold", 0.05),
                gateway=gateway,
                hash_offset=base.get("hash_offset", 0),
                merge=base.get("merge", "gather"),
                placement=base.get("placement", "balanced"),
                seed=base.get("seed", 0),
                repeats=base.get("repeats"),
                workers=base.get("workers", 1),
                payload_width=base.get("payload_width", 8),
            )
            report = run_experiment(run_cfg)
            row = {name: bound[name] for name in axis_names}
            row.update(
                {
                    "strategy": strategy,
                    "executed": report["config"]["executed"],
                    "nodes": nodes,
                    "gateway": gateway,
                    "rows_r": report["config"]["rows_r"],
                    "rows_s": report["config"]["rows_s"],
                    "result_count": report["metrics"]["result_count"],
                    "cross_node_tuples": report["metrics"]["cross_node_tuples"],
                    "cross_node_bytes": report["metrics"]["cross_node_bytes"],
                    "max_node_load": report["metrics"]["max_node_load"],
                    "merge_traffic": report["metrics"]["merge_traffic"],
                    "wall_ms": report["metrics"]["wall_ms"],
                    "throughput_tuples_per_s": report["metrics"][
                        "throughput_tuples_per_s"
                    ],
                    "model_total": report["cost_model"]
                    .get(report["config"]["executed"], {})
                    .get("total"),
                }
            )
            rows.append(row)
    return rows


def write_sweep_csv(rows: list[dict], path: str) -> None:
    if not rows:
        raise ValueError("no sweep rows to write")
    fieldnames = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def write_report(report: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
