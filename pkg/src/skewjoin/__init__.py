"""skewjoin: a deterministic shared-nothing simulator for skewed equi-joins.

The package executes distributed hash joins under data skew with a family
of sub-operator strategies (plain hash, selective-broadcast variants, and
partition-plus-replication), prices each with a three-phase cost model
(redistribution, join, merge), and can dispatch the cheapest one at
runtime.
"""

from .cluster import ClusterSpec, NetMetrics, NodeInbox, Router, distribute, run_nodes
from .costmodel import (
    CostBreakdown,
    estimate,
    join_cost_hash,
    join_cost_local,
    join_cost_random,
    plan_cost,
    redist_cost_hash,
    redist_cost_local,
    redist_cost_random,
)
from .datagen import (
    Dataset,
    DatasetFormatError,
    NodeShare,
    PlacementSpec,
    Row,
    SingleSkewSpec,
    ZipfSpec,
    export_keys_csv,
    gen_single_skew,
    gen_zipf,
    harmonic,
    load_dataset,
    place,
    save_dataset,
    zipf_counts,
)
from .dispatcher import CORE_STRATEGIES, Decision, choose, dispatch
from .execution import JoinResult, NodeResult, local_join, merge
from .harness import (
    ConfigError,
    RunConfig,
    compute_costs,
    oracle_join,
    run_experiment,
    same_result,
    sweep,
)
from .stats import (
    FrequencyMap,
    KeyClass,
    SkewClassification,
    build_frequency,
    classify,
    selectivity,
    skewed_keys,
)
from .strategies import (
    Action,
    PlanError,
    RoutePlan,
    plan_for,
    plan_grahj,
    plan_pnr,
    plan_prpd,
    sfr_grid,
)

__version__ = "0.1.0"
