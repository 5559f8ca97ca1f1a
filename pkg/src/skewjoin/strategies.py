"""Route planning for the join sub-operators.

A plan assigns one redistribution action per key class and per table side.
Correctness hinges on one pairing rule: whenever one side's action can land
matching rows on several or unpredictable nodes (kept local at many
sources, round-robined, or fragmented over a grid row), the other side must
guarantee co-location (full broadcast, or the matching grid column). Hash
pairs only with hash.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .stats import KeyClass, SkewClassification

STRATEGY_NAMES = ("grahj", "prpd", "prpd-u", "prpd-sfr", "pnr", "auto")
PRPD_VARIANTS = ("local", "u_random", "sfr")


class Action(enum.Enum):
    HASH = "hash"
    LOCAL = "local"
    RANDOM = "random_rr"
    BROADCAST = "broadcast"
    SFR_ROW = "sfr_row"
    SFR_COL = "sfr_col"


# (probe action, build action) pairs that keep every matching pair joinable
# exactly once.
_VALID_PAIRS = frozenset(
    {
        (Action.HASH, Action.HASH),
        (Action.LOCAL, Action.BROADCAST),
        (Action.RANDOM, Action.BROADCAST),
        (Action.BROADCAST, Action.LOCAL),
        (Action.BROADCAST, Action.RANDOM),
        (Action.SFR_ROW, Action.SFR_COL),
    }
)

_ALL_CLASSES = tuple(KeyClass)


class PlanError(ValueError):
    """Raised when a route plan violates the pairing rule."""


@dataclass(frozen=True)
class RoutePlan:
    """Per-class actions for both tables, plus the grid when SFR is used."""

    r_action: dict[KeyClass, Action]
    s_action: dict[KeyClass, Action]
    sfr_grid: tuple[int, int] | None = None

    def validate(self) -> None:
        for cls in _ALL_CLASSES:
            if cls not in self.r_action or cls not in self.s_action:
                raise PlanError(f"missing action for {cls}")
            pair = (self.r_action[cls], self.s_action[cls])
            if pair not in _VALID_PAIRS:
                raise PlanError(f"invalid action pair {pair} for {cls}")
        uses_sfr = Action.SFR_ROW in self.r_action.values()
        if uses_sfr and self.sfr_grid is None:
            raise PlanError("SFR actions require sfr_grid")
        if self.sfr_grid is not None:
            r, c = self.sfr_grid
            if r < 1 or c < 1:
                raise PlanError("grid dimensions must be >= 1")


def sfr_grid(n_nodes: int) -> tuple[int, int]:
    """Most-square r x c factorization of the node count (r <= c).

    For prime node counts this degenerates to 1 x N: probe rows replicate
    to every node and build rows stay put, which is still correct.
    """
    r = 1
    for cand in range(int(math.isqrt(n_nodes)), 0, -1):
        if n_nodes % cand == 0:
            r = cand
            break
    return r, n_nodes // r


def _plan(mapping: dict[KeyClass, tuple[Action, Action]], grid=None) -> RoutePlan:
    plan = RoutePlan(
        r_action={c: ra for c, (ra, _) in mapping.items()},
        s_action={c: sa for c, (_, sa) in mapping.items()},
        sfr_grid=grid,
    )
    plan.validate()
    return plan


def plan_grahj(cls: SkewClassification | None = None) -> RoutePlan:
    """Plain parallel grace hash join: everything hash-redistributed."""
    return _plan({c: (Action.HASH, Action.HASH) for c in _ALL_CLASSES})


def plan_prpd(
    cls: SkewClassification | None = None,
    variant: str = "local",
    n_nodes: int | None = None,
) -> RoutePlan:
    """Selective-broadcast family: skewed side pinned, other side broadcast.

    Partial skew always keeps the skewed table's rows where they are and
    broadcasts the matching rows of the other table. The variant decides
    how completely-skewed values are handled: ``local`` pins the dominant
    side, ``u_random`` round-robins it instead (for hot-node placements),
    and ``sfr`` fragments probe rows along grid rows and build rows along
    grid columns so each match meets on exactly one node.
    """
    if variant not in PRPD_VARIANTS:
        raise ValueError(f"unknown PRPD variant {variant!r}")
    mapping = {
        KeyClass.NON_SKEWED: (Action.HASH, Action.HASH),
        KeyClass.PARTIAL_R: (Action.LOCAL, Action.BROADCAST),
        KeyClass.PARTIAL_S: (Action.BROADCAST, Action.LOCAL),
    }
    grid = None
    if variant == "local":
        mapping[KeyClass.COMPLETE_LEFT] = (Action.LOCAL, Action.BROADCAST)
        mapping[KeyClass.COMPLETE_RIGHT] = (Action.BROADCAST, Action.LOCAL)
    elif variant == "u_random":
        mapping[KeyClass.COMPLETE_LEFT] = (Action.RANDOM, Action.BROADCAST)
        mapping[KeyClass.COMPLETE_RIGHT] = (Action.BROADCAST, Action.RANDOM)
    else:
        if n_nodes is None:
            raise ValueError("variant='sfr' needs n_nodes to pick a grid")
        grid = sfr_grid(n_nodes)
        mapping[KeyClass.COMPLETE_LEFT] = (Action.SFR_ROW, Action.SFR_COL)
        mapping[KeyClass.COMPLETE_RIGHT] = (Action.SFR_ROW, Action.SFR_COL)
    return _plan(mapping, grid)


def plan_pnr(cls: SkewClassification | None = None) -> RoutePlan:
    """Partition-and-replication plan.

    Probe-side partial skew stays local (build side broadcast). Complete
    skew is split by dominance: the dominant side is round-robined and the
    other broadcast. Values skewed only in the build table are deliberately
    left on the hash path, so with no probe-side skew this plan collapses
    to the plain hash plan outright.
    """
    if cls is not None and not cls.rho_r:
        return plan_grahj(cls)
    return _plan(
        {
            KeyClass.NON_SKEWED: (Action.HASH, Action.HASH),
            KeyClass.PARTIAL_R: (Action.LOCAL, Action.BROADCAST),
            KeyClass.PARTIAL_S: (Action.HASH, Action.HASH),
            KeyClass.COMPLETE_LEFT: (Action.RANDOM, Action.BROADCAST),
            KeyClass.COMPLETE_RIGHT: (Action.BROADCAST, Action.RANDOM),
        }
    )


def plan_for(
    strategy: str, cls: SkewClassification | None = None, n_nodes: int | None = None
) -> RoutePlan:
    """Build the plan for a CLI-level strategy name (``auto`` excluded)."""
    if strategy == "grahj":
        return plan_grahj(cls)
    if strategy == "prpd":
        return plan_prpd(cls, "local")
    if strategy == "prpd-u":
        return plan_prpd(cls, "u_random")
    if strategy == "prpd-sfr":
        return plan_prpd(cls, "sfr", n_nodes)
    if strategy == "pnr":
        return plan_pnr(cls)
    raise ValueError(f"unknown strategy {strategy!r}")
