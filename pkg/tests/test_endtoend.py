"""Whole-pipeline checks: any plan, any placement, same join result."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewjoin.cluster import ClusterSpec, Router
from skewjoin.datagen import Row
from skewjoin.harness import execute_plan, oracle_join, same_result
from skewjoin.stats import build_frequency, classify
from skewjoin.strategies import Action, plan_for

from conftest import make_shares

ALL_STRATEGIES = ("grahj", "prpd", "prpd-u", "prpd-sfr", "pnr")


def split_round_robin(keys, n):
    return [keys[i::n] for i in range(n)]


@given(
    r_keys=st.lists(st.integers(0, 8), min_size=0, max_size=80),
    s_keys=st.lists(st.integers(0, 8), min_size=0, max_size=50),
    n=st.integers(1, 7),
    p=st.sampled_from([0.05, 0.2, 0.5]),
    offset=st.integers(0, 3),
    strategy=st.sampled_from(ALL_STRATEGIES),
    merge_mode=st.sampled_from(["gather", "local"]),
)
@settings(max_examples=120, deadline=None)
def test_any_plan_matches_all_pairs_oracle(
    r_keys, s_keys, n, p, offset, strategy, merge_mode
):
    r_ds, r_shares = make_shares(split_round_robin(r_keys, n))
    s_ds, s_shares = make_shares(split_round_robin(s_keys, n))
    freq_r = build_frequency(r_shares)
    freq_s = build_frequency(s_shares)
    cls = classify(freq_r, freq_s, p)
    spec = ClusterSpec(n_nodes=n, gateway=n - 1, hash_offset=offset)
    plan = plan_for(strategy, cls, n)
    joined, traffic, _ = execute_plan(r_shares, s_shares, plan, cls, spec, merge_mode)
    assert same_result(joined, oracle_join(r_ds, s_ds))
    if merge_mode == "local" or n == 1:
        assert traffic == 0


@pytest.mark.parametrize("n", [1, 2, 4, 6, 9, 12])
def test_sfr_fragments_meet_exactly_once(n):
    from skewjoin.strategies import sfr_grid

    grid = sfr_grid(n)
    spec = ClusterSpec(n_nodes=n)
    router = Router(spec, sfr_grid=grid)
    for src_r in range(n):
        rows = set(router.route(Row(1, 0, b""), src_r, Action.SFR_ROW))
        for src_s in range(n):
            cols = set(router.route(Row(1, 1, b""), src_s, Action.SFR_COL))
            assert len(rows & cols) == 1


def test_duplicate_free_under_mixed_skew():
    rng = np.random.default_rng(42)
    r_keys = rng.integers(0, 6, 400).tolist()
    s_keys = rng.integers(0, 6, 200).tolist()
    r_ds, r_shares = make_shares(split_round_robin(r_keys, 5))
    s_ds, s_shares = make_shares(split_round_robin(s_keys, 5))
    freq_r = build_frequency(r_shares)
    freq_s = build_frequency(s_shares)
    cls = classify(freq_r, freq_s, 0.1)
    assert cls.skewed  # workload actually exercises the skew paths
    for strategy in ALL_STRATEGIES:
        plan = plan_for(strategy, cls, 5)
        joined, _, _ = execute_plan(
            r_shares, s_shares, plan, cls, ClusterSpec(5), "local"
        )
        enc = joined.r_ids * 1000 + joined.s_ids
        assert len(np.unique(enc)) == len(enc)
