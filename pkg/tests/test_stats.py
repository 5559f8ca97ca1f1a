import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewjoin.datagen import ZipfSpec, gen_zipf, PlacementSpec, place
from skewjoin.stats import (
    KeyClass,
    build_frequency,
    classify,
    selectivity,
    skewed_keys,
)

from conftest import freq_of, make_shares


class TestBuildFrequency:
    def test_single_node(self):
        _, shares = make_shares([[2, 2, 3]])
        freq = build_frequency(shares)
        assert freq.counts == {2: 2, 3: 1}
        assert freq.table_size == 3

    def test_per_node_counts(self):
        _, shares = make_shares([[5], [5]])
        freq = build_frequency(shares)
        assert freq.counts == {5: 2}
        assert freq.node_count(0, 5) == 1
        assert freq.node_count(1, 5) == 1
        assert freq.node_count(0, 99) == 0

    def test_zipf_counts_flow_through(self):
        ds = gen_zipf(ZipfSpec(n_distinct=2, z=1.0, rows=300, seed=5))
        shares = place(ds, PlacementSpec("balanced", 3))
        freq = build_frequency(shares)
        assert freq.counts == {1: 200, 2: 100}
        assert sum(freq.node_count(i, 1) for i in range(3)) == 200

    def test_rejects_empty_share_list(self):
        with pytest.raises(ValueError):
            build_frequency([])

    def test_empty_tuple_lists_allowed(self):
        _, shares = make_shares([[], []])
        freq = build_frequency(shares)
        assert freq.table_size == 0
        assert freq.counts == {}


class TestClassify:
    def test_partial_r_membership(self):
        freq_r = freq_of({7: 25, 1: 75})
        freq_s = freq_of({1: 100})
        cls = classify(freq_r, freq_s, 0.2)
        assert 7 in cls.rho_r
        assert 7 in cls.partial_r
        assert cls.key_class(7) is KeyClass.PARTIAL_R

    def test_build_side_only_skew(self):
        # probe at 3%, build at 50%, threshold 5%: hot key skewed in S only
        rest_r = {k: 48 if k < 12 else 49 for k in range(2, 22)}
        freq_r = freq_of({1: 30, **rest_r}, size=1000)
        freq_s = freq_of({1: 500, **{k: 25 for k in range(2, 22)}}, size=1000)
        cls = classify(freq_r, freq_s, 0.05)
        assert cls.partial_s == frozenset({1})
        assert cls.partial_r == frozenset()
        assert cls.complete_left == cls.complete_right == frozenset()

    def test_complete_left_dominance(self):
        freq_r = freq_of({9: 60, 1: 40})
        freq_s = freq_of({9: 30, 1: 70})
        cls = classify(freq_r, freq_s, 0.2)
        assert 9 in cls.complete_left
        assert cls.key_class(9) is KeyClass.COMPLETE_LEFT

    def test_tie_goes_right(self):
        freq_r = freq_of({4: 50, 1: 50})
        freq_s = freq_of({4: 50, 1: 50})
        cls = classify(freq_r, freq_s, 0.3)
        assert 4 in cls.complete_right
        assert 4 not in cls.complete_left

    def test_threshold_is_inclusive(self):
        freq_r = freq_of({3: 20, 1: 80})
        freq_s = freq_of({1: 100})
        cls = classify(freq_r, freq_s, 0.2)
        assert 3 in cls.rho_r

    def test_float_threshold_slack(self):
        # 5% of 19500 rows is exactly 975, despite 0.05 * 19500 > 975.0
        counts = {1: 975, 2: 18525}
        assert 1 in skewed_keys(counts, 19500, 0.05)

    def test_rejects_bad_p(self):
        freq = freq_of({1: 10})
        for p in (0.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                classify(freq, freq, p)

    @given(
        counts_r=st.dictionaries(st.integers(0, 15), st.integers(1, 50), max_size=12),
        counts_s=st.dictionaries(st.integers(0, 15), st.integers(1, 50), max_size=12),
        p=st.floats(0.01, 1.0, allow_nan=False),
    )
    @settings(max_examples=100, deadline=None)
    def test_partition_invariants(self, counts_r, counts_s, p):
        cls = classify(freq_of(counts_r), freq_of(counts_s), p)
        groups = [cls.partial_r, cls.partial_s, cls.complete_left, cls.complete_right]
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                assert not groups[i] & groups[j]
        union = frozenset().union(*groups)
        assert union == cls.rho_r | cls.rho_s
        assert cls.complete_left | cls.complete_right == cls.rho_r & cls.rho_s

    @given(
        counts_r=st.dictionaries(st.integers(0, 15), st.integers(1, 50), max_size=12),
        counts_s=st.dictionaries(st.integers(0, 15), st.integers(1, 50), max_size=12),
        p_low=st.floats(0.01, 0.5),
        p_bump=st.floats(0.0, 0.5),
    )
    @settings(max_examples=60, deadline=None)
    def test_raising_p_shrinks_sets(self, counts_r, counts_s, p_low, p_bump):
        fr, fs = freq_of(counts_r), freq_of(counts_s)
        low = classify(fr, fs, p_low)
        high = classify(fr, fs, min(1.0, p_low + p_bump))
        assert high.rho_r <= low.rho_r
        assert high.rho_s <= low.rho_s
        assert high.skewed <= low.skewed

    def test_pure_function_of_inputs(self):
        fr = freq_of({1: 30, 2: 70})
        fs = freq_of({1: 60, 2: 40})
        assert classify(fr, fs, 0.25) == classify(fr, fs, 0.25)


class TestSelectivity:
    def test_basic_fraction(self):
        assert selectivity(freq_of({4: 25, 1: 75}), 4) == 0.25

    def test_absent_key_is_zero(self):
        assert selectivity(freq_of({1: 10}), 42) == 0.0

    def test_zipf_rank1(self):
        ds = gen_zipf(ZipfSpec(n_distinct=2, z=1.0, rows=300, seed=1))
        shares = place(ds, PlacementSpec("balanced", 2))
        freq = build_frequency(shares)
        assert selectivity(freq, 1) == pytest.approx(2 / 3)

    def test_empty_table_rejected(self):
        with pytest.raises(ValueError):
            selectivity(freq_of({}), 1)


def test_class_map_covers_all_skew_classes():
    freq_r = freq_of({1: 40, 2: 30, 3: 5, 4: 25})
    freq_s = freq_of({1: 20, 3: 40, 4: 30, 5: 10})
    cls = classify(freq_r, freq_s, 0.2)
    cmap = cls.class_map()
    assert cmap[1] is KeyClass.COMPLETE_LEFT
    assert cmap[4] is KeyClass.COMPLETE_RIGHT
    assert cmap[2] is KeyClass.PARTIAL_R
    assert cmap[3] is KeyClass.PARTIAL_S
    assert 5 not in cmap  # 10 < 0.2 * 100 in S
    assert cls.key_class(99) is KeyClass.NON_SKEWED
