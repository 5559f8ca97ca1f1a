import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewjoin.datagen import (
    DatasetFormatError,
    PlacementSpec,
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

from conftest import make_dataset


def key_counts(ds):
    return Counter(t.key for t in ds.tuples)


class TestHarmonic:
    def test_matches_plain_summation(self):
        # independent reference: term-by-term float sum
        assert harmonic(5, 1.0) == pytest.approx(
            math.fsum(1 / i for i in range(1, 6)), abs=1e-12
        )
        assert harmonic(1, 2.7) == 1.0

    def test_z_zero_gives_n(self):
        assert harmonic(17, 0.0) == pytest.approx(17.0)


class TestZipfCounts:
    def test_single_key_takes_everything(self):
        assert list(zipf_counts(1, 1.2, 100)) == [100]

    def test_two_keys_z1(self):
        # H(2,1) = 1.5, shares 2/3 and 1/3 of 300 rows
        assert list(zipf_counts(2, 1.0, 300)) == [200, 100]

    def test_uniform_when_z_zero(self):
        assert list(zipf_counts(4, 0.0, 100)) == [25, 25, 25, 25]

    def test_leftover_goes_to_low_ranks_on_ties(self):
        assert list(zipf_counts(4, 0.0, 102)) == [26, 26, 25, 25]

    @given(
        n=st.integers(1, 200),
        z=st.floats(0.0, 3.0, allow_nan=False),
        rows=st.integers(0, 5000),
    )
    @settings(max_examples=80, deadline=None)
    def test_sum_exact_and_nonincreasing(self, n, z, rows):
        counts = zipf_counts(n, z, rows)
        assert counts.sum() == rows
        assert all(counts[i] >= counts[i + 1] for i in range(n - 1))
        assert (counts >= 0).all()


class TestGenZipf:
    def test_rejects_zero_distinct(self):
        with pytest.raises(ValueError):
            gen_zipf(ZipfSpec(n_distinct=0, z=1.0, rows=10))

    def test_counts_match_contract(self):
        ds = gen_zipf(ZipfSpec(n_distinct=2, z=1.0, rows=300, seed=3))
        assert key_counts(ds) == {1: 200, 2: 100}

    def test_seed_changes_order_not_counts(self):
        a = gen_zipf(ZipfSpec(n_distinct=8, z=1.0, rows=200, seed=1))
        b = gen_zipf(ZipfSpec(n_distinct=8, z=1.0, rows=200, seed=2))
        assert key_counts(a) == key_counts(b)
        assert [t.key for t in a.tuples] != [t.key for t in b.tuples]

    def test_deterministic_for_fixed_seed(self):
        a = gen_zipf(ZipfSpec(n_distinct=8, z=1.3, rows=500, seed=9))
        b = gen_zipf(ZipfSpec(n_distinct=8, z=1.3, rows=500, seed=9))
        assert a.tuples == b.tuples

    def test_payload_width_respected(self):
        ds = gen_zipf(ZipfSpec(n_distinct=3, z=0.5, rows=10, seed=0), payload_width=5)
        assert all(len(t.payload) == 5 for t in ds.tuples)
        assert ds.payload_width == 5


class TestGenSingleSkew:
    def test_half_of_rows_carry_hot_key(self):
        ds = gen_single_skew(
            SingleSkewSpec(skew_key=7, skew_fraction=0.5, rows=200, distinct_rest=10)
        )
        assert key_counts(ds)[7] == 100

    def test_zero_fraction_uniform_rest(self):
        ds = gen_single_skew(
            SingleSkewSpec(skew_key=7, skew_fraction=0.0, rows=100, distinct_rest=10)
        )
        counts = key_counts(ds)
        assert 7 not in counts
        assert sorted(counts.values()) == [10] * 10

    def test_full_fraction(self):
        ds = gen_single_skew(
            SingleSkewSpec(skew_key=3, skew_fraction=1.0, rows=7, distinct_rest=0)
        )
        assert key_counts(ds) == {3: 7}

    def test_rest_keys_skip_hot_key(self):
        ds = gen_single_skew(
            SingleSkewSpec(skew_key=2, skew_fraction=0.5, rows=40, distinct_rest=3)
        )
        rest = set(key_counts(ds)) - {2}
        assert rest == {1, 3, 4}

    def test_rejects_no_rest_keys(self):
        with pytest.raises(ValueError):
            gen_single_skew(
                SingleSkewSpec(skew_key=1, skew_fraction=0.5, rows=10, distinct_rest=0)
            )


class TestPlace:
    def test_balanced_even_split(self):
        ds = make_dataset(list(range(100)))
        shares = place(ds, PlacementSpec("balanced", 4))
        assert [len(s.tuples) for s in shares] == [25, 25, 25, 25]

    def test_hot_pins_skew_keys(self):
        ds = make_dataset([1, 2, 1, 3, 1, 4, 1])
        shares = place(ds, PlacementSpec("hot", 3, hot_node=1), frozenset({1}))
        assert all(t.key == 1 for t in shares[1].tuples if t.key == 1)
        for s in shares:
            if s.node != 1:
                assert all(t.key != 1 for t in s.tuples)
        # non-skew rows stay balanced
        cold = [sum(1 for t in s.tuples if t.key != 1) for s in shares]
        assert max(cold) - min(cold) <= 1

    def test_single_node_gets_everything(self):
        ds = make_dataset([5, 6, 7])
        for mode in ("balanced", "random"):
            shares = place(ds, PlacementSpec(mode, 1))
            assert len(shares) == 1 and len(shares[0].tuples) == 3

    def test_hot_node_out_of_range_rejected(self):
        ds = make_dataset([1])
        with pytest.raises(ValueError):
            place(ds, PlacementSpec("hot", 2, hot_node=2), frozenset({1}))

    @given(
        keys=st.lists(st.integers(0, 20), max_size=200),
        n=st.integers(1, 6),
        mode=st.sampled_from(["balanced", "hot", "random"]),
    )
    @settings(max_examples=60, deadline=None)
    def test_multiset_preserved(self, keys, n, mode):
        ds = make_dataset(keys)
        spec = PlacementSpec(mode, n, hot_node=0 if mode == "hot" else None, seed=4)
        shares = place(ds, spec, frozenset({1, 2}))
        scattered = Counter(t.tid for s in shares for t in s.tuples)
        assert scattered == Counter(t.tid for t in ds.tuples)


class TestFileFormat:
    def test_roundtrip(self, tmp_path):
        ds = gen_zipf(ZipfSpec(n_distinct=5, z=1.1, rows=64, seed=2), payload_width=3)
        path = tmp_path / "t.ds"
        save_dataset(ds, str(path))
        back = load_dataset(str(path))
        assert back.payload_width == 3
        assert back.tuples == ds.tuples

    def test_identical_specs_identical_bytes(self, tmp_path):
        spec = ZipfSpec(n_distinct=6, z=0.9, rows=128, seed=11)
        p1, p2 = tmp_path / "a.ds", tmp_path / "b.ds"
        save_dataset(gen_zipf(spec), str(p1))
        save_dataset(gen_zipf(spec), str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_layout(self, tmp_path):
        ds = make_dataset([-1], payload_width=0)
        path = tmp_path / "h.ds"
        save_dataset(ds, str(path))
        blob = path.read_bytes()
        assert blob[:4] == b"SKJN"
        assert int.from_bytes(blob[4:8], "little") == 1
        assert int.from_bytes(blob[8:16], "little") == 1
        assert int.from_bytes(blob[16:20], "little") == 0
        assert int.from_bytes(blob[20:28], "little", signed=True) == -1

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.ds"
        path.write_bytes(b"NOPE" + bytes(24))
        with pytest.raises(DatasetFormatError):
            load_dataset(str(path))

    def test_truncated_rejected(self, tmp_path):
        ds = make_dataset([1, 2, 3], payload_width=4)
        path = tmp_path / "t.ds"
        save_dataset(ds, str(path))
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(DatasetFormatError):
            load_dataset(str(path))

    def test_csv_export(self, tmp_path):
        ds = make_dataset([9, 8, 9])
        path = tmp_path / "k.csv"
        export_keys_csv(ds, str(path))
        assert path.read_text().splitlines() == ["key", "9", "8", "9"]


def test_key_array_matches_tuples():
    ds = make_dataset([4, 5, 6])
    assert np.array_equal(ds.key_array(), np.array([4, 5, 6]))
