import json
import os
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from equiroute.RoutingTable import SplitIndices, load_split, load_table, make_split, save_split, save_table
from equiroute.Utils import ConfigError, TableError
from tests.tables import make_table


def random_table(n = 5, k = 3, d = 4, seed = 0):
    rng = np.random.default_rng(seed)
    return make_table(rng.uniform(size=(n, k)), rng.uniform(0.1, 10.0, size=(n, k)), rng.standard_normal((n, d)))


def test_round_trip_is_bit_exact(tmp_path):
    table = random_table()
    save_table(table, tmp_path)
    loaded = load_table(tmp_path)
    assert loaded.equals(table)
    assert loaded.n_queries == 5 and loaded.n_models == 3


def test_round_trip_records_embedding_dim(tmp_path):
    table = random_table(n=3, k=2, d=384)
    save_table(table, tmp_path)
    with open(tmp_path / 'queries.jsonl') as handle:
        first = json.loads(handle.readline())
    assert len(first['embedding']) == 384
    assert load_table(tmp_path).embed_dim == 384


def test_nonpositive_cost_reports_coordinates():
    with pytest.raises(TableError, match=r"nonpositive cost at \(1,0\)"):
        make_table([[1.0, 0.0], [1.0, 0.0]], [[1.0, 2.0], [0.0, 2.0]])


def test_non_finite_perf_rejected():
    with pytest.raises(TableError, match=r"non-finite perf at \(0,1\)"):
        make_table([[1.0, np.nan]], [[1.0, 2.0]])


def test_dimension_mismatch_rejected():
    with pytest.raises(TableError, match="dimension mismatch"):
        from equiroute.RoutingTable import ModelInfo, RoutingTable
        models = [ModelInfo(j, f"m{j}") for j in range(3)]
        RoutingTable(models=models, query_ids=['a', 'b', 'c'], embeddings=np.zeros((3, 2)), perf=np.zeros((3, 2)), cost=np.ones((3, 2)))


def test_single_model_rejected():
    with pytest.raises(TableError):
        make_table([[1.0]], [[1.0]])


def test_missing_file(tmp_path):
    save_table(random_table(), tmp_path)
    os.remove(tmp_path / 'cost.csv')
    with pytest.raises(TableError, match="missing file"):
        load_table(tmp_path)


def test_split_sizes_follow_ratio():
    split = make_split(10, (3, 1, 6), 42)
    assert (len(split.train), len(split.valid), len(split.test)) == (3, 1, 6)


def test_split_is_deterministic():
    assert make_split(100, (3, 1, 6), 42) == make_split(100, (3, 1, 6), 42)
    assert make_split(100, (3, 1, 6), 42) != make_split(100, (3, 1, 6), 43)


def test_split_rejects_zero_part_and_tiny_n():
    with pytest.raises(ConfigError):
        make_split(10, (1, 0, 0), 42)
    with pytest.raises(ConfigError):
        make_split(2, (3, 1, 6), 42)


@given(st.integers(min_value=3, max_value=500), st.integers(min_value=0, max_value=2**32), st.tuples(*[st.integers(min_value=1, max_value=10)] * 3))
@settings(max_examples=100, deadline=None)
def test_split_partitions_all_queries(n, seed, ratio):
    split = make_split(n, ratio, seed)
    parts = [split.train, split.valid, split.test]
    assert sorted(split.train + split.valid + split.test) == list(range(n))
    for part, r in zip(parts, ratio):
        assert abs(len(part) - n * r / sum(ratio)) <= 1


def test_split_round_trip(tmp_path):
    split = make_split(50, (3, 1, 6), 42)
    save_split(split, tmp_path / 'split.json')
    assert load_split(tmp_path / 'split.json', 50) == split


def test_load_split_checks_partition(tmp_path):
    save_split(make_split(50, (3, 1, 6), 42), tmp_path / 'split.json')
    with pytest.raises(TableError):
        load_split(tmp_path / 'split.json', 51)


def test_full_split_uses_every_query_everywhere():
    split = SplitIndices.full(4)
    assert split.train == split.valid == split.test == (0, 1, 2, 3)
