from collections import Counter

import pytest
from hypothesis import given, strategies as st

from gridminer.errors import InputError
from gridminer.topology import (
    TUPLE,
    load_topology,
    parse_sequences,
    parse_topology,
    partition_dataset,
    read_trees,
    read_tuples,
)

from conftest import seq_records


def test_load_two_gridlets_one_client(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"gridlets":[{"id":0,"cpu_rate":4,"latency":2},{"id":1,"cpu_rate":1}],'
                   '"clients":[{"id":100,"latency":1}]}')
    grid = load_topology(cfg)
    assert grid.entity_count() == 4
    assert grid.gridlet(1).latency == 0
    assert grid.client(100).latency == 1


def test_duplicate_gridlet_id_named():
    with pytest.raises(InputError, match="duplicate id 3"):
        parse_topology('{"gridlets":[{"id":3,"cpu_rate":1},{"id":3,"cpu_rate":2}]}')


def test_client_id_clashing_with_gridlet():
    with pytest.raises(InputError, match=r"clients\[0\]\.id: duplicate id 0"):
        parse_topology('{"gridlets":[{"id":0,"cpu_rate":1}],"clients":[{"id":0}]}')


@pytest.mark.parametrize("text, match", [
    ('{"gridlets":[{"id":0,"cpu_rate":0}]}', r"gridlets\[0\]\.cpu_rate: must be >= 1"),
    ('{"gridlets":[{"id":0}]}', r"cpu_rate: missing"),
    ('{"gridlets":[{"id":"a","cpu_rate":1}]}', r"expected integer"),
    ('{"gridlets":[\n{"id":0,,}]}', r"<config>:2:"),
])
def test_malformed_configs(text, match):
    with pytest.raises(InputError, match=match):
        parse_topology(text)


def test_zero_gridlets_is_valid():
    grid = parse_topology('{"clients":[{"id":1}]}')
    assert grid.gridlets == {}
    assert grid.entity_count() == 2


def test_round_robin_five_into_two():
    parts = partition_dataset(seq_records([(i,) for i in range(5)]), 2)
    assert [len(p.records) for p in parts] == [3, 2]
    assert [r.record_id for r in parts[0].records] == [0, 2, 4]


def test_single_partition_is_identity():
    recs = seq_records([(1,), (2, 3)])
    assert partition_dataset(recs, 1)[0].records == recs


def test_zero_partitions_rejected():
    with pytest.raises(InputError):
        partition_dataset([], 0)


def test_hash_on_id():
    parts = partition_dataset(seq_records([(1,)] * 7), 3, "hash_on_id")
    for p in parts:
        assert all(r.record_id % 3 == p.id for r in p.records)


def test_hosts_assigned_round_robin():
    parts = partition_dataset(seq_records([(1,)] * 4), 4, hosts=[5, 9])
    assert [p.host_gridlet for p in parts] == [5, 9, 5, 9]


@given(
    st.lists(st.lists(st.integers(0, 5), min_size=1, max_size=4), max_size=100),
    st.integers(1, 12),
    st.sampled_from(["round_robin", "hash_on_id"]),
)
def test_partitioning_is_lossless(seqs, p, policy):
    recs = seq_records(seqs)
    parts = partition_dataset(recs, p, policy)
    flat = [r for part in parts for r in part.records]
    assert Counter(flat) == Counter(recs)
    if policy == "round_robin":
        sizes = [len(part.records) for part in parts]
        assert max(sizes) - min(sizes) <= 1


def test_parse_sequences_reports_line():
    with pytest.raises(InputError, match=":2:"):
        parse_sequences(["1 2", "1 x"])
    assert [r.body for r in parse_sequences(["3 1", "", "2"])] == [(3, 1), (2,)]


def test_read_tuples_column_types(tmp_path):
    f = tmp_path / "r.csv"
    f.write_text("a,b,c,label\n1,x,2.5,yes\n2,y,3,no\n")
    names, recs = read_tuples(f, "label")
    assert names == ["a", "b", "c"]
    assert recs[0].kind == TUPLE
    assert recs[0].body == {"a": 1, "b": "x", "c": 2.5, "label": "yes"}


def test_read_tuples_missing_target(tmp_path):
    f = tmp_path / "r.csv"
    f.write_text("a,b\n1,2\n")
    with pytest.raises(InputError, match="target column"):
        read_tuples(f, "label")


def test_read_trees(tmp_path):
    f = tmp_path / "t.json"
    f.write_text('{"schema":"A","records":[{"id":4,"tree":{"label":"r","children":[{"label":"c","value":1}]}}]}')
    schema, recs = read_trees(f)
    assert schema == "A"
    assert recs[0].record_id == 4
    assert recs[0].body.children[0].value == 1
