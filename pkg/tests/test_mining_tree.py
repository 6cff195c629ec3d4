import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from gridminer.errors import InputError
from gridminer.mining.tree import (
    Leaf,
    Split,
    Threshold,
    ValueSet,
    attribute_kind,
    best_split,
    build_tree,
    depth_of,
    gini,
    render,
    route,
)
from gridminer.topology import DataPartition, partition_dataset

from conftest import tuple_records
from oracles import oracle_tree


@pytest.mark.parametrize("counts, value", [((4, 0), 0), ((2, 2), Fraction(1, 2)), ((3, 1), Fraction(3, 8))])
def test_gini_units(counts, value):
    assert gini(counts) == value


def test_gini_all_zero():
    with pytest.raises(ValueError):
        gini([0, 0])


@given(st.lists(st.integers(0, 50), min_size=1, max_size=5).filter(lambda c: sum(c) > 0))
def test_gini_bounds(counts):
    k = len(counts)
    g = gini(counts)
    assert 0 <= g <= 1 - Fraction(1, k)
    assert (g == 0) == (sum(1 for c in counts if c) == 1)


def test_perfect_numeric_separator():
    recs = tuple_records([{"x": 1, "y": "A"}, {"x": 2, "y": "B"}])
    assert best_split(recs, "x", "y") == (Threshold(1.5), 0)


def test_constant_attribute_no_split():
    recs = tuple_records([{"x": 3, "y": "A"}, {"x": 3, "y": "B"}])
    assert best_split(recs, "x", "y") is None


def test_categorical_subset_tie_prefers_smaller_tuple():
    recs = tuple_records([{"c": "a", "y": "P"}, {"c": "b", "y": "N"}])
    test, g = best_split(recs, "c", "y")
    assert test == ValueSet(("a",)) and g == 0


def test_categorical_one_vs_rest_above_five_values():
    rows = [{"c": v, "y": "P" if v == "q" else "N"} for v in "abcdefq"]
    test, g = best_split(tuple_records(rows), "c", "y")
    assert test == ValueSet(("q",)) and g == 0


def exhaustive_best(rows, attrs, target):
    best = None
    for attr in attrs:
        vals = sorted({r[attr] for r in rows})
        for a, b in zip(vals, vals[1:]):
            thr = (a + b) / 2
            left = Counter(r[target] for r in rows if r[attr] <= thr)
            right = Counter(r[target] for r in rows if r[attr] > thr)
            n = len(rows)
            g = sum(Fraction(sum(s.values()), n) * (1 - sum(Fraction(c, sum(s.values())) ** 2 for c in s.values()))
                    for s in (left, right))
            if best is None or g < best[0]:
                best = (g, attr, thr)
    return best


def test_best_split_matches_exhaustive_search(rng):
    for _ in range(20):
        rows = [{"u": rng.randint(0, 9), "v": rng.randint(0, 9), "y": rng.choice("AB")} for _ in range(10)]
        if len({r["y"] for r in rows}) < 2:
            continue
        recs = tuple_records(rows)
        results = [(best_split(recs, a, "y"), a) for a in ("u", "v")]
        got = min(((r[1], i, a, r[0].value) for i, (r, a) in enumerate(results) if r))
        want = exhaustive_best(rows, ["u", "v"], "y")
        assert (got[0], got[2], got[3]) == want


def test_single_class_is_one_leaf():
    recs = tuple_records([{"x": i, "y": "A"} for i in range(5)])
    assert build_tree([DataPartition(0, None, recs)], "y", 4) == Leaf("A", 5)


def test_max_depth_zero_majority_leaf():
    recs = tuple_records([{"x": i, "y": y} for i, y in enumerate("ABBA")])
    assert build_tree([DataPartition(0, None, recs)], "y", 0) == Leaf("A", 4)


def test_xor_depth_two_perfect():
    rows = [{"a": a, "b": b, "y": str(a ^ b)} for a in (0, 1) for b in (0, 1)]
    recs = tuple_records(rows)
    root = build_tree([DataPartition(0, None, recs)], "y", max_depth=2, min_records=1)
    assert depth_of(root) == 2
    assert root == oracle_tree(rows, "y", [("a", "numeric"), ("b", "numeric")], 2, 1)
    splits = {}

    def collect(node, path=()):
        if isinstance(node, Split):
            splits[path] = (node.attribute, node.test)
            collect(node.left, path + (0,))
            collect(node.right, path + (1,))

    collect(root)
    leaves = {}

    def leaf_at(node, path=()):
        if isinstance(node, Leaf):
            leaves[path] = node.label
        else:
            leaf_at(node.left, path + (0,))
            leaf_at(node.right, path + (1,))

    leaf_at(root)
    assert all(leaves[route(r, splits)] == r["y"] for r in rows)


def test_min_records_stops_split():
    recs = tuple_records([{"x": i, "y": y} for i, y in enumerate("AB")])
    assert build_tree([DataPartition(0, None, recs)], "y", 3, min_records=3) == Leaf("A", 2)


def test_empty_and_missing_target():
    with pytest.raises(InputError):
        build_tree([DataPartition(0, None, [])], "y", 2)
    with pytest.raises(InputError):
        build_tree([DataPartition(0, None, tuple_records([{"x": 1}]))], "y", 2)


def test_attribute_kind():
    assert attribute_kind([1, 2.5]) == "numeric"
    assert attribute_kind([1, "a"]) == "categorical"


def test_render():
    tree = Split("x", Threshold(1.5), Leaf("A", 1), Split("c", ValueSet(("p", "q")), Leaf("B", 2), Leaf("A", 1)))
    assert render(tree) == [
        "x <= 1.5",
        "  -> A (n=1)",
        "  c in {p, q}",
        "    -> B (n=2)",
        "    -> A (n=1)",
    ]


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(1, 5))
def test_partition_invariance(rnd, p):
    rows = [{"u": rnd.randint(0, 5), "c": rnd.choice("pqr"), "y": rnd.choice("AB")} for _ in range(rnd.randint(1, 30))]
    recs = tuple_records(rows)
    whole = build_tree([DataPartition(0, None, recs)], "y", 3, 2)
    assert build_tree(partition_dataset(recs, p), "y", 3, 2) == whole
