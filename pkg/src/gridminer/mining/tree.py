"""Gini decision trees built breadth-first over partitioned attribute tuples.

Each round covers every open node at one depth. A sub-task routes its
partition's records down the partially built tree and returns, per open
node, class counts and per-attribute value/class histograms (the sorted
attribute lists, compressed to distinct values). Histograms sum exactly
across partitions, so the split chosen from the merged histograms is the
same as on the unpartitioned data.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence, Union

from gridminer.errors import InputError, TaskError
from gridminer.topology import TUPLE, DataPartition, Record
from gridminer.work import Mapper, Rounds, Work, drive

NUMERIC = "numeric"
CATEGORICAL = "categorical"
MAX_SUBSET_VALUES = 5
C_SPLIT = 1

Path = tuple[int, ...]  # 0 = left branch (test true), 1 = right


@dataclass(frozen=True)
class Threshold:
    value: float

    def __call__(self, x) -> bool:
        return x <= self.value

    def describe(self, attr: str) -> str:
        return f"{attr} <= {self.value!r}"


@dataclass(frozen=True)
class ValueSet:
    values: tuple

    def __call__(self, x) -> bool:
        return x in self.values

    def describe(self, attr: str) -> str:
        return f"{attr} in {{{', '.join(map(str, self.values))}}}"


Test = Union[Threshold, ValueSet]


@dataclass(frozen=True)
class Leaf:
    label: str
    count: int


@dataclass(frozen=True)
class Split:
    attribute: str
    test: Test
    left: TreeNode
    right: TreeNode


TreeNode = Union[Leaf, Split]


def gini(class_counts: Iterable[int]) -> Fraction:
    counts = list(class_counts)
    n = sum(counts)
    if n <= 0:
        raise ValueError("gini needs at least one positive count")
    return 1 - sum(Fraction(c, n) ** 2 for c in counts)


def weighted_gini(left: Counter, right: Counter) -> Fraction:
    n_l, n_r = sum(left.values()), sum(right.values())
    n = n_l + n_r
    return Fraction(n_l, n) * gini(left.values()) + Fraction(n_r, n) * gini(right.values())


# -- split search over histograms ---------------------------------------------

Histogram = dict[Any, Counter]  # attribute value -> class counts


def _numeric_split(hist: Histogram) -> tuple[Test, Fraction] | None:
    values = sorted(hist)
    if len(values) < 2:
        return None
    total = Counter()
    for v in values:
        total.update(hist[v])
    left = Counter()
    best = None
    for lo, hi in zip(values, values[1:]):
        left.update(hist[lo])
        score = weighted_gini(left, total - left)
        if best is None or score < best[1]:
            best = (Threshold((lo + hi) / 2), score)
    return best


def _categorical_split(hist: Histogram) -> tuple[Test, Fraction] | None:
    values = sorted(hist)
    if len(values) < 2:
        return None
    if len(values) <= MAX_SUBSET_VALUES:
        subsets = (
            combo for r in range(1, len(values)) for combo in itertools.combinations(values, r)
        )
    else:
        subsets = ((v,) for v in values)
    total = Counter()
    for v in values:
        total.update(hist[v])
    best = None
    for subset in subsets:
        left = Counter()
        for v in subset:
            left.update(hist[v])
        key = (weighted_gini(left, total - left), subset)
        if best is None or key < best:
            best = key
    return ValueSet(best[1]), best[0]


def split_from_histogram(hist: Histogram, kind: str) -> tuple[Test, Fraction] | None:
    """Best test for one attribute, or None if the attribute is constant."""
    return _numeric_split(hist) if kind == NUMERIC else _categorical_split(hist)


def best_split(
    records: Sequence[Record], attribute: str, target: str, kind: str | None = None
) -> tuple[Test, Fraction] | None:
    """Minimum weighted-gini test on ``attribute``; None signals no split."""
    bodies = [r.body for r in records]
    if kind is None:
        kind = attribute_kind(v[attribute] for v in bodies)
    hist: Histogram = {}
    for b in bodies:
        hist.setdefault(b[attribute], Counter())[b[target]] += 1
    return split_from_histogram(hist, kind)


def attribute_kind(values: Iterable[Any]) -> str:
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return CATEGORICAL
    return NUMERIC


# -- distributed rounds -------------------------------------------------------


@dataclass
class NodeStats:
    classes: Counter = field(default_factory=Counter)
    hists: dict[str, Histogram] = field(default_factory=dict)

    def add(self, other: NodeStats) -> None:
        self.classes.update(other.classes)
        for attr, hist in other.hists.items():
            mine = self.hists.setdefault(attr, {})
            for value, counts in hist.items():
                mine.setdefault(value, Counter()).update(counts)


@dataclass
class SplitStats:
    nodes: dict[Path, NodeStats] = field(default_factory=dict)

    @classmethod
    def merge(cls, parts: Iterable[SplitStats]) -> SplitStats:
        out = cls()
        for part in parts:
            for path, stats in part.nodes.items():
                out.nodes.setdefault(path, NodeStats()).add(stats)
        return out


def route(body: dict, splits: dict[Path, tuple[str, Test]]) -> Path:
    path: Path = ()
    while path in splits:
        attr, test = splits[path]
        path += (0 if test(body[attr]) else 1,)
    return path


def node_stats(
    part: DataPartition,
    target: str,
    attributes: Sequence[str],
    splits: dict[Path, tuple[str, Test]],
    open_nodes: frozenset[Path],
) -> SplitStats:
    out = SplitStats()
    for rec in part.records:
        if rec.kind != TUPLE:
            raise TaskError(f"partition {part.id} holds {rec.kind} records, not tuples")
        path = route(rec.body, splits)
        if path not in open_nodes:
            continue
        stats = out.nodes.setdefault(path, NodeStats())
        label = rec.body[target]
        stats.classes[label] += 1
        for attr in attributes:
            stats.hists.setdefault(attr, {}).setdefault(rec.body[attr], Counter())[label] += 1
    return out


def majority(classes: Counter) -> str:
    return min(classes, key=lambda label: (-classes[label], label))


def schema_of(partitions: Sequence[DataPartition], target: str) -> list[tuple[str, str]]:
    """(attribute, kind) pairs in column order, excluding the target."""
    records = [r for p in partitions for r in p.records]
    if not records:
        raise InputError("cannot build a tree from an empty dataset")
    for r in records:
        if r.kind != TUPLE:
            raise InputError(f"record {r.record_id} is a {r.kind} record, not a tuple")
        if target not in r.body:
            raise InputError(f"record {r.record_id} has no target column {target!r}")
    names = [k for k in records[0].body if k != target]
    return [(a, attribute_kind(r.body[a] for r in records)) for a in names]


def tree_rounds(
    partitions: Sequence[DataPartition],
    target: str,
    max_depth: int,
    min_records: int,
    c_split: int = C_SPLIT,
) -> Rounds:
    attributes = schema_of(partitions, target)
    names = [a for a, _ in attributes]
    splits: dict[Path, tuple[str, Test]] = {}
    leaves: dict[Path, Leaf] = {}
    open_nodes: list[Path] = [()]
    depth = 0
    while open_nodes:
        frontier = frozenset(open_nodes)
        snapshot = dict(splits)
        stats: SplitStats = yield [
            Work(p.id, max(1, c_split * len(p.records) * max(1, len(names))),
                 node_stats, (p, target, names, snapshot, frontier))
            for p in partitions
        ]
        next_open = []
        for path in open_nodes:
            node = stats.nodes[path]
            n = sum(node.classes.values())
            chosen = None
            if len(node.classes) > 1 and depth < max_depth and n >= min_records:
                for attr, kind in attributes:
                    found = split_from_histogram(node.hists[attr], kind)
                    if found and (chosen is None or found[1] < chosen[2]):
                        chosen = (attr, found[0], found[1])
            if chosen is None:
                leaves[path] = Leaf(majority(node.classes), n)
            else:
                splits[path] = (chosen[0], chosen[1])
                next_open += [path + (0,), path + (1,)]
        open_nodes = next_open
        depth += 1
    return assemble((), splits, leaves)


def assemble(path: Path, splits: dict, leaves: dict) -> TreeNode:
    if path in leaves:
        return leaves[path]
    attr, test = splits[path]
    return Split(attr, test, assemble(path + (0,), splits, leaves), assemble(path + (1,), splits, leaves))


def build_tree(
    partitions: Sequence[DataPartition],
    target: str,
    max_depth: int,
    min_records: int = 2,
    c_split: int = C_SPLIT,
    mapper: Mapper = map,
) -> TreeNode:
    return drive(tree_rounds(partitions, target, max_depth, min_records, c_split), mapper)


def render(node: TreeNode, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(node, Leaf):
        return [f"{pad}-> {node.label} (n={node.count})"]
    return (
        [pad + node.test.describe(node.attribute)]
        + render(node.left, indent + 1)
        + render(node.right, indent + 1)
    )


def depth_of(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(depth_of(node.left), depth_of(node.right))
