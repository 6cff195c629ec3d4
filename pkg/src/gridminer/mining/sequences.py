"""Level-wise frequent-sequence mining with count distribution.

Sequences are ordered lists of single non-negative integer items. A pattern
is supported by a data sequence when its items occur there in order, not
necessarily contiguously. Each level's candidates are counted per partition
(one sub-task per partition) and the partial counts are summed.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from gridminer.errors import InputError, TaskError
from gridminer.topology import SEQUENCE, DataPartition
from gridminer.work import Mapper, Rounds, Work, drive

Items = tuple[int, ...]

C_COUNT = 1


@dataclass(frozen=True)
class Pattern:
    items: Items
    support: Fraction
    mode: str = "exact"
    epsilon: float | None = None

    def line(self) -> str:
        text = " ".join(map(str, self.items)) + "\t" + str(self.support)
        if self.epsilon is not None:
            text += f"\teps={self.epsilon:.6f}"
        return text


@dataclass
class SupportTable:
    counts: dict[Items, int] = field(default_factory=dict)
    total: int = 0

    @classmethod
    def merge(cls, tables: Iterable[SupportTable]) -> SupportTable:
        out = cls()
        for t in tables:
            out.total += t.total
            for key, n in t.counts.items():
                out.counts[key] = out.counts.get(key, 0) + n
        return out

    def support(self, items: Items) -> Fraction:
        return Fraction(self.counts.get(items, 0), self.total)


def is_subsequence(pattern: Sequence[int], seq: Sequence[int]) -> bool:
    it = iter(seq)
    return all(x in it for x in pattern)


def _sequences(part: DataPartition) -> list[Items]:
    for rec in part.records:
        if rec.kind != SEQUENCE:
            raise TaskError(f"partition {part.id} holds {rec.kind} records, not sequences")
    return [rec.body for rec in part.records]


def count_items(part: DataPartition) -> SupportTable:
    """Per-item count of local sequences containing the item (level-1 pass)."""
    counts: dict[Items, int] = {}
    seqs = _sequences(part)
    for s in seqs:
        for x in set(s):
            counts[(x,)] = counts.get((x,), 0) + 1
    return SupportTable(counts, len(seqs))


def local_support(candidates: Sequence[Items], part: DataPartition) -> SupportTable:
    seqs = _sequences(part)
    counts = {c: sum(1 for s in seqs if is_subsequence(c, s)) for c in candidates}
    return SupportTable(counts, len(seqs))


def support_cost(n_candidates: int, n_records: int, c_count: int = C_COUNT) -> int:
    return max(1, c_count * n_candidates * n_records)


def gsp_step(frequent_k: Sequence[Items], k: int) -> list[Items]:
    """Join frequent length-k sequences into length-(k+1) candidates and prune.

    ``a`` joins ``b`` when ``a`` minus its first item equals ``b`` minus its
    last; the candidate is ``a + b[-1]``. A candidate survives only if every
    delete-one subsequence is in ``frequent_k``.
    """
    if any(len(s) != k for s in frequent_k):
        raise ValueError(f"all inputs must have length {k}")
    frequent = set(frequent_k)
    by_head: dict[Items, list[Items]] = defaultdict(list)
    for b in frequent:
        by_head[b[:-1]].append(b)
    out = set()
    for a in frequent:
        for b in by_head.get(a[1:], ()):
            cand = a + (b[-1],)
            if all(cand[:i] + cand[i + 1:] in frequent for i in range(k + 1)):
                out.add(cand)
    return sorted(out)


def _check_minsup(minsup) -> Fraction:
    minsup = Fraction(str(minsup)) if isinstance(minsup, float) else Fraction(minsup)
    if not 0 < minsup <= 1:
        raise InputError(f"minsup must be in (0, 1], got {minsup}")
    return minsup


def _level_wise(
    partitions: Sequence[DataPartition],
    keep,
    c_count: int,
) -> Rounds:
    """Shared level-wise loop; ``keep(count, total)`` decides frequency."""
    table = yield [
        Work(p.id, support_cost(1, len(p.records), c_count), count_items, (p,))
        for p in partitions
    ]
    total = table.total
    found: dict[Items, int] = {}
    level = sorted(k for k, n in table.counts.items() if keep(n, total))
    found.update((k, table.counts[k]) for k in level)
    k = 1
    while level:
        candidates = gsp_step(level, k)
        if not candidates:
            break
        table = yield [
            Work(p.id, support_cost(len(candidates), len(p.records), c_count),
                 local_support, (candidates, p))
            for p in partitions
        ]
        level = [c for c in candidates if keep(table.counts[c], total)]
        found.update((c, table.counts[c]) for c in level)
        k += 1
    return found, total


def _sort_key(p: Pattern):
    return (len(p.items), p.items)


def exact_rounds(partitions: Sequence[DataPartition], minsup, c_count: int = C_COUNT) -> Rounds:
    minsup = _check_minsup(minsup)
    if not any(p.records for p in partitions):
        raise InputError("mining needs at least one non-empty sequence partition")
    found, total = yield from _level_wise(
        partitions, lambda n, t: Fraction(n, t) >= minsup, c_count
    )
    return sorted((Pattern(k, Fraction(n, total)) for k, n in found.items()), key=_sort_key)


def mine_frequent(
    partitions: Sequence[DataPartition], minsup, c_count: int = C_COUNT, mapper: Mapper = map
) -> list[Pattern]:
    """All patterns with support >= ``minsup``, sorted by (length, items)."""
    return drive(exact_rounds(partitions, minsup, c_count), mapper)


def hoeffding_epsilon(m: int, delta: float) -> float:
    return math.sqrt(math.log(2 / delta) / (2 * m))


def sample_partition(part: DataPartition, rate: Fraction, seed: int) -> DataPartition:
    """Seeded draw of ceil(rate * n) records without replacement, original order kept."""
    n = len(part.records)
    size = math.ceil(rate * n)
    rng = np.random.default_rng([seed, part.id])
    picks = sorted(rng.choice(n, size=size, replace=False).tolist()) if size else []
    return DataPartition(part.id, part.host_gridlet, [part.records[i] for i in picks], part.schema_id)


def probabilistic_rounds(
    partitions: Sequence[DataPartition],
    minsup,
    sample_rate,
    delta: float,
    seed: int,
    c_count: int = C_COUNT,
) -> Rounds:
    minsup = _check_minsup(minsup)
    rate = Fraction(str(sample_rate)) if isinstance(sample_rate, float) else Fraction(sample_rate)
    if not 0 < rate <= 1:
        raise InputError(f"sample rate must be in (0, 1], got {sample_rate}")
    if not 0 < delta < 1:
        raise InputError(f"delta must be in (0, 1), got {delta}")
    samples = [sample_partition(p, rate, seed) for p in partitions]
    m = sum(len(s.records) for s in samples)
    if m == 0:
        raise InputError("sample is empty on every partition")
    eps = hoeffding_epsilon(m, delta)
    threshold = float(minsup) - eps
    # count > 0 keeps unseen candidates out when minsup - eps <= 0
    found, total = yield from _level_wise(
        samples, lambda n, t: n > 0 and n / t >= threshold, c_count
    )
    return sorted(
        (Pattern(k, Fraction(n, total), "estimated", eps) for k, n in found.items()),
        key=_sort_key,
    )


def mine_frequent_prob(
    partitions: Sequence[DataPartition],
    minsup,
    sample_rate,
    delta: float,
    seed: int,
    c_count: int = C_COUNT,
    mapper: Mapper = map,
) -> list[Pattern]:
    """Sample-based mining: keep patterns whose sample support is within the
    Hoeffding bound of ``minsup``. Every pattern carries that bound as ``epsilon``."""
    return drive(probabilistic_rounds(partitions, minsup, sample_rate, delta, seed, c_count), mapper)
