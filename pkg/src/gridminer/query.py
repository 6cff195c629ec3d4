"""Path queries over labeled trees, schema-mapping reformulation and planning.

A query is a root-to-node label path with an optional comparison on the
reached node's value, written ``/dept/emp/age[>30]``. A schema mapping pairs
label paths in one schema with paths in another; a query is rewritten when a
mapped source path is a prefix of its steps.
"""
from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from gridminer.errors import InputError, TaskError
from gridminer.topology import TREE, DataPartition, DataTree, coerce_scalar
from gridminer.work import Rounds, Work

Steps = tuple[str, ...]
Predicate = tuple[str, Any]  # (comparator, literal)

C_SCAN = 1

_QUERY_RE = re.compile(r"^((?:/[^/\[\]]+)+)(?:\[([=<>])(.+)\])?$")


@dataclass(frozen=True)
class PathQuery:
    schema_id: str
    steps: Steps
    predicate: Predicate | None = None

    def __post_init__(self):
        if not self.steps or not all(isinstance(s, str) and s for s in self.steps):
            raise InputError(f"query steps must be non-empty labels: {self.steps!r}")

    def text(self) -> str:
        out = "".join("/" + s for s in self.steps)
        if self.predicate is not None:
            op, lit = self.predicate
            out += f"[{op}{json.dumps(lit) if isinstance(lit, str) and _needs_quotes(lit) else lit}]"
        return out

    def key(self) -> tuple[str, Steps]:
        return (self.schema_id, self.steps)


def _needs_quotes(lit: str) -> bool:
    return not isinstance(coerce_scalar(lit), str)


def _parse_literal(text: str):
    if len(text) >= 2 and text[0] == text[-1] == '"':
        return text[1:-1]
    return coerce_scalar(text)


def parse_query(text: str, schema_id: str) -> PathQuery:
    m = _QUERY_RE.match(text.strip())
    if not m:
        raise InputError(f"malformed path query {text!r}; expected /label(/label)*([=|<|>]literal)?")
    steps = tuple(m.group(1).split("/")[1:])
    predicate = (m.group(2), _parse_literal(m.group(3))) if m.group(2) else None
    return PathQuery(schema_id, steps, predicate)


@dataclass(frozen=True)
class SchemaMapping:
    from_schema: str
    to_schema: str
    pairs: tuple[tuple[Steps, Steps], ...]

    def __post_init__(self):
        if self.from_schema == self.to_schema:
            raise InputError(f"mapping from {self.from_schema!r} to itself")
        sources = [s for s, _ in self.pairs]
        if len(set(sources)) != len(sources):
            raise InputError(f"mapping {self.from_schema}->{self.to_schema} repeats a source path")
        for s, t in self.pairs:
            if not s or not t:
                raise InputError(f"mapping {self.from_schema}->{self.to_schema} has an empty path")

    def rewrite(self, steps: Steps) -> list[Steps]:
        return [t + steps[len(s):] for s, t in self.pairs if steps[: len(s)] == s]


def parse_mappings(raw: Any, source: str = "<mappings>") -> list[SchemaMapping]:
    if not isinstance(raw, list):
        raise InputError(f"{source}: expected a JSON list of mappings")
    out = []
    for i, m in enumerate(raw):
        try:
            pairs = tuple((tuple(s), tuple(t)) for s, t in m["pairs"])
            out.append(SchemaMapping(str(m["from"]), str(m["to"]), pairs))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{source}: mappings[{i}]: malformed ({exc})") from None
        except InputError as exc:
            raise InputError(f"{source}: mappings[{i}]: {exc}") from None
    return out


def load_mappings(path: str | Path) -> list[SchemaMapping]:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: {exc.msg}") from None
    return parse_mappings(raw, str(path))


def reformulate(q: PathQuery, mappings: Sequence[SchemaMapping]) -> list[PathQuery]:
    """Every rewriting of ``q`` reachable through chains of mappings.

    A chain never re-enters a schema it has already passed through, which
    bounds its length by the number of schemas and so guarantees termination
    even when mappings form cycles that lengthen paths. Results are
    deduplicated on (schema, steps) and sorted.
    """
    outgoing: dict[str, list[SchemaMapping]] = {}
    for m in mappings:
        outgoing.setdefault(m.from_schema, []).append(m)
    start = (q.schema_id, q.steps, frozenset([q.schema_id]))
    seen = {start}
    frontier = deque([start])
    found: set[tuple[str, Steps]] = set()
    while frontier:
        schema, steps, chain = frontier.popleft()
        for m in outgoing.get(schema, ()):
            if m.to_schema in chain:
                continue
            for new_steps in m.rewrite(steps):
                state = (m.to_schema, new_steps, chain | {m.to_schema})
                if state not in seen:
                    seen.add(state)
                    frontier.append(state)
                    found.add((m.to_schema, new_steps))
    return [PathQuery(s, steps, q.predicate) for s, steps in sorted(found)]


@dataclass(frozen=True)
class SubQuery:
    query: PathQuery
    partition_id: int
    cost: int


@dataclass(frozen=True)
class ExecutionPlan:
    original: PathQuery
    reformulations: tuple[PathQuery, ...]
    sub_queries: tuple[SubQuery, ...]
    aggregation: str = "dedupe_union"


def plan(
    q: PathQuery,
    mappings: Sequence[SchemaMapping],
    partitions: Sequence[DataPartition],
    c_scan: int = C_SCAN,
) -> ExecutionPlan:
    refs = reformulate(q, mappings)
    subs = [
        SubQuery(r, part.id, max(1, c_scan * len(part.records)))
        for r in [q, *refs]
        for part in partitions
        if part.schema_id == r.schema_id
    ]
    return ExecutionPlan(q, tuple(refs), tuple(subs))


# -- evaluation ---------------------------------------------------------------


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def compare(value, op: str, literal) -> bool | None:
    """Apply the predicate; None when value and literal types are incompatible."""
    if _is_number(value) and _is_number(literal):
        pass
    elif isinstance(value, str) and isinstance(literal, str):
        pass
    else:
        return None
    if op == "=":
        return value == literal
    if op == "<":
        return value < literal
    return value > literal


def _value_key(value) -> tuple:
    if value is None:
        return (0, 0)
    if _is_number(value):
        return (1, value)
    if isinstance(value, str):
        return (2, value)
    return (3, json.dumps(value, sort_keys=True))


@dataclass
class MatchList:
    matches: list[tuple[int, Any]]
    skipped: int = 0

    @classmethod
    def merge(cls, parts: Iterable[MatchList]) -> MatchList:
        best: dict[int, Any] = {}
        skipped = 0
        for part in parts:
            skipped += part.skipped
            for rid, value in part.matches:
                if rid not in best or _value_key(value) < _value_key(best[rid]):
                    best[rid] = value
        return cls(sorted(best.items()), skipped)


def _walk(tree: DataTree, steps: Steps) -> list[DataTree]:
    if tree.label != steps[0]:
        return []
    level = [tree]
    for label in steps[1:]:
        level = [c for node in level for c in node.children if c.label == label]
    return level


def eval_subquery(q: PathQuery, part: DataPartition) -> MatchList:
    """Matches of ``q`` in one partition: at most one (record_id, value) per
    record, the first node in document order satisfying the predicate.
    Records whose only candidate nodes have a value of the wrong type for the
    literal count as ``skipped``.
    """
    matches = []
    skipped = 0
    for rec in sorted(part.records, key=lambda r: r.record_id):
        if rec.kind != TREE:
            raise TaskError(f"partition {part.id} holds {rec.kind} records, not trees")
        mismatch = False
        for node in _walk(rec.body, q.steps):
            if q.predicate is None:
                matches.append((rec.record_id, node.value))
                break
            ok = compare(node.value, *q.predicate)
            if ok is None:
                mismatch = True
            elif ok:
                matches.append((rec.record_id, node.value))
                break
        else:
            skipped += mismatch
    return MatchList(matches, skipped)


def query_rounds(q: PathQuery, mappings: Sequence[SchemaMapping], partitions: Sequence[DataPartition], c_scan: int = C_SCAN) -> Rounds:
    execution = plan(q, mappings, partitions, c_scan)
    if not execution.sub_queries:
        return MatchList([])
    by_id = {p.id: p for p in partitions}
    merged = yield [
        Work(s.partition_id, s.cost, eval_subquery, (s.query, by_id[s.partition_id]))
        for s in execution.sub_queries
    ]
    return merged


def match_lines(result: MatchList) -> list[str]:
    return [f"{rid}\t{json.dumps(value)}" for rid, value in result.matches]
