"""Grid entities, record types and dataset partitioning."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from gridminer.errors import InputError

SCHEDULER_ID = "scheduler"

SEQUENCE = "sequence"
TUPLE = "tuple"
TREE = "tree"


@dataclass(frozen=True)
class GridletSpec:
    id: int
    cpu_rate: int
    latency: int = 0


@dataclass(frozen=True)
class ClientSpec:
    id: int
    latency: int = 0


@dataclass(frozen=True)
class DataTree:
    """A labeled tree node; ``value`` is the node's payload (leaf value)."""

    label: str
    value: Any = None
    children: tuple[DataTree, ...] = ()

    @classmethod
    def from_json(cls, obj: dict) -> DataTree:
        if not isinstance(obj, dict) or not isinstance(obj.get("label"), str):
            raise InputError(f"tree node needs a string 'label': {obj!r}")
        kids = tuple(cls.from_json(c) for c in obj.get("children", []))
        return cls(obj["label"], obj.get("value"), kids)


@dataclass(frozen=True)
class Record:
    record_id: int
    kind: str
    body: Any  # tuple[int, ...] | dict[str, Any] | DataTree


@dataclass
class DataPartition:
    id: int
    host_gridlet: int | None
    records: list[Record]
    schema_id: str = "default"

    @property
    def kind(self) -> str | None:
        return self.records[0].kind if self.records else None


@dataclass
class Grid:
    gridlets: dict[int, GridletSpec] = field(default_factory=dict)
    clients: dict[int, ClientSpec] = field(default_factory=dict)
    scheduler: str = SCHEDULER_ID

    def entity_count(self) -> int:
        return len(self.gridlets) + len(self.clients) + 1

    def gridlet(self, gid: int) -> GridletSpec:
        return self.gridlets[gid]

    def client(self, cid: int) -> ClientSpec:
        return self.clients[cid]

    def to_json(self) -> dict:
        return {
            "gridlets": [
                {"id": g.id, "cpu_rate": g.cpu_rate, "latency": g.latency}
                for g in self.gridlets.values()
            ],
            "clients": [{"id": c.id, "latency": c.latency} for c in self.clients.values()],
        }


def _int_field(obj: dict, key: str, where: str, minimum: int, default: int | None = None) -> int:
    if key not in obj:
        if default is not None:
            return default
        raise InputError(f"{where}.{key}: missing")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"{where}.{key}: expected integer, got {value!r}")
    if value < minimum:
        raise InputError(f"{where}.{key}: must be >= {minimum}, got {value}")
    return value


def parse_topology(text: str, source: str = "<config>") -> Grid:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise InputError(f"{source}: top level must be an object")
    grid = Grid()
    seen: set[int] = set()
    for i, g in enumerate(raw.get("gridlets", [])):
        where = f"{source}: gridlets[{i}]"
        if not isinstance(g, dict):
            raise InputError(f"{where}: expected object")
        gid = _int_field(g, "id", where, 0)
        if gid in seen:
            raise InputError(f"{where}.id: duplicate id {gid}")
        rate = _int_field(g, "cpu_rate", where, 1)
        latency = _int_field(g, "latency", where, 0, default=0)
        seen.add(gid)
        grid.gridlets[gid] = GridletSpec(gid, rate, latency)
    for i, c in enumerate(raw.get("clients", [])):
        where = f"{source}: clients[{i}]"
        if not isinstance(c, dict):
            raise InputError(f"{where}: expected object")
        cid = _int_field(c, "id", where, 0)
        if cid in seen:
            raise InputError(f"{where}.id: duplicate id {cid}")
        seen.add(cid)
        grid.clients[cid] = ClientSpec(cid, _int_field(c, "latency", where, 0, default=0))
    return grid


def load_topology(path: str | Path) -> Grid:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return parse_topology(text, str(path))


def partition_dataset(
    records: Sequence[Record],
    p: int,
    policy: str = "round_robin",
    hosts: Sequence[int] = (),
    schema_id: str = "default",
) -> list[DataPartition]:
    """Split ``records`` into ``p`` partitions.

    ``round_robin`` deals records in order; ``hash_on_id`` sends each record to
    ``record_id mod p``. Partition ``i`` is hosted on ``hosts[i % len(hosts)]``.
    """
    if p < 1:
        raise InputError(f"partition count must be >= 1, got {p}")
    buckets: list[list[Record]] = [[] for _ in range(p)]
    if policy == "round_robin":
        for i, rec in enumerate(records):
            buckets[i % p].append(rec)
    elif policy == "hash_on_id":
        for rec in records:
            buckets[rec.record_id % p].append(rec)
    else:
        raise InputError(f"unknown partition policy {policy!r}")
    return [
        DataPartition(i, hosts[i % len(hosts)] if hosts else None, bucket, schema_id)
        for i, bucket in enumerate(buckets)
    ]


# -- dataset readers ---------------------------------------------------------


def parse_sequences(lines: Iterable[str], source: str = "<sequences>", first_id: int = 0) -> list[Record]:
    records = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            items = tuple(int(tok) for tok in line.split())
        except ValueError:
            raise InputError(f"{source}:{lineno}: expected space-separated integers") from None
        if any(x < 0 for x in items):
            raise InputError(f"{source}:{lineno}: items must be non-negative")
        records.append(Record(first_id + len(records), SEQUENCE, items))
    return records


def read_sequences(path: str | Path, first_id: int = 0) -> list[Record]:
    path = Path(path)
    try:
        with path.open() as fh:
            return parse_sequences(fh, str(path), first_id)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def coerce_scalar(text: str) -> int | float | str:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        return text
    # nan/inf would break the sorted attribute lists
    return value if math.isfinite(value) else text


def read_tuples(path: str | Path, target: str, first_id: int = 0) -> tuple[list[str], list[Record]]:
    """Read a CSV with header; returns (attribute names in column order, records).

    Columns whose cells all parse as numbers become numeric; everything else,
    including the target column, stays a string.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}:1: empty file, header expected") from None
        header = [h.strip() for h in header]
        if target not in header:
            raise InputError(f"{path}:1: target column {target!r} not in header")
        rows = []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append([cell.strip() for cell in row])
    # a column is numeric only if every cell parses as a number
    columns = list(zip(*rows)) if rows else [() for _ in header]
    numeric = [
        name != target and all(not isinstance(coerce_scalar(c), str) for c in col)
        for name, col in zip(header, columns)
    ]
    records = [
        Record(
            first_id + i,
            TUPLE,
            {name: coerce_scalar(c) if num else c for name, num, c in zip(header, numeric, row)},
        )
        for i, row in enumerate(rows)
    ]
    return [h for h in header if h != target], records


def read_trees(path: str | Path, first_id: int = 0) -> tuple[str, list[Record]]:
    """Read a tree dataset: ``{"schema": "A", "records": [{"id": 1, "tree": {...}}]}``.

    Returns (schema id, records). Record ids are taken from the file when given.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict) or not isinstance(raw.get("schema"), str):
        raise InputError(f"{path}: expected object with string 'schema'")
    records = []
    for i, item in enumerate(raw.get("records", [])):
        rid = item.get("id", first_id + i)
        if isinstance(rid, bool) or not isinstance(rid, int):
            raise InputError(f"{path}: records[{i}].id: expected integer")
        records.append(Record(rid, TREE, DataTree.from_json(item.get("tree"))))
    return raw["schema"], records
