"""Command-line entry point: ``gridminer {simulate,mine,classify,reformulate,query}``."""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from gridminer.errors import GridError, InputError, InvariantViolation
from gridminer.mining import sequences, tree
from gridminer.query import (
    load_mappings,
    match_lines,
    parse_query,
    query_rounds,
    reformulate,
)
from gridminer.scheduler import DEFAULT_TRUST_THRESHOLD
from gridminer.simulation import GridSimulation, dump_report, load_workload
from gridminer.topology import load_topology, partition_dataset, read_sequences, read_trees, read_tuples
from gridminer.work import drive

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("gridminer")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _failure(text: str) -> tuple[int, int]:
    try:
        gid, ordinal = text.split(":")
        return int(gid), int(ordinal)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected <gridlet_id:task_ordinal>, got {text!r}") from None


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridminer", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a workload on a simulated grid")
    sim.add_argument("--config", required=True, type=Path)
    sim.add_argument("--workload", required=True, type=Path)
    sim.add_argument("--seed", type=_nonneg, default=0)
    sim.add_argument("--report", type=Path, help="write the JSON report here (default stdout)")
    sim.add_argument("--trace", type=Path, help="write one line per dispatched event")
    sim.add_argument("--sequential-delivery", action="store_true")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--trust-threshold", type=_rational, default=DEFAULT_TRUST_THRESHOLD)
    sim.add_argument("--fail", type=_failure, action="append", default=[], metavar="GID:ORDINAL")

    mine = sub.add_parser("mine", help="frequent-sequence mining")
    mine.add_argument("--data", required=True, type=Path)
    mine.add_argument("--minsup", required=True, type=_rational)
    mine.add_argument("--partitions", type=int, default=1)
    mine.add_argument("--probabilistic", action="store_true")
    mine.add_argument("--sample-rate", type=_rational, default=Fraction(1, 2))
    mine.add_argument("--delta", type=float, default=0.05)
    mine.add_argument("--seed", type=_nonneg, default=0)

    cls = sub.add_parser("classify", help="build a gini decision tree")
    cls.add_argument("--data", required=True, type=Path)
    cls.add_argument("--target", required=True)
    cls.add_argument("--max-depth", type=_nonneg, default=4)
    cls.add_argument("--min-records", type=_nonneg, default=2)
    cls.add_argument("--partitions", type=int, default=1)

    ref = sub.add_parser("reformulate", help="rewrite a path query across schema mappings")
    ref.add_argument("--query", required=True)
    ref.add_argument("--schema", required=True)
    ref.add_argument("--mappings", required=True, type=Path)

    qry = sub.add_parser("query", help="evaluate a path query over tree datasets")
    qry.add_argument("--query", required=True)
    qry.add_argument("--schema", required=True)
    qry.add_argument("--sources", required=True, nargs="+", type=Path)
    qry.add_argument("--mappings", type=Path)
    qry.add_argument("--partitions", type=int, default=1)
    return parser


def _partitions(records, p: int, schema_id: str = "default"):
    if p < 1:
        raise InputError(f"--partitions must be >= 1, got {p}")
    return partition_dataset(records, p, schema_id=schema_id)


def cmd_simulate(args) -> list[str]:
    if args.workers < 1:
        raise InputError("--workers must be >= 1")
    if not 0 <= args.trust_threshold <= 1:
        raise InputError("--trust-threshold must be within [0, 1]")
    grid = load_topology(args.config)
    workload = load_workload(args.workload, grid)
    trace = args.trace.open("w") if args.trace else None
    try:
        sim = GridSimulation(
            grid, workload, args.seed, args.trust_threshold, args.fail,
            args.sequential_delivery, args.workers, trace,
        )
        report = sim.run()
    finally:
        if trace is not None:
            trace.close()
    text = dump_report(report)
    if args.report:
        args.report.write_text(text)
        log.info("report written to %s", args.report)
        return []
    return [text.rstrip("\n")]


def cmd_mine(args) -> list[str]:
    parts = _partitions(read_sequences(args.data), args.partitions)
    if args.probabilistic:
        patterns = sequences.mine_frequent_prob(parts, args.minsup, args.sample_rate, args.delta, args.seed)
    else:
        patterns = sequences.mine_frequent(parts, args.minsup)
    return [p.line() for p in patterns]


def cmd_classify(args) -> list[str]:
    _, records = read_tuples(args.data, args.target)
    root = tree.build_tree(_partitions(records, args.partitions), args.target, args.max_depth, args.min_records)
    return tree.render(root)


def cmd_reformulate(args) -> list[str]:
    q = parse_query(args.query, args.schema)
    return [f"{r.schema_id}\t{r.text()}" for r in reformulate(q, load_mappings(args.mappings))]


def cmd_query(args) -> list[str]:
    q = parse_query(args.query, args.schema)
    parts = []
    for src in args.sources:
        schema, records = read_trees(src)
        for part in _partitions(records, args.partitions, schema):
            part.id = len(parts)
            parts.append(part)
    mappings = load_mappings(args.mappings) if args.mappings else []
    return match_lines(drive(query_rounds(q, mappings, parts)))


COMMANDS = {
    "simulate": cmd_simulate,
    "mine": cmd_mine,
    "classify": cmd_classify,
    "reformulate": cmd_reformulate,
    "query": cmd_query,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        lines = COMMANDS[args.command](args)
    except InputError as exc:
        print(f"gridminer: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"gridminer: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except GridError as exc:
        print(f"gridminer: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for line in lines:
        print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
