import random
from fractions import Fraction

import pytest

from gridminer.topology import SEQUENCE, TREE, TUPLE, DataTree, Record

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def seq_records(seqs, first_id=0):
    return [Record(first_id + i, SEQUENCE, tuple(s)) for i, s in enumerate(seqs)]


def tuple_records(rows):
    return [Record(i, TUPLE, dict(r)) for i, r in enumerate(rows)]


def random_sequences(rng, n_max=50, len_max=8, alphabet=6, n_min=1):
    n = rng.randint(n_min, n_max)
    return [tuple(rng.randrange(alphabet) for _ in range(rng.randint(1, len_max))) for _ in range(n)]


def random_tree(rng, labels, depth=3, values=(1, 5, 9, "x")):
    label = rng.choice(labels)
    if depth == 0 or rng.random() < 0.3:
        return DataTree(label, rng.choice(values))
    kids = tuple(random_tree(rng, labels, depth - 1, values) for _ in range(rng.randint(1, 3)))
    return DataTree(label, rng.choice(values + (None,)), kids)


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture
def three_seqs():
    return seq_records([(1, 2, 3), (1, 3), (2, 3)])


@pytest.fixture
def quarter():
    return Fraction(1, 4)


@pytest.fixture
def criterion():
    """Record one acceptance line, printed in the terminal summary."""

    def record(number, name, ok, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}  {detail}".rstrip())
        return ok

    return record
