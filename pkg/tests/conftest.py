import itertools
from pathlib import Path

import pytest

from sere_synth.sere import SereItem, Seq, Trace, Valuation, parse_term

FIXTURES = Path(__file__).parent / "fixtures"

AB = ("a", "b")
# Desk-scale term set: every satisfiable shape over two atoms up to one operator.
TERMS = ("a", "b", "!a", "!b", "a & b", "a | b")


def trace(atoms, *true_sets):
    return Trace.from_true_sets(atoms, true_sets)


def all_traces(atoms, length):
    k = len(atoms)
    for idx in range(1 << (k * length)):
        yield Trace(atoms, [Valuation.from_index(atoms, (idx >> (k * t)) & ((1 << k) - 1))
                            for t in range(length)])


def formula_space(terms=TERMS, atoms=AB, max_items=3):
    """Every sequence of 1..max_items items over ``terms`` with every star pattern."""
    parsed = [parse_term(t, atoms) for t in terms]
    for n in range(1, max_items + 1):
        for ts in itertools.product(parsed, repeat=n):
            for stars in itertools.product((False, True), repeat=n):
                yield Seq(tuple(SereItem(t, s) for t, s in zip(ts, stars)))


@pytest.fixture
def fixtures():
    return FIXTURES
