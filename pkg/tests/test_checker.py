import itertools
import json

import pytest

from sere_synth.aig import (
    AigBuilder, AigError, compose_miter, constant_circuit, dfa_to_aig, lower_formula, read_aiger,
)
from sere_synth.automaton import Dfa, build_dfa
from sere_synth.checker import (
    ScaleError, Unreachable, Witness, aig_run, aig_simulate, check_reach, equisat_check,
    lowering_mismatch, replay_witness,
)
from sere_synth.sere import Valuation, parse_sere, read_spec_file, read_trace

from conftest import trace

COUNTER_BIND = {f"x{i}": f"x{i}" for i in range(4)}


def load(fixtures, name):
    return read_aiger((fixtures / name).read_text())


def counter_miter(fixtures, design="counter.aag"):
    psi, atoms = read_spec_file((fixtures / "counter.sere").read_text())
    return compose_miter(load(fixtures, design), lower_formula(psi, atoms), COUNTER_BIND)


# --- simulation --------------------------------------------------------------

def test_counter_outputs_cycle(fixtures):
    out = aig_simulate(load(fixtures, "counter.aag"), [{}] * 5)
    rows = ["".join(str(int(o[f"x{i}"])) for i in range(4)) for o in out]
    assert rows == ["1000", "0100", "0010", "0001", "1000", "0100"]


def test_skip2_counter_never_shows_two(fixtures):
    out = aig_simulate(load(fixtures, "counter_skip2.aag"), [{}] * 8)
    assert not any(o["x2"] for o in out)


def test_constant_accept_every_step():
    assert all(o["accept"] for o in aig_simulate(constant_circuit(True), [{}] * 4))


def test_fig3_trace_accepts_at_step_three():
    c = dfa_to_aig(build_dfa(parse_sere("a ; b ; c")))
    out = aig_simulate(c, trace(("a", "b", "c", "r"), {"a", "r"}, {"b"}, {"c"}))
    assert [o["accept"] for o in out] == [False, False, False, True]


def test_simulate_missing_input():
    c = dfa_to_aig(build_dfa(parse_sere("a")))
    with pytest.raises(AigError, match="r"):
        aig_simulate(c, [{"a": True}])


def test_run_reports_latch_states(fixtures):
    _, states = aig_run(load(fixtures, "counter.aag"), [{}] * 4)
    assert states == [(False, False), (True, False), (False, True), (True, True), (False, False)]


# --- reachability ----------------------------------------------------------------

def test_counter_reaches_accept(fixtures):
    c = counter_miter(fixtures)
    w = check_reach(c, "accept", 8)
    assert isinstance(w, Witness) and w.reached_at == 5
    assert len(w.states) == len(w.steps) + 1
    assert replay_witness(c, w)
    # the match starts at the first step
    assert w.steps[0]["r"]


def test_skip2_counter_unreachable(fixtures):
    assert check_reach(counter_miter(fixtures, "counter_skip2.aag"), "accept", 8) == Unreachable(8)


def test_constant_false_unreachable():
    for bound in (0, 1, 5):
        assert check_reach(constant_circuit(False), "accept", bound) == Unreachable(bound)


def test_bad_reachable_at_time_zero():
    c = dfa_to_aig(build_dfa(parse_sere("a")))
    w = check_reach(c, "bad", 3)
    assert w.reached_at == 0 and w.steps == ()


def test_witness_is_minimal_and_monotone():
    c = lower_formula(parse_sere("a ; !a ; a ; b"))
    w = check_reach(c, "accept", 10)
    assert w.reached_at == 4
    for b in range(4):
        assert check_reach(c, "accept", b) == Unreachable(b)
    # brute force: no shorter input sequence asserts accept
    names = c.input_names
    for n in range(4):
        for seq in itertools.product(range(1 << len(names)), repeat=n):
            out = aig_simulate(c, [Valuation.from_index(names, u) for u in seq])
            assert not any(o["accept"] for o in out)


def test_tie_breaking_by_input_order():
    c = lower_formula(parse_sere("a | b"))
    w = check_reach(c, "accept", 2)
    # inputs (a, b, r): the smallest asserting valuation is a & r
    assert [dict(s) for s in w.steps] == [{"a": True, "b": False, "r": True}]
    assert check_reach(c, "accept", 2) == w


def test_check_reach_errors():
    b = AigBuilder()
    lits = [b.add_input(f"i{j}") for j in range(5)]
    b.add_output("accept", b.and_all(lits))
    c = b.build()
    with pytest.raises(ScaleError):
        check_reach(c, "accept", 3, input_cap=4)
    with pytest.raises(AigError):
        check_reach(c, "nope", 3)


def test_witness_file_round_trip(fixtures):
    c = counter_miter(fixtures)
    w = check_reach(c, "accept", 8)
    rho, notes = read_trace(w.to_text(c.input_names))
    assert notes == {"target": "accept", "reached_at": "5"}
    assert aig_simulate(c, list(rho))[5]["accept"]


# --- equisatisfiability harness -------------------------------------------------------

def test_equisat_simple_sequence():
    report = equisat_check(parse_sere("a ; b"), 4)
    assert report.ok and [r.length for r in report.lengths] == [0, 1, 2, 3, 4]


def test_equisat_star_universe():
    report = equisat_check(parse_sere("a*"), 3)
    assert all(r.p3 for r in report.lengths)


def test_equisat_catches_corrupted_dfa():
    psi = parse_sere("a ; b")
    m = build_dfa(psi)
    broken = Dfa(m.n_states, frozenset(), m.atoms, m.free, m.transitions)
    report = equisat_check(psi, 4, dfa=broken)
    assert [r.p3 for r in report.lengths] == [True, True, False, False, False]
    first = report.lengths[2]
    assert first.counterexample is not None
    assert first.counterexample["trace"] == [[1, 0], [0, 1]]


def test_equisat_report_formats():
    report = equisat_check(parse_sere("a ; b*"), 2)
    doc = json.loads(report.to_json())
    assert doc["formula"] == "a ; b*"
    assert [set(x) for x in doc["lengths"]] == [{"L", "p1", "p2", "p3"}] * 3
    assert "all properties hold" in report.to_text()


def test_equisat_scale_limits():
    with pytest.raises(ScaleError):
        equisat_check(parse_sere("a ; b ; c ; d"), 2)
    with pytest.raises(ScaleError):
        equisat_check(parse_sere("a"), 6)


def test_lowering_mismatch_detects_wrong_circuit():
    m = build_dfa(parse_sere("a ; b"))
    assert lowering_mismatch(m, dfa_to_aig(m), 4) is None
    other = dfa_to_aig(build_dfa(parse_sere("a ; a"), ["a", "b"]))
    assert lowering_mismatch(m, other, 4) is not None
