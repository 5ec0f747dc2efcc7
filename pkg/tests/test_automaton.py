import itertools
import json
import re

import pytest

from sere_synth.automaton import (
    Dfa, DfaError, FreeAtoms, Transition, accepts_with_free, build_dfa, choice, choice_width,
    dfa_to_json, export_dot, run_dfa, validate_dfa,
)
from sere_synth.sere import (
    TRUE, And, AtomRef, Not, Trace, Valuation, ends_with_match, eval_term, parse_sere,
)

from conftest import AB, all_traces, trace

a, r = AtomRef("a"), AtomRef("r")


def equivalent(t1, t2, names):
    return all(eval_term(t1, Valuation.from_index(names, i)) == eval_term(t2, Valuation.from_index(names, i))
               for i in range(1 << len(names)))


# --- choice ------------------------------------------------------------------

TWO_BITS = FreeAtoms("r", ("r1", "r2"))


def test_choice_offset_zero():
    expected = And(Not(AtomRef("r1")), Not(AtomRef("r2")))
    assert equivalent(choice(2, 2, TWO_BITS), expected, ["r1", "r2"])


def test_choice_offset_one():
    expected = And(AtomRef("r1"), Not(AtomRef("r2")))
    assert equivalent(choice(2, 3, TWO_BITS), expected, ["r1", "r2"])


def test_choice_without_bits_is_true():
    assert choice(4, 4, FreeAtoms("r")) == TRUE


@pytest.mark.parametrize("k,p", [(2, 6), (3, 2)])
def test_choice_out_of_range(k, p):
    with pytest.raises(DfaError):
        choice(k, p, TWO_BITS)


def test_choice_exclusive():
    names = ["r1", "r2"]
    for i in range(4):
        v = Valuation.from_index(names, i)
        assert sum(eval_term(choice(1, 1 + off, TWO_BITS), v) for off in range(4)) == 1


@pytest.mark.parametrize("text,width,bits", [
    ("a ; b ; c", 0, 0),
    ("a*", 1, 0),
    ("a* ; b", 2, 1),
    ("a* ; b*", 2, 1),
    ("a ; b* ; c* ; a", 3, 2),
    ("a* ; b* ; a* ; b", 4, 2),
    ("a* ; b* ; a* ; b* ; a", 5, 3),
])
def test_free_atom_count(text, width, bits):
    psi = parse_sere(text)
    m = build_dfa(psi)
    assert choice_width(psi) == width
    assert len(m.free.choice) == bits and m.free.start == "r"
    assert m.n_states == len(psi.items) + 1


def test_free_names_avoid_atoms():
    m = build_dfa(parse_sere("r ; r1* ; b"))
    assert m.free.names == ("_r", "_r1")


# --- construction ---------------------------------------------------------------

def edges(m, fallback=None):
    return {(t.src, t.dst) for t in m.transitions if fallback is None or t.fallback == fallback}


def test_single_item_base_case():
    m = build_dfa(parse_sere("a"))
    assert (m.n_states, m.initial, m.accepting) == (2, 0, frozenset({1}))
    core = [t for t in m.transitions if not t.fallback]
    assert {(t.src, t.dst) for t in core} == {(0, 0), (0, 1)}
    names = ["a", "r"]
    guards = {(t.src, t.dst): t.guard for t in core}
    assert equivalent(guards[0, 0], Not(r), names)
    assert equivalent(guards[0, 1], And(r, a), names)


def test_single_star_base_case():
    m = build_dfa(parse_sere("a*"))
    assert m.accepting == frozenset({0, 1})
    core = {(t.src, t.dst): t.guard for t in m.transitions if not t.fallback}
    names = ["a", "r"]
    assert set(core) == {(0, 0), (0, 1), (1, 1), (1, 0)}
    assert equivalent(core[0, 0], Not(r), names)
    assert equivalent(core[0, 1], And(a, r), names)
    assert equivalent(core[1, 1], a, names)
    assert equivalent(core[1, 0], Not(a), names)


@pytest.mark.parametrize("text,accepting", [
    ("x1 ; x2 ; x3* ; x4*", {2, 3, 4}),
    ("a ; b", {2}),
    ("a* ; b*", {0, 1, 2}),
    ("a* ; b", {2}),
    ("a ; b* ; a", {3}),
])
def test_accepting_rule(text, accepting):
    assert build_dfa(parse_sere(text)).accepting == frozenset(accepting)


def test_restart_edges_are_tagged():
    m = build_dfa(parse_sere("a ; b ; c"))
    restart = [t for t in m.transitions if t.src == 3]
    assert restart and all(t.fallback for t in restart)
    assert {t.dst for t in restart} == {0, 1}


def test_build_dfa_rejects_connectives():
    with pytest.raises(TypeError):
        build_dfa(parse_sere("a && b"))


def test_build_dfa_atom_set_must_cover_formula():
    with pytest.raises(DfaError):
        build_dfa(parse_sere("a ; c"), ["a", "b"])


def test_structural_equality():
    assert build_dfa(parse_sere("a ; b*")) == build_dfa(parse_sere("a ; b*"))
    assert build_dfa(parse_sere("a ; b*")) != build_dfa(parse_sere("a ; b"))


# --- validation ---------------------------------------------------------------

def test_validate_constructed_dfas():
    for text in ["a", "a*", "a ; b ; c", "a ; b* ; a", "a* ; b* ; a* ; b", "(a | b)* ; !a"]:
        assert validate_dfa(build_dfa(parse_sere(text))) == []


def test_validate_reports_overlap():
    m = build_dfa(parse_sere("a"))
    bad = Dfa(m.n_states, m.accepting, m.atoms, m.free,
              m.transitions + (Transition(0, TRUE, 1),))
    diags = validate_dfa(bad)
    assert [(d.kind, d.state) for d in diags] == [("overlap", 0)]
    w = diags[0].witness
    enabled = [t for t in bad.outgoing(0) if eval_term(t.guard, w)]
    assert len(enabled) > 1


def test_validate_reports_gap():
    m = build_dfa(parse_sere("a"))
    kept = tuple(t for t in m.transitions if not (t.src == 0 and t.fallback))
    diags = validate_dfa(Dfa(m.n_states, m.accepting, m.atoms, m.free, kept))
    assert [(d.kind, d.state) for d in diags] == [("gap", 0)]
    assert diags[0].witness["r"] and not diags[0].witness["a"]


# --- runs ------------------------------------------------------------------------

ABC_R = ("a", "b", "c", "r")


def test_run_dfa_accepting_chain():
    m = build_dfa(parse_sere("a ; b ; c"))
    ok, path = run_dfa(m, trace(ABC_R, {"a", "r"}, {"b"}, {"c"}))
    assert ok and path == [0, 1, 2, 3]


def test_run_dfa_never_started():
    m = build_dfa(parse_sere("a ; b ; c"))
    ok, path = run_dfa(m, trace(ABC_R, {"a"}, {"b"}, {"c"}))
    assert not ok and path == [0, 0, 0, 0]


def test_run_dfa_empty_trace():
    assert run_dfa(build_dfa(parse_sere("a*")), Trace(("a", "r")))[0]
    assert not run_dfa(build_dfa(parse_sere("a")), Trace(("a", "r")))[0]


def test_run_dfa_checks_atom_set():
    with pytest.raises(DfaError):
        run_dfa(build_dfa(parse_sere("a")), trace(("a",), {"a"}))


def test_accepts_with_free_on_walkthrough():
    m = build_dfa(parse_sere("a ; b", AB), AB)
    rho = trace(AB, {"a"}, {"a"}, {"a", "b"}, {"b"})
    ok, free = accepts_with_free(m, rho)
    assert ok
    assert run_dfa(m, _extend(rho, free))[0]
    assert accepts_with_free(m, rho[:3])[0]
    assert not accepts_with_free(m, trace(AB, {"a"}, {"a", "b"}, set()))[0]


def test_accepts_with_free_star_middle():
    m = build_dfa(parse_sere("a ; b* ; a", AB), AB)
    ok, free = accepts_with_free(m, trace(AB, {"a", "b"}, {"b"}, {"a"}))
    assert ok and free[0]["r"]


def test_accepts_with_free_empty_trace():
    for text, expected in [("a*", True), ("a* ; b*", True), ("a ; b*", False)]:
        m = build_dfa(parse_sere(text, AB), AB)
        assert accepts_with_free(m, Trace(AB))[0] is expected


def _extend(rho, free):
    atoms = rho.atoms + free.atoms
    return Trace(atoms, [dict(v) | dict(f) for v, f in zip(rho, free)])


@pytest.mark.parametrize("text", ["a ; b", "a ; b* ; a", "a* ; !a ; b*", "b ; (a & b)* ; a*"])
def test_accepts_with_free_matches_brute_force(text):
    m = build_dfa(parse_sere(text, AB), AB)
    nf = len(m.free)
    for n in range(4):
        for rho in all_traces(AB, n):
            brute = any(
                run_dfa(m, _extend(rho, Trace(m.free.names, [Valuation.from_index(m.free.names, f) for f in fs])))[0]
                for fs in itertools.product(range(1 << nf), repeat=n))
            ok, free = accepts_with_free(m, rho)
            assert ok == brute
            assert ok == ends_with_match(rho, m.source)
            if ok:
                assert run_dfa(m, _extend(rho, free))[0]


# --- export ---------------------------------------------------------------------

_DOT_LINE = re.compile(
    r'\s*(rankdir=LR;|\w+ \[[^\]]*\];|\w+ -> \w+( \[[^\]]*\])?;)$')


def _dot_ok(text):
    lines = text.strip().splitlines()
    return (re.match(r"digraph \w+ \{$", lines[0]) and lines[-1] == "}"
            and all(_DOT_LINE.match(line) for line in lines[1:-1]))


def test_dot_export():
    dot = export_dot(build_dfa(parse_sere("a")))
    assert _dot_ok(dot)
    assert len(re.findall(r"^\s+s\d+ \[", dot, re.M)) == 2
    assert 's1 [shape=doublecircle' in dot
    assert "style=dashed" in dot
    dot = export_dot(build_dfa(parse_sere("a ; b ; c")))
    assert _dot_ok(dot)
    assert len(re.findall(r"^\s+s\d+ \[", dot, re.M)) == 4


def test_json_export():
    doc = json.loads(dfa_to_json(build_dfa(parse_sere("x1 ; x2 ; x3* ; x4*"))))
    assert set(doc) == {"states", "initial", "accepting", "atoms", "free_atoms", "transitions"}
    assert doc["accepting"] == [2, 3, 4] and doc["free_atoms"] == ["r", "r1"]
    assert set(doc["transitions"][0]) == {"from", "guard", "to", "fallback"}


def test_choice_bit_keeps_star_open():
    # step 2 satisfies both b and c; staying in b* needs the choice bit
    atoms = ("a", "b", "c")
    m = build_dfa(parse_sere("a ; b* ; c", atoms), atoms)
    rho = trace(atoms, {"a"}, {"b", "c"}, {"b"}, {"c"})
    ok, free = accepts_with_free(m, rho)
    assert ok and free[0]["r"]
    assert not free[1]["r1"]
    assert run_dfa(m, _extend(rho, free))[1] == [0, 1, 2, 2, 3]
