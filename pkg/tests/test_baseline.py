import pytest

from sere_synth.automaton import build_dfa, run_dfa, validate_dfa
from sere_synth.baseline import Nfa, SubsetBlowupError, build_nfa, nfa_accepts, subset_construct
from sere_synth.sere import TRUE, Valuation, ends_with_match, parse_sere

from conftest import AB, all_traces, formula_space


def test_nfa_shape():
    n = build_nfa(parse_sere("a ; b ; c"))
    assert n.n_states == 4 and n.initial == {0} and n.accepting == {3}
    v = Valuation.from_true(("a", "b", "c"), {"a"})
    assert n.successors({0}, v) == {0, 1}
    assert n.successors({0}, Valuation.from_true(("a", "b", "c"), set())) == {0}


def test_nfa_star_is_universe():
    n = build_nfa(parse_sere("a*", AB), AB)
    assert all(nfa_accepts(n, rho) for k in range(4) for rho in all_traces(AB, k))


def test_nfa_matches_oracle():
    for psi in formula_space(("a", "!a", "a & b"), max_items=3):
        n = build_nfa(psi, AB)
        for k in range(4):
            for rho in all_traces(AB, k):
                assert nfa_accepts(n, rho) == ends_with_match(rho, psi)


def test_subset_construction_language():
    psi = parse_sere("a ; b ; c")
    atoms = ("a", "b", "c")
    n = build_nfa(psi)
    d = subset_construct(n)
    assert d.n_states >= 4 and d.free.names == () and validate_dfa(d) == []
    for k in range(5):
        for rho in all_traces(atoms, k):
            assert run_dfa(d, rho)[0] == nfa_accepts(n, rho)


def test_universe_nfa_gives_one_state():
    n = Nfa(1, frozenset({0}), frozenset({0}), AB, ((0, TRUE, frozenset({0})),))
    d = subset_construct(n)
    assert d.n_states == 1 and d.accepting == {0}


def test_subset_dfas_are_deterministic():
    for psi in formula_space(("a", "b", "a & b"), max_items=3):
        assert validate_dfa(subset_construct(build_nfa(psi, AB))) == []


def test_linear_never_larger_without_stars():
    for psi in formula_space(("a", "b", "a & b"), max_items=3):
        if any(item.starred for item in psi.items):
            continue
        assert build_dfa(psi, AB).n_states <= subset_construct(build_nfa(psi, AB)).n_states


def test_stars_can_make_subset_dfa_smaller():
    # "a* ; a" is just "ends with a": two subsets against three linear states
    psi = parse_sere("a* ; a", AB)
    assert subset_construct(build_nfa(psi, AB)).n_states == 2
    assert build_dfa(psi, AB).n_states == 3


def test_blowup_reaches_cap():
    # remembering the last k steps needs 2^k subsets
    psi = parse_sere("a ; 1 ; 1 ; 1 ; 1 ; 1 ; 1")
    assert subset_construct(build_nfa(psi)).n_states == 2 ** 7
    with pytest.raises(SubsetBlowupError):
        subset_construct(build_nfa(psi), cap=100)
    assert build_dfa(psi).n_states == 8
