"""Classical NFA for a sequence formula and its subset-construction DFA.

This is the construction the free-atom automaton is compared against: the
NFA guesses the match start with an unconditional self-loop on ``s0``, and
determinising it over the full valuation alphabet can need exponentially many
subset states.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .automaton import Dfa, FreeAtoms, Transition, _candidates, accepting_indices
from .sere import (
    TRUE, And, AtomRef, Not, Or, Seq, Term, Trace, Valuation, eval_term, formula_atoms,
)

__all__ = ["Nfa", "SubsetBlowupError", "build_nfa", "nfa_accepts", "subset_construct"]


class SubsetBlowupError(RuntimeError):
    pass


@dataclass(frozen=True)
class Nfa:
    n_states: int
    initial: frozenset[int]
    accepting: frozenset[int]
    atoms: tuple[str, ...]
    transitions: tuple[tuple[int, Term, frozenset[int]], ...]

    def successors(self, states, v) -> frozenset[int]:
        out = set()
        for src, guard, dst in self.transitions:
            if src in states and eval_term(guard, v):
                out |= dst
        return frozenset(out)


def build_nfa(psi: Seq, atoms: Sequence[str] | None = None) -> Nfa:
    if not isinstance(psi, Seq):
        raise TypeError("build_nfa takes a sequence formula")
    atoms = tuple(atoms) if atoms is not None else tuple(formula_atoms(psi))
    items = psi.items
    trans = [(0, TRUE, frozenset({0}))]
    for i in range(len(items) + 1):
        for j in _candidates(items, i):
            trans.append((i, items[j - 1].term, frozenset({j})))
    return Nfa(len(items) + 1, frozenset({0}), accepting_indices(items), atoms, tuple(trans))


def nfa_accepts(n: Nfa, rho: Trace) -> bool:
    current = n.initial
    for v in rho:
        current = n.successors(current, v)
    return bool(current & n.accepting)


def _minterm(atoms, index) -> Term:
    lits = [AtomRef(a) if (index >> k) & 1 else Not(AtomRef(a)) for k, a in enumerate(atoms)]
    out = lits[0]
    for lit in lits[1:]:
        out = And(out, lit)
    return out


def _merge_minterms(indices: set[int], nbits: int) -> list[tuple[int, int]]:
    """Prime implicants of a set of minterms as ``(value, care_mask)`` cubes."""
    full = (1 << nbits) - 1
    cubes = {(i, full) for i in indices}
    primes = set()
    while cubes:
        merged = set()
        used = set()
        for value, mask in cubes:
            for bit in range(nbits):
                b = 1 << bit
                if not mask & b or value & b:
                    continue
                other = (value | b, mask)
                if other in cubes:
                    merged.add((value, mask & ~b))
                    used.add((value, mask))
                    used.add(other)
        primes |= cubes - used
        cubes = merged
    return sorted(primes)


def _cube_term(atoms, value, mask) -> Term:
    lits = [AtomRef(a) if (value >> k) & 1 else Not(AtomRef(a))
            for k, a in enumerate(atoms) if (mask >> k) & 1]
    if not lits:
        return TRUE
    out = lits[0]
    for lit in lits[1:]:
        out = And(out, lit)
    return out


def subset_construct(n: Nfa, cap: int = 4096) -> Dfa:
    """Determinise over every valuation of the NFA's atoms.

    States are the reachable subsets, numbered in discovery order (the
    initial subset is state 0). Guards group the valuations leading to the
    same successor and merge adjacent minterms into prime cubes.
    """
    atoms = n.atoms
    vals = [Valuation.from_index(atoms, i) for i in range(1 << len(atoms))]
    index = {n.initial: 0}
    order = [n.initial]
    transitions = []
    pos = 0
    while pos < len(order):
        subset = order[pos]
        groups: dict[int, set[int]] = {}
        for i, v in enumerate(vals):
            succ = n.successors(subset, v)
            if succ not in index:
                if len(order) >= cap:
                    raise SubsetBlowupError(f"subset construction exceeded {cap} states")
                index[succ] = len(order)
                order.append(succ)
            groups.setdefault(index[succ], set()).add(i)
        for dst in sorted(groups):
            cubes = _merge_minterms(groups[dst], len(atoms))
            guard = None
            for value, mask in cubes:
                term = _cube_term(atoms, value, mask)
                guard = term if guard is None else Or(guard, term)
            transitions.append(Transition(pos, guard, dst))
        pos += 1
    accepting = frozenset(i for i, s in enumerate(order) if s & n.accepting)
    return Dfa(len(order), accepting, atoms, FreeAtoms(None), tuple(transitions))
