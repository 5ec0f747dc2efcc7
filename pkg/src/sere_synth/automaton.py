"""Equisatisfiable DFA construction with free atomic propositions.

The automaton for ``x1 y1 ; ... ; xn yn`` has exactly ``n + 1`` states
``s0 .. sn``. Non-determinism is pushed into extra inputs:

* the start bit ``r`` decides at ``s0`` whether the current step begins a
  match attempt;
* the choice bits ``r1, r2, ...`` pick which state a step inside (or right
  before) a block of starred items jumps to. They encode the jump distance in
  binary, measured from the first state the jump may land on.

Guards are built so that for each state exactly one edge is enabled under any
valuation of the extended atom set: a jump selected by the choice bits wins if
its term holds, otherwise the largest candidate whose term holds is taken, and
if no candidate term holds the automaton returns to ``s0``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

from .sere import (
    FALSE, TRUE, And, AtomRef, Const, Not, Or, SereItem, Seq, Term, Trace,
    Valuation, eval_term, formula_atoms, pretty_print, term_atoms,
)

__all__ = [
    "FreeAtoms", "Transition", "Dfa", "Diagnostic", "DfaError",
    "choice", "choice_width", "build_dfa", "validate_dfa", "run_dfa",
    "accepts_with_free", "export_dot", "dfa_to_json", "accepting_indices",
]


class DfaError(ValueError):
    pass


# --------------------------------------------------------------------------
# Guard helpers (constant folding keeps printed guards readable)
# --------------------------------------------------------------------------

def _not(t: Term) -> Term:
    if isinstance(t, Const):
        return Const(not t.value)
    if isinstance(t, Not):
        return t.arg
    return Not(t)


def _and(*ts: Term) -> Term:
    out = None
    for t in ts:
        if t == FALSE:
            return FALSE
        if t == TRUE:
            continue
        out = t if out is None else And(out, t)
    return TRUE if out is None else out


def _or(*ts: Term) -> Term:
    out = None
    for t in ts:
        if t == TRUE:
            return TRUE
        if t == FALSE:
            continue
        out = t if out is None else Or(out, t)
    return FALSE if out is None else out


# --------------------------------------------------------------------------
# Types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FreeAtoms:
    start: str | None
    choice: tuple[str, ...] = ()

    @property
    def names(self) -> tuple[str, ...]:
        return ((self.start,) if self.start else ()) + self.choice

    def __len__(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class Transition:
    src: int
    guard: Term
    dst: int
    fallback: bool = False


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # "overlap" or "gap"
    state: int
    witness: dict
    edges: tuple[int, ...] = ()

    def __str__(self) -> str:
        true = sorted(a for a, v in self.witness.items() if v)
        where = f" (edges {list(self.edges)})" if self.edges else ""
        return f"s{self.state}: {self.kind} under {{{', '.join(true)}}}{where}"


@dataclass(frozen=True, eq=False)
class Dfa:
    """Deterministic automaton with guarded edges over ``atoms + free.names``."""

    n_states: int
    accepting: frozenset[int]
    atoms: tuple[str, ...]
    free: FreeAtoms
    transitions: tuple[Transition, ...]
    initial: int = 0
    source: Seq | None = field(default=None, compare=False)

    @property
    def states(self) -> range:
        return range(self.n_states)

    @property
    def extended_atoms(self) -> tuple[str, ...]:
        return self.atoms + self.free.names

    def outgoing(self, state: int) -> list[Transition]:
        return [t for t in self.transitions if t.src == state]

    def step(self, state: int, v: Mapping[str, bool]) -> int:
        enabled = [t.dst for t in self.transitions if t.src == state and eval_term(t.guard, v)]
        if len(enabled) != 1:
            kind = "no" if not enabled else "several"
            raise DfaError(f"{kind} enabled edges at s{state} under {dict(v)}")
        return enabled[0]

    @cached_property
    def table(self) -> list[list[int]]:
        """``table[s][i]``: successor of ``s`` under the valuation with index ``i``.

        Bit ``k`` of ``i`` is the value of ``extended_atoms[k]``.
        """
        names = self.extended_atoms
        if len(names) > 20:
            raise DfaError(f"transition table over {len(names)} atoms is too large")
        vals = [Valuation.from_index(names, i) for i in range(1 << len(names))]
        return [[self.step(s, v) for v in vals] for s in self.states]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dfa):
            return NotImplemented
        return (self.n_states, self.accepting, self.atoms, self.free, self.initial,
                set(self.transitions)) == (other.n_states, other.accepting, other.atoms,
                                           other.free, other.initial, set(other.transitions))

    __hash__ = None


# --------------------------------------------------------------------------
# choice(k, p, r)
# --------------------------------------------------------------------------

def choice(k: int, p: int, rbar: FreeAtoms | Sequence[str]) -> Term:
    """Guard selecting the jump ``k -> p``: the choice bits spell ``p - k``.

    Bit ``j`` of the offset is carried by the ``j``-th choice bit (``r1`` is
    the least significant).
    """
    bits = rbar.choice if isinstance(rbar, FreeAtoms) else tuple(rbar)
    offset = p - k
    if offset < 0 or offset >= 1 << len(bits):
        raise DfaError(f"jump offset {offset} not encodable with {len(bits)} choice bits")
    return _and(*(AtomRef(b) if (offset >> j) & 1 else Not(AtomRef(b)) for j, b in enumerate(bits)))


def choice_width(psi: Seq) -> int:
    """Number of distinct jump targets the choice bits must distinguish.

    A block of ``m`` starred items needs ``m`` targets, plus one when a
    non-starred item follows the block.
    """
    items = psi.items
    width = 0
    i = 0
    while i < len(items):
        if not items[i].starred:
            i += 1
            continue
        j = i
        while j < len(items) and items[j].starred:
            j += 1
        m = j - i
        width = max(width, m + 1 if j < len(items) else m)
        i = j
    return width


def _free_atoms(psi: Seq, taken: set[str], prefix: str = "r") -> FreeAtoms:
    w = choice_width(psi)
    nbits = math.ceil(math.log2(w)) if w > 1 else 0
    while True:
        names = [prefix] + [f"{prefix}{j}" for j in range(1, nbits + 1)]
        if not taken.intersection(names):
            return FreeAtoms(prefix, tuple(names[1:]))
        prefix = "_" + prefix


# --------------------------------------------------------------------------
# Construction
# --------------------------------------------------------------------------

def accepting_indices(items: Sequence[SereItem]) -> frozenset[int]:
    """States accepting for a sequence: the last state, plus every state that
    is followed only by starred items (down to the last unstarred one, or
    ``s0`` when all items are starred)."""
    n = len(items)
    if not items[-1].starred:
        return frozenset({n})
    k = n
    while k > 0 and items[k - 1].starred:
        k -= 1
    # items k+1..n are starred; k is the last unstarred item (or 0)
    return frozenset(range(k, n + 1))


def _candidates(items: Sequence[SereItem], i: int) -> list[int]:
    """States reachable from ``s_i`` in one step: ``s_i`` itself if item ``i``
    is starred, then items ``i+1, ...`` up to and including the first
    unstarred one."""
    out = [i] if i > 0 and items[i - 1].starred else []
    j = i + 1
    while j <= len(items):
        out.append(j)
        if not items[j - 1].starred:
            break
        j += 1
    return out


def _jump_edges(items, i, free: FreeAtoms) -> tuple[list[tuple[Term, int]], Term]:
    """Guarded jumps out of ``s_i`` and the guard of the return to ``s0``."""
    cands = _candidates(items, i)
    terms = {j: items[j - 1].term for j in cands}
    none_hold = _and(*(_not(terms[j]) for j in cands))
    if len(cands) == 1:
        (j,) = cands
        return [(terms[j], j)], none_hold
    base = cands[0]
    selected = {j: _and(choice(base, j, free), terms[j]) for j in cands}
    edges = []
    for j in cands:
        default = _and(*(_not(terms[k]) for k in cands if k > j),
                       *(_not(selected[p]) for p in cands if p < j))
        edges.append((_and(terms[j], _or(choice(base, j, free), default)), j))
    return edges, none_hold


def _edges_from(items, i, free: FreeAtoms) -> list[Transition]:
    jumps, none_hold = _jump_edges(items, i, free)
    if i > 0:
        return [Transition(i, g, j) for g, j in jumps] + [Transition(i, none_hold, 0)]
    r = AtomRef(free.start)
    out = [Transition(0, Not(r), 0)]
    out += [Transition(0, _and(r, g), j) for g, j in jumps]
    out.append(Transition(0, _and(r, none_hold), 0, fallback=True))
    return out


def build_dfa(psi: Seq, atoms: Sequence[str] | None = None, free_prefix: str = "r") -> Dfa:
    """Build the equisatisfiable DFA for a sequence formula, one item at a time.

    Appending an item only rewrites the edges of states whose successor set
    grows: the previous last state for an unstarred item after an unstarred
    one, and the trailing star block together with the state before it
    otherwise.
    """
    if not isinstance(psi, Seq):
        raise TypeError("build_dfa takes a sequence formula; lower && / || in the aig module")
    atoms = tuple(atoms) if atoms is not None else tuple(formula_atoms(psi))
    missing = [a for a in formula_atoms(psi) if a not in atoms]
    if missing:
        raise DfaError(f"formula uses atoms outside the atom set: {missing}")
    free = _free_atoms(psi, set(atoms), free_prefix)
    items = psi.items

    edges: dict[int, list[Transition]] = {}
    accepting: set[int] = set()
    for size in range(1, len(items) + 1):
        prefix = items[:size]
        new = prefix[-1]
        if size == 1:
            rewrite = [0, 1] if new.starred else [0]
            accepting = {0, 1} if new.starred else {1}
        elif not new.starred and not prefix[-2].starred:
            rewrite = [size - 1]
            accepting = {size}
        else:
            # star block ending at the new item, or at the one before it
            end = size if new.starred else size - 1
            first = end
            while first > 1 and prefix[first - 2].starred:
                first -= 1
            rewrite = list(range(first - 1, end + 1))
            accepting = accepting | {size} if new.starred else {size}
        for s in rewrite:
            edges[s] = _edges_from(prefix, s, free)

    n = len(items)
    if not items[-1].starred:
        # restart: the final state behaves like s0
        edges[n] = [Transition(n, t.guard, t.dst, fallback=True) for t in edges[0]]
    transitions = tuple(t for s in range(n + 1) for t in edges.get(s, []))
    assert accepting == accepting_indices(items)
    return Dfa(n + 1, frozenset(accepting), atoms, free, transitions, source=psi)


# --------------------------------------------------------------------------
# Validation and execution
# --------------------------------------------------------------------------

def validate_dfa(m: Dfa) -> list[Diagnostic]:
    """Check every state's guards are pairwise disjoint and jointly exhaustive.

    Enumerates valuations of the atoms that actually occur in the state's
    guards; the others cannot change which edge is enabled.
    """
    names = m.extended_atoms
    diags: list[Diagnostic] = []
    for s in m.states:
        out = m.outgoing(s)
        relevant = []
        for t in out:
            for a in term_atoms(t.guard):
                if a not in relevant:
                    relevant.append(a)
        unknown = [a for a in relevant if a not in names]
        if unknown:
            raise DfaError(f"guard at s{s} uses unknown atoms {unknown}")
        if len(relevant) > 20:
            raise DfaError(f"s{s}: {len(relevant)} guard atoms is beyond exhaustive checking")
        seen = set()
        for bits in product((False, True), repeat=len(relevant)):
            v = dict.fromkeys(names, False)
            v.update(zip(relevant, bits))
            enabled = tuple(i for i, t in enumerate(out) if eval_term(t.guard, v))
            kind = "gap" if not enabled else "overlap" if len(enabled) > 1 else None
            if kind and kind not in seen:
                seen.add(kind)
                diags.append(Diagnostic(kind, s, v, enabled))
    return diags


def _check_trace_atoms(m: Dfa, rho: Trace, expected: tuple[str, ...]):
    if set(rho.atoms) != set(expected):
        raise DfaError(f"trace atoms {list(rho.atoms)} do not match {list(expected)}")


def run_dfa(m: Dfa, rho_prime: Trace) -> tuple[bool, list[int]]:
    """Run from ``s0`` over a trace on the extended atom set."""
    _check_trace_atoms(m, rho_prime, m.extended_atoms)
    state = m.initial
    path = [state]
    for v in rho_prime:
        state = m.step(state, v)
        path.append(state)
    return state in m.accepting, path


def accepts_with_free(m: Dfa, rho: Trace) -> tuple[bool, Trace | None]:
    """Is there a per-step choice of free atoms under which ``m`` accepts ``rho``?

    Tracks the set of states reachable under some free-atom choice, then walks
    back from an accepting state to recover one concrete choice.
    """
    _check_trace_atoms(m, rho, m.atoms)
    free_names = m.free.names
    nf = len(free_names)
    table = m.table
    k = len(m.atoms)
    layers = [{m.initial: None}]
    for v in rho:
        base = sum(1 << i for i, a in enumerate(m.atoms) if v[a])
        nxt: dict[int, tuple[int, int]] = {}
        for s in layers[-1]:
            for f in range(1 << nf):
                d = table[s][base | (f << k)]
                if d not in nxt:
                    nxt[d] = (s, f)
        layers.append(nxt)
    final = [s for s in layers[-1] if s in m.accepting]
    if not final:
        return False, None
    state = min(final)
    choices = []
    for layer in reversed(layers[1:]):
        prev, f = layer[state]
        choices.append(f)
        state = prev
    choices.reverse()
    witness = Trace(free_names, [Valuation.from_index(free_names, f) for f in choices])
    return True, witness


# --------------------------------------------------------------------------
# Export
# --------------------------------------------------------------------------

def export_dot(m: Dfa, name: str = "dfa") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for s in m.states:
        shape = "doublecircle" if s in m.accepting else "circle"
        lines.append(f'  s{s} [shape={shape}, label="s{s}"];')
    lines.append(f"  __start -> s{m.initial};")
    for t in m.transitions:
        label = pretty_print(t.guard).replace("\\", "\\\\").replace('"', '\\"')
        style = ", style=dashed, color=gray40" if t.fallback else ""
        lines.append(f'  s{t.src} -> s{t.dst} [label="{label}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dfa_to_json(m: Dfa) -> str:
    doc = {
        "states": list(m.states),
        "initial": m.initial,
        "accepting": sorted(m.accepting),
        "atoms": list(m.atoms),
        "free_atoms": list(m.free.names),
        "transitions": [
            {"from": t.src, "guard": pretty_print(t.guard), "to": t.dst, "fallback": t.fallback}
            for t in m.transitions
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
