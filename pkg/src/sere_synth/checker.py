"""Circuit simulation, bounded reachability, and the equisatisfiability harness.

Simulation is bit-parallel: every signal is a row of packed uint64 words, one
bit per simulated input pattern, so all input valuations of a step (or all
traces of a given length) are evaluated in one pass over the AND gates.

Output timing: the value reported at time ``t`` is computed from the latch
state reached after ``t`` steps, with step ``t``'s inputs still applied
(inputs are all false at time 0).
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .aig import AigCircuit, AigError
from .automaton import Dfa, accepts_with_free, build_dfa
from .sere import (
    Seq, Trace, Valuation, ends_with_match, pretty_print, satisfies, write_trace,
)

__all__ = [
    "Witness", "Unreachable", "ScaleError", "aig_simulate", "aig_run", "check_reach",
    "replay_witness", "simulate_all_traces", "dfa_final_states", "lowering_mismatch",
    "LengthResult", "Report", "equisat_check",
]

_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


class ScaleError(ValueError):
    """Request exceeds what exhaustive enumeration is meant to handle."""


# --------------------------------------------------------------------------
# Bit-parallel evaluation
# --------------------------------------------------------------------------

class _Compiled:
    def __init__(self, c: AigCircuit):
        self.circuit = c
        self.ands = np.ascontiguousarray(np.array(c.ands, dtype=np.int32).reshape(-1, 3))
        self.in_vars = np.array([lit >> 1 for _, lit in c.inputs], dtype=np.intp)
        self.latch_vars = np.array([cur >> 1 for _, cur, _ in c.latches], dtype=np.intp)
        self.latch_next = [nxt for _, _, nxt in c.latches]

    def evaluate(self, input_words: np.ndarray, latch_words: np.ndarray) -> np.ndarray:
        width = input_words.shape[1] if input_words.size else latch_words.shape[1] if latch_words.size else 1
        vals = np.zeros((self.circuit.maxvar + 1, width), dtype=np.uint64)
        if len(self.in_vars):
            vals[self.in_vars] = input_words
        if len(self.latch_vars):
            vals[self.latch_vars] = latch_words
        kernels.eval_ands(self.ands, vals)
        return vals

    @staticmethod
    def lit(vals: np.ndarray, lit: int) -> np.ndarray:
        row = vals[lit >> 1]
        return ~row if lit & 1 else row.copy()

    def next_latches(self, vals: np.ndarray) -> np.ndarray:
        width = vals.shape[1]
        if not self.latch_next:
            return np.zeros((0, width), dtype=np.uint64)
        return np.stack([self.lit(vals, n) for n in self.latch_next])


_LOW_MASKS = [sum(1 << j for j in range(64) if (j >> b) & 1) for b in range(6)]


def _pattern_words(nbits: int, count: int, start: int = 0) -> np.ndarray:
    """Row ``b`` holds bit ``b`` of the pattern indices ``start .. start+count-1``."""
    width = max(1, math.ceil(count / 64))
    rows = np.empty((nbits, width), dtype=np.uint64)
    if start % 64 == 0:
        # low bits repeat inside every word, high bits are constant per word
        word_idx = np.arange(start // 64, start // 64 + width, dtype=np.uint64)
        for b in range(nbits):
            if b < 6:
                rows[b] = np.uint64(_LOW_MASKS[b])
            else:
                rows[b] = np.where((word_idx >> np.uint64(b - 6)) & np.uint64(1), _ONES, np.uint64(0))
        return rows
    idx = np.arange(start, start + width * 64, dtype=np.uint64)
    for b in range(nbits):
        bits = ((idx >> np.uint64(b)) & np.uint64(1)).astype(np.uint8)
        rows[b] = np.packbits(bits, bitorder="little").view(np.uint64)
    return rows


def _unpack(words: np.ndarray, count: int) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), bitorder="little")[:count].astype(bool)


def _broadcast(bits: Sequence[bool], width: int) -> np.ndarray:
    out = np.zeros((len(bits), width), dtype=np.uint64)
    for j, b in enumerate(bits):
        if b:
            out[j] = _ONES
    return out


# --------------------------------------------------------------------------
# Simulation
# --------------------------------------------------------------------------

def _input_bits(c: AigCircuit, v: Mapping[str, bool]) -> list[bool]:
    try:
        return [bool(v[name]) for name in c.input_names]
    except KeyError as exc:
        raise AigError(f"missing value for input {exc.args[0]!r}") from None


def aig_run(c: AigCircuit, inputs: Sequence[Mapping[str, bool]]):
    """Simulate from all-zero latches.

    Returns ``(outputs, states)``: ``len(inputs) + 1`` output dicts (time 0
    first) and the latch bit tuples at each time.
    """
    comp = _Compiled(c)
    latches = np.zeros((len(c.latches), 1), dtype=np.uint64)
    zero_in = np.zeros((len(c.inputs), 1), dtype=np.uint64)
    vals = comp.evaluate(zero_in, latches)

    def sample(vals):
        return {name: bool(comp.lit(vals, lit)[0] & np.uint64(1)) for name, lit in c.outputs}

    def latch_bits(words):
        return tuple(bool(w[0] & np.uint64(1)) for w in words)

    outputs = [sample(vals)]
    states = [latch_bits(latches)]
    for v in inputs:
        words = _broadcast(_input_bits(c, v), 1)
        latches = comp.next_latches(comp.evaluate(words, latches))
        outputs.append(sample(comp.evaluate(words, latches)))
        states.append(latch_bits(latches))
    return outputs, states


def aig_simulate(c: AigCircuit, inputs: Sequence[Mapping[str, bool]]) -> list[dict[str, bool]]:
    return aig_run(c, inputs)[0]


def simulate_all_traces(c: AigCircuit, atom_order: Sequence[str], length: int,
                        output: str = "accept") -> np.ndarray:
    """Value of ``output`` after every trace of ``length`` steps.

    Trace ``i`` gives input ``atom_order[k]`` the value of bit
    ``len(atom_order) * t + k`` of ``i`` at step ``t``.
    """
    return _simulate_outputs(c, atom_order, length, (output,))[output]


def _simulate_outputs(c: AigCircuit, atom_order: Sequence[str], length: int,
                      outputs: Sequence[str]) -> dict[str, np.ndarray]:
    k = len(atom_order)
    missing = set(c.input_names) - set(atom_order)
    if missing:
        raise AigError(f"inputs not covered by the atom order: {sorted(missing)}")
    total = k * length
    if total > 26:
        raise ScaleError(f"2^{total} traces is too many to simulate exhaustively")
    count = 1 << total
    comp = _Compiled(c)
    patterns = _pattern_words(total, count)
    width = patterns.shape[1]
    pos = {name: j for j, name in enumerate(atom_order)}
    col = [pos[name] for name in c.input_names]
    latches = np.zeros((len(c.latches), width), dtype=np.uint64)
    words = np.zeros((len(c.inputs), width), dtype=np.uint64)
    for t in range(length):
        words = patterns[[k * t + j for j in col]] if col else words
        latches = comp.next_latches(comp.evaluate(words, latches))
    if length == 0:
        words = np.zeros((len(c.inputs), width), dtype=np.uint64)
    vals = comp.evaluate(words, latches)
    return {name: _unpack(comp.lit(vals, c.output(name)), count) for name in outputs}


def dfa_final_states(m: Dfa, length: int, start: int = 0, count: int | None = None) -> np.ndarray:
    """Final state of ``m`` on extended traces ``start .. start+count-1``.

    Trace indices use the same bit layout as :func:`simulate_all_traces` with
    ``m.extended_atoms`` as the atom order.
    """
    nbits = len(m.extended_atoms)
    if count is None:
        count = 1 << (nbits * length)
    table = np.ascontiguousarray(np.array(m.table, dtype=np.int32))
    out = np.empty(count, dtype=np.int32)
    kernels.dfa_final_states(table, nbits, length, start, out)
    return out


def lowering_mismatch(m: Dfa, c: AigCircuit, max_len: int) -> tuple[int, int] | None:
    """First ``(length, trace index)`` where the DFA and its circuit disagree."""
    acc = np.zeros(m.n_states, dtype=bool)
    acc[list(m.accepting)] = True
    for length in range(max_len + 1):
        dfa_acc = acc[dfa_final_states(m, length)]
        sim = _simulate_outputs(c, m.extended_atoms, length, ("accept", "bad"))
        # the bad output must be the exact negation of accept
        bad = np.flatnonzero((dfa_acc != sim["accept"]) | (sim["bad"] == sim["accept"]))
        if bad.size:
            return length, int(bad[0])
    return None


# --------------------------------------------------------------------------
# Bounded reachability
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    target: str
    steps: tuple[Valuation, ...]
    states: tuple[tuple[bool, ...], ...]
    reached_at: int

    def __post_init__(self):
        if len(self.states) != len(self.steps) + 1:
            raise ValueError("a witness needs one more state than steps")

    def to_text(self, input_names: Sequence[str]) -> str:
        trace = Trace(input_names, [s.restrict(input_names) for s in self.steps])
        return write_trace(trace, {"target": self.target, "reached_at": self.reached_at})


@dataclass(frozen=True)
class Unreachable:
    bound: int
    target: str = "accept"


def _code(bits: Sequence[bool]) -> int:
    return sum(1 << j for j, b in enumerate(bits) if b)


def _bits(code: int, n: int) -> tuple[bool, ...]:
    return tuple(bool((code >> j) & 1) for j in range(n))


def check_reach(c: AigCircuit, target: str, bound: int, input_cap: int = 12) -> Witness | Unreachable:
    """Breadth-first search for the shortest input sequence asserting ``target``.

    Ties are broken by discovery order of states and then by the numeric
    value of the input valuation (first input is the least significant bit).
    """
    target_lit = c.output(target)
    n_in = len(c.inputs)
    n_latch = len(c.latches)
    if n_in > input_cap:
        raise ScaleError(f"{n_in} inputs exceeds the enumeration cap of {input_cap}")
    if bound < 0:
        raise ValueError("bound must be non-negative")
    comp = _Compiled(c)
    names = c.input_names

    zero_in = np.zeros((n_in, 1), dtype=np.uint64)
    init = np.zeros((n_latch, 1), dtype=np.uint64)
    if comp.lit(comp.evaluate(zero_in, init), target_lit)[0] & np.uint64(1):
        return Witness(target, (), (_bits(0, n_latch),), 0)

    n_pat = 1 << n_in
    patterns = _pattern_words(n_in, n_pat)
    width = patterns.shape[1]
    parent: dict[int, tuple[int, int] | None] = {0: None}
    frontier = [0]

    def witness(state, u, nxt):
        path = [(state, u)]
        while parent[path[-1][0]] is not None:
            path.append(parent[path[-1][0]])
        path.reverse()
        steps = tuple(Valuation.from_index(names, uu) for _, uu in path)
        states = tuple(_bits(s, n_latch) for s, _ in path) + (_bits(nxt, n_latch),)
        return Witness(target, steps, states, len(steps))

    for _ in range(bound):
        new_frontier = []
        for state in frontier:
            latches = _broadcast(_bits(state, n_latch), width)
            nxt = comp.next_latches(comp.evaluate(patterns, latches))
            hit = _unpack(comp.lit(comp.evaluate(patterns, nxt), target_lit), n_pat)
            codes = np.zeros(n_pat, dtype=np.int64)
            for j in range(n_latch):
                codes |= _unpack(nxt[j], n_pat).astype(np.int64) << j
            if hit.any():
                u = int(np.argmax(hit))
                return witness(state, u, int(codes[u]))
            for u in range(n_pat):
                code = int(codes[u])
                if code not in parent:
                    parent[code] = (state, u)
                    new_frontier.append(code)
        if not new_frontier:
            break
        frontier = new_frontier
    return Unreachable(bound, target)


def replay_witness(c: AigCircuit, w: Witness) -> bool:
    outputs, states = aig_run(c, w.steps)
    return tuple(states) == w.states and outputs[w.reached_at][w.target]


# --------------------------------------------------------------------------
# Equisatisfiability harness
# --------------------------------------------------------------------------

@dataclass
class LengthResult:
    length: int
    p1: bool
    p2: bool
    p3: bool
    counterexample: dict | None = None

    @property
    def ok(self) -> bool:
        return self.p1 and self.p2 and self.p3


@dataclass
class Report:
    formula: str
    lengths: list[LengthResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.lengths)

    def to_json(self) -> str:
        doc = {"formula": self.formula, "lengths": []}
        for r in self.lengths:
            entry = {"L": r.length, "p1": r.p1, "p2": r.p2, "p3": r.p3}
            if r.counterexample is not None:
                entry["counterexample"] = r.counterexample
            doc["lengths"].append(entry)
        return json.dumps(doc, indent=2) + "\n"

    def to_text(self) -> str:
        mark = lambda ok: "pass" if ok else "FAIL"
        lines = [f"formula: {self.formula}"]
        for r in self.lengths:
            lines.append(f"  L={r.length}: P1 {mark(r.p1)}  P2 {mark(r.p2)}  P3 {mark(r.p3)}")
            if r.counterexample is not None:
                cx = r.counterexample
                lines.append(f"    {cx['property']} counterexample over {cx['atoms']}: {cx['trace']}")
        lines.append("result: " + ("all properties hold" if self.ok else "FAILED"))
        return "\n".join(lines) + "\n"


def _trace_of(index: int, atoms: Sequence[str], length: int) -> Trace:
    k = len(atoms)
    mask = (1 << k) - 1
    return Trace(atoms, [Valuation.from_index(atoms, (index >> (k * t)) & mask) for t in range(length)])


def _rows(trace: Trace) -> list[list[int]]:
    return [[int(v) for v in step.values] for step in trace]


_CHUNK = 1 << 22


def equisat_check(psi: Seq, max_len: int, atoms: Sequence[str] | None = None,
                  dfa: Dfa | None = None) -> Report:
    """Exhaustively compare ``psi`` with its automaton on short traces.

    For every length ``L <= max_len``:

    * P1: every trace over the atoms whose match ends at the last step is
      accepted for some choice of free atoms;
    * P2: every accepted trace over the extended atoms satisfies ``psi`` once
      the free atoms are dropped;
    * P3: ``psi`` has a satisfying trace of length ``L`` iff the automaton
      accepts some extended trace of length ``L``.
    """
    if not isinstance(psi, Seq):
        raise TypeError("equisat_check takes a sequence formula")
    m = dfa if dfa is not None else build_dfa(psi, atoms)
    atoms = m.atoms
    if len(atoms) > 3:
        raise ScaleError(f"{len(atoms)} atoms; exhaustive checking supports at most 3")
    if max_len > 5:
        raise ScaleError(f"max_len {max_len}; exhaustive checking supports at most 5")
    k = len(atoms)
    nbits = len(m.extended_atoms)
    accepting = np.zeros(m.n_states, dtype=bool)
    accepting[list(m.accepting)] = True
    report = Report(pretty_print(psi))

    for length in range(max_len + 1):
        n_plain = 1 << (k * length)
        sat = np.zeros(n_plain, dtype=bool)
        result = LengthResult(length, True, True, True)
        for idx in range(n_plain):
            rho = _trace_of(idx, atoms, length)
            sat[idx] = satisfies(rho, psi)
            if result.p1 and ends_with_match(rho, psi) and not accepts_with_free(m, rho)[0]:
                result.p1 = False
                result.counterexample = {"property": "P1", "atoms": list(atoms), "trace": _rows(rho)}

        # P2 / P3: every extended trace, in chunks
        total = 1 << (nbits * length)
        any_accepted = False
        amask = np.uint64((1 << k) - 1)
        for start in range(0, total, _CHUNK):
            count = min(_CHUNK, total - start)
            final = dfa_final_states(m, length, start, count)
            hit = np.flatnonzero(accepting[final])
            if not hit.size:
                continue
            any_accepted = True
            ext = hit.astype(np.uint64) + np.uint64(start)
            proj = np.zeros(hit.size, dtype=np.uint64)
            for t in range(length):
                step = (ext >> np.uint64(nbits * t)) & amask
                proj |= step << np.uint64(k * t)
            bad = np.flatnonzero(~sat[proj.astype(np.intp)])
            if bad.size and result.p2:
                result.p2 = False
                if result.counterexample is None:
                    rho_ext = _trace_of(int(ext[bad[0]]), m.extended_atoms, length)
                    result.counterexample = {"property": "P2", "atoms": list(m.extended_atoms),
                                             "trace": _rows(rho_ext)}
        result.p3 = bool(sat.any()) == any_accepted
        if not result.p3 and result.counterexample is None:
            if sat.any():
                rho = _trace_of(int(np.argmax(sat)), atoms, length)
                result.counterexample = {"property": "P3", "atoms": list(atoms), "trace": _rows(rho)}
            else:
                result.counterexample = {"property": "P3", "atoms": list(m.extended_atoms),
                                         "trace": None}
        report.lengths.append(result)
    return report
