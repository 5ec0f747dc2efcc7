"""And-Inverter Graph circuits, ASCII AIGER I/O, and lowering of automata.

Literals follow the AIGER convention: ``2 * var`` is the variable,
``2 * var + 1`` its negation, ``0``/``1`` are the constants. Latches start at
zero. Circuits are kept in canonical numbering: inputs first, then latches,
then AND gates in topological order.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from .automaton import Dfa, build_dfa
from .sere import And, AtomRef, Const, FAnd, Formula, Not, Or, Seq, Term, formula_atoms

__all__ = [
    "AigError", "AigCircuit", "AigBuilder", "write_aiger", "read_aiger",
    "dfa_to_aig", "compose_outputs", "compose_miter", "lower_formula", "constant_circuit",
]

FALSE_LIT = 0
TRUE_LIT = 1


class AigError(ValueError):
    pass


@dataclass(frozen=True)
class AigCircuit:
    maxvar: int
    inputs: tuple[tuple[str, int], ...]
    latches: tuple[tuple[str, int, int], ...]  # (name, current, next)
    ands: tuple[tuple[int, int, int], ...]
    outputs: tuple[tuple[str, int], ...]
    free_inputs: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        limit = 2 * (self.maxvar + 1)
        declared = {0}
        for name, lit in self.inputs:
            declared.add(lit >> 1)
        for name, cur, nxt in self.latches:
            declared.add(cur >> 1)
        for lhs, a, b in self.ands:
            if lhs & 1:
                raise AigError(f"AND output literal {lhs} is negated")
            if not (a < lhs and b < lhs):
                raise AigError(f"AND {lhs} is not in topological order")
            for lit in (a, b):
                if lit >> 1 not in declared:
                    raise AigError(f"AND {lhs} reads undeclared variable {lit >> 1}")
            declared.add(lhs >> 1)
        for lit in [n for _, _, n in self.latches] + [o for _, o in self.outputs]:
            if lit >= limit:
                raise AigError(f"literal {lit} out of range for maxvar {self.maxvar}")
            if lit >> 1 not in declared:
                raise AigError(f"literal {lit} refers to an undeclared variable")

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.inputs)

    @property
    def output_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.outputs)

    def output(self, name: str) -> int:
        for n, lit in self.outputs:
            if n == name:
                return lit
        raise AigError(f"no output named {name!r}")


class AigBuilder:
    """Incremental circuit construction with structural hashing of AND gates."""

    def __init__(self):
        self._nvars = 0
        self._inputs: list[tuple[str, int]] = []
        self._latches: list[list] = []  # [name, var_lit, next_lit]
        self._ands: list[tuple[int, int, int]] = []
        self._strash: dict[tuple[int, int], int] = {}
        self._outputs: list[tuple[str, int]] = []
        self._input_by_name: dict[str, int] = {}

    def _new_var(self) -> int:
        self._nvars += 1
        return 2 * self._nvars

    def add_input(self, name: str) -> int:
        if name in self._input_by_name:
            return self._input_by_name[name]
        lit = self._new_var()
        self._inputs.append((name, lit))
        self._input_by_name[name] = lit
        return lit

    def input(self, name: str) -> int:
        return self._input_by_name[name]

    def add_latch(self, name: str) -> int:
        lit = self._new_var()
        self._latches.append([name, lit, None])
        return lit

    def set_next(self, latch: int, lit: int):
        for entry in self._latches:
            if entry[1] == latch:
                entry[2] = lit
                return
        raise AigError(f"{latch} is not a latch")

    def and_(self, a: int, b: int) -> int:
        if a > b:
            a, b = b, a
        if a == FALSE_LIT or a == b ^ 1:
            return FALSE_LIT
        if a == TRUE_LIT or a == b:
            return b
        key = (a, b)
        lit = self._strash.get(key)
        if lit is None:
            lit = self._new_var()
            self._ands.append((lit, b, a))
            self._strash[key] = lit
        return lit

    def or_(self, a: int, b: int) -> int:
        return self.and_(a ^ 1, b ^ 1) ^ 1

    def and_all(self, lits) -> int:
        out = TRUE_LIT
        for lit in lits:
            out = self.and_(out, lit)
        return out

    def or_all(self, lits) -> int:
        out = FALSE_LIT
        for lit in lits:
            out = self.or_(out, lit)
        return out

    def term(self, t: Term, atom_lits: Mapping[str, int]) -> int:
        if isinstance(t, AtomRef):
            return atom_lits[t.name]
        if isinstance(t, Const):
            return TRUE_LIT if t.value else FALSE_LIT
        if isinstance(t, Not):
            return self.term(t.arg, atom_lits) ^ 1
        if isinstance(t, And):
            return self.and_(self.term(t.left, atom_lits), self.term(t.right, atom_lits))
        if isinstance(t, Or):
            return self.or_(self.term(t.left, atom_lits), self.term(t.right, atom_lits))
        raise TypeError(f"not a term: {t!r}")

    def add_output(self, name: str, lit: int):
        self._outputs.append((name, lit))

    def import_circuit(self, c: AigCircuit, input_lits: Mapping[str, int]) -> dict[int, int]:
        """Copy ``c`` into this builder; its inputs are driven by ``input_lits``.

        Returns a map from ``c``'s positive literals to literals here.
        """
        lit_map = {0: 0}
        for name, lit in c.inputs:
            lit_map[lit] = input_lits[name]
        for name, cur, _ in c.latches:
            lit_map[cur] = self.add_latch(name)
        tr = lambda l: lit_map[l & ~1] ^ (l & 1)
        for lhs, a, b in c.ands:
            lit_map[lhs] = self.and_(tr(a), tr(b))
        for name, cur, nxt in c.latches:
            self.set_next(lit_map[cur], tr(nxt))
        return lit_map

    def build(self, free_inputs=()) -> AigCircuit:
        """Freeze into canonical numbering, dropping unreferenced AND gates."""
        for name, _, nxt in self._latches:
            if nxt is None:
                raise AigError(f"latch {name!r} has no next-state function")
        used = set()
        stack = [l for _, _, l in self._latches] + [l for _, l in self._outputs]
        gate = {lhs: (a, b) for lhs, a, b in self._ands}
        while stack:
            v = stack.pop() & ~1
            if v in used:
                continue
            used.add(v)
            if v in gate:
                stack.extend(gate[v])
        remap = {0: 0}
        nxt_var = 1
        for _, lit in self._inputs:
            remap[lit] = 2 * nxt_var
            nxt_var += 1
        for _, lit, _ in self._latches:
            remap[lit] = 2 * nxt_var
            nxt_var += 1
        ands = []
        for lhs, a, b in self._ands:
            if lhs not in used:
                continue
            remap[lhs] = 2 * nxt_var
            nxt_var += 1
            x, y = remap[a & ~1] ^ (a & 1), remap[b & ~1] ^ (b & 1)
            ands.append((remap[lhs], max(x, y), min(x, y)))
        tr = lambda l: remap[l & ~1] ^ (l & 1)
        return AigCircuit(
            maxvar=nxt_var - 1,
            inputs=tuple((n, remap[l]) for n, l in self._inputs),
            latches=tuple((n, remap[c], tr(x)) for n, c, x in self._latches),
            ands=tuple(ands),
            outputs=tuple((n, tr(l)) for n, l in self._outputs),
            free_inputs=frozenset(free_inputs),
        )


# --------------------------------------------------------------------------
# ASCII AIGER
# --------------------------------------------------------------------------

def write_aiger(c: AigCircuit) -> str:
    lines = [f"aag {c.maxvar} {len(c.inputs)} {len(c.latches)} {len(c.outputs)} {len(c.ands)}"]
    lines += [str(lit) for _, lit in c.inputs]
    lines += [f"{cur} {nxt}" for _, cur, nxt in c.latches]
    lines += [str(lit) for _, lit in c.outputs]
    lines += [f"{lhs} {a} {b}" for lhs, a, b in c.ands]
    lines += [f"i{k} {name}" for k, (name, _) in enumerate(c.inputs)]
    lines += [f"l{k} {name}" for k, (name, _, _) in enumerate(c.latches)]
    lines += [f"o{k} {name}" for k, (name, _) in enumerate(c.outputs)]
    if c.free_inputs:
        lines += ["c", "free " + " ".join(n for n in c.input_names if n in c.free_inputs)]
    return "\n".join(lines) + "\n"


def _ints(line: str, count: int, lineno: int, what: str) -> list[int]:
    parts = line.split()
    if len(parts) < count or not all(p.isdigit() for p in parts):
        raise AigError(f"line {lineno}: malformed {what} line {line!r}")
    return [int(p) for p in parts]


def read_aiger(text: str) -> AigCircuit:
    """Parse an ASCII AIGER file and return it in canonical numbering."""
    lines = text.splitlines()
    if not lines:
        raise AigError("empty AIGER file")
    header = lines[0].split()
    if len(header) < 6 or header[0] != "aag" or not all(h.isdigit() for h in header[1:6]):
        raise AigError(f"malformed header {lines[0]!r}")
    if len(header) > 6 and any(int(h) for h in header[6:] if h.isdigit()):
        raise AigError("bad/constraint/justice/fairness sections are not supported")
    M, I, L, O, A = (int(h) for h in header[1:6])
    if M < I + L + A:
        raise AigError(f"maxvar {M} is smaller than I + L + A")
    body = lines[1:]
    need = I + L + O + A
    if len(body) < need:
        raise AigError(f"expected {need} definition lines, found {len(body)}")
    limit = 2 * (M + 1)

    def check(lit, lineno):
        if lit >= limit:
            raise AigError(f"line {lineno}: literal {lit} exceeds 2*maxvar+1")
        return lit

    pos = 0
    inputs, latches, outputs, ands = [], [], [], []
    for _ in range(I):
        (lit,) = _ints(body[pos], 1, pos + 2, "input")[:1]
        if lit & 1 or lit < 2:
            raise AigError(f"line {pos + 2}: input literal {lit} must be even and positive")
        inputs.append(check(lit, pos + 2))
        pos += 1
    for _ in range(L):
        vals = _ints(body[pos], 2, pos + 2, "latch")
        cur, nxt = vals[0], vals[1]
        if cur & 1 or cur < 2:
            raise AigError(f"line {pos + 2}: latch literal {cur} must be even and positive")
        if len(vals) > 2 and vals[2] != 0:
            raise AigError(f"line {pos + 2}: only zero-initialised latches are supported")
        latches.append((check(cur, pos + 2), check(nxt, pos + 2)))
        pos += 1
    for _ in range(O):
        outputs.append(check(_ints(body[pos], 1, pos + 2, "output")[0], pos + 2))
        pos += 1
    for _ in range(A):
        lhs, a, b = _ints(body[pos], 3, pos + 2, "AND")[:3]
        if lhs & 1:
            raise AigError(f"line {pos + 2}: AND output literal {lhs} is odd")
        ands.append((check(lhs, pos + 2), check(a, pos + 2), check(b, pos + 2)))
        pos += 1

    names = {"i": {}, "l": {}, "o": {}}
    free: set[str] = set()
    in_comment = False
    for raw in body[pos:]:
        if in_comment:
            if raw.startswith("free "):
                free.update(raw.split()[1:])
            continue
        if raw == "c" or raw.startswith("c "):
            in_comment = True
            continue
        if raw and raw[0] in "ilo" and " " in raw:
            key, name = raw.split(" ", 1)
            if key[1:].isdigit():
                names[key[0]][int(key[1:])] = name
                continue
        if raw.strip():
            raise AigError(f"unexpected line {raw!r}")

    defined = {}
    for k, lit in enumerate(inputs):
        if lit >> 1 in defined:
            raise AigError(f"variable {lit >> 1} defined twice")
        defined[lit >> 1] = ("i", k)
    for k, (cur, _) in enumerate(latches):
        if cur >> 1 in defined:
            raise AigError(f"variable {cur >> 1} defined twice")
        defined[cur >> 1] = ("l", k)
    gate = {}
    for lhs, a, b in ands:
        if lhs >> 1 in defined or lhs >> 1 in gate:
            raise AigError(f"variable {lhs >> 1} defined twice")
        gate[lhs >> 1] = (a, b)

    # canonical renumbering: inputs, latches, then gates in topological order
    remap = {0: 0}
    for k, lit in enumerate(inputs):
        remap[lit >> 1] = 1 + k
    for k, (cur, _) in enumerate(latches):
        remap[cur >> 1] = 1 + I + k
    order = []
    mark = {}  # 1 = on the DFS stack, 2 = placed
    for lhs, _, _ in ands:
        root = lhs >> 1
        if mark.get(root) == 2:
            continue
        mark[root] = 1
        stack = [(root, iter(gate[root]))]
        while stack:
            var, deps = stack[-1]
            for lit in deps:
                d = lit >> 1
                if d in gate and mark.get(d) != 2:
                    if mark.get(d) == 1:
                        raise AigError(f"combinational cycle through variable {d}")
                    mark[d] = 1
                    stack.append((d, iter(gate[d])))
                    break
            else:
                stack.pop()
                mark[var] = 2
                order.append(var)
    for k, var in enumerate(order):
        remap[var] = 1 + I + L + k

    def tr(lit):
        if lit >> 1 not in remap:
            raise AigError(f"literal {lit} refers to an undefined variable")
        return 2 * remap[lit >> 1] + (lit & 1)

    new_ands = []
    for var in order:
        a, b = gate[var]
        a, b = tr(a), tr(b)
        new_ands.append((2 * remap[var], max(a, b), min(a, b)))

    in_names = [names["i"].get(k, f"i{k}") for k in range(I)]
    return AigCircuit(
        maxvar=I + L + len(order),
        inputs=tuple((in_names[k], 2 * (1 + k)) for k in range(I)),
        latches=tuple((names["l"].get(k, f"l{k}"), 2 * (1 + I + k), tr(nxt))
                      for k, (_, nxt) in enumerate(latches)),
        ands=tuple(new_ands),
        outputs=tuple((names["o"].get(k, f"o{k}"), tr(lit)) for k, lit in enumerate(outputs)),
        free_inputs=frozenset(free & set(in_names)),
    )


# --------------------------------------------------------------------------
# Lowering and composition
# --------------------------------------------------------------------------

def dfa_to_aig(m: Dfa) -> AigCircuit:
    """Binary-encoded state register; ``s0`` is the all-zero code.

    Codes that name no state have no enabled transition term, so every next
    bit is false and the register falls back to ``s0``.
    """
    b = AigBuilder()
    atom_lits = {name: b.add_input(name) for name in m.extended_atoms}
    nbits = max(1, math.ceil(math.log2(m.n_states)))
    regs = [b.add_latch(f"state{j}") for j in range(nbits)]

    def is_state(s):
        return b.and_all(reg if (s >> j) & 1 else reg ^ 1 for j, reg in enumerate(regs))

    codes = {s: is_state(s) for s in m.states}
    next_terms = [[] for _ in regs]
    for t in m.transitions:
        fire = b.and_(codes[t.src], b.term(t.guard, atom_lits))
        for j in range(nbits):
            if (t.dst >> j) & 1:
                next_terms[j].append(fire)
    for reg, terms in zip(regs, next_terms):
        b.set_next(reg, b.or_all(terms))
    accept = b.or_all(codes[s] for s in sorted(m.accepting))
    b.add_output("accept", accept)
    b.add_output("bad", accept ^ 1)
    return b.build(free_inputs=m.free.names)


def constant_circuit(value: bool, inputs: Sequence[str] = ()) -> AigCircuit:
    b = AigBuilder()
    for name in inputs:
        b.add_input(name)
    lit = TRUE_LIT if value else FALSE_LIT
    b.add_output("accept", lit)
    b.add_output("bad", lit ^ 1)
    return b.build()


def _latch_names(c: AigCircuit) -> set[str]:
    return {n for n, _, _ in c.latches}


def compose_outputs(op: str, c1: AigCircuit, c2: AigCircuit) -> AigCircuit:
    """One circuit whose ``accept`` is ``c1.accept`` AND/OR ``c2.accept``.

    Inputs with the same name are merged.
    """
    if op not in ("and", "or"):
        raise AigError(f"unknown composition {op!r}")
    for x, y in ((c1, c2), (c2, c1)):
        clash = set(x.input_names) & _latch_names(y)
        if clash:
            raise AigError(f"name used both as input and latch: {sorted(clash)}")
    b = AigBuilder()
    names = list(c1.input_names) + [n for n in c2.input_names if n not in c1.input_names]
    lits = {n: b.add_input(n) for n in names}
    map1 = b.import_circuit(c1, lits)
    map2 = b.import_circuit(c2, lits)
    a1 = c1.output("accept")
    a2 = c2.output("accept")
    a1 = map1[a1 & ~1] ^ (a1 & 1)
    a2 = map2[a2 & ~1] ^ (a2 & 1)
    accept = b.and_(a1, a2) if op == "and" else b.or_(a1, a2)
    b.add_output("accept", accept)
    b.add_output("bad", accept ^ 1)
    return b.build(free_inputs=c1.free_inputs | c2.free_inputs)


def compose_miter(design: AigCircuit, spec: AigCircuit, binding: Mapping[str, str]) -> AigCircuit:
    """Drive the spec's atom inputs from design outputs.

    ``binding`` maps spec atom names to design output names. The spec's free
    inputs stay primary inputs next to the design's inputs.
    """
    design_outputs = dict(design.outputs)
    for atom, out in binding.items():
        if atom not in spec.input_names:
            raise AigError(f"binding names {atom!r}, which is not a spec input")
        if out not in design_outputs:
            raise AigError(f"binding for {atom!r} names missing design output {out!r}")
    unbound = [n for n in spec.input_names if n not in spec.free_inputs and n not in binding]
    if unbound:
        raise AigError(f"unbound spec atoms: {unbound}")
    clash = set(design.input_names) & set(spec.free_inputs)
    if clash:
        raise AigError(f"design inputs clash with spec free atoms: {sorted(clash)}")

    b = AigBuilder()
    d_lits = {n: b.add_input(n) for n in design.input_names}
    f_lits = {n: b.add_input(n) for n in spec.input_names if n in spec.free_inputs}
    d_map = b.import_circuit(design, d_lits)
    s_inputs = dict(f_lits)
    for atom, out in binding.items():
        lit = design_outputs[out]
        s_inputs[atom] = d_map[lit & ~1] ^ (lit & 1)
    s_map = b.import_circuit(spec, s_inputs)
    for name in ("accept", "bad"):
        if name in spec.output_names:
            lit = spec.output(name)
            b.add_output(name, s_map[lit & ~1] ^ (lit & 1))
    return b.build(free_inputs=f_lits)


def lower_formula(psi: Formula, atoms: Sequence[str] | None = None) -> AigCircuit:
    """Lower a formula: each sequence becomes a DFA circuit, ``&&``/``||``
    combine their ``accept`` outputs.

    Each sequence gets its own free atoms so the branches can pick match
    starts and star jumps independently.
    """
    atoms = tuple(atoms) if atoms is not None else tuple(formula_atoms(psi))
    if isinstance(psi, Seq):
        return dfa_to_aig(build_dfa(psi, atoms))
    counter = [0]

    def lower(f):
        if isinstance(f, Seq):
            counter[0] += 1
            return dfa_to_aig(build_dfa(f, atoms, free_prefix=f"p{counter[0]}r"))
        op = "and" if isinstance(f, FAnd) else "or"
        return compose_outputs(op, lower(f.left), lower(f.right))

    return lower(psi)
