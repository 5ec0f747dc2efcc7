"""SERE syntax, text parser, and the reference trace-satisfaction oracle.

Terms are boolean combinations of atoms evaluated on a single valuation.
Formulas are flat sequences of ``(term, starred)`` items, optionally combined
with formula-level ``&&`` / ``||``.

The oracle functions :func:`satisfies` and :func:`ends_with_match` search every
decomposition of a trace exhaustively. They are meant to be obviously correct,
not fast.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from typing import Union

__all__ = [
    "Atom", "AtomRef", "Not", "And", "Or", "Const", "TRUE", "FALSE", "Term",
    "SereItem", "Seq", "FAnd", "FOr", "Formula",
    "Valuation", "Trace",
    "SereSyntaxError", "UnknownAtomError",
    "parse_sere", "parse_term", "pretty_print", "eval_term", "term_atoms",
    "formula_atoms", "satisfies", "ends_with_match",
    "read_trace", "write_trace", "read_spec_file",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class SereSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class UnknownAtomError(KeyError):
    """An identifier is not part of the declared atom set."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown atom {self.name!r}"


@dataclass(frozen=True)
class Atom:
    name: str

    def __post_init__(self):
        if not _IDENT.match(self.name):
            raise ValueError(f"invalid atom name {self.name!r}")

    def __str__(self) -> str:
        return self.name


# --------------------------------------------------------------------------
# Terms
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomRef:
    name: str


@dataclass(frozen=True)
class Not:
    arg: "Term"


@dataclass(frozen=True)
class And:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Or:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Const:
    """Constant guard; only produced by the automaton builder."""

    value: bool


TRUE = Const(True)
FALSE = Const(False)

Term = Union[AtomRef, Not, And, Or, Const]


# --------------------------------------------------------------------------
# Formulas
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SereItem:
    term: Term
    starred: bool = False


@dataclass(frozen=True)
class Seq:
    items: tuple[SereItem, ...]

    def __post_init__(self):
        if not self.items:
            raise ValueError("a sequence needs at least one item")
        object.__setattr__(self, "items", tuple(self.items))

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class FAnd:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class FOr:
    left: "Formula"
    right: "Formula"


Formula = Union[Seq, FAnd, FOr]


def term_atoms(term: Term) -> list[str]:
    """Atom names in first-occurrence order."""
    out: list[str] = []

    def walk(t):
        if isinstance(t, AtomRef):
            if t.name not in out:
                out.append(t.name)
        elif isinstance(t, Not):
            walk(t.arg)
        elif isinstance(t, (And, Or)):
            walk(t.left)
            walk(t.right)

    walk(term)
    return out


def formula_atoms(formula: Formula) -> list[str]:
    out: list[str] = []
    if isinstance(formula, Seq):
        for item in formula.items:
            for name in term_atoms(item.term):
                if name not in out:
                    out.append(name)
    else:
        for name in formula_atoms(formula.left) + formula_atoms(formula.right):
            if name not in out:
                out.append(name)
    return out


# --------------------------------------------------------------------------
# Valuations and traces
# --------------------------------------------------------------------------

class Valuation(Mapping):
    """Total, immutable assignment of booleans to a declared atom set."""

    __slots__ = ("_atoms", "_values")

    def __init__(self, atoms: Sequence[str], values):
        atoms = tuple(atoms)
        if isinstance(values, Mapping):
            missing = [a for a in atoms if a not in values]
            if missing:
                raise ValueError(f"valuation is missing atoms {missing}")
            extra = [k for k in values if k not in atoms]
            if extra:
                raise UnknownAtomError(extra[0])
            vals = tuple(bool(values[a]) for a in atoms)
        else:
            vals = tuple(bool(v) for v in values)
            if len(vals) != len(atoms):
                raise ValueError(f"expected {len(atoms)} values, got {len(vals)}")
        self._atoms = atoms
        self._values = vals

    @classmethod
    def from_true(cls, atoms: Sequence[str], true_atoms: Iterable[str]) -> "Valuation":
        true_atoms = set(true_atoms)
        unknown = true_atoms.difference(atoms)
        if unknown:
            raise UnknownAtomError(sorted(unknown)[0])
        return cls(atoms, [a in true_atoms for a in atoms])

    @classmethod
    def from_index(cls, atoms: Sequence[str], index: int) -> "Valuation":
        """Bit ``i`` of ``index`` is the value of ``atoms[i]``."""
        return cls(atoms, [(index >> i) & 1 for i in range(len(atoms))])

    @property
    def atoms(self) -> tuple[str, ...]:
        return self._atoms

    @property
    def values(self) -> tuple[bool, ...]:
        return self._values

    def index(self) -> int:
        return sum(1 << i for i, v in enumerate(self._values) if v)

    def __getitem__(self, name: str) -> bool:
        try:
            return self._values[self._atoms.index(name)]
        except ValueError:
            raise UnknownAtomError(name) from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._atoms)

    def __len__(self) -> int:
        return len(self._atoms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Valuation):
            return self._atoms == other._atoms and self._values == other._values
        return Mapping.__eq__(self, other)

    def __hash__(self) -> int:
        return hash((self._atoms, self._values))

    def __repr__(self) -> str:
        true = [a for a, v in zip(self._atoms, self._values) if v]
        return f"Valuation({{{', '.join(true)}}} of {list(self._atoms)})"

    def restrict(self, atoms: Sequence[str]) -> "Valuation":
        return Valuation(atoms, [self[a] for a in atoms])

    def extend(self, other: "Valuation") -> "Valuation":
        return Valuation(self._atoms + other._atoms, self._values + other._values)


class Trace(Sequence):
    """Finite sequence of valuations over one atom set; may be empty."""

    __slots__ = ("_atoms", "_steps")

    def __init__(self, atoms: Sequence[str], steps: Iterable = ()):
        self._atoms = tuple(atoms)
        out = []
        for step in steps:
            if isinstance(step, Valuation):
                if step.atoms != self._atoms:
                    raise ValueError("trace steps must share the trace atom set")
                out.append(step)
            else:
                out.append(Valuation(self._atoms, step))
        self._steps = tuple(out)

    @classmethod
    def from_true_sets(cls, atoms: Sequence[str], steps: Iterable[Iterable[str]]) -> "Trace":
        return cls(atoms, [Valuation.from_true(atoms, s) for s in steps])

    @property
    def atoms(self) -> tuple[str, ...]:
        return self._atoms

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trace(self._atoms, self._steps[i])
        return self._steps[i]

    def __len__(self) -> int:
        return len(self._steps)

    def __add__(self, other: "Trace") -> "Trace":
        if other.atoms != self._atoms:
            raise ValueError("cannot concatenate traces over different atom sets")
        return Trace(self._atoms, self._steps + other._steps)

    def __eq__(self, other) -> bool:
        return isinstance(other, Trace) and self._atoms == other._atoms and self._steps == other._steps

    def __hash__(self) -> int:
        return hash((self._atoms, self._steps))

    def __repr__(self) -> str:
        return f"Trace({list(self._atoms)}, {[s.values for s in self._steps]})"

    def project(self, atoms: Sequence[str]) -> "Trace":
        return Trace(atoms, [s.restrict(atoms) for s in self._steps])


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------

def eval_term(term: Term, v: Mapping[str, bool]) -> bool:
    if isinstance(term, AtomRef):
        try:
            return bool(v[term.name])
        except KeyError:
            raise UnknownAtomError(term.name) from None
    if isinstance(term, Not):
        return not eval_term(term.arg, v)
    if isinstance(term, And):
        return eval_term(term.left, v) and eval_term(term.right, v)
    if isinstance(term, Or):
        return eval_term(term.left, v) or eval_term(term.right, v)
    if isinstance(term, Const):
        return term.value
    raise TypeError(f"not a SERE term: {term!r}")


def _item_ends(holds, items, k, pos, length) -> Iterator[int]:
    """Yield every end position of an anchored match of ``items[k:]`` at ``pos``."""
    if k == len(items):
        yield pos
        return
    if not items[k].starred:
        if pos < length and holds[pos][k]:
            yield from _item_ends(holds, items, k + 1, pos + 1, length)
        return
    p = pos
    yield from _item_ends(holds, items, k + 1, p, length)
    while p < length and holds[p][k]:
        p += 1
        yield from _item_ends(holds, items, k + 1, p, length)


def _seq_matches(rho: Trace, seq: Seq, anchored_end: bool) -> bool:
    length = len(rho)
    holds = [[eval_term(item.term, step) for item in seq.items] for step in rho]
    for start in range(length + 1):
        for end in _item_ends(holds, seq.items, 0, start, length):
            if not anchored_end or end == length:
                return True
    return False


def satisfies(rho: Trace, psi: Formula) -> bool:
    """True iff some contiguous subtrace of ``rho`` matches ``psi``.

    Prefix and suffix are unconstrained; a Seq whose items are all starred is
    matched by the empty subtrace, so it holds on every trace.
    """
    if isinstance(psi, Seq):
        return _seq_matches(rho, psi, anchored_end=False)
    if isinstance(psi, FAnd):
        return satisfies(rho, psi.left) and satisfies(rho, psi.right)
    if isinstance(psi, FOr):
        return satisfies(rho, psi.left) or satisfies(rho, psi.right)
    raise TypeError(f"not a SERE formula: {psi!r}")


def ends_with_match(rho: Trace, psi: Formula) -> bool:
    """Like :func:`satisfies`, but the match must end at the last step."""
    if isinstance(psi, Seq):
        return _seq_matches(rho, psi, anchored_end=True)
    if isinstance(psi, FAnd):
        return ends_with_match(rho, psi.left) and ends_with_match(rho, psi.right)
    if isinstance(psi, FOr):
        return ends_with_match(rho, psi.left) or ends_with_match(rho, psi.right)
    raise TypeError(f"not a SERE formula: {psi!r}")


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(&&|\|\||[;*!&|()])|([A-Za-z_][A-Za-z0-9_]*)|([01])(?![A-Za-z0-9_]))")


@dataclass(frozen=True)
class _Tok:
    kind: str  # "op", "id", "const", "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line_starts = [0] + [i + 1 for i, ch in enumerate(text) if ch == "\n"]

    def where(offset):
        line = max(i for i, s in enumerate(line_starts) if s <= offset)
        return line + 1, offset - line_starts[line] + 1

    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise SereSyntaxError(f"unexpected character {text[pos]!r}", *where(pos))
        start = m.start(1) if m.group(1) else m.start(2) if m.group(2) else m.start(3)
        line, col = where(start)
        if m.group(1):
            toks.append(_Tok("op", m.group(1), line, col))
        elif m.group(2):
            toks.append(_Tok("id", m.group(2), line, col))
        else:
            toks.append(_Tok("const", m.group(3), line, col))
        pos = m.end()
    line, col = where(len(text))
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str, atoms: Iterable | None):
        self.toks = _tokenize(text)
        self.pos = 0
        self.atoms = None if atoms is None else {str(a) for a in atoms}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise SereSyntaxError(f"{message}, found {found}", tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            self.error(f"expected {text!r}")

    def finish(self):
        if self.tok.kind != "eof":
            self.error("unexpected token")

    # formula := seq { ("&&" | "||") seq }
    def formula(self) -> Formula:
        left = self.seq()
        while True:
            if self.accept("&&"):
                left = FAnd(left, self.seq())
            elif self.accept("||"):
                left = FOr(left, self.seq())
            else:
                return left

    # seq := item { ";" item } | "(" formula ")"
    def seq(self) -> Formula:
        if self.tok.kind == "op" and self.tok.text == "(":
            # A leading parenthesis opens either a term or a nested formula.
            mark = self.pos
            try:
                return self.items()
            except SereSyntaxError as term_err:
                self.pos = mark
                self.expect("(")
                inner = self.formula()
                if not self.accept(")"):
                    raise term_err
                return inner
        return self.items()

    def items(self) -> Seq:
        out = [self.item()]
        while self.accept(";"):
            out.append(self.item())
        if self.tok.kind == "op" and self.tok.text not in ("&&", "||", ")"):
            self.error("expected ';', '&&', '||' or end of formula")
        return Seq(tuple(out))

    # item := term [ "*" ]
    def item(self) -> SereItem:
        term = self.term()
        return SereItem(term, self.accept("*"))

    # term := disjunction of conjunctions of factors
    def term(self) -> Term:
        left = self.conj()
        while self.accept("|"):
            left = Or(left, self.conj())
        return left

    def conj(self) -> Term:
        left = self.factor()
        while self.accept("&"):
            left = And(left, self.factor())
        return left

    # factor := "!" factor | identifier | "0" | "1" | "(" term ")"
    def factor(self) -> Term:
        tok = self.tok
        if self.accept("!"):
            return Not(self.factor())
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        if tok.kind == "id":
            if self.atoms is not None and tok.text not in self.atoms:
                raise UnknownAtomError(tok.text)
            self.pos += 1
            return AtomRef(tok.text)
        if tok.kind == "const":
            self.pos += 1
            return Const(tok.text == "1")
        self.error("expected a term")


def parse_sere(text: str, atoms: Iterable | None = None) -> Formula:
    """Parse SERE text. ``atoms=None`` accepts any identifier."""
    p = _Parser(text, atoms)
    formula = p.formula()
    p.finish()
    return formula


def parse_term(text: str, atoms: Iterable | None = None) -> Term:
    p = _Parser(text, atoms)
    term = p.term()
    p.finish()
    return term


# --------------------------------------------------------------------------
# Pretty printer
# --------------------------------------------------------------------------

def _fmt_term(t: Term, pos: str = "top") -> str:
    # pos: where t sits -- "top", "or_l", "or_r", "and_l", "and_r" or "not"
    if isinstance(t, AtomRef):
        return t.name
    if isinstance(t, Const):
        return "1" if t.value else "0"
    if isinstance(t, Not):
        return "!" + _fmt_term(t.arg, "not")
    if isinstance(t, And):
        s = f"{_fmt_term(t.left, 'and_l')} & {_fmt_term(t.right, 'and_r')}"
        return f"({s})" if pos in ("and_r", "not") else s
    if isinstance(t, Or):
        s = f"{_fmt_term(t.left, 'or_l')} | {_fmt_term(t.right, 'or_r')}"
        return s if pos in ("top", "or_l") else f"({s})"
    raise TypeError(f"not a SERE term: {t!r}")


def _fmt_item(item: SereItem) -> str:
    if not item.starred:
        return _fmt_term(item.term)
    t = item.term
    if isinstance(t, (AtomRef, Const, Not)):
        return _fmt_term(t, "not") + "*"
    return f"({_fmt_term(t)})*"


def _fmt_formula(f: Formula, right_operand: bool) -> str:
    if isinstance(f, Seq):
        return " ; ".join(_fmt_item(i) for i in f.items)
    op = "&&" if isinstance(f, FAnd) else "||"
    s = f"{_fmt_formula(f.left, False)} {op} {_fmt_formula(f.right, True)}"
    return f"({s})" if right_operand else s


def pretty_print(obj) -> str:
    """Canonical text for a term, item, or formula; parses back to the same AST."""
    if isinstance(obj, (Seq, FAnd, FOr)):
        return _fmt_formula(obj, False)
    if isinstance(obj, SereItem):
        return _fmt_item(obj)
    return _fmt_term(obj)


# --------------------------------------------------------------------------
# File formats
# --------------------------------------------------------------------------

def _parse_atoms_header(line: str, lineno: int) -> list[str]:
    key, _, rest = line.partition(":")
    if key.strip() != "atoms" or not _:
        raise SereSyntaxError("expected header 'atoms: a,b,...'", lineno, 1)
    names = [n.strip() for n in rest.split(",") if n.strip()]
    for n in names:
        if not _IDENT.match(n):
            raise SereSyntaxError(f"invalid atom name {n!r}", lineno, 1)
    if len(set(names)) != len(names):
        raise SereSyntaxError("duplicate atom name in header", lineno, 1)
    return names


def read_trace(text: str) -> tuple[Trace, dict[str, str]]:
    """Parse the trace file format.

    Returns the trace and any ``# key: value`` comment annotations (for
    example ``reached_at`` in witness files).
    """
    atoms = None
    steps = []
    notes: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep and _IDENT.match(key.strip()):
                notes[key.strip()] = value.strip()
            continue
        if atoms is None:
            atoms = _parse_atoms_header(line, lineno)
            continue
        fields = [f.strip() for f in line.split(",")] if atoms else []
        if line and not atoms:
            raise SereSyntaxError("step values given for an empty atom set", lineno, 1)
        if len(fields) != len(atoms) or any(f not in ("0", "1") for f in fields):
            raise SereSyntaxError(f"expected {len(atoms)} comma-separated 0/1 values", lineno, 1)
        steps.append([f == "1" for f in fields])
    if atoms is None:
        raise SereSyntaxError("missing 'atoms:' header", 1, 1)
    return Trace(atoms, steps), notes


def write_trace(trace: Trace, notes: Mapping[str, object] | None = None) -> str:
    lines = [f"atoms: {','.join(trace.atoms)}"]
    for key, value in (notes or {}).items():
        lines.append(f"# {key}: {value}")
    for step in trace:
        lines.append(",".join("1" if v else "0" for v in step.values))
    return "\n".join(lines) + "\n"


def read_spec_file(text: str) -> tuple[Formula, list[str]]:
    """Parse a specification file: optional ``atoms:`` header, then SERE text.

    Without a header the atom set is every identifier, in first-use order.
    """
    atoms = None
    body = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if stripped.startswith("#"):
            body.append("")
            continue
        if not header_seen and stripped.startswith("atoms") and ":" in stripped:
            atoms = _parse_atoms_header(stripped, lineno)
            header_seen = True
            body.append("")
            continue
        if stripped:
            header_seen = True
        body.append(raw)
    source = "\n".join(body)
    formula = parse_sere(source, atoms)
    if atoms is None:
        atoms = formula_atoms(formula)
    return formula, atoms
