"""Command-line front end: parse, dfa, aig, check, oracle, compare, simulate.

Exit codes: 0 success (for ``check``: target reached), 1 error or failed
verification, 2 target unreachable within the bound.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .aig import AigError, compose_miter, lower_formula, read_aiger, write_aiger
from .automaton import DfaError, build_dfa, dfa_to_json, export_dot
from .baseline import SubsetBlowupError, build_nfa, subset_construct
from .checker import ScaleError, Unreachable, aig_run, check_reach, equisat_check
from .sere import (
    Seq, SereSyntaxError, UnknownAtomError, pretty_print, read_spec_file, read_trace,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNREACHABLE = 2

CONFIG_ENV = "SERE_SYNTH_CONFIG"


class CliError(Exception):
    pass


@dataclass
class Config:
    input_cap: int = 12
    subset_cap: int = 4096
    bound: int = 32

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise CliError(f"config value {f.name} must be positive")


def load_config(path: str | None = None) -> Config:
    """Defaults, overridden by ``key=value`` lines from ``path`` or ``$SERE_SYNTH_CONFIG``."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return Config()
    known = {f.name for f in fields(Config)}
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in known:
            raise CliError(f"{path}:{lineno}: expected one of {sorted(known)} as key=value")
        try:
            values[key] = int(value.strip())
        except ValueError:
            raise CliError(f"{path}:{lineno}: {key} must be an integer") from None
    return Config(**values)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, text: str):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None


def _load_spec(path: str):
    try:
        return read_spec_file(_read(path))
    except SereSyntaxError as exc:
        raise CliError(f"{path}:{exc.line}:{exc.column}: {exc.message}") from None
    except UnknownAtomError as exc:
        raise CliError(f"{path}: {exc}") from None


def _load_seq(path: str) -> tuple[Seq, list[str]]:
    psi, atoms = _load_spec(path)
    if not isinstance(psi, Seq):
        raise CliError(f"{path}: this command needs a plain sequence (no && or ||)")
    return psi, atoms


def _seq_branches(psi):
    if isinstance(psi, Seq):
        return [psi]
    return _seq_branches(psi.left) + _seq_branches(psi.right)


def _parse_binding(text: str | None, atoms, design) -> dict[str, str]:
    """``a=out1,b=out2``; atoms left out bind to a design output of the same name."""
    binding = {}
    if text:
        for part in text.split(","):
            atom, sep, out = part.partition("=")
            if not sep or not atom.strip() or not out.strip():
                raise CliError(f"bad binding {part!r}; expected atom=output")
            binding[atom.strip()] = out.strip()
    for a in atoms:
        if a not in binding and a in design.output_names:
            binding[a] = a
    return binding


def _miter(args):
    psi, atoms = _load_spec(args.spec)
    spec = lower_formula(psi, atoms)
    design = read_aiger(_read(args.design))
    binding = _parse_binding(args.bind, atoms, design)
    return compose_miter(design, spec, binding)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_parse(args, cfg) -> int:
    psi, _ = _load_spec(args.spec)
    print(pretty_print(psi))
    return EXIT_OK


def cmd_dfa(args, cfg) -> int:
    psi, atoms = _load_seq(args.spec)
    m = build_dfa(psi, atoms)
    if args.dot:
        _write(args.dot, export_dot(m))
    if args.json:
        _write(args.json, dfa_to_json(m))
    if not (args.dot or args.json):
        sys.stdout.write(dfa_to_json(m))
    return EXIT_OK


def cmd_aig(args, cfg) -> int:
    psi, atoms = _load_spec(args.spec)
    text = write_aiger(lower_formula(psi, atoms))
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check(args, cfg) -> int:
    c = _miter(args)
    if args.miter:
        _write(args.miter, write_aiger(c))
    bound = args.bound if args.bound is not None else cfg.bound
    result = check_reach(c, args.target, bound, input_cap=cfg.input_cap)
    if isinstance(result, Unreachable):
        print(f"{args.target}: unreachable within {bound} steps")
        return EXIT_UNREACHABLE
    print(f"{args.target}: reached at step {result.reached_at}")
    text = result.to_text(c.input_names)
    if args.witness:
        _write(args.witness, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args, cfg) -> int:
    psi, atoms = _load_spec(args.spec)
    reports = [equisat_check(branch, args.max_len, atoms) for branch in _seq_branches(psi)]
    for r in reports:
        sys.stdout.write(r.to_json() if args.json else r.to_text())
    return EXIT_OK if all(r.ok for r in reports) else EXIT_ERROR


def cmd_compare(args, cfg) -> int:
    psi, atoms = _load_seq(args.spec)
    m = build_dfa(psi, atoms)
    nfa = build_nfa(psi, atoms)
    try:
        subset = str(subset_construct(nfa, cap=cfg.subset_cap).n_states)
    except SubsetBlowupError:
        subset = f">{cfg.subset_cap}"
    rows = [
        ("construction", "states", "free atoms"),
        ("free-atom DFA", str(m.n_states), str(len(m.free))),
        ("NFA (s0 self-loop)", str(nfa.n_states), "0"),
        ("subset DFA", subset, "0"),
    ]
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    print(f"formula: {pretty_print(psi)}")
    for name, states, free in rows:
        print(f"{name:<{w0}}  {states:>{w1}}  {free}")
    return EXIT_OK


def cmd_simulate(args, cfg) -> int:
    if args.spec:
        args.design = args.circuit
        c = _miter(args)
    else:
        c = read_aiger(_read(args.circuit))
    try:
        trace, notes = read_trace(_read(args.trace))
    except SereSyntaxError as exc:
        raise CliError(f"{args.trace}:{exc.line}:{exc.column}: {exc.message}") from None
    missing = [n for n in c.input_names if n not in trace.atoms]
    if missing:
        raise CliError(f"trace has no values for inputs {missing}")
    outputs, _ = aig_run(c, list(trace))
    names = list(c.output_names)
    print("t  " + " ".join(names))
    for t, out in enumerate(outputs):
        print(f"{t:<2} " + " ".join(f"{int(out[n]):>{len(n)}}" for n in names))
    if "reached_at" not in notes:
        return EXIT_OK
    target = notes.get("target", "accept")
    if target not in names:
        raise CliError(f"trace names unknown target {target!r}")
    try:
        at = int(notes["reached_at"])
    except ValueError:
        raise CliError("reached_at must be an integer") from None
    if not 0 <= at < len(outputs):
        raise CliError(f"reached_at {at} is outside the trace")
    if outputs[at][target]:
        print(f"verified: {target} asserted at step {at}")
        return EXIT_OK
    print(f"mismatch: {target} not asserted at step {at}")
    return EXIT_ERROR


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sere-synth", description=__doc__.splitlines()[0])
    p.add_argument("--config", help=f"key=value config file (default: ${CONFIG_ENV})")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("parse", help="echo the formula in canonical form")
    s.add_argument("spec")
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("dfa", help="build the free-atom DFA")
    s.add_argument("spec")
    s.add_argument("--dot", metavar="FILE")
    s.add_argument("--json", metavar="FILE")
    s.set_defaults(func=cmd_dfa)

    s = sub.add_parser("aig", help="lower the formula to an AIGER circuit")
    s.add_argument("spec")
    s.add_argument("-o", "--output", metavar="FILE")
    s.set_defaults(func=cmd_aig)

    s = sub.add_parser("check", help="miter with a design and search for the target")
    s.add_argument("spec")
    s.add_argument("--design", required=True, metavar="AAG")
    s.add_argument("--bind", metavar="ATOM=OUT,...")
    s.add_argument("--bound", type=int)
    s.add_argument("--target", choices=("accept", "bad"), default="accept")
    s.add_argument("--witness", metavar="FILE")
    s.add_argument("--miter", metavar="FILE", help="also write the mitered circuit")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("oracle", help="exhaustive equisatisfiability check")
    s.add_argument("spec")
    s.add_argument("--max-len", type=int, default=4)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("compare", help="state counts against the subset construction")
    s.add_argument("spec")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("simulate", help="replay a trace or witness on a circuit")
    s.add_argument("circuit", help="AIGER file (the design when --spec is given)")
    s.add_argument("trace")
    s.add_argument("--spec", help="rebuild the miter of this spec with the circuit")
    s.add_argument("--bind", metavar="ATOM=OUT,...")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (CliError, AigError, DfaError, ScaleError, SereSyntaxError, UnknownAtomError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
