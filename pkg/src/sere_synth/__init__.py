"""SERE specifications to free-atom DFAs, AIGER circuits, and bounded checks."""

from .aig import (
    AigBuilder, AigCircuit, AigError, compose_miter, compose_outputs, constant_circuit,
    dfa_to_aig, lower_formula, read_aiger, write_aiger,
)
from .automaton import (
    Dfa, DfaError, Diagnostic, FreeAtoms, Transition, accepts_with_free, build_dfa, choice,
    dfa_to_json, export_dot, run_dfa, validate_dfa,
)
from .baseline import Nfa, SubsetBlowupError, build_nfa, nfa_accepts, subset_construct
from .checker import (
    Report, ScaleError, Unreachable, Witness, aig_simulate, check_reach, equisat_check,
    replay_witness,
)
from .sere import (
    And, Atom, AtomRef, Const, FAnd, FOr, Not, Or, SereItem, SereSyntaxError, Seq, Trace,
    UnknownAtomError, Valuation, ends_with_match, eval_term, parse_sere, parse_term,
    pretty_print, read_spec_file, read_trace, satisfies, write_trace,
)

__version__ = "0.1.0"
