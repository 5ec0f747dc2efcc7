import numpy as np
import pytest

from sere_synth import kernels
from sere_synth.aig import dfa_to_aig
from sere_synth.automaton import build_dfa
from sere_synth.kernels import _pykernels
from sere_synth.sere import parse_sere

needs_cython = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")


def _case(text):
    m = build_dfa(parse_sere(text))
    return m, dfa_to_aig(m)


@needs_cython
@pytest.mark.parametrize("text", ["a ; b ; c", "a* ; b* ; a", "(a | b)* ; !a ; b*"])
def test_eval_ands_backends_agree(text):
    from sere_synth.kernels import _ckernels
    _, c = _case(text)
    ands = np.ascontiguousarray(np.array(c.ands, dtype=np.int32).reshape(-1, 3))
    rng = np.random.default_rng(7)
    vals = np.zeros((c.maxvar + 1, 16), dtype=np.uint64)
    n_leaves = len(c.inputs) + len(c.latches)
    vals[1:n_leaves + 1] = rng.integers(0, 2 ** 63, size=(n_leaves, 16), dtype=np.uint64)
    expected = vals.copy()
    _pykernels.eval_ands(ands, expected)
    _ckernels.eval_ands(ands, vals)
    assert (vals == expected).all()


@needs_cython
@pytest.mark.parametrize("text,length,start", [("a ; b* ; a", 3, 0), ("a* ; b* ; a* ; b", 2, 37)])
def test_final_states_backends_agree(text, length, start):
    from sere_synth.kernels import _ckernels
    m, _ = _case(text)
    table = np.ascontiguousarray(np.array(m.table, dtype=np.int32))
    nbits = len(m.extended_atoms)
    count = (1 << (nbits * length)) - start
    a = np.empty(count, dtype=np.int32)
    b = np.empty(count, dtype=np.int32)
    _pykernels.dfa_final_states(table, nbits, length, start, a)
    _ckernels.dfa_final_states(table, nbits, length, start, b)
    assert (a == b).all()


def test_final_states_match_stepping():
    m, _ = _case("a ; b* ; a")
    names = m.extended_atoms
    table = np.ascontiguousarray(np.array(m.table, dtype=np.int32))
    out = np.empty(1 << (len(names) * 2), dtype=np.int32)
    kernels.dfa_final_states(table, len(names), 2, 0, out)
    mask = (1 << len(names)) - 1
    for i, got in enumerate(out):
        s = 0
        for t in range(2):
            s = m.table[s][(i >> (len(names) * t)) & mask]
        assert got == s


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")
