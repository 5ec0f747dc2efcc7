"""Inner-loop kernels.

The Cython extension is used when it was built; otherwise the numpy versions
in ``_pykernels`` are used. Set ``SERE_SYNTH_PURE=1`` to force the fallback.

``eval_ands(ands, vals)``
    ``ands`` is an ``(A, 3)`` int32 array of AIGER literals ``lhs rhs0 rhs1``
    in topological order; ``vals`` is a ``(maxvar + 1, W)`` uint64 array of
    packed simulation words, updated in place for every AND variable.

``dfa_final_states(table, nbits, length, start, out)``
    Runs a DFA transition table from state 0 over the traces
    ``start .. start + len(out) - 1`` of ``length`` steps; trace ``i`` uses
    bits ``[nbits*t, nbits*(t+1))`` of ``i`` as the valuation index at step
    ``t``. Writes final states into ``out``.
"""

import os

from . import _pykernels

BACKEND = "python"
eval_ands = _pykernels.eval_ands
dfa_final_states = _pykernels.dfa_final_states

if os.environ.get("SERE_SYNTH_PURE", "") in ("", "0"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        eval_ands = _ckernels.eval_ands
        dfa_final_states = _ckernels.dfa_final_states

__all__ = ["BACKEND", "eval_ands", "dfa_final_states"]
