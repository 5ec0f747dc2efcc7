"""Reference implementations of the compiled kernels (numpy, no extension build)."""

import numpy as np


def eval_ands(ands, vals):
    for lhs, a, b in ands:
        va = vals[a >> 1]
        vb = vals[b >> 1]
        if a & 1:
            va = ~va
        if b & 1:
            vb = ~vb
        np.bitwise_and(va, vb, out=vals[lhs >> 1])


def dfa_final_states(table, nbits, length, start, out):
    n = out.shape[0]
    idx = np.arange(start, start + n, dtype=np.uint64)
    mask = np.uint64((1 << nbits) - 1)
    state = np.zeros(n, dtype=np.int32)
    for t in range(length):
        state = table[state, ((idx >> np.uint64(nbits * t)) & mask).astype(np.intp)]
    out[:] = state
