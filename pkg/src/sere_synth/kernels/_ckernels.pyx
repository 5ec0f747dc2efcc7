# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: bit-parallel AND-gate evaluation and batched DFA runs."""

from libc.stdint cimport int32_t, uint64_t


def eval_ands(const int32_t[:, ::1] ands, uint64_t[:, ::1] vals):
    cdef Py_ssize_t g, w
    cdef Py_ssize_t n_words = vals.shape[1]
    cdef int32_t lhs, a, b
    cdef uint64_t ma, mb
    cdef uint64_t* out
    cdef uint64_t* pa
    cdef uint64_t* pb
    for g in range(ands.shape[0]):
        lhs = ands[g, 0] >> 1
        a = ands[g, 1]
        b = ands[g, 2]
        ma = <uint64_t>0 - <uint64_t>(a & 1)
        mb = <uint64_t>0 - <uint64_t>(b & 1)
        out = &vals[lhs, 0]
        pa = &vals[a >> 1, 0]
        pb = &vals[b >> 1, 0]
        for w in range(n_words):
            out[w] = (pa[w] ^ ma) & (pb[w] ^ mb)


def dfa_final_states(const int32_t[:, ::1] table, int nbits, int length, uint64_t start, int32_t[::1] out):
    cdef Py_ssize_t i, t
    cdef Py_ssize_t n = out.shape[0]
    cdef uint64_t mask = (<uint64_t>1 << nbits) - 1
    cdef uint64_t idx
    cdef int32_t state
    for i in range(n):
        idx = start + <uint64_t>i
        state = 0
        for t in range(length):
            state = table[state, idx & mask]
            idx >>= nbits
        out[i] = state
