"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Workloads are the two hot loops of the checker: bit-parallel AND evaluation
of a lowered DFA circuit, and exhaustive final-state computation of a DFA.
"""

import argparse
import timeit

import numpy as np

from sere_synth.aig import dfa_to_aig
from sere_synth.automaton import build_dfa
from sere_synth.kernels import _pykernels
from sere_synth.sere import parse_sere

try:
    from sere_synth.kernels import _ckernels
except ImportError:
    _ckernels = None

FORMULAS = ["a ; b ; c", "a* ; b* ; a* ; b", "(a | b)* ; !a ; b* ; a* ; (a & b)"]


def ands_case(text, width):
    c = dfa_to_aig(build_dfa(parse_sere(text)))
    ands = np.ascontiguousarray(np.array(c.ands, dtype=np.int32).reshape(-1, 3))
    rng = np.random.default_rng(0)
    vals = rng.integers(0, 2 ** 63, size=(c.maxvar + 1, width), dtype=np.uint64)
    return len(c.ands), ands, vals


def table_case(text, length):
    m = build_dfa(parse_sere(text))
    table = np.ascontiguousarray(np.array(m.table, dtype=np.int32))
    nbits = len(m.extended_atoms)
    count = min(1 << (nbits * length), 1 << 22)
    return count, table, nbits


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    backends = [("numpy", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    if not _ckernels:
        print("compiled kernels not built; timing the numpy fallback only")

    print(f"{'kernel':<18}{'formula':<40}{'size':>10}" + "".join(f"{n:>12}" for n, _ in backends)
          + ("   speedup" if len(backends) == 2 else ""))
    for text in FORMULAS:
        n_ands, ands, vals = ands_case(text, 4096)
        times = []
        for _, mod in backends:
            work = vals.copy()
            times.append(best(lambda: mod.eval_ands(ands, work), args.repeat))
        _row("eval_ands", text, f"{n_ands}x4096w", times)

        count, table, nbits = table_case(text, 4)
        times = []
        for _, mod in backends:
            out = np.empty(count, dtype=np.int32)
            times.append(best(lambda: mod.dfa_final_states(table, nbits, 4, 0, out), args.repeat))
        _row("dfa_final_states", text, str(count), times)


def _row(kernel, text, size, times):
    cells = "".join(f"{t * 1e3:>10.2f}ms" for t in times)
    speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else ""
    print(f"{kernel:<18}{text:<40}{size:>10}{cells}{speed}")


if __name__ == "__main__":
    main()
