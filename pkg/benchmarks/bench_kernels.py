"""Time the DP kernels under each available backend.

    python benchmarks/bench_kernels.py [--n 32] [--grid 16] [--repeat 5]

Both backends are imported in one process from ``kernels.IMPLEMENTATIONS``,
so ``DYNBLPP_BACKEND`` does not matter here.  Outputs are compared bitwise.
"""
import argparse
import time

import numpy as np

from dynblpp import kernels
from dynblpp.grid import GridSpec, sample_field


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def workloads(n, G, seed):
    f = sample_field(GridSpec(G, -1, n + 1, 0, n), seed)
    V = f.values
    rows, cols = n + 1, n * G + 1
    c0 = f.col(0)
    pair_win = np.ascontiguousarray(V[: min(rows, 9), c0: c0 + min(cols, 8 * G + 1)])

    def forward(impl):
        D, ptr, M = np.empty((rows, cols)), np.empty((rows, cols), np.int64), np.empty((rows, cols))
        impl["forward_rows"](V, 0, c0, 0, rows - 1, D, ptr, M)
        return D, ptr

    def update(impl):
        D, ptr, M = np.empty((rows, cols)), np.empty((rows, cols), np.int64), np.empty((rows, cols))
        impl["forward_rows"](V, 0, c0, 0, rows - 1, D, ptr, M)
        impl["update_rows"](V, 0, c0, rows // 2, rows - 1, cols // 2, D, ptr, M)
        return D, ptr

    def backtrack(impl):
        D, ptr, M = np.empty((rows, cols)), np.empty((rows, cols), np.int64), np.empty((rows, cols))
        impl["forward_rows"](V, 0, c0, 0, rows - 1, D, ptr, M)
        out = np.empty(rows + 1, np.int64)
        for _ in range(100):
            impl["backtrack"](ptr, rows - 1, cols - 1, out)
        return out

    def pair(impl):
        return impl["pair_dp"](pair_win)

    return {"forward_rows": forward, "update_rows": update, "backtrack x100": backtrack,
            "pair_dp (8x8 units)": pair}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--grid", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    impls = kernels.IMPLEMENTATIONS
    names = sorted(impls)
    print(f"n={args.n} G={args.grid}  backends: {', '.join(names)}")
    print(f"{'kernel':22s}" + "".join(f"{b:>12s}" for b in names) + ("     speedup" if len(names) == 2 else ""))
    for label, work in workloads(args.n, args.grid, args.seed).items():
        results, times = {}, {}
        for b in names:
            work(impls[b])  # warm-up / JIT compile
            times[b], results[b] = best_of(lambda: work(impls[b]), args.repeat)
        line = f"{label:22s}" + "".join(f"{times[b] * 1e3:10.2f}ms" for b in names)
        if len(names) == 2:
            line += f"  {times['numpy'] / times['numba']:9.1f}x"
            a, b = results["numba"], results["numpy"]
            same = all(np.array_equal(x, y) for x, y in zip(a, b)) if isinstance(a, tuple) else np.array_equal(a, b)
            line += "" if same else "  MISMATCH"
        print(line)


if __name__ == "__main__":
    main()
