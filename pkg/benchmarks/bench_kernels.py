"""Compiled vs pure-numpy kernels, and exact vs split propagators.

    python benchmarks/bench_kernels.py [--n 500] [--repetitions 5] [--qs 2,3,4]

Both kernel modules are imported side by side, so the environment flag that
selects the default backend does not matter here.
"""

import argparse

from pulseforge import _kernels
from pulseforge.bench import format_table, run_bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--repetitions", type=int, default=5)
    ap.add_argument("--qs", default="2,3,4")
    args = ap.parse_args()
    qs = [int(q) for q in args.qs.split(",")]
    rows = {}
    for name, mod in (("numba", _kernels.numba_impl), ("numpy", _kernels.numpy_impl)):
        if mod is None:
            print(f"[{name}] unavailable")
            continue
        rows[name] = run_bench(qs, args.n, args.repetitions, kernels=mod)
        print(f"[{name}] per-step times")
        print(format_table(rows[name]))
        print()
    if len(rows) == 2:
        print("numpy / numba time ratio (sub exact, sub suzuki, full exact, full suzuki)")
        for a, b in zip(rows["numba"], rows["numpy"]):
            print(f"q={a.q}: {b.sub_exact / a.sub_exact:6.2f} {b.sub_suzuki / a.sub_suzuki:6.2f} "
                  f"{b.full_exact / a.full_exact:6.2f} {b.full_suzuki / a.full_suzuki:6.2f}")


if __name__ == "__main__":
    main()
