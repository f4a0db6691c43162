"""Per-window cost of the compiled core against the numpy fallback.

Usage: python3 benchmarks/bench_backends.py [--values 64,256,1024] [--repeats 3] [--out DIR]
"""

import argparse
import sys
from pathlib import Path

from rbmflock import backend, harness
from rbmflock.config import MethodKind

KINDS = (MethodKind.IPS, MethodKind.RBMR_EQUIV, MethodKind.RBM1, MethodKind.MC)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--values", default="64,256,1024")
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args(argv)
    n_grid = [int(v) for v in args.values.split(",")]

    names = sorted(backend.available())
    if "compiled" not in names:
        print("compiled extension not built; only the fallback is available", file=sys.stderr)
    table = {}
    for name in names:
        rows, slopes = harness.bench(n_grid, p=args.p, kinds=KINDS, repeats=args.repeats,
                                     backend_name=name)
        for r in rows:
            table[(r.n, r.method, name)] = r.median_ns_per_window
        print(f"{name}: log-log slopes " + ", ".join(f"{k} {v:.2f}" for k, v in slopes.items()))
        if args.out is not None:
            harness.write_bench_csv(args.out / f"bench_{name}.csv", rows)

    header = f"{'n':>6} {'method':>9} " + " ".join(f"{n + ' us':>14}" for n in names)
    if len(names) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for n in n_grid:
        for kind in KINDS:
            cells = [table[(n, kind.value, name)] for name in names]
            line = f"{n:>6} {kind.value:>9} " + " ".join(f"{c / 1e3:>14.1f}" for c in cells)
            if len(names) == 2:
                line += f" {cells[1] / cells[0]:>9.1f}x"
            print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
