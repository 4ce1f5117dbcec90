#!/usr/bin/env python3
"""Compiled vs pure-Python kernel timings.

Runs the SSA, BD and neighbour-sum kernels on the same inputs with both
backends, checks the outputs are bit-identical and writes one CSV row per
kernel (stdout, or --out PATH).

    python benchmarks/bench_kernels.py [--repeat 3] [--out bench.csv]
"""

import argparse
import csv
import sys
import time

import numpy as np

from rdmelab import kernels
from rdmelab.model import LatticeSpec, build_lattice

RHO, D3 = 2e-9, 1e-12


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    lat = build_lattice(LatticeSpec(3, 12, 12e-8))
    tau_j = 6 * D3 / (1e-8) ** 2
    idx = np.arange(200, dtype=np.int64)
    yield ("ssa_12^3_k=tau_J", "200 trajectories",
           lambda k: k.ssa_batch(lat.neighbors, lat.target, tau_j, tau_j, 0, -1, 1, idx, 10**9))

    L = 100 * RHO
    dt = (0.1 * RHO) ** 2 / (2 * D3)
    bidx = np.arange(40, dtype=np.int64)
    yield ("bd_cube_L=100rho", "40 trajectories",
           lambda k: k.bd_batch(3, L, RHO, D3, dt, 0, 6.0, 1, 0, bidx, None, 10**9))

    big = build_lattice(LatticeSpec(3, 64, 64e-8))
    x = np.random.default_rng(0).random(big.n_voxels)
    out = np.empty_like(x)

    def nsum(k):
        for _ in range(20):
            k.neighbor_sum(big.neighbors, x, out)
        return out.copy()

    yield ("neighbor_sum_64^3", "20 applications", nsum)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--out")
    args = ap.parse_args(argv)
    if "compiled" not in kernels.AVAILABLE:
        print("compiled kernels not built; run `pip install -e .` first", file=sys.stderr)
        return 1
    comp, py = kernels.get_backend("compiled"), kernels.get_backend("python")
    rows = []
    for name, work, fn in cases():
        tc, oc = best_of(lambda: fn(comp), args.repeat)
        tp, op = best_of(lambda: fn(py), max(1, args.repeat // 3))
        if isinstance(oc, tuple):
            same = oc[1] == op[1] and np.array_equal(oc[0], op[0])
        else:
            # neighbour sums may differ in the last bit: numpy reduces pairwise
            same = bool(np.allclose(oc, op, rtol=1e-14))
        rows.append(dict(kernel=name, work=work, compiled_s=f"{tc:.4g}", python_s=f"{tp:.4g}",
                         speedup=f"{tp / tc:.1f}", outputs_match=same))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    if args.out:
        fh.close()
    return 0 if all(r["outputs_match"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
