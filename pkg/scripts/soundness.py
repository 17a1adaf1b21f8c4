#!/usr/bin/env python3
"""Random-bank soundness check: the composed supply stays non-negative from rest."""

import argparse
import sys
import time

from qsrsched.testbeds import run_soundness


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--banks", type=int, default=100)
    p.add_argument("--inputs", type=int, default=10)
    p.add_argument("--horizon", type=float, default=4.0)
    p.add_argument("--dt", type=float, default=5e-3)
    p.add_argument("--tol", type=float, default=-1e-8)
    args = p.parse_args(argv)

    t0 = time.perf_counter()
    res = run_soundness(args.seed, args.banks, args.inputs, args.horizon, args.dt)
    for theorem, val in sorted(res.worst_prefix_supply.items()):
        print(f"theorem {theorem}: min supply prefix {val:.3e}")
    print(f"{res.banks} banks x {res.inputs_per_bank} inputs in {time.perf_counter() - t0:.1f} s")
    ok = res.worst >= args.tol
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
