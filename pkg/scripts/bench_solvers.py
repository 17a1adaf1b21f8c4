#!/usr/bin/env python3
"""Residuals and timings of the Riccati and Lyapunov solvers against scipy."""

import argparse
import sys
import time

import numpy as np
from scipy import linalg as sla

from qsrsched.certification import are_residual, lyapunov_residual, solve_are, solve_lyapunov, spectral_abscissa


def _problem(rng, n):
    m = int(rng.integers(1, n + 1))
    a = rng.standard_normal((n, n))
    b = rng.standard_normal((n, m))
    h = rng.standard_normal((n, n))
    g = rng.standard_normal((m, m))
    return a, b, h @ h.T + 1e-2 * np.eye(n), g @ g.T + 0.1 * np.eye(m)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--max-n", type=int, default=12)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    stats = {k: [] for k in ("are", "are_scipy", "lyap", "lyap_scipy")}
    res_are = res_lyap = 0.0
    for _ in range(args.trials):
        n = int(rng.integers(1, args.max_n + 1))
        a, b, q, r = _problem(rng, n)
        t = time.perf_counter()
        pm, _ = solve_are(a, b, q, r)
        stats["are"].append(time.perf_counter() - t)
        t = time.perf_counter()
        sla.solve_continuous_are(a, b, q, r)
        stats["are_scipy"].append(time.perf_counter() - t)
        res_are = max(res_are, are_residual(a, b, q, r, pm))

        a_h = a - (spectral_abscissa(a) + 0.5) * np.eye(n)
        t = time.perf_counter()
        pl = solve_lyapunov(a_h, -q)
        stats["lyap"].append(time.perf_counter() - t)
        t = time.perf_counter()
        sla.solve_continuous_lyapunov(a_h.T, -q)
        stats["lyap_scipy"].append(time.perf_counter() - t)
        res_lyap = max(res_lyap, lyapunov_residual(a_h, pl, -q))

    for k, v in stats.items():
        print(f"{k:12s} mean {1e6 * np.mean(v):8.1f} us  max {1e6 * np.max(v):8.1f} us")
    print(f"worst ARE residual {res_are:.2e}, worst Lyapunov residual {res_lyap:.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
