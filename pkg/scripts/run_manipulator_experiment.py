#!/usr/bin/env python3
"""Synthesize the manipulator bank and compare unscheduled, scalar and matrix scheduling.

    python scripts/run_manipulator_experiment.py --output-dir runs/manipulator
"""

import argparse
import sys

from qsrsched.cli import main as cli_main


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--output-dir", default="runs/manipulator")
    p.add_argument("--scenario", help="INI scenario (defaults to the built-in manipulator setup)")
    p.add_argument("--no-plots", action="store_true")
    args = p.parse_args(argv)

    base = ["--output-dir", args.output_dir]
    scen = ["--scenario", args.scenario] if args.scenario else []
    code = cli_main(base + ["synthesize"] + scen)
    if code:
        return code
    sim = base + ["simulate", "--compare", "--bank", f"{args.output_dir}/bank.txt"] + scen
    if args.no_plots:
        sim.append("--no-plots")
    return cli_main(sim)


if __name__ == "__main__":
    sys.exit(main())
