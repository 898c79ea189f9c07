"""Run the three preset scenarios at both adversary altitudes and print min DEP tables.

    python scripts/run_case_study.py --trials 10000 --out case_study
"""

import argparse
import time
from pathlib import Path

from orbitauth.experiment import DEFAULT_N_VALUES, PRESETS, read_summary, run_scenario_preset

ALTITUDES_KM = (500, 1200)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default="case_study")
    args = parser.parse_args()

    ns = list(DEFAULT_N_VALUES)
    print("scenario      alt_km  " + "  ".join(f"N={n:<5d}" for n in ns) + "  seconds")
    for name in PRESETS:
        for alt in ALTITUDES_KM:
            out = Path(args.out) / f"{name}-{alt}km"
            t0 = time.perf_counter()
            run_scenario_preset(name, alt * 1e3, ns, args.trials, args.seed, out, args.workers)
            deps = read_summary(out / "summary.csv")
            cells = "  ".join(f"{deps[n]:<7.4f}" for n in ns)
            print(f"{name:<13s} {alt:>6d}  {cells}  {time.perf_counter() - t0:.1f}")


if __name__ == "__main__":
    main()
