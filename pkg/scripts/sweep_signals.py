"""Clustering error and edge F-measure as the number of signals grows.

Writes the long-format results CSV and prints the per-method means.

    python scripts/sweep_signals.py --repeats 20 --out results/m_sweep.csv
"""
import argparse
from pathlib import Path

from graphheat.model import FistaConfig
from graphheat.sweep import DEFAULT_VALUES, METHODS, SweepConfig, read_results, run_sweep, summarize


def print_table(summary, methods, values):
    print(f"{'M':>6} " + " ".join(f"{m + ' nmse':>16} {m + ' F':>14}" for m in methods))
    for v in values:
        cells = []
        for m in methods:
            nmse, f = summary.get((m, float(v)), (float("nan"), float("nan")))
            cells.append(f"{nmse:16.3f} {f:14.4f}")
        print(f"{v:>6} " + " ".join(cells))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--values", type=int, nargs="+", default=list(DEFAULT_VALUES["m"]))
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--tau", type=float, default=0.5)
    ap.add_argument("--beta", type=float, default=None, help="default scales with tau^2")
    ap.add_argument("--methods", nargs="+", default=list(METHODS), choices=METHODS)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--resume", action="store_true")
    ap.add_argument("--out", default="results/m_sweep.csv")
    args = ap.parse_args()

    cfg = SweepConfig(
        vary="m",
        values=tuple(args.values),
        repeats=args.repeats,
        methods=tuple(args.methods),
        tau=args.tau,
        seed=args.seed,
        fista=FistaConfig(beta=args.beta),
    )
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    run_sweep(cfg, args.out, resume=args.resume, jobs=args.jobs)
    print_table(summarize(read_results(args.out)), cfg.methods, cfg.values)


if __name__ == "__main__":
    main()
