#!/usr/bin/env python3
"""Run a Carleman convergence study and print the per-K error table."""

import argparse
import csv
from pathlib import Path

from carleman_adr.experiments import Config, run_convergence

HERE = Path(__file__).resolve().parent


def read_csv(path: Path):
    with open(path) as handle:
        rows = [r for r in csv.reader(line for line in handle if not line.startswith("#"))]
    return rows[0], rows[1:]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(HERE.parent / "configs" / "convergence_box.cfg"))
    parser.add_argument("--out", default="results/convergence")
    parser.add_argument("--plot", action="store_true", help="also write SVG figures")
    args = parser.parse_args()

    run_convergence(Config.load(args.config), args.out)
    header, rows = read_csv(Path(args.out) / "convergence.csv")
    print(f"{'K':>3} {'max_rel_err':>14} {'mean_rel_err':>14} {'t*':>8}")
    for k, mx, mean, tstar in rows:
        print(f"{k:>3} {float(mx):>14.6g} {float(mean):>14.6g} {float(tstar):>8.4g}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.4))
        for k, *_ in rows:
            _, traj = read_csv(Path(args.out) / f"trajectory_K{k}.csv")
            t = [float(r[0]) for r in traj]
            err = [float(r[1]) if r[1] else float("nan") for r in traj]
            ax0.semilogy(t, err, label=f"K={k}")
        ax0.set_xlabel("t")
        ax0.set_ylabel("max relative error")
        ax0.legend(fontsize=8)
        ax1.semilogy([int(r[0]) for r in rows], [float(r[1]) for r in rows], "o-")
        ax1.set_xlabel("K")
        ax1.set_ylabel("max relative error at t*")
        fig.tight_layout()
        fig.savefig(Path(args.out) / "convergence.svg", metadata={"Date": None})
        print(f"wrote {Path(args.out) / 'convergence.svg'}")


if __name__ == "__main__":
    main()
