#!/usr/bin/env python3
"""Scan the post-selection probability and report its range over the grid."""

import argparse
import csv
from pathlib import Path

from carleman_adr.experiments import Config, run_p0_scan

HERE = Path(__file__).resolve().parent


def read_csv(path: Path):
    with open(path) as handle:
        rows = [r for r in csv.reader(line for line in handle if not line.startswith("#"))]
    return rows[0], rows[1:]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(HERE.parent / "configs" / "p0_grid.cfg"))
    parser.add_argument("--out", default="results/p0")
    parser.add_argument("--plot", action="store_true", help="also write an SVG heatmap")
    args = parser.parse_args()

    run_p0_scan(Config.load(args.config), args.out)
    _, rows = read_csv(Path(args.out) / "p0_scan.csv")
    ok = [r for r in rows if r[7] == "1"]
    skipped = len(rows) - len(ok)
    loc = [float(r[3]) for r in ok]
    uni = [float(r[4]) for r in ok]
    print(f"{len(ok)} applicable grid points ({skipped} outside the applicability region)")
    print(f"p0 localized: min {min(loc):.6g}  max {max(loc):.6g}")
    print(f"p0 uniform:   min {min(uni):.6g}  max {max(uni):.6g}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        import numpy as np

        gas = sorted({float(r[0]) for r in rows})
        gds = sorted({float(r[1]) for r in rows})
        gr0 = rows[0][2]
        grid = np.full((len(gds), len(gas)), np.nan)
        for r in rows:
            if r[7] == "1" and r[2] == gr0:
                grid[gds.index(float(r[1])), gas.index(float(r[0]))] = float(r[3])
        fig, ax = plt.subplots(figsize=(5, 3.6))
        im = ax.pcolormesh(gas, gds, grid, shading="nearest")
        fig.colorbar(im, ax=ax, label="p0 (localized)")
        ax.set_xlabel("gamma_adv")
        ax.set_ylabel("gamma_diff")
        fig.tight_layout()
        fig.savefig(Path(args.out) / "p0_map.svg", metadata={"Date": None})
        print(f"wrote {Path(args.out) / 'p0_map.svg'}")


if __name__ == "__main__":
    main()
