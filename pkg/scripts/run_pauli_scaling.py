#!/usr/bin/env python3
"""Run the Pauli scaling study and print the m*(epsilon) table."""

import argparse
import csv
from pathlib import Path

from carleman_adr.experiments import Config, run_pauli

HERE = Path(__file__).resolve().parent


def read_csv(path: Path):
    with open(path) as handle:
        rows = [r for r in csv.reader(line for line in handle if not line.startswith("#"))]
    return rows[0], rows[1:]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(HERE.parent / "configs" / "pauli_scaling.cfg"))
    parser.add_argument("--out", default="results/pauli")
    parser.add_argument("--plot", action="store_true", help="also write SVG figures")
    args = parser.parse_args()

    run_pauli(Config.load(args.config), args.out)
    _, rows = read_csv(Path(args.out) / "pauli_mstar.csv")
    print(f"{'family':>9} {'N':>4} {'q':>3} {'epsilon':>9} {'m*':>7} {'terms':>7} {'nnz':>6}")
    for family, n, _, q, eps, mstar, n_terms, nnz in rows:
        print(f"{family:>9} {n:>4} {q:>3} {float(eps):>9.3g} {mstar:>7} {n_terms:>7} {nnz:>6}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        _, drows = read_csv(Path(args.out) / "pauli_distance.csv")
        fig, ax = plt.subplots(figsize=(5, 3.4))
        curves = {}
        for family, n, _, _, m, _, frac, dist in drows:
            curves.setdefault((family, int(n)), []).append((float(frac), float(dist)))
        for (family, n), pts in sorted(curves.items()):
            ax.semilogy([p[0] for p in pts], [max(p[1], 1e-17) for p in pts],
                        label=f"{family} N={n}", lw=1)
        ax.set_xlabel("retained terms / nonzeros")
        ax.set_ylabel("truncation distance d(m)")
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(Path(args.out) / "pauli_distance.svg", metadata={"Date": None})
        print(f"wrote {Path(args.out) / 'pauli_distance.svg'}")


if __name__ == "__main__":
    main()
