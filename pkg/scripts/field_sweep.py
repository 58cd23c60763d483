"""Sweep the score field over the 2-d toy pool for a grid of alpha/beta.

Writes one field CSV per (alpha, beta) pair into --out, named
field_a{alpha}_b{beta}.csv, plus the pool itself as pool.csv. Useful for
plotting how alpha localizes the score onto class boundaries and beta
inflates it away from the data.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from dci_lab.dci import DciParams, GridSpec, dci_field, write_field_csv
from dci_lab.synthetic import three_class_points, write_colspec, write_dataset_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="fields", help="output directory")
    ap.add_argument("--alphas", default="1.0,1.5,2.0")
    ap.add_argument("--betas", default="0.9,1.1,1.3")
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--resolution", type=int, default=100)
    ap.add_argument("--pad", type=float, default=2.0, help="margin past the data bbox")
    ap.add_argument("--n-per-class", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    pool = three_class_points(args.n_per_class, seed=args.seed)
    write_dataset_csv(pool, out / "pool.csv")
    write_colspec(pool, out / "pool.colspec")

    X = pool.features
    grid = GridSpec(
        x_min=float(X[:, 0].min()) - args.pad,
        x_max=float(X[:, 0].max()) + args.pad,
        y_min=float(X[:, 1].min()) - args.pad,
        y_max=float(X[:, 1].max()) + args.pad,
        resolution=args.resolution,
    )
    alphas = [float(a) for a in args.alphas.split(",")]
    betas = [float(b) for b in args.betas.split(",")]
    for alpha in alphas:
        for beta in betas:
            params = DciParams(k=args.k, alpha=alpha, beta=beta)
            field = dci_field(pool, grid, params)
            path = out / f"field_a{alpha:g}_b{beta:g}.csv"
            write_field_csv(path, grid, field)
            print(f"{path.name}: max {field.max():.4f} mean {field.mean():.4f}")


if __name__ == "__main__":
    main()
