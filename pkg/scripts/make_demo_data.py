"""Emit small sample datasets in every on-disk format the loaders accept.

Writes into --out (default ./demo_data):
  points.csv / points.colspec     2-d three-class toy, numeric features
  census.csv / census.colspec    mixed categorical/numeric binary table
  digits-images.idx / digits-labels.idx   28x28 uint8 image pair

The CSV pairs feed `dci-lab score|simulate` via data.csv/data.colspec;
the IDX pair feeds data.images/data.labels.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from dci_lab.dataset import load_csv, load_idx, read_colspec, write_idx
from dci_lab.synthetic import (
    census_income,
    digit_images,
    three_class_points,
    write_colspec,
    write_dataset_csv,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_data", help="output directory")
    ap.add_argument("--n", type=int, default=300, help="rows for the tabular sets")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    toy = three_class_points(max(args.n // 3, 1), seed=args.seed)
    write_dataset_csv(toy, out / "points.csv")
    write_colspec(toy, out / "points.colspec")

    census = census_income(args.n, seed=args.seed)
    write_dataset_csv(census, out / "census.csv")
    write_colspec(census, out / "census.colspec")

    images, labels = digit_images(min(args.n, 200), seed=args.seed)
    write_idx(images, labels, out / "digits-images.idx", out / "digits-labels.idx")

    # Read everything back so a broken pair fails loudly here, not later.
    for stem in ("points", "census"):
        specs = read_colspec(out / f"{stem}.colspec")
        ds = load_csv(out / f"{stem}.csv", specs)
        print(f"{stem}: {ds.n_rows} rows, {ds.n_features} feature columns")
    ds = load_idx(out / "digits-images.idx", out / "digits-labels.idx")
    print(f"digits: {ds.n_rows} images, {ds.n_features} pixels")


if __name__ == "__main__":
    main()
