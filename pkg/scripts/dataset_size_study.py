#!/usr/bin/env python3
"""Train the surrogate on nested dataset sizes and tabulate final MAEs,
reproducing the accuracy-vs-data trend at desk scale. Emits one loss CSV per
size for the loss-curve figures."""

import argparse
import time
from pathlib import Path

from shockzone.datagen import build_dataset, load_dataset
from shockzone.resmlp import TrainConfig, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/size_study", type=Path)
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 500, 5000])
    ap.add_argument("--epochs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20240801)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    biggest = max(args.sizes)
    dataset_path = args.out / f"staircase_{biggest}.npy"
    if not dataset_path.exists():
        print(f"generating {biggest} samples ...")
        build_dataset(biggest, dataset_path, seed=args.seed)
    full = load_dataset(dataset_path)

    rows = []
    for size in sorted(args.sizes):
        sub = full.subset(size)
        t0 = time.perf_counter()
        result = train((sub.X, sub.Y), TrainConfig(epochs=args.epochs, seed=7))
        elapsed = time.perf_counter() - t0
        rows.append((size, result.train_mae[-1], result.val_mae[-1], elapsed))
        with open(args.out / f"loss_{size}.csv", "w") as fh:
            fh.write("epoch,train_mae,val_mae\n")
            for i, (tr, va) in enumerate(zip(result.train_mae, result.val_mae)):
                fh.write(f"{i},{float(tr)!r},{float(va)!r}\n")
        print(f"size {size:6d}: train {rows[-1][1]:.3e}  val {rows[-1][2]:.3e}  ({elapsed:.0f}s)")

    with open(args.out / "summary.csv", "w") as fh:
        fh.write("n_samples,final_train_mae,final_val_mae,seconds\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    print(f"summary in {args.out / 'summary.csv'}")


if __name__ == "__main__":
    main()
