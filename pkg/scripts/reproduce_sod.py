#!/usr/bin/env python3
"""End-to-end Sod benchmark: dataset, surrogate training, and the three-way
mesh-strategy comparison with WENO5. Writes all CSV/JSON artifacts plus a
timing summary under --out.

Desk-scale by default (5,000 samples, 1,000 epochs); pass --samples/--epochs
to push toward the full-scale setup.
"""

import argparse
import json
import time
from pathlib import Path

from shockzone.datagen import build_dataset, load_dataset
from shockzone.harness import ExperimentConfig, emit_results, simulate_adaptive, timing_compare
from shockzone.resmlp import TrainConfig, save_model, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/sod", type=Path)
    ap.add_argument("--samples", type=int, default=5000)
    ap.add_argument("--epochs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20240801)
    ap.add_argument("--scheme", default="weno5_rk3", choices=["weno5_rk3", "lax_wendroff"])
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    dataset_path = args.out / f"staircase_{args.samples}.npy"
    if not dataset_path.exists():
        print(f"generating {args.samples} staircase samples ...")
        manifest = build_dataset(args.samples, dataset_path, seed=args.seed)
        print(f"  kept {manifest['n_kept']}, discarded {len(manifest['discards'])}")

    model_path = args.out / "surrogate.bin"
    curves_path = args.out / "loss.csv"
    if not model_path.exists():
        ds = load_dataset(dataset_path)
        print(f"training on {len(ds)} samples for {args.epochs} epochs ...")
        t0 = time.perf_counter()
        result = train((ds.X, ds.Y), TrainConfig(epochs=args.epochs, seed=7))
        print(f"  {time.perf_counter() - t0:.0f}s, final train MAE "
              f"{result.train_mae[-1]:.3e}, val MAE {result.val_mae[-1]:.3e}")
        save_model(result.params, model_path)
        with open(curves_path, "w") as fh:
            fh.write("epoch,train_mae,val_mae\n")
            for i, (tr, va) in enumerate(zip(result.train_mae, result.val_mae)):
                fh.write(f"{i},{float(tr)!r},{float(va)!r}\n")

    base = ExperimentConfig(case="sod", scheme=args.scheme, output_dir=str(args.out),
                            model_path=str(model_path))
    reports = []
    for strategy in ("uniform", "mmpde_elliptic", "dl_surrogate"):
        print(f"running {strategy} ...")
        from dataclasses import replace

        report = simulate_adaptive(replace(base, mesh_strategy=strategy))
        emit_results(report, args.out)
        density = next(r for r in report.norms if r.quantity == "density")
        print(f"  steps {report.n_steps}, zoning {report.wall_clock_zoning:.2f}s, "
              f"density rel errors L2 {density.l2_rel_error:.4f} L1 {density.l1_rel_error:.4f}")
        reports.append(report)

    summary = timing_compare(*reports)
    (args.out / "sod_compare.json").write_text(json.dumps(summary, indent=2))
    print(f"zoning speedup (standard / surrogate): {summary['zoning_speedup']:.1f}x")
    print(f"artifacts in {args.out}")


if __name__ == "__main__":
    main()
