"""Command-line entry point: dataset generation, training, model evaluation,
single experiment runs, and three-way strategy comparison."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import datagen, resmlp
from .harness import ConfigError, ExperimentConfig, emit_results, simulate_adaptive, timing_compare
from .mmpde import EllipticSolveConfig, ParabolicSolveConfig
from .monitor import MonitorConfig

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


def load_config(path) -> dict:
    """TOML or JSON config file, chosen by extension (JSON tried first for
    unknown extensions)."""
    p = Path(path)
    if not p.exists():
        raise ConfigError("--config", f"no such file: {path}")
    data = p.read_bytes()
    if p.suffix.lower() == ".toml":
        return tomllib.loads(data.decode())
    if p.suffix.lower() == ".json":
        return json.loads(data.decode())
    try:
        return json.loads(data.decode())
    except json.JSONDecodeError:
        try:
            return tomllib.loads(data.decode())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("--config", f"neither JSON nor TOML: {exc}") from exc


def _take(cfg: dict, key: str, default, path: str, kind=None):
    value = cfg.pop(key, default)
    if kind is not None and value is not None and not isinstance(value, kind):
        names = kind if isinstance(kind, tuple) else (kind,)
        raise ConfigError(f"{path}{key}", f"expected {'/'.join(k.__name__ for k in names)}")
    return value


def _reject_unknown(cfg: dict, path: str = ""):
    if cfg:
        raise ConfigError(f"{path}{next(iter(cfg))}", "unknown field")


def _sub_config(cls, cfg: dict, key: str):
    raw = _take(cfg, key, None, "", dict)
    if raw is None:
        return cls()
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(key, str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from exc


def cmd_generate_data(cfg: dict, seed, out) -> dict:
    cfg = dict(cfg)
    n_samples = _take(cfg, "n_samples", 500, "", int)
    zoner_kind = _take(cfg, "zoner", "elliptic", "", str)
    domain = tuple(_take(cfg, "domain", [0.0, 1.0], "", (list, tuple)))
    n_cells = _take(cfg, "n_cells", 200, "", int)
    cfg_seed = _take(cfg, "seed", 0, "", int)
    cfg_out = _take(cfg, "out", "dataset.npy", "", str)
    monitor = _sub_config(MonitorConfig, cfg, "monitor")
    elliptic = _sub_config(EllipticSolveConfig, cfg, "elliptic")
    parabolic = _sub_config(ParabolicSolveConfig, cfg, "parabolic")
    _reject_unknown(cfg)

    zoner = datagen.ZonerSetup(zoner_kind, monitor, elliptic, parabolic)
    manifest = datagen.build_dataset(
        n_samples,
        out or cfg_out,
        zoner=zoner,
        seed=seed if seed is not None else cfg_seed,
        domain=domain,
        n_cells=n_cells,
    )
    print(json.dumps({"dataset": str(out or cfg_out), "n_kept": manifest["n_kept"],
                      "discards": len(manifest["discards"]), "sha256": manifest["sha256"]}))
    return manifest


def cmd_train(cfg: dict, seed, out) -> dict:
    cfg = dict(cfg)
    dataset_path = _take(cfg, "dataset", None, "", str)
    if not dataset_path:
        raise ConfigError("dataset", "path to a dataset file is required")
    model_out = out or _take(cfg, "model_out", "model.bin", "", str)
    curves_out = _take(cfg, "curves_out", None, "", str)
    inner_relu = _take(cfg, "inner_relu", False, "", bool)
    known = {f: cfg.pop(f) for f in
             ("epochs", "batch_size", "lr", "beta1", "beta2", "eps", "split", "seed")
             if f in cfg}
    _reject_unknown(cfg)
    if seed is not None:
        known["seed"] = seed
    try:
        tc = resmlp.TrainConfig(**known)
    except (TypeError, ValueError) as exc:
        raise ConfigError("train", str(exc)) from exc

    ds = datagen.load_dataset(dataset_path)
    result = resmlp.train((ds.X, ds.Y), tc, inner_relu=inner_relu)
    resmlp.save_model(result.params, model_out)
    if curves_out:
        with open(curves_out, "w") as fh:
            fh.write("epoch,train_mae,val_mae\n")
            for i, (tr, va) in enumerate(zip(result.train_mae, result.val_mae)):
                fh.write(f"{i},{float(tr)!r},{float(va)!r}\n")
    summary = {
        "model": str(model_out),
        "final_train_mae": float(result.train_mae[-1]),
        "final_val_mae": float(result.val_mae[-1]),
        "epochs": tc.epochs,
        "n_samples": len(ds),
    }
    print(json.dumps(summary))
    return summary


def cmd_evaluate_model(cfg: dict, seed, out) -> dict:
    cfg = dict(cfg)
    model_path = _take(cfg, "model", None, "", str)
    dataset_path = _take(cfg, "dataset", None, "", str)
    if not model_path or not dataset_path:
        raise ConfigError("model" if not model_path else "dataset", "path is required")
    _reject_unknown(cfg)
    params = resmlp.load_model(model_path)
    ds = datagen.load_dataset(dataset_path)
    pred = np.logaddexp(0.0, resmlp.forward(params, ds.X))
    mae = resmlp.mae_loss(pred, ds.Y)
    # Baseline: predicting the mean target everywhere.
    baseline = resmlp.mae_loss(np.broadcast_to(ds.Y.mean(axis=0), ds.Y.shape), ds.Y)
    summary = {"mae": mae, "baseline_mae": baseline, "n_samples": len(ds)}
    out_payload = json.dumps(summary)
    if out:
        Path(out).write_text(out_payload)
    print(out_payload)
    return summary


def _experiment_config(cfg: dict, seed, out) -> ExperimentConfig:
    exp = ExperimentConfig.from_dict(cfg)
    if seed is not None:
        exp = replace(exp, seed=seed)
    if out is not None:
        exp = replace(exp, output_dir=str(out))
    return exp


def cmd_run_case(cfg: dict, seed, out) -> dict:
    exp = _experiment_config(cfg, seed, out)
    report = simulate_adaptive(exp)
    paths = emit_results(report, exp.output_dir)
    summary = {
        "files": [str(p) for p in paths],
        "steps": report.n_steps,
        "total_s": report.wall_clock_total,
        "zoning_s": report.wall_clock_zoning,
    }
    print(json.dumps(summary))
    return summary


def _run_one(exp: ExperimentConfig):
    report = simulate_adaptive(exp)
    return report


def cmd_compare(cfg: dict, seed, out) -> dict:
    cfg = dict(cfg)
    standard = _take(cfg, "standard_strategy", "mmpde_elliptic", "", str)
    if standard not in ("mmpde_elliptic", "mmpde_parabolic"):
        raise ConfigError("standard_strategy", "must be mmpde_elliptic or mmpde_parabolic")
    base = _experiment_config(cfg, seed, out)
    configs = [
        replace(base, mesh_strategy="uniform"),
        replace(base, mesh_strategy=standard),
        replace(base, mesh_strategy="dl_surrogate"),
    ]
    n_workers = int(os.environ.get("SHOCKZONE_THREADS", "1"))
    if n_workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(3, n_workers)) as pool:
            reports = list(pool.map(_run_one, configs))
    else:
        reports = [_run_one(c) for c in configs]
    for report in reports:
        emit_results(report, base.output_dir)
    summary = timing_compare(*reports)
    summary_path = Path(base.output_dir) / f"{base.case}_{base.scheme}_compare.json"
    summary_path.write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary))
    return summary


COMMANDS = {
    "generate-data": cmd_generate_data,
    "train": cmd_train,
    "evaluate-model": cmd_evaluate_model,
    "run-case": cmd_run_case,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shockzone",
        description="Adaptive zoning benchmarks: data generation, surrogate "
                    "training, and mesh-strategy comparisons.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML or JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output path/directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        COMMANDS[args.command](cfg, args.seed, args.out)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "field": exc.fieldpath, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure -> exit 1, machine readable
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
