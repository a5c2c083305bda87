"""Training-data generation: random staircase shock profiles zoned with the
standard MMPDE solvers, emitted as (monitor, spacing) pairs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .grids import Grid1D, uniform_mesh
from .mmpde import (
    EllipticSolveConfig,
    ParabolicSolveConfig,
    ZoningError,
    elliptic_fixed_point,
    parabolic_advance,
)
from .monitor import MonitorConfig, monitor_eval

JUMP_CHOICES = (1, 2, 3, 4)
MIN_CONTRAST = 0.1
EDGE_MARGIN_CELLS = 5
MIN_SEPARATION_CELLS = 2
MAX_DRAW_TRIES = 100


class DatagenError(RuntimeError):
    pass


@dataclass(frozen=True)
class StaircaseSpec:
    """A piecewise-constant profile: sorted jump locations inside the domain
    and one plateau value per segment, all in [0, 1]."""

    n_jumps: int
    jump_locations: tuple
    plateau_values: tuple
    seed: int = 0

    def __post_init__(self):
        if self.n_jumps not in JUMP_CHOICES:
            raise DatagenError(f"n_jumps must be one of {JUMP_CHOICES}")
        if len(self.jump_locations) != self.n_jumps:
            raise DatagenError("need one location per jump")
        if len(self.plateau_values) != self.n_jumps + 1:
            raise DatagenError("need n_jumps + 1 plateau values")
        if list(self.jump_locations) != sorted(self.jump_locations):
            raise DatagenError("jump locations must be sorted")
        if any(not (0.0 <= v <= 1.0) for v in self.plateau_values):
            raise DatagenError("plateau values must lie in [0, 1]")


@dataclass(frozen=True)
class Sample:
    """One training pair: 201 monitor values and 200 positive spacings."""

    x: np.ndarray
    y: np.ndarray


def draw_staircase_spec(rng: np.random.Generator, grid: Grid1D, seed: int = 0) -> StaircaseSpec:
    """Random spec: jump count uniform on {1..4}, locations uniform away from
    the walls with a two-cell minimum separation, i.i.d. plateau values with
    adjacent contrast of at least 0.1. Rejection sampling, bounded tries."""
    dx = (grid.b - grid.a) / grid.n_cells
    lo = grid.a + EDGE_MARGIN_CELLS * dx
    hi = grid.b - EDGE_MARGIN_CELLS * dx
    n_jumps = int(rng.choice(JUMP_CHOICES))

    for _ in range(MAX_DRAW_TRIES):
        locs = np.sort(rng.uniform(lo, hi, size=n_jumps))
        if n_jumps > 1 and np.min(np.diff(locs)) < MIN_SEPARATION_CELLS * dx:
            continue
        vals = rng.uniform(0.0, 1.0, size=n_jumps + 1)
        if np.min(np.abs(np.diff(vals))) < MIN_CONTRAST:
            continue
        return StaircaseSpec(n_jumps, tuple(locs), tuple(vals), seed)
    raise DatagenError(f"could not draw a valid staircase in {MAX_DRAW_TRIES} tries")


def staircase_profile(spec: StaircaseSpec, grid: Grid1D) -> np.ndarray:
    """Nodal sampling of the piecewise-constant profile."""
    edges = np.asarray(spec.jump_locations)
    segment = np.searchsorted(edges, grid.nodes, side="right")
    return np.asarray(spec.plateau_values, dtype=float)[segment]


@dataclass(frozen=True)
class ZonerSetup:
    """Which MMPDE produces the target meshes, with its solver settings."""

    kind: str = "elliptic"
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    elliptic: EllipticSolveConfig = field(default_factory=EllipticSolveConfig)
    parabolic: ParabolicSolveConfig = field(default_factory=ParabolicSolveConfig)

    def __post_init__(self):
        if self.kind not in ("elliptic", "parabolic"):
            raise DatagenError(f"unknown zoner kind {self.kind!r}")

    def describe(self) -> dict:
        d = {"kind": self.kind, "monitor": vars(self.monitor)}
        if self.kind == "elliptic":
            d["elliptic"] = vars(self.elliptic)
        else:
            d["parabolic"] = {
                k: v for k, v in vars(self.parabolic).items() if k != "max_halvings"
            }
        return d


def build_sample(spec: StaircaseSpec, grid: Grid1D, zoner: ZonerSetup) -> Sample:
    """Monitor on the uniform grid, MMPDE-adapted mesh, spacing target.

    The profile occupies the momentum slot of the monitor (the only field
    the production monitor weights). Raises ZoningError when the elliptic
    fixed point fails to converge, so callers can discard the sample.
    """
    profile = staircase_profile(spec, grid)
    fields = {"mom": profile}
    omega = monitor_eval(fields, grid, zoner.monitor)
    if zoner.kind == "elliptic":
        result = elliptic_fixed_point(fields, grid, zoner.monitor, zoner.elliptic)
        if not result.converged:
            raise ZoningError(
                f"elliptic zoning did not converge (displacement {result.displacement:g})"
            )
        adapted = result.grid
    else:
        adapted = parabolic_advance(fields, grid, zoner.monitor, zoner.parabolic)
    return Sample(x=omega.omega, y=adapted.widths)


@dataclass
class Dataset:
    X: np.ndarray
    Y: np.ndarray

    def __len__(self):
        return self.X.shape[0]

    def subset(self, n: int) -> "Dataset":
        return Dataset(self.X[:n].copy(), self.Y[:n].copy())


def save_dataset(ds: Dataset, path) -> None:
    np.save(path, np.hstack([ds.X, ds.Y]))


def load_dataset(path, n_in: int = 201) -> Dataset:
    rows = np.load(path)
    return Dataset(rows[:, :n_in].copy(), rows[:, n_in:].copy())


def _sample_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, index)))


def build_dataset(
    n_samples: int,
    out_path,
    zoner: ZonerSetup | None = None,
    seed: int = 0,
    domain: tuple = (0.0, 1.0),
    n_cells: int = 200,
) -> dict:
    """Generate ``n_samples`` staircase specs, zone each, keep the converged
    ones. Per-sample RNGs derive from (seed, index) so generation order and
    parallelism cannot change the output. Writes the sample matrix beside a
    JSON manifest and returns the manifest."""
    if n_samples < 1:
        raise DatagenError("n_samples must be >= 1")
    zoner = zoner or ZonerSetup()
    grid = uniform_mesh(domain[0], domain[1], n_cells)

    rows = []
    discards = []
    for i in range(n_samples):
        rng = _sample_rng(seed, i)
        try:
            spec = draw_staircase_spec(rng, grid, seed=i)
            sample = build_sample(spec, grid, zoner)
        except (ZoningError, DatagenError) as exc:
            discards.append({"index": i, "reason": str(exc)})
            continue
        rows.append(np.concatenate([sample.x, sample.y]))

    if not rows:
        raise DatagenError("every sample was discarded; check the zoner settings")
    data = np.vstack(rows)
    np.save(out_path, data)
    checksum = hashlib.sha256(data.tobytes()).hexdigest()

    manifest = {
        "n_requested": n_samples,
        "n_kept": len(rows),
        "seed": seed,
        "domain": list(domain),
        "n_cells": n_cells,
        "zoner": zoner.describe(),
        "discards": discards,
        "sha256": checksum,
    }
    manifest_path = str(out_path) + ".manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, default=float)
    return manifest


def split_dataset(ds: Dataset, fraction: float = 0.8, seed: int = 0):
    """Disjoint, exhaustive, seeded split into (train, validation)."""
    if not (0.0 < fraction < 1.0):
        raise DatagenError("split fraction must lie in (0, 1)")
    n = len(ds)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = max(1, int(round(fraction * n)))
    if n_train == n and n > 1:
        n_train = n - 1
    tr, va = perm[:n_train], perm[n_train:]
    return Dataset(ds.X[tr], ds.Y[tr]), Dataset(ds.X[va], ds.Y[va])
