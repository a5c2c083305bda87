"""1D grids, mesh spacing vectors, and monotone solution transfer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

# Spacings below this fraction of the domain length are clamped before a grid
# is built: surrogate outputs can land arbitrarily close to zero while the
# solvers require strictly positive cells.
MIN_SPACING_FRACTION = 1e-10

_ENDPOINT_RTOL = 1e-12


class GridError(ValueError):
    """Grid or spacing data violates its invariants."""


@dataclass(frozen=True)
class Grid1D:
    """Strictly increasing node coordinates spanning a closed interval.

    ``nodes[0]`` and ``nodes[-1]`` are the exact domain endpoints; the
    ``n_cells`` finite-volume cells live between consecutive nodes.
    """

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise GridError("grid needs at least two nodes")
        if not np.all(np.isfinite(nodes)):
            raise GridError("grid nodes must be finite")
        if not np.all(np.diff(nodes) > 0.0):
            raise GridError("grid nodes must be strictly increasing")
        nodes = nodes.copy()
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])


@dataclass(frozen=True)
class SpacingVector:
    """Positive cell widths; their sum is the domain length they tile."""

    deltas: np.ndarray

    def __post_init__(self):
        deltas = np.asarray(self.deltas, dtype=float)
        if deltas.ndim != 1 or deltas.size < 1:
            raise GridError("spacing vector needs at least one delta")
        if not np.all(np.isfinite(deltas)):
            raise GridError("spacings must be finite")
        if not np.all(deltas > 0.0):
            raise GridError("spacings must be strictly positive")
        deltas = deltas.copy()
        deltas.flags.writeable = False
        object.__setattr__(self, "deltas", deltas)

    @property
    def length(self) -> float:
        return float(np.sum(self.deltas))


def uniform_mesh(a: float, b: float, n_cells: int) -> Grid1D:
    """Equispaced grid with ``n_cells + 1`` nodes on [a, b]."""
    if not (np.isfinite(a) and np.isfinite(b)):
        raise GridError("endpoints must be finite")
    if b <= a:
        raise GridError(f"needs b > a, got a={a}, b={b}")
    if n_cells < 1:
        raise GridError("n_cells must be >= 1")
    return Grid1D(np.linspace(a, b, n_cells + 1))


def clamp_spacing(
    deltas: np.ndarray, total: float | None = None, floor: float | None = None
) -> np.ndarray:
    """Floor tiny spacings and renormalize so the sum is preserved.

    The default floor is ``MIN_SPACING_FRACTION`` of the total; callers with
    a physically motivated lower bound pass their own.
    """
    deltas = np.asarray(deltas, dtype=float)
    if total is None:
        total = float(np.sum(deltas))
    if not np.isfinite(total) or total <= 0.0:
        raise GridError("spacing total must be positive and finite")
    if floor is None:
        floor = MIN_SPACING_FRACTION * total
    clamped = np.maximum(deltas, floor)
    return clamped * (total / np.sum(clamped))


def spacing_to_grid(s: SpacingVector, a: float) -> Grid1D:
    """Cumulative sum of spacings starting at ``a``; right endpoint pinned."""
    deltas = clamp_spacing(s.deltas)
    total = float(np.sum(s.deltas))
    nodes = np.empty(deltas.size + 1)
    nodes[0] = a
    np.cumsum(deltas, out=nodes[1:])
    nodes[1:] += a
    nodes[-1] = a + total
    return Grid1D(nodes)


def grid_to_spacing(g: Grid1D) -> SpacingVector:
    return SpacingVector(g.widths)


def monotone_interpolant(x: np.ndarray, y: np.ndarray) -> PchipInterpolator:
    """Fritsch-Carlson monotone cubic through (x, y).

    scipy's slope formula divides by zero on exactly flat segments and masks
    the result afterwards; the errstate guard keeps that quiet.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        return PchipInterpolator(x, y)


def _check_shared_endpoints(old: Grid1D, new: Grid1D) -> None:
    scale = old.b - old.a
    if abs(old.a - new.a) > _ENDPOINT_RTOL * scale or abs(old.b - new.b) > _ENDPOINT_RTOL * scale:
        raise GridError(
            f"grids must share endpoints: [{old.a}, {old.b}] vs [{new.a}, {new.b}]"
        )


def hermite_transfer(old_grid: Grid1D, values: np.ndarray, new_grid: Grid1D) -> np.ndarray:
    """Transfer node or cell data between grids with monotone cubic Hermite
    interpolation (Fritsch-Carlson slopes, no new extrema between data points).

    ``values`` of length ``n_nodes`` are treated as nodal samples; length
    ``n_cells`` treats them as point values at cell centers, re-read at the
    new cell centers. Cell-mode queries are clamped to the old center range
    so no extrapolation happens near the walls.
    """
    _check_shared_endpoints(old_grid, new_grid)
    values = np.asarray(values, dtype=float)
    if values.shape == (old_grid.nodes.size,):
        x_old, x_new = old_grid.nodes, new_grid.nodes
    elif values.shape == (old_grid.n_cells,):
        x_old = old_grid.centers
        x_new = np.clip(new_grid.centers, x_old[0], x_old[-1])
    else:
        raise GridError(
            f"values have shape {values.shape}, expected ({old_grid.nodes.size},) "
            f"or ({old_grid.n_cells},)"
        )
    if x_old.size < 2:
        return np.full(x_new.shape, values[0])
    return monotone_interpolant(x_old, values)(x_new)


def cell_values_to_nodes(grid: Grid1D, cell_values: np.ndarray) -> np.ndarray:
    """Nodal samples of per-cell data: monotone interpolation through the cell
    centers, held constant beyond the first/last center."""
    cell_values = np.asarray(cell_values, dtype=float)
    if cell_values.shape != (grid.n_cells,):
        raise GridError("cell_values must have one entry per cell")
    if grid.n_cells == 1:
        return np.full(grid.nodes.size, cell_values[0])
    centers = grid.centers
    query = np.clip(grid.nodes, centers[0], centers[-1])
    return monotone_interpolant(centers, cell_values)(query)


def snapshot_csv(path, grid: Grid1D, **fields: np.ndarray) -> None:
    """Write a node-aligned snapshot: one row per node, columns (index, x, ...)."""
    names = list(fields)
    columns = [np.asarray(fields[k], dtype=float) for k in names]
    for name, col in zip(names, columns):
        if col.shape != grid.nodes.shape:
            raise GridError(f"field {name!r} is not node-aligned")
    with open(path, "w") as fh:
        fh.write(",".join(["index", "x"] + names) + "\n")
        for i, x in enumerate(grid.nodes):
            row = [str(i), repr(float(x))] + [repr(float(c[i])) for c in columns]
            fh.write(",".join(row) + "\n")
