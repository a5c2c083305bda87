"""Arc-length-type monitor function on nodal fields, with optional Gaussian
kernel smoothing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .grids import Grid1D

# Field slot order matches the weights alpha1..alpha4.
FIELD_SLOTS = ("rho", "mom", "e", "p")


class MonitorError(ValueError):
    """Monitor configuration or input fields are unusable."""


@dataclass(frozen=True)
class MonitorConfig:
    """Weights for the normalized gradient terms plus kernel smoothing.

    ``window_fraction`` is the total kernel support as a fraction of the
    domain length; the Gaussian sigma is one sixth of that support so the
    truncated kernel at +-3 sigma carries essentially all its mass.
    """

    alpha1: float = 0.0
    alpha2: float = 600.0
    alpha3: float = 0.0
    alpha4: float = 0.0
    smoothing: str = "none"
    window_fraction: float = 0.1

    def __post_init__(self):
        alphas = (self.alpha1, self.alpha2, self.alpha3, self.alpha4)
        if any(a < 0 for a in alphas):
            raise MonitorError("alpha weights must be nonnegative")
        if not any(a > 0 for a in alphas):
            raise MonitorError("at least one alpha must be positive")
        if self.smoothing not in ("none", "gaussian"):
            raise MonitorError(f"unknown smoothing {self.smoothing!r}")
        if self.smoothing == "gaussian" and not (0.0 < self.window_fraction <= 1.0):
            raise MonitorError("window_fraction must lie in (0, 1]")

    @property
    def alphas(self):
        return (self.alpha1, self.alpha2, self.alpha3, self.alpha4)


@dataclass(frozen=True)
class MonitorField:
    """Per-node monitor values omega >= 1 on the grid they were sampled on."""

    omega: np.ndarray
    grid: Grid1D

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        if omega.shape != self.grid.nodes.shape:
            raise MonitorError("omega must be node-aligned with its grid")
        if not np.all(np.isfinite(omega)):
            raise MonitorError("omega must be finite")
        object.__setattr__(self, "omega", omega)


def derivative_on_grid(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """First derivative on a non-uniform grid: centered three-point formulas
    in the interior, one-sided second-order at the endpoints. Exact for
    quadratics."""
    f = np.asarray(values, dtype=float)
    x = grid.nodes
    if f.shape != x.shape:
        raise MonitorError("values must be node-aligned with the grid")
    if x.size < 3:
        raise MonitorError("need at least 3 nodes for a second-order derivative")

    h1 = x[1:-1] - x[:-2]
    h2 = x[2:] - x[1:-1]
    out = np.empty_like(f)
    out[1:-1] = (
        -h2 / (h1 * (h1 + h2)) * f[:-2]
        + (h2 - h1) / (h1 * h2) * f[1:-1]
        + h1 / (h2 * (h1 + h2)) * f[2:]
    )
    g1, g2 = x[1] - x[0], x[2] - x[1]
    out[0] = (
        -(2 * g1 + g2) / (g1 * (g1 + g2)) * f[0]
        + (g1 + g2) / (g1 * g2) * f[1]
        - g1 / (g2 * (g1 + g2)) * f[2]
    )
    g1, g2 = x[-2] - x[-3], x[-1] - x[-2]
    out[-1] = (
        (2 * g2 + g1) / (g2 * (g1 + g2)) * f[-1]
        - (g1 + g2) / (g1 * g2) * f[-2]
        + g2 / (g1 * (g1 + g2)) * f[-3]
    )
    return out


def monitor_eval(
    fields: Mapping[str, np.ndarray], grid: Grid1D, cfg: MonitorConfig
) -> MonitorField:
    """omega_i = sqrt(1 + sum_k alpha_k (|df_k/dx|_i / max_j |df_k/dx|_j)^2).

    Each gradient is normalized by its own sup norm, so omega is invariant
    under positive rescaling of any input field; a field with identically
    zero gradient contributes nothing.
    """
    total = np.zeros(grid.nodes.size)
    min_h = float(np.min(grid.widths))
    for slot, alpha in zip(FIELD_SLOTS, cfg.alphas):
        if alpha == 0.0:
            continue
        if slot not in fields:
            raise MonitorError(f"monitor weight for {slot!r} is positive but the field is missing")
        values = np.asarray(fields[slot], dtype=float)
        d = np.abs(derivative_on_grid(values, grid))
        top = d.max()
        # A constant field differentiated in floating point leaves ~eps/h noise;
        # normalizing by that noise would fabricate an O(1) monitor term.
        noise_floor = 64.0 * np.finfo(float).eps * np.max(np.abs(values), initial=0.0) / min_h
        if top > noise_floor:
            total += alpha * (d / top) ** 2
    omega = np.sqrt(1.0 + total)
    mf = MonitorField(omega, grid)
    if cfg.smoothing == "gaussian":
        mf = gaussian_smooth(mf, cfg.window_fraction)
    return mf


def gaussian_smooth(m: MonitorField, window_fraction: float) -> MonitorField:
    """Discrete normalized Gaussian convolution on the monitor's own grid.

    sigma = window_fraction * (b - a) / 6, truncated at +-3 sigma and
    renormalized near the boundaries. Weights include trapezoidal quadrature
    factors so non-uniform node spacing does not bias the average; output
    values stay inside [min(omega), max(omega)].
    """
    if not (0.0 < window_fraction <= 1.0):
        raise MonitorError("window_fraction must lie in (0, 1]")
    x = m.grid.nodes
    sigma = window_fraction * (x[-1] - x[0]) / 6.0
    dist = x[:, None] - x[None, :]
    kernel = np.exp(-0.5 * (dist / sigma) ** 2)
    # Tolerant cutoff: when 3*sigma lands exactly on a node spacing, float
    # jitter in the distances must not flip window membership row by row.
    kernel[np.abs(dist) > 3.0 * sigma * (1.0 + 1e-12)] = 0.0

    quad = np.empty_like(x)
    quad[0] = 0.5 * (x[1] - x[0])
    quad[-1] = 0.5 * (x[-1] - x[-2])
    quad[1:-1] = 0.5 * (x[2:] - x[:-2])
    kernel *= quad[None, :]

    smoothed = kernel @ m.omega / kernel.sum(axis=1)
    return MonitorField(smoothed, m.grid)
