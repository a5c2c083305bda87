"""Finite-volume discretizations and explicit time stepping.

Two-step Richtmyer Lax-Wendroff and WENO5 reconstruction with local
Lax-Friedrichs flux splitting, both on arbitrary strictly monotone grids,
plus SSP RK3 and CFL step-size control. States are (n_comp, n_cells)
arrays; scalar laws use n_comp = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grids import Grid1D

WENO_EPS = 1e-6
WENO_P = 2
WENO_C = np.array([0.1, 0.6, 0.3])
N_GHOST = 3


class SolverError(RuntimeError):
    """Time integration produced non-finite data or an invalid setup."""


@dataclass(frozen=True)
class CflPolicy:
    """CFL number for adaptive dt; dt_max caps the step when nothing moves."""

    cfl_number: float = 0.6
    dt_max: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.cfl_number < 1.0):
            raise ValueError(f"cfl_number must lie in (0, 1), got {self.cfl_number}")
        if self.dt_max <= 0.0:
            raise ValueError("dt_max must be positive")


def cfl_dt(
    state: np.ndarray,
    grid: Grid1D,
    policy: CflPolicy,
    speed_fn: Callable[[np.ndarray], float],
    t_now: float = 0.0,
    t_end: float | None = None,
) -> float:
    """dt = cfl * min(dx) / max wavespeed, clipped to land exactly on t_end."""
    speed = speed_fn(state)
    if speed > 0.0:
        dt = policy.cfl_number * float(np.min(grid.widths)) / speed
    else:
        dt = policy.dt_max
    dt = min(dt, policy.dt_max)
    if t_end is not None:
        remaining = t_end - t_now
        if remaining <= 0.0:
            raise SolverError(f"no time left: t={t_now}, t_end={t_end}")
        dt = min(dt, remaining)
    return dt


@dataclass(frozen=True)
class Boundary:
    """Ghost-cell fill policy.

    Dirichlet holds the prescribed states in all ghost cells (and pins the
    boundary cells of the Lax-Wendroff update). Reflective mirrors interior
    cells with per-component signs, e.g. (1, -1, 1) for the Euler system.
    """

    kind: str = "dirichlet"
    left_state: np.ndarray | None = None
    right_state: np.ndarray | None = None
    reflect_signs: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("dirichlet", "reflective"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "dirichlet" and (self.left_state is None or self.right_state is None):
            raise ValueError("dirichlet boundary needs left_state and right_state")
        if self.kind == "reflective" and self.reflect_signs is None:
            raise ValueError("reflective boundary needs reflect_signs")


# ---------------------------------------------------------------------------
# Two-step Lax-Wendroff


def lax_wendroff_step(
    state: np.ndarray,
    grid: Grid1D,
    dt: float,
    flux_fn: Callable[[np.ndarray], np.ndarray],
):
    """One Richtmyer step on cell-centered data; boundary cells held fixed.

    Half-step states live at the midpoints between cell centers; the full
    update divides by the averaged center-to-center spacing, which reduces
    to the cell width on a uniform mesh. Returns the new state and the
    half-step fluxes bounding the updated interior (for conservation audits).
    """
    U = np.atleast_2d(np.asarray(state, dtype=float))
    n = U.shape[1]
    if n < 3:
        raise SolverError("Lax-Wendroff needs at least 3 cells")
    xc = grid.centers
    if xc.size != n:
        raise SolverError("state and grid disagree on cell count")

    F = flux_fn(U)
    dxc = xc[1:] - xc[:-1]
    Uh = 0.5 * (U[:, 1:] + U[:, :-1]) - (dt / (2.0 * dxc)) * (F[:, 1:] - F[:, :-1])
    Fh = flux_fn(Uh)

    denom = 0.5 * (xc[2:] - xc[:-2])
    U_new = U.copy()
    U_new[:, 1:-1] = U[:, 1:-1] - (dt / denom) * (Fh[:, 1:] - Fh[:, :-1])
    if state.ndim == 1:
        return U_new[0], (Fh[:, 0], Fh[:, -1])
    return U_new, (Fh[:, 0], Fh[:, -1])


# ---------------------------------------------------------------------------
# WENO5 on non-uniform grids


@dataclass
class Weno5Workspace:
    """Per-interface candidates q^k, smoothness indicators IS^k, normalized
    weights, and the local interface interpolation factor."""

    qk: np.ndarray
    isk: np.ndarray
    omegak: np.ndarray
    alpha_interp: np.ndarray


def _stencil_eval(b0, b1, b2, z0, z1, z2, z3, x_star, x_c, dx):
    """Quadratic reconstruction on one 3-cell stencil via the divided
    differences of the primitive function.

    Returns the interfacial value at x_star plus the smoothness indicator
    built from the polynomial's derivatives over the target cell; on a
    uniform mesh both reduce to the classical Jiang-Shu expressions.
    """
    d012 = (b1 - b0) / (z2 - z0)
    d123 = (b2 - b1) / (z3 - z1)
    d0123 = (d123 - d012) / (z3 - z0)
    w0 = x_star - z0
    w1 = x_star - z1
    w2 = x_star - z2
    q = b0 + d012 * (w0 + w1) + d0123 * (w1 * w2 + w0 * w2 + w0 * w1)
    qp = 2.0 * d012 + d0123 * (6.0 * x_c - 2.0 * (z0 + z1 + z2))
    smooth = (qp * dx) ** 2 + 39.0 * (d0123 * dx * dx) ** 2
    return q, smooth


def _weno5_left(avg: np.ndarray, nodes: np.ndarray):
    """Left-biased interfacial states at nodes 3..m-2 for m >= 5 cells."""
    m = avg.size
    y = nodes
    i = np.arange(2, m - 2)  # target cells
    x_star = y[i + 1]
    x_c = 0.5 * (y[i] + y[i + 1])
    dx = y[i + 1] - y[i]

    qk = np.empty((3, i.size))
    isk = np.empty((3, i.size))
    for r, off in enumerate((-2, -1, 0)):
        lo = i + off
        qk[r], isk[r] = _stencil_eval(
            avg[lo], avg[lo + 1], avg[lo + 2],
            y[lo], y[lo + 1], y[lo + 2], y[lo + 3],
            x_star, x_c, dx,
        )
    alpha = WENO_C[:, None] / (WENO_EPS + isk) ** WENO_P
    omega = alpha / alpha.sum(axis=0)
    uhat = np.sum(omega * qk, axis=0)
    frac = dx / (y[i + 2] - y[i])  # dx_i / (dx_i + dx_{i+1})
    return uhat, Weno5Workspace(qk=qk, isk=isk, omegak=omega, alpha_interp=frac)


def _weno5_right(avg: np.ndarray, nodes: np.ndarray):
    """Right-biased interfacial states at nodes 2..m-3, via mirror symmetry."""
    mirror = (nodes[0] + nodes[-1]) - nodes[::-1]
    uhat_m, ws_m = _weno5_left(avg[::-1], mirror)
    ws = Weno5Workspace(
        qk=ws_m.qk[:, ::-1],
        isk=ws_m.isk[:, ::-1],
        omegak=ws_m.omegak[:, ::-1],
        alpha_interp=ws_m.alpha_interp[::-1],
    )
    return uhat_m[::-1], ws


def weno5_reconstruct(averages: np.ndarray, grid: Grid1D):
    """Left-biased 5th-order interfacial states from cell averages.

    Covers the interfaces with a full 5-cell stencil, i.e. nodes 3..m-2 of an
    m-cell grid; callers wanting every physical interface extend with ghost
    cells first. Returns the states and the per-interface workspace.
    """
    averages = np.asarray(averages, dtype=float)
    if averages.size < 5:
        raise SolverError("WENO5 needs at least 5 cells")
    if averages.size != grid.n_cells:
        raise SolverError("averages and grid disagree on cell count")
    return _weno5_left(averages, grid.nodes)


def llf_flux_split(states: np.ndarray, fluxes: np.ndarray, max_speed: float):
    """Local Lax-Friedrichs split f_pm = (f +- a*u)/2 with a global bound a."""
    f_plus = 0.5 * (fluxes + max_speed * states)
    f_minus = 0.5 * (fluxes - max_speed * states)
    return f_plus, f_minus


def extend_grid(grid: Grid1D, n_ghost: int = N_GHOST) -> np.ndarray:
    """Ghost nodes with widths mirroring the adjacent interior cells."""
    w = grid.widths
    if w.size < n_ghost:
        raise SolverError(f"need at least {n_ghost} cells to build ghosts")
    left = grid.a - np.cumsum(w[:n_ghost])[::-1]
    right = grid.b + np.cumsum(w[::-1][:n_ghost])
    return np.concatenate([left, grid.nodes, right])


def extend_state(U: np.ndarray, boundary: Boundary, n_ghost: int = N_GHOST) -> np.ndarray:
    k, n = U.shape
    ext = np.empty((k, n + 2 * n_ghost))
    ext[:, n_ghost:n_ghost + n] = U
    if boundary.kind == "dirichlet":
        ext[:, :n_ghost] = np.asarray(boundary.left_state, dtype=float)[:, None]
        ext[:, n_ghost + n:] = np.asarray(boundary.right_state, dtype=float)[:, None]
    else:
        signs = np.asarray(boundary.reflect_signs, dtype=float)[:, None]
        ext[:, :n_ghost] = signs * U[:, :n_ghost][:, ::-1]
        ext[:, n_ghost + n:] = signs * U[:, n - n_ghost:][:, ::-1]
    return ext


def weno5_rhs(
    state: np.ndarray,
    grid: Grid1D,
    flux_fn: Callable[[np.ndarray], np.ndarray],
    speed_fn: Callable[[np.ndarray], float],
    boundary: Boundary,
    ws_sink: Callable[[Weno5Workspace], None] | None = None,
):
    """Semi-discrete RHS: -(fhat_{i+1/2} - fhat_{i-1/2}) / dx_i with
    componentwise LLF-split WENO5 interface fluxes.

    Returns (rhs, fhat) where fhat holds the reconstructed interface fluxes
    at all n+1 physical interfaces; fhat[:, 0] and fhat[:, -1] feed the
    discrete conservation audit.
    """
    U = np.atleast_2d(np.asarray(state, dtype=float))
    k, n = U.shape
    if n < 5:
        raise SolverError("WENO5 needs at least 5 cells")
    ext_nodes = extend_grid(grid)
    U_ext = extend_state(U, boundary)
    a = speed_fn(U_ext)
    F_ext = flux_fn(U_ext)
    f_plus, f_minus = llf_flux_split(U_ext, F_ext, a)

    fhat = np.empty((k, n + 1))
    for c in range(k):
        fp_hat, ws_p = _weno5_left(f_plus[c], ext_nodes)
        fm_hat, ws_m = _weno5_right(f_minus[c], ext_nodes)
        # left-biased values start at ext node 3 == physical node 0;
        # right-biased start at ext node 2, so drop their first entry.
        fhat[c] = fp_hat[: n + 1] + fm_hat[1: n + 2]
        if ws_sink is not None:
            ws_sink(ws_p)
            ws_sink(ws_m)

    rhs = -(fhat[:, 1:] - fhat[:, :-1]) / grid.widths
    if state.ndim == 1:
        return rhs[0], fhat
    return rhs, fhat


# ---------------------------------------------------------------------------
# SSP RK3 (Shu-Osher)

_RK3_FLUX_WEIGHTS = (1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0)


def rk3_advance(state: np.ndarray, grid: Grid1D, dt: float, rhs_fn):
    """Three-stage strong-stability-preserving RK3 step.

    ``rhs_fn(state) -> (rhs, fhat)``. Aborts on non-finite data after any
    stage. Returns the new state plus the dt-weighted boundary-interface
    flux integral (left, right), each a length-n_comp vector.
    """
    U = np.asarray(state, dtype=float)
    bflux_l = 0.0
    bflux_r = 0.0

    L0, f0 = rhs_fn(U)
    u1 = U + dt * L0
    _check_finite(u1, "RK3 stage 1")
    L1, f1 = rhs_fn(u1)
    u2 = 0.75 * U + 0.25 * (u1 + dt * L1)
    _check_finite(u2, "RK3 stage 2")
    L2, f2 = rhs_fn(u2)
    U_new = (1.0 / 3.0) * U + (2.0 / 3.0) * (u2 + dt * L2)
    _check_finite(U_new, "RK3 stage 3")

    for w, f in zip(_RK3_FLUX_WEIGHTS, (f0, f1, f2)):
        bflux_l = bflux_l + w * dt * f[:, 0]
        bflux_r = bflux_r + w * dt * f[:, -1]
    return U_new, (bflux_l, bflux_r)


def _check_finite(U: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(U)):
        bad = np.argwhere(~np.isfinite(np.atleast_2d(U)))
        comp, cell = bad[0]
        raise SolverError(f"non-finite state after {where} (component {comp}, cell {cell})")
