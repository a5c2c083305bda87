"""Standard adaptive zoning: elliptic moving-mesh BVP solved by nonlinear
fixed-point iteration, and its parabolic relaxation by pseudo-time stepping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.linalg import solve_banded

from .grids import Grid1D, monotone_interpolant
from .monitor import MonitorConfig, MonitorField, monitor_eval


class ZoningError(RuntimeError):
    """Mesh relocation failed (non-finite monitor, node crossing, ...)."""


@dataclass(frozen=True)
class EllipticSolveConfig:
    fixed_point_tol: float = 1e-8
    max_iters: int = 1000
    # Plain iteration (1.0) limit-cycles on spiky staircase monitors: the
    # equidistribution map's Jacobian picks up an eigenvalue below -1 at the
    # jumps. 0.25 converges on the whole training distribution.
    relaxation: float = 0.25

    def __post_init__(self):
        if self.fixed_point_tol <= 0.0:
            raise ValueError("fixed_point_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (0.0 < self.relaxation <= 1.0):
            raise ValueError("relaxation must lie in (0, 1]")


@dataclass(frozen=True)
class ParabolicSolveConfig:
    n_pseudo_steps: int = 1000
    # None picks 0.4 * min(dx)^2 / max(omega), the explicit diffusion limit.
    pseudo_dt: float | None = None
    max_halvings: int = 5

    def __post_init__(self):
        if self.n_pseudo_steps < 1:
            raise ValueError("n_pseudo_steps must be >= 1")
        if self.pseudo_dt is not None and self.pseudo_dt <= 0.0:
            raise ValueError("pseudo_dt must be positive")


@dataclass(frozen=True)
class ZoningResult:
    grid: Grid1D
    iterations: int
    converged: bool
    displacement: float


def elliptic_linear_solve(omega: MonitorField, grid: Grid1D) -> Grid1D:
    """One linear solve of the equidistribution BVP with frozen nodal omega.

    First-order FV discretization on the uniform computational coordinate:
    the midpoint coefficients are nodal averages and the resulting
    tridiagonal system pins both endpoints. Constant omega returns the
    uniform grid.
    """
    w = omega.omega
    if np.any(w <= 0.0):
        raise ZoningError("monitor must be strictly positive")
    n = grid.n_cells
    a, b = grid.a, grid.b
    w_half = 0.5 * (w[1:] + w[:-1])  # one value per cell

    # rows are interior nodes 1..n-1: w_half[i] x_{i+1} - (w_half[i]+w_half[i-1]) x_i
    #                                 + w_half[i-1] x_{i-1} = 0
    m = n - 1
    banded = np.zeros((3, m))
    banded[0, 1:] = w_half[1:-1]           # superdiagonal
    banded[1, :] = -(w_half[1:] + w_half[:-1])
    banded[2, :-1] = w_half[1:-1]          # subdiagonal
    rhs = np.zeros(m)
    rhs[0] -= w_half[0] * a
    rhs[-1] -= w_half[-1] * b
    if np.any(banded[1, :] == 0.0):
        raise ZoningError("singular tridiagonal system")
    interior = solve_banded((1, 1), banded, rhs)

    nodes = np.empty(n + 1)
    nodes[0] = a
    nodes[-1] = b
    nodes[1:-1] = interior
    if np.any(np.diff(nodes) <= 0.0):
        raise ZoningError("linear solve produced a non-monotone grid")
    return Grid1D(nodes)


def frozen_monitor(
    fields: Mapping[str, np.ndarray], grid: Grid1D, monitor_cfg: MonitorConfig
):
    """The monitor as a fixed function of position for one zoning solve.

    omega is evaluated once from the nodal fields on their home grid, then
    interpolated monotonically so the mesh iteration can sample it at moved
    node locations. Re-deriving gradients on each mesh iterate instead makes
    the discrete spike width track the local spacing and the iteration
    limit-cycles on discontinuous profiles, so the coefficient omega(xhat)
    follows the moving coordinate by sampling only.
    """
    base = monitor_eval(fields, grid, monitor_cfg)
    if not np.all(np.isfinite(base.omega)):
        raise ZoningError("non-finite monitor")
    return monotone_interpolant(grid.nodes, base.omega)


def elliptic_fixed_point(
    fields: Mapping[str, np.ndarray],
    field_grid: Grid1D,
    monitor_cfg: MonitorConfig,
    solve_cfg: EllipticSolveConfig = EllipticSolveConfig(),
    initial_grid: Grid1D | None = None,
) -> ZoningResult:
    """Alternate monitor sampling and linear solves until the mesh is
    self-consistent.

    Each iteration samples the frozen monitor function at the current node
    positions and re-solves the tridiagonal system. Convergence is declared
    when the unrelaxed solve moves no node by more than
    fixed_point_tol * (b - a); the damped update between successive iterates
    is smaller still. Hitting max_iters returns the last iterate with
    ``converged=False`` rather than raising. ``initial_grid`` warm-starts the
    iteration (defaults to the grid the fields live on).
    """
    scale = field_grid.b - field_grid.a
    omega_fn = frozen_monitor(fields, field_grid, monitor_cfg)
    grid = initial_grid if initial_grid is not None else field_grid
    displacement = np.inf
    for it in range(1, solve_cfg.max_iters + 1):
        omega = MonitorField(omega_fn(grid.nodes), grid)
        solved = elliptic_linear_solve(omega, grid)
        displacement = float(np.max(np.abs(solved.nodes - grid.nodes)))
        if solve_cfg.relaxation < 1.0:
            mix = (1.0 - solve_cfg.relaxation) * grid.nodes + solve_cfg.relaxation * solved.nodes
            solved = Grid1D(mix)
        converged = displacement < solve_cfg.fixed_point_tol * scale
        grid = solved if not converged else grid
        if converged:
            return ZoningResult(grid, it, True, displacement)
    return ZoningResult(grid, solve_cfg.max_iters, False, displacement)


def parabolic_advance(
    fields: Mapping[str, np.ndarray],
    field_grid: Grid1D,
    monitor_cfg: MonitorConfig,
    cfg: ParabolicSolveConfig = ParabolicSolveConfig(),
    initial_grid: Grid1D | None = None,
) -> Grid1D:
    """Explicit pseudo-time relaxation of the parabolic mesh equation.

    Runs ``n_pseudo_steps`` forward-Euler steps with endpoints pinned,
    sampling the frozen monitor at each intermediate mesh, so the long-step
    limit is the elliptic fixed point while few steps leave the nodes
    between their initial and fully adapted locations. Node crossings
    trigger a restart with pseudo_dt halved, up to ``max_halvings`` times.
    ``initial_grid`` selects the starting mesh (defaults to the field grid).
    """
    grid = initial_grid if initial_grid is not None else field_grid
    n = grid.n_cells
    dxi = (grid.b - grid.a) / n  # uniform computational spacing

    omega_fn = frozen_monitor(fields, field_grid, monitor_cfg)
    if cfg.pseudo_dt is not None:
        dtau0 = cfg.pseudo_dt
    else:
        # Explicit diffusion stability bound; the operator acts on the uniform
        # computational spacing, so an already concentrated grid does not
        # shrink the stable step.
        dtau0 = 0.4 * dxi * dxi / float(np.max(omega_fn(grid.nodes)))

    dtau = dtau0
    for _ in range(cfg.max_halvings + 1):
        nodes = grid.nodes.copy()
        crossed = False
        for _step in range(cfg.n_pseudo_steps):
            omega = omega_fn(nodes)
            w_half = 0.5 * (omega[1:] + omega[:-1])
            flux = w_half * np.diff(nodes) / dxi
            nodes[1:-1] += dtau * (flux[1:] - flux[:-1]) / dxi
            if np.any(np.diff(nodes) <= 0.0):
                crossed = True
                break
        if not crossed:
            return Grid1D(nodes)
        dtau *= 0.5
    raise ZoningError(
        f"parabolic relaxation kept crossing nodes after {cfg.max_halvings} halvings "
        f"(initial pseudo_dt {dtau0:g})"
    )


def equidistribution_residual(grid: Grid1D, omega: MonitorField) -> float:
    """Max relative deviation of per-cell trapezoidal monitor integrals from
    their common target; zero at perfect equidistribution."""
    if omega.grid.nodes.shape != grid.nodes.shape or not np.allclose(
        omega.grid.nodes, grid.nodes
    ):
        raise ZoningError("omega must be defined on the grid being measured")
    w = omega.omega
    cell = 0.5 * (w[1:] + w[:-1]) * grid.widths
    target = cell.sum() / grid.n_cells
    return float(np.max(np.abs(cell - target)) / target)
