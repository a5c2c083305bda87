"""Reference solutions and error norms: the exact Sod Riemann solution,
fine-mesh WENO5 references, and cell-weighted L1/L2 norms."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cases import CaseSetup, square_wave_exact
from .euler import ConservedField, GasModel, PrimitiveField, cons_to_prim
from .grids import Grid1D, uniform_mesh
from .schemes import CflPolicy, cfl_dt, rk3_advance, weno5_rhs


class ReferenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Exact Riemann solver (polytropic gas, no vacuum)


def _pressure_fn(p, state, gas: GasModel):
    """Toro's f_K(p) and its derivative for one side of the Riemann problem."""
    rho_k, u_k, p_k = state
    g = gas.gamma
    c_k = np.sqrt(g * p_k / rho_k)
    if p > p_k:  # shock branch
        a_k = 2.0 / ((g + 1.0) * rho_k)
        b_k = (g - 1.0) / (g + 1.0) * p_k
        root = np.sqrt(a_k / (p + b_k))
        f = (p - p_k) * root
        df = root * (1.0 - 0.5 * (p - p_k) / (p + b_k))
    else:  # rarefaction branch
        f = 2.0 * c_k / (g - 1.0) * ((p / p_k) ** ((g - 1.0) / (2.0 * g)) - 1.0)
        df = (p / p_k) ** (-(g + 1.0) / (2.0 * g)) / (rho_k * c_k)
    return f, df


def riemann_star_state(left, right, gas: GasModel, tol: float = 1e-13):
    """Star-region pressure and velocity by Newton iteration on the pressure
    function, with a bisection fallback. Rejects vacuum-forming data."""
    rho_l, u_l, p_l = left
    rho_r, u_r, p_r = right
    g = gas.gamma
    c_l = np.sqrt(g * p_l / rho_l)
    c_r = np.sqrt(g * p_r / rho_r)
    if 2.0 * (c_l + c_r) / (g - 1.0) <= u_r - u_l:
        raise ReferenceError("initial data forms vacuum")

    du = u_r - u_l
    p = max(0.5 * (p_l + p_r), 1e-12)
    for _ in range(100):
        f_l, df_l = _pressure_fn(p, left, gas)
        f_r, df_r = _pressure_fn(p, right, gas)
        delta = (f_l + f_r + du) / (df_l + df_r)
        p_new = p - delta
        if p_new <= 0.0:
            p_new = 0.5 * p
        if abs(p_new - p) < tol * max(p, p_new):
            p = p_new
            break
        p = p_new
    else:
        # Newton stalled; bisect on a bracketing interval.
        lo, hi = 1e-12, 10.0 * max(p_l, p_r)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            f = _pressure_fn(mid, left, gas)[0] + _pressure_fn(mid, right, gas)[0] + du
            if f > 0.0:
                hi = mid
            else:
                lo = mid
        p = 0.5 * (lo + hi)
    f_l, _ = _pressure_fn(p, left, gas)
    f_r, _ = _pressure_fn(p, right, gas)
    u_star = 0.5 * (u_l + u_r) + 0.5 * (f_r - f_l)
    return float(p), float(u_star)


def sod_exact(
    x: np.ndarray,
    t: float,
    left=(1.0, 0.0, 1.0),
    right=(0.125, 0.0, 0.1),
    gas: GasModel | None = None,
    x0: float = 0.5,
) -> PrimitiveField:
    """Exact self-similar Riemann solution sampled at the given abscissae."""
    gas = gas or GasModel()
    x = np.asarray(x, dtype=float)
    g = gas.gamma
    rho_l, u_l, p_l = left
    rho_r, u_r, p_r = right
    if t < 0.0:
        raise ReferenceError("t must be nonnegative")
    if t == 0.0:
        rho = np.where(x <= x0, rho_l, rho_r)
        u = np.where(x <= x0, u_l, u_r)
        p = np.where(x <= x0, p_l, p_r)
        return PrimitiveField(rho, u, p, p / (rho * (g - 1.0)))

    p_star, u_star = riemann_star_state(left, right, gas)
    c_l = np.sqrt(g * p_l / rho_l)
    c_r = np.sqrt(g * p_r / rho_r)
    gm, gp = g - 1.0, g + 1.0
    xi = (x - x0) / t

    rho = np.empty_like(xi)
    u = np.empty_like(xi)
    p = np.empty_like(xi)

    left_side = xi <= u_star
    if p_star > p_l:  # left shock
        rho_star_l = rho_l * ((p_star / p_l + gm / gp) / (gm / gp * p_star / p_l + 1.0))
        s_l = u_l - c_l * np.sqrt(gp / (2 * g) * p_star / p_l + gm / (2 * g))
        pre = left_side & (xi < s_l)
        post = left_side & ~(xi < s_l)
        rho[pre], u[pre], p[pre] = rho_l, u_l, p_l
        rho[post], u[post], p[post] = rho_star_l, u_star, p_star
    else:  # left rarefaction
        rho_star_l = rho_l * (p_star / p_l) ** (1.0 / g)
        c_star_l = c_l * (p_star / p_l) ** (gm / (2 * g))
        head, tail = u_l - c_l, u_star - c_star_l
        pre = left_side & (xi < head)
        fan = left_side & (xi >= head) & (xi <= tail)
        post = left_side & (xi > tail)
        rho[pre], u[pre], p[pre] = rho_l, u_l, p_l
        rho[post], u[post], p[post] = rho_star_l, u_star, p_star
        cf = (2.0 / gp) * (c_l + gm / 2.0 * (u_l - xi[fan]))
        u[fan] = (2.0 / gp) * (c_l + gm / 2.0 * u_l + xi[fan])
        rho[fan] = rho_l * (cf / c_l) ** (2.0 / gm)
        p[fan] = p_l * (cf / c_l) ** (2.0 * g / gm)

    right_side = ~left_side
    if p_star > p_r:  # right shock
        rho_star_r = rho_r * ((p_star / p_r + gm / gp) / (gm / gp * p_star / p_r + 1.0))
        s_r = u_r + c_r * np.sqrt(gp / (2 * g) * p_star / p_r + gm / (2 * g))
        post = right_side & (xi <= s_r)
        pre = right_side & ~(xi <= s_r)
        rho[post], u[post], p[post] = rho_star_r, u_star, p_star
        rho[pre], u[pre], p[pre] = rho_r, u_r, p_r
    else:  # right rarefaction
        rho_star_r = rho_r * (p_star / p_r) ** (1.0 / g)
        c_star_r = c_r * (p_star / p_r) ** (gm / (2 * g))
        head, tail = u_r + c_r, u_star + c_star_r
        pre = right_side & (xi > head)
        fan = right_side & (xi >= tail) & (xi <= head)
        post = right_side & (xi < tail)
        rho[pre], u[pre], p[pre] = rho_r, u_r, p_r
        rho[post], u[post], p[post] = rho_star_r, u_star, p_star
        cf = (2.0 / gp) * (c_r - gm / 2.0 * (u_r - xi[fan]))
        u[fan] = (2.0 / gp) * (-c_r + gm / 2.0 * u_r + xi[fan])
        rho[fan] = rho_r * (cf / c_r) ** (2.0 / gm)
        p[fan] = p_r * (cf / c_r) ** (2.0 * g / gm)

    return PrimitiveField(rho, u, p, p / (rho * (g - 1.0)))


# ---------------------------------------------------------------------------
# Fine-mesh reference runs


def _integrate_uniform_weno5(case: CaseSetup, n_cells: int, cfl: float = 0.6) -> np.ndarray:
    grid = uniform_mesh(case.a, case.b, n_cells)
    U = case.initial_state(grid)
    policy = CflPolicy(cfl_number=cfl)
    t = 0.0
    while t < case.end_time:
        dt = cfl_dt(U, grid, policy, case.speed, t, case.end_time)
        U, _ = rk3_advance(
            U, grid, dt, lambda V: weno5_rhs(V, grid, case.flux, case.speed, case.boundary)
        )
        t = case.end_time if case.end_time - t <= dt else t + dt
    return U


def _restrict(fine: np.ndarray, refinement: int) -> np.ndarray:
    k, n_fine = fine.shape
    return fine.reshape(k, n_fine // refinement, refinement).mean(axis=2)


def fine_reference(
    case: CaseSetup,
    n_cells: int,
    refinement: int = 16,
    cache_dir=None,
    cfl: float = 0.6,
) -> np.ndarray:
    """Conserved state from a WENO5+RK3 uniform run at ``refinement`` times
    the target resolution, averaged back onto the coarse cells.

    Cached to disk keyed by a hash of (case, scheme, resolution, end time).
    """
    key = {
        "case": case.name,
        "scheme": "weno5_rk3",
        "n_cells": n_cells,
        "refinement": refinement,
        "end_time": case.end_time,
        "gamma": case.gas.gamma if case.gas else None,
        "cfl": cfl,
    }
    digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:12]
    cache = None
    if cache_dir is not None:
        cache = Path(cache_dir) / f"ref_{case.name}_{n_cells}x{refinement}_{digest}.npy"
        if cache.exists():
            return np.load(cache)

    fine = _integrate_uniform_weno5(case, n_cells * refinement, cfl)
    coarse = _restrict(fine, refinement)
    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        np.save(cache, coarse)
    return coarse


def reference_primitives(case: CaseSetup, grid: Grid1D, cache_dir=None, refinement: int = 16):
    """Reference quantities at the comparison grid's cell centers.

    Sod and the square wave have exact solutions; the blast-wave cases fall
    back to a fine-mesh WENO5 run restricted by averaging.
    """
    centers = grid.centers
    if case.name == "sod":
        prim = sod_exact(centers, case.end_time, gas=case.gas)
        return {"density": prim.rho, "velocity": prim.u,
                "internal_energy": prim.e, "pressure": prim.p}
    if case.name == "square_wave":
        return {"u": square_wave_exact(centers, case.end_time)}
    U = fine_reference(case, grid.n_cells, refinement=refinement, cache_dir=cache_dir)
    prim = cons_to_prim(ConservedField.from_stack(U), case.gas)
    return {"density": prim.rho, "velocity": prim.u,
            "internal_energy": prim.e, "pressure": prim.p}


# ---------------------------------------------------------------------------
# Norms


@dataclass(frozen=True)
class NormRow:
    """Cell-weighted solution and relative-error norms for one quantity."""

    quantity: str
    l2_solution: float
    l2_rel_error: float
    l1_solution: float
    l1_rel_error: float
    ref_l2: float
    ref_l1: float


def norm_l1(values: np.ndarray, widths: np.ndarray) -> float:
    return float(np.sum(widths * np.abs(values)))


def norm_l2(values: np.ndarray, widths: np.ndarray) -> float:
    return float(np.sqrt(np.sum(widths * values * values)))


def error_norms(
    numerical: np.ndarray, reference: np.ndarray, grid: Grid1D, quantity: str = "value"
) -> NormRow:
    """Discrete cell-weighted norms ||v||_p = (sum dx_i |v_i|^p)^(1/p) and the
    relative errors ||num - ref||_p / ||ref||_p."""
    numerical = np.asarray(numerical, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if numerical.shape != reference.shape or numerical.shape != (grid.n_cells,):
        raise ReferenceError("fields must live on the comparison grid's cells")
    w = grid.widths
    ref_l1 = norm_l1(reference, w)
    ref_l2 = norm_l2(reference, w)
    if ref_l1 == 0.0 or ref_l2 == 0.0:
        raise ReferenceError(f"reference norm of {quantity!r} is zero")
    diff = numerical - reference
    return NormRow(
        quantity=quantity,
        l2_solution=norm_l2(numerical, w),
        l2_rel_error=norm_l2(diff, w) / ref_l2,
        l1_solution=norm_l1(numerical, w),
        l1_rel_error=norm_l1(diff, w) / ref_l1,
        ref_l2=ref_l2,
        ref_l1=ref_l1,
    )
