"""Benchmark case definitions: domains, initial data, boundary handling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .euler import GasModel, PrimitiveField, prim_to_cons
from .grids import Grid1D
from .schemes import Boundary

CASE_NAMES = ("square_wave", "sod", "sedov", "woodward", "woodward_classic")

SOD_LEFT = (1.0, 0.0, 1.0)           # rho, u, p
SOD_RIGHT = (0.125, 0.0, 0.1)
SOD_SPLIT = 0.5
SEDOV_E0 = 2.8049e-4
SQUARE_LO, SQUARE_HI = 0.25, 0.4


class CaseError(ValueError):
    pass


@dataclass(frozen=True)
class CaseSetup:
    """Everything a run needs: domain, end time, initial cell data, boundary
    policy, and the flux/wavespeed callables for the hyperbolic system."""

    name: str
    a: float
    b: float
    end_time: float
    kind: str                      # "euler" or "scalar"
    gas: GasModel | None
    boundary: Boundary
    ic: Callable[[np.ndarray], np.ndarray]   # cell centers -> (n_comp, n) state
    flux: Callable[[np.ndarray], np.ndarray]
    speed: Callable[[np.ndarray], float]

    def initial_state(self, grid: Grid1D) -> np.ndarray:
        return self.ic(grid.centers)


def _column(prim: tuple, gas: GasModel) -> np.ndarray:
    rho, u, p = prim
    c = prim_to_cons(
        PrimitiveField(np.array([rho]), np.array([u]), np.array([p]), np.array([0.0])), gas
    )
    return np.array([c.rho[0], c.mom[0], c.ener[0]])


def _riemann_ic(left: tuple, right: tuple, split: float, gas: GasModel):
    l_col = _column(left, gas)
    r_col = _column(right, gas)

    def ic(centers: np.ndarray) -> np.ndarray:
        U = np.where(centers[None, :] <= split, l_col[:, None], r_col[:, None])
        return U.astype(float)

    return ic, l_col, r_col


def _scalar_flux(U: np.ndarray) -> np.ndarray:
    return -U  # leftward unit advection


def _scalar_speed(U: np.ndarray) -> float:
    return 1.0


def case_setup(case: str, gas: GasModel | None = None) -> CaseSetup:
    """Initial and boundary data for the benchmark cases.

    ``woodward`` reproduces the printed initial data of the blast-wave
    experiment, which coincides with the Sod data but stops at t = 0.038;
    ``woodward_classic`` is the textbook two-blast-wave setup with
    reflective walls, provided because the printed data is ambiguous.
    """
    gas = gas or GasModel()
    from .euler import euler_flux_of, euler_speed_of

    if case == "square_wave":

        def ic(centers: np.ndarray) -> np.ndarray:
            u0 = ((centers > SQUARE_LO) & (centers < SQUARE_HI)).astype(float)
            return u0[None, :]

        return CaseSetup(
            name=case, a=0.0, b=1.0, end_time=0.05, kind="scalar", gas=None,
            boundary=Boundary("dirichlet", np.zeros(1), np.zeros(1)),
            ic=ic, flux=_scalar_flux, speed=_scalar_speed,
        )

    if case in ("sod", "woodward"):
        ic, l_col, r_col = _riemann_ic(SOD_LEFT, SOD_RIGHT, SOD_SPLIT, gas)
        return CaseSetup(
            name=case, a=0.0, b=1.0,
            end_time=0.2 if case == "sod" else 0.038,
            kind="euler", gas=gas,
            boundary=Boundary("dirichlet", l_col, r_col),
            ic=ic, flux=euler_flux_of(gas), speed=euler_speed_of(gas),
        )

    if case == "sedov":
        rho0, u0, e0 = 1.0, 1.0, SEDOV_E0
        p0 = rho0 * e0 * (gas.gamma - 1.0)
        col = _column((rho0, u0, p0), gas)

        def ic(centers: np.ndarray) -> np.ndarray:
            return np.repeat(col[:, None], centers.size, axis=1)

        return CaseSetup(
            name=case, a=0.0, b=0.6, end_time=1.0, kind="euler", gas=gas,
            boundary=Boundary("dirichlet", col, col),
            ic=ic, flux=euler_flux_of(gas), speed=euler_speed_of(gas),
        )

    if case == "woodward_classic":

        def ic(centers: np.ndarray) -> np.ndarray:
            p = np.where(centers < 0.1, 1000.0, np.where(centers > 0.9, 100.0, 0.01))
            rho = np.ones_like(centers)
            e = p / (rho * (gas.gamma - 1.0))
            return np.stack([rho, np.zeros_like(centers), rho * e])

        return CaseSetup(
            name=case, a=0.0, b=1.0, end_time=0.038, kind="euler", gas=gas,
            boundary=Boundary("reflective", reflect_signs=np.array([1.0, -1.0, 1.0])),
            ic=ic, flux=euler_flux_of(gas), speed=euler_speed_of(gas),
        )

    raise CaseError(f"unknown case {case!r}; choose from {CASE_NAMES}")


def square_wave_exact(x: np.ndarray, t: float) -> np.ndarray:
    """The square wave advects left with unit speed: u(x, t) = u0(x + t)."""
    y = np.asarray(x) + t
    return ((y > SQUARE_LO) & (y < SQUARE_HI)).astype(float)
