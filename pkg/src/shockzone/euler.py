"""Euler state algebra: conservative/primitive conversions, ideal-gas EOS,
physical flux, and wavespeed."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PositivityError(RuntimeError):
    """Density or derived pressure went nonpositive; carries the cell index."""

    def __init__(self, message: str, cell_index: int | None = None):
        super().__init__(message)
        self.cell_index = cell_index


@dataclass(frozen=True)
class GasModel:
    """Polytropic ideal gas.

    ``kinetic_half=True`` uses the standard total energy E = rho*e + rho*u^2/2.
    Setting it False selects the literal decomposition E = rho*e + rho*u^2,
    kept as an option because both appear in the adaptive-zoning literature.
    """

    gamma: float = 1.4
    kinetic_half: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 1.0):
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")

    @property
    def kinetic_factor(self) -> float:
        return 0.5 if self.kinetic_half else 1.0


@dataclass(frozen=True)
class ConservedField:
    """Per-cell conservative averages (density, momentum, total energy)."""

    rho: np.ndarray
    mom: np.ndarray
    ener: np.ndarray

    def stack(self) -> np.ndarray:
        return np.stack([self.rho, self.mom, self.ener])

    @staticmethod
    def from_stack(U: np.ndarray) -> "ConservedField":
        return ConservedField(U[0], U[1], U[2])


@dataclass(frozen=True)
class PrimitiveField:
    """Per-cell density, velocity, pressure, and specific internal energy."""

    rho: np.ndarray
    u: np.ndarray
    p: np.ndarray
    e: np.ndarray


def eos_pressure(rho, e, gas: GasModel):
    """p = rho * e * (gamma - 1)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        bad = int(np.argmax(np.asarray(rho) <= 0.0)) if rho.ndim else None
        raise PositivityError("nonpositive density in EOS", bad)
    return rho * np.asarray(e, dtype=float) * (gas.gamma - 1.0)


def cons_to_prim(c: ConservedField, gas: GasModel) -> PrimitiveField:
    rho, mom, ener = (np.asarray(v, dtype=float) for v in (c.rho, c.mom, c.ener))
    if np.any(rho <= 0.0):
        raise PositivityError("nonpositive density", int(np.argmax(rho <= 0.0)))
    u = mom / rho
    e = (ener - gas.kinetic_factor * rho * u * u) / rho
    p = eos_pressure(rho, e, gas)
    if np.any(p <= 0.0):
        raise PositivityError("nonpositive derived pressure", int(np.argmax(p <= 0.0)))
    return PrimitiveField(rho, u, p, e)


def prim_to_cons(p: PrimitiveField, gas: GasModel) -> ConservedField:
    rho = np.asarray(p.rho, dtype=float)
    u = np.asarray(p.u, dtype=float)
    e = np.asarray(p.p, dtype=float) / (rho * (gas.gamma - 1.0))
    ener = rho * e + gas.kinetic_factor * rho * u * u
    return ConservedField(rho, rho * u, ener)


def euler_flux(c: ConservedField, gas: GasModel) -> np.ndarray:
    """Componentwise flux (rho*u, rho*u^2 + p, (E + p)*u), stacked (3, n)."""
    prim = cons_to_prim(c, gas)
    mom = np.asarray(c.mom, dtype=float)
    ener = np.asarray(c.ener, dtype=float)
    return np.stack([mom, mom * prim.u + prim.p, (ener + prim.p) * prim.u])


def sound_speed(prim: PrimitiveField, gas: GasModel) -> np.ndarray:
    return np.sqrt(gas.gamma * prim.p / prim.rho)


def max_wavespeed(c: ConservedField, gas: GasModel) -> float:
    """max over cells of |u| + sqrt(gamma p / rho)."""
    prim = cons_to_prim(c, gas)
    return float(np.max(np.abs(prim.u) + sound_speed(prim, gas)))


# Array-shaped wrappers used by the scheme drivers, which treat any
# hyperbolic system as a (n_comp, n_cells) block plus two callables.


def euler_flux_of(gas: GasModel):
    def flux(U: np.ndarray) -> np.ndarray:
        return euler_flux(ConservedField.from_stack(U), gas)

    return flux


def euler_speed_of(gas: GasModel):
    def speed(U: np.ndarray) -> float:
        return max_wavespeed(ConservedField.from_stack(U), gas)

    return speed
