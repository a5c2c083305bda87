"""Experiment orchestration: configured runs of the benchmark cases under
uniform, MMPDE, and surrogate mesh strategies, with timing capture, mesh
history, and CSV/JSON emission."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

import numpy as np

from .cases import CaseSetup, case_setup
from .euler import (
    ConservedField,
    GasModel,
    PositivityError,
    PrimitiveField,
    cons_to_prim,
    prim_to_cons,
)
from .grids import (
    Grid1D,
    hermite_transfer,
    monotone_interpolant,
    spacing_to_grid,
    uniform_mesh,
)
from .mmpde import (
    EllipticSolveConfig,
    ParabolicSolveConfig,
    ZoningError,
    elliptic_fixed_point,
    parabolic_advance,
)
from .monitor import MonitorConfig, monitor_eval
from .reference import error_norms, reference_primitives
from .resmlp import load_model, predict_spacing
from .schemes import CflPolicy, SolverError, cfl_dt, lax_wendroff_step, rk3_advance, weno5_rhs

SCHEMES = ("lax_wendroff", "weno5_rk3")
STRATEGIES = ("uniform", "mmpde_elliptic", "mmpde_parabolic", "dl_surrogate")

# One-step range growth beyond this factor is read as a CFL violation;
# ordinary dispersive overshoot at shocks stays well below it.
RANGE_GROWTH_LIMIT = 1.5


class ConfigError(ValueError):
    def __init__(self, fieldpath: str, message: str):
        super().__init__(f"{fieldpath}: {message}")
        self.fieldpath = fieldpath


class RunError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    case: str = "sod"
    scheme: str = "weno5_rk3"
    mesh_strategy: str = "uniform"
    n_cells: int = 200
    end_time: float | None = None      # None picks the case default
    cfl: float = 0.6
    dt_max: float = 1.0
    gas: GasModel = field(default_factory=GasModel)
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    elliptic: EllipticSolveConfig = field(default_factory=EllipticSolveConfig)
    parabolic: ParabolicSolveConfig = field(default_factory=ParabolicSolveConfig)
    model_path: str | None = None
    seed: int = 0
    output_dir: str = "out"
    rezone_every: int = 1
    record_mesh_history: bool = True
    reference_refinement: int = 16

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError("scheme", f"must be one of {SCHEMES}, got {self.scheme!r}")
        if self.mesh_strategy not in STRATEGIES:
            raise ConfigError(
                "mesh_strategy", f"must be one of {STRATEGIES}, got {self.mesh_strategy!r}"
            )
        if self.mesh_strategy == "dl_surrogate":
            if not self.model_path:
                raise ConfigError("model_path", "dl_surrogate strategy requires a model file")
            from .resmlp import N_OUT

            if self.n_cells != N_OUT:
                raise ConfigError(
                    "n_cells",
                    f"the surrogate maps {N_OUT + 1} monitor nodes to {N_OUT} cells; "
                    f"dl_surrogate requires n_cells = {N_OUT}, got {self.n_cells}",
                )
        if self.n_cells < 5:
            raise ConfigError("n_cells", "need at least 5 cells")
        if self.rezone_every < 1:
            raise ConfigError("rezone_every", "must be >= 1")

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        return _config_from_dict(raw)


def _build_sub(cls, raw: dict, path: str):
    known = {f.name for f in dc_fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown field")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


def _config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a table/object")
    raw = dict(raw)
    kwargs = {}
    for name, cls in (("gas", GasModel), ("monitor", MonitorConfig),
                      ("elliptic", EllipticSolveConfig), ("parabolic", ParabolicSolveConfig)):
        if name in raw:
            sub = raw.pop(name)
            if not isinstance(sub, dict):
                raise ConfigError(name, "must be a table/object")
            kwargs[name] = _build_sub(cls, sub, name)
    known = {f.name for f in dc_fields(ExperimentConfig)}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(key, "unknown field")
        kwargs[key] = value
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("<root>", str(exc)) from exc


@dataclass
class RunReport:
    case: str
    scheme: str
    strategy: str
    n_cells: int
    end_time: float
    norms: list              # NormRow entries
    wall_clock_total: float
    wall_clock_zoning: float
    n_steps: int
    sum_dt: float
    profile_x: np.ndarray
    profile: dict            # quantity -> values on the comparison grid
    profile_ref: dict
    mesh_history: list | None
    final_grid: Grid1D
    zoning_failures: int = 0
    zoning_unconverged: int = 0
    cfl_warnings: int = 0
    conservation_defect: float | None = None
    norm_convention: str = "cell_weighted"

    def __post_init__(self):
        if self.wall_clock_zoning > self.wall_clock_total:
            raise RunError("zoning time exceeds total time")


def _cells_to_other_nodes(src: Grid1D, cell_values: np.ndarray, dst: Grid1D) -> np.ndarray:
    centers = src.centers
    query = np.clip(dst.nodes, centers[0], centers[-1])
    return monotone_interpolant(centers, cell_values)(query)


def _transfer_state(U: np.ndarray, old: Grid1D, new: Grid1D, gas: GasModel | None) -> np.ndarray:
    """Move the solution to a new mesh by monotone Hermite resampling.

    Euler states are transferred in primitive variables: velocity and
    pressure are flat across a contact, so they resample exactly there,
    while the conserved momentum and energy both jump with the density and
    would smear into spurious waves at every re-zoning step.
    """
    if gas is None or U.shape[0] == 1:
        return np.stack([hermite_transfer(old, U[k], new) for k in range(U.shape[0])])
    prim = cons_to_prim(ConservedField.from_stack(U), gas)
    rho = hermite_transfer(old, prim.rho, new)
    u = hermite_transfer(old, prim.u, new)
    p = hermite_transfer(old, prim.p, new)
    cons = prim_to_cons(PrimitiveField(rho, u, p, p / (rho * (gas.gamma - 1.0))), gas)
    return cons.stack()


class _Zoner:
    """Strategy dispatch; the call produces a new grid from the current state
    and is the only thing the zoning wall-clock measures.

    Every strategy consumes the monitor inputs sampled on the initial uniform
    mesh, mirroring the production pipeline (and the surrogate's training
    distribution): solution -> uniform-mesh monitor -> adapted mesh.
    """

    def __init__(self, cfg: ExperimentConfig, case: CaseSetup, uniform: Grid1D):
        self.cfg = cfg
        self.case = case
        self.uniform = uniform
        self.unconverged = 0
        self.model = load_model(cfg.model_path) if cfg.mesh_strategy == "dl_surrogate" else None

    def _uniform_fields(self, U: np.ndarray, grid: Grid1D) -> dict:
        if self.case.kind == "scalar":
            return {"mom": _cells_to_other_nodes(grid, U[0], self.uniform)}
        prim = cons_to_prim(ConservedField.from_stack(U), self.case.gas)
        return {
            "rho": _cells_to_other_nodes(grid, prim.rho, self.uniform),
            "mom": _cells_to_other_nodes(grid, U[1], self.uniform),
            "e": _cells_to_other_nodes(grid, prim.e, self.uniform),
            "p": _cells_to_other_nodes(grid, prim.p, self.uniform),
        }

    def __call__(self, U: np.ndarray, grid: Grid1D) -> Grid1D:
        strategy = self.cfg.mesh_strategy
        fields = self._uniform_fields(U, grid)
        if strategy == "mmpde_elliptic":
            result = elliptic_fixed_point(
                fields, self.uniform, self.cfg.monitor, self.cfg.elliptic, initial_grid=grid
            )
            if not result.converged:
                self.unconverged += 1
            return result.grid
        if strategy == "mmpde_parabolic":
            return parabolic_advance(
                fields, self.uniform, self.cfg.monitor, self.cfg.parabolic, initial_grid=grid
            )
        if strategy == "dl_surrogate":
            omega = monitor_eval(fields, self.uniform, self.cfg.monitor)
            spacing = predict_spacing(self.model, omega)
            return spacing_to_grid(spacing, self.uniform.a)
        raise RunError(f"no zoner for strategy {strategy!r}")


def simulate_adaptive(cfg: ExperimentConfig) -> RunReport:
    """Run one experiment: advance the PDE, re-zone, transfer, repeat.

    Per step: CFL dt (clipped to land exactly on the end time), one scheme
    step on the current grid, then for adaptive strategies a re-zone and a
    monotone-Hermite state transfer. The zoning clock wraps only the mesh
    production; the common transfer cost is excluded from the comparison.
    """
    case = case_setup(cfg.case, cfg.gas)
    end_time = cfg.end_time if cfg.end_time is not None else case.end_time
    uniform = uniform_mesh(case.a, case.b, cfg.n_cells)
    grid = uniform
    U = case.initial_state(grid)
    policy = CflPolicy(cfg.cfl, cfg.dt_max)
    zoner = _Zoner(cfg, case, uniform) if cfg.mesh_strategy != "uniform" else None

    mesh_history = [grid.nodes.copy()] if cfg.record_mesh_history else None
    t = 0.0
    steps = 0
    zoning_time = 0.0
    zoning_failures = 0
    cfl_warnings = 0
    # Conservation audit only holds on a never-moving mesh.
    audit = cfg.mesh_strategy == "uniform"
    mass0 = (grid.widths * U).sum(axis=1) if audit else None
    flux_in = np.zeros(U.shape[0]) if audit else None

    t_start = time.perf_counter()
    while t < end_time:
        dt = cfl_dt(U, grid, policy, case.speed, t, end_time)
        try:
            if cfg.scheme == "lax_wendroff":
                U_new, bflux = lax_wendroff_step(U, grid, dt, case.flux)
            else:
                U_new, bflux = rk3_advance(
                    U, grid, dt,
                    lambda V, g=grid: weno5_rhs(V, g, case.flux, case.speed, case.boundary),
                )
                bflux = (bflux[0] / dt, bflux[1] / dt)  # rk3 returns dt-weighted integrals
        except (PositivityError, SolverError) as exc:
            raise RunError(f"solver failed at step {steps}, t={t:.6g}: {exc}") from exc
        if _range_growth(U, U_new) > RANGE_GROWTH_LIMIT:
            cfl_warnings += 1
        if audit:
            flux_in += dt * (bflux[0] - bflux[1])
        U = U_new
        t += dt
        steps += 1

        if zoner is not None and steps % cfg.rezone_every == 0:
            t0 = time.perf_counter()
            try:
                new_grid = zoner(U, grid)
            except ZoningError:
                zoning_failures += 1
                new_grid = grid
            zoning_time += time.perf_counter() - t0
            if new_grid is not grid:
                U = _transfer_state(U, grid, new_grid, case.gas)
                grid = new_grid
        if mesh_history is not None:
            mesh_history.append(grid.nodes.copy())
    wall_total = time.perf_counter() - t_start

    defect = None
    if audit:
        mass1 = (grid.widths * U).sum(axis=1)
        drift = np.abs(mass1 - mass0 - flux_in)
        scale = np.abs(mass0) + np.abs(flux_in) + 1e-30
        defect = float(np.max(drift / scale))

    profile_x, profile, profile_ref, norms = _final_norms(cfg, case, U, grid, uniform)
    return RunReport(
        case=cfg.case, scheme=cfg.scheme, strategy=cfg.mesh_strategy,
        n_cells=cfg.n_cells, end_time=end_time,
        norms=norms, wall_clock_total=wall_total, wall_clock_zoning=zoning_time,
        n_steps=steps, sum_dt=t,
        profile_x=profile_x, profile=profile, profile_ref=profile_ref,
        mesh_history=mesh_history, final_grid=grid,
        zoning_failures=zoning_failures,
        zoning_unconverged=zoner.unconverged if zoner else 0,
        cfl_warnings=cfl_warnings,
        conservation_defect=defect,
    )


def _range_growth(U_old: np.ndarray, U_new: np.ndarray) -> float:
    old = np.ptp(U_old, axis=1)
    new = np.ptp(U_new, axis=1)
    # Floor on the overall state scale: components starting flat (e.g. Sod
    # momentum) legitimately grow range in one step without a CFL problem.
    scale = 0.25 * float(np.max(np.abs(U_old)))
    safe = np.maximum(old, max(scale, 1e-300))
    return float(np.max(new / safe))


def _final_norms(cfg, case, U, grid, comparison: Grid1D):
    """Transfer the final state to the fixed comparison grid and evaluate the
    cell-weighted norms against the case reference."""
    if grid is comparison or np.array_equal(grid.nodes, comparison.nodes):
        U_cmp = U
    else:
        U_cmp = _transfer_state(U, grid, comparison, case.gas)
    if case.kind == "scalar":
        quantities = {"u": U_cmp[0]}
    else:
        prim = cons_to_prim(ConservedField.from_stack(U_cmp), case.gas)
        quantities = {
            "density": prim.rho, "velocity": prim.u,
            "internal_energy": prim.e, "pressure": prim.p,
        }
    cache_dir = Path(cfg.output_dir) / "_refcache"
    ref = reference_primitives(case, comparison, cache_dir=cache_dir,
                               refinement=cfg.reference_refinement)
    norms = [
        error_norms(quantities[q], ref[q], comparison, quantity=q) for q in quantities
    ]
    return comparison.centers, quantities, ref, norms


# ---------------------------------------------------------------------------
# Emission


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_results(report: RunReport, out_dir) -> list:
    """Write the four-file set: norms CSV, timing JSON, mesh-history CSV, and
    the final profile CSV. Deterministic naming and float formatting."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = f"{report.case}_{report.scheme}_{report.strategy}"
    paths = []

    norms_path = out / f"{base}.norms.csv"
    with open(norms_path, "w") as fh:
        fh.write("quantity,l2_solution,l2_rel_error,l1_solution,l1_rel_error,ref_l2,ref_l1\n")
        for row in report.norms:
            fh.write(",".join([
                row.quantity, _fmt(row.l2_solution), _fmt(row.l2_rel_error),
                _fmt(row.l1_solution), _fmt(row.l1_rel_error),
                _fmt(row.ref_l2), _fmt(row.ref_l1),
            ]) + "\n")
    paths.append(norms_path)

    timing_path = out / f"{base}.timing.json"
    with open(timing_path, "w") as fh:
        json.dump({
            "case": report.case, "scheme": report.scheme, "strategy": report.strategy,
            "total_s": report.wall_clock_total, "zoning_s": report.wall_clock_zoning,
            "steps": report.n_steps,
            "zoning_failures": report.zoning_failures,
            "zoning_unconverged": report.zoning_unconverged,
            "cfl_warnings": report.cfl_warnings,
            "norm_convention": report.norm_convention,
        }, fh, indent=2)
    paths.append(timing_path)

    mesh_path = out / f"{base}.mesh_history.csv"
    with open(mesh_path, "w") as fh:
        n_nodes = report.final_grid.nodes.size
        fh.write(",".join(["step"] + [f"x{i}" for i in range(n_nodes)]) + "\n")
        history = report.mesh_history if report.mesh_history is not None else [
            report.final_grid.nodes
        ]
        for step, nodes in enumerate(history):
            fh.write(",".join([str(step)] + [_fmt(v) for v in nodes]) + "\n")
    paths.append(mesh_path)

    profile_path = out / f"{base}.profile.csv"
    names = list(report.profile)
    with open(profile_path, "w") as fh:
        fh.write(",".join(["x"] + names + [f"ref_{q}" for q in names]) + "\n")
        for i, x in enumerate(report.profile_x):
            row = [_fmt(x)]
            row += [_fmt(report.profile[q][i]) for q in names]
            row += [_fmt(report.profile_ref[q][i]) for q in names]
            fh.write(",".join(row) + "\n")
    paths.append(profile_path)
    return paths


def timing_compare(uniform: RunReport, standard: RunReport, dl: RunReport) -> dict:
    """Speedup summary of surrogate zoning against the standard MMPDE."""
    for rep in (standard, dl):
        if (rep.case, rep.scheme, rep.n_cells) != (uniform.case, uniform.scheme, uniform.n_cells):
            raise RunError("timing comparison needs runs of the same case/scheme/resolution")
    dl_zoning = max(dl.wall_clock_zoning, 1e-12)
    return {
        "case": uniform.case,
        "scheme": uniform.scheme,
        "total_s": {
            "uniform": uniform.wall_clock_total,
            "standard": standard.wall_clock_total,
            "dl": dl.wall_clock_total,
        },
        "zoning_s": {
            "uniform": uniform.wall_clock_zoning,
            "standard": standard.wall_clock_zoning,
            "dl": dl.wall_clock_zoning,
        },
        "steps": {
            "uniform": uniform.n_steps,
            "standard": standard.n_steps,
            "dl": dl.n_steps,
        },
        "zoning_speedup": standard.wall_clock_zoning / dl_zoning,
    }
