"""Deep-learning surrogate for 1D r-adaptive mesh zoning, benchmarked against
standard moving-mesh PDE solvers inside Lax-Wendroff and WENO5 Euler runs."""

from .cases import CaseSetup, case_setup
from .datagen import Dataset, Sample, StaircaseSpec, ZonerSetup, build_dataset, build_sample
from .euler import ConservedField, GasModel, PrimitiveField, cons_to_prim, prim_to_cons
from .grids import (
    Grid1D,
    SpacingVector,
    grid_to_spacing,
    hermite_transfer,
    spacing_to_grid,
    uniform_mesh,
)
from .harness import ExperimentConfig, RunReport, emit_results, simulate_adaptive, timing_compare
from .mmpde import (
    EllipticSolveConfig,
    ParabolicSolveConfig,
    elliptic_fixed_point,
    elliptic_linear_solve,
    equidistribution_residual,
    parabolic_advance,
)
from .monitor import MonitorConfig, MonitorField, gaussian_smooth, monitor_eval
from .reference import error_norms, fine_reference, sod_exact
from .resmlp import ResMLPParams, TrainConfig, load_model, predict_spacing, save_model, train
from .schemes import Boundary, CflPolicy, cfl_dt, lax_wendroff_step, rk3_advance, weno5_rhs

__version__ = "0.1.0"
