import numpy as np
import pytest

from shockzone.datagen import draw_staircase_spec, staircase_profile
from shockzone.grids import Grid1D, uniform_mesh
from shockzone.mmpde import (
    EllipticSolveConfig,
    ParabolicSolveConfig,
    ZoningError,
    elliptic_fixed_point,
    elliptic_linear_solve,
    equidistribution_residual,
    frozen_monitor,
    parabolic_advance,
)
from shockzone.monitor import MonitorConfig, MonitorField

GRID = uniform_mesh(0, 1, 200)
MCFG = MonitorConfig()


def sampled(omega_fn, grid):
    return MonitorField(omega_fn(grid.nodes), grid)


class TestLinearSolve:
    def test_constant_monitor_returns_uniform(self):
        g = uniform_mesh(0, 1, 40)
        out = elliptic_linear_solve(MonitorField(np.full(41, 3.0), g), g)
        assert np.allclose(out.nodes, g.nodes, atol=1e-12)

    def test_ramp_monitor_cumulative_equidistribution(self):
        # omega(x) = 1 + x: the converged mesh satisfies W(x_i) = (i/N) W(1)
        # with W(x) = x + x^2/2, so the midpoint index maps to sqrt(2.5) - 1.
        g = uniform_mesh(0, 1, 200)
        grid = g
        for _ in range(400):
            om = MonitorField(1.0 + grid.nodes, grid)
            new = elliptic_linear_solve(om, grid)
            disp = np.max(np.abs(new.nodes - grid.nodes))
            grid = new
            if disp < 1e-13:
                break
        assert np.isclose(grid.nodes[100], np.sqrt(2.5) - 1.0, atol=1e-10)
        W = grid.nodes + 0.5 * grid.nodes ** 2
        assert np.allclose(W, np.linspace(0, 1.5, 201), atol=1e-9)

    def test_monotone_output_for_random_positive_monitor(self):
        rng = np.random.default_rng(8)
        g = uniform_mesh(0, 1, 60)
        for _ in range(10):
            om = MonitorField(rng.uniform(0.2, 30.0, 61), g)
            out = elliptic_linear_solve(om, g)
            assert np.all(np.diff(out.nodes) > 0)
            assert out.nodes[0] == 0.0 and out.nodes[-1] == 1.0

    def test_rejects_nonpositive_monitor(self):
        g = uniform_mesh(0, 1, 10)
        with pytest.raises(ZoningError):
            elliptic_linear_solve(MonitorField(np.zeros(11), g), g)


class TestEllipticFixedPoint:
    def test_constant_fields_converge_immediately(self):
        res = elliptic_fixed_point({"mom": np.full(201, 0.7)}, GRID, MCFG)
        assert res.converged and res.iterations == 1
        assert np.allclose(res.grid.nodes, GRID.nodes, atol=1e-12)

    def test_staircase_concentrates_nodes_and_equidistributes(self):
        spec = draw_staircase_spec(np.random.default_rng(0), GRID)
        prof = staircase_profile(spec, GRID)
        cfg = EllipticSolveConfig(fixed_point_tol=1e-9)
        res = elliptic_fixed_point({"mom": prof}, GRID, MCFG, cfg)
        assert res.converged
        # node density concentrates: the tightest cell hugs a jump
        tight = res.grid.centers[np.argmin(res.grid.widths)]
        assert min(abs(tight - j) for j in spec.jump_locations) < 0.01
        omega_fn = frozen_monitor({"mom": prof}, GRID, MCFG)
        resid = equidistribution_residual(res.grid, sampled(omega_fn, res.grid))
        assert resid < 1e-6

    def test_idempotent_from_converged_grid(self):
        spec = draw_staircase_spec(np.random.default_rng(3), GRID)
        prof = staircase_profile(spec, GRID)
        res = elliptic_fixed_point({"mom": prof}, GRID, MCFG)
        again = elliptic_fixed_point({"mom": prof}, GRID, MCFG, initial_grid=res.grid)
        assert again.converged and again.iterations <= 2
        assert np.allclose(again.grid.nodes, res.grid.nodes, atol=1e-8)

    def test_nonconvergence_returns_flagged_result(self):
        cfg = EllipticSolveConfig(fixed_point_tol=1e-14, max_iters=3)
        spec = draw_staircase_spec(np.random.default_rng(1), GRID)
        prof = staircase_profile(spec, GRID)
        res = elliptic_fixed_point({"mom": prof}, GRID, MCFG, cfg)
        assert not res.converged
        assert res.iterations == 3
        assert np.all(np.diff(res.grid.nodes) > 0)

    def test_mirror_symmetry(self):
        # mirroring the profile mirrors the adapted mesh
        spec = draw_staircase_spec(np.random.default_rng(7), GRID)
        prof = staircase_profile(spec, GRID)
        res = elliptic_fixed_point({"mom": prof}, GRID, MCFG)
        res_m = elliptic_fixed_point({"mom": prof[::-1].copy()}, GRID, MCFG)
        assert np.allclose(res_m.grid.nodes, 1.0 - res.grid.nodes[::-1], atol=1e-6)


class TestEquidistributionResidual:
    def test_uniform_grid_unit_monitor_is_zero(self):
        g = uniform_mesh(0, 1, 50)
        assert equidistribution_residual(g, MonitorField(np.ones(51), g)) < 1e-13

    def test_perturbation_increases_residual(self):
        spec = draw_staircase_spec(np.random.default_rng(4), GRID)
        prof = staircase_profile(spec, GRID)
        res = elliptic_fixed_point({"mom": prof}, GRID, MCFG)
        omega_fn = frozen_monitor({"mom": prof}, GRID, MCFG)
        base = equidistribution_residual(res.grid, sampled(omega_fn, res.grid))
        nodes = res.grid.nodes.copy()
        nodes[1:-1] += 0.2 * np.diff(res.grid.nodes)[1:]
        bumped = Grid1D(nodes)
        worse = equidistribution_residual(bumped, sampled(omega_fn, bumped))
        assert worse > 10 * base


class TestParabolic:
    def test_constant_monitor_leaves_uniform_grid(self):
        g = uniform_mesh(0, 1, 40)
        out = parabolic_advance({"mom": np.full(41, 0.3)}, g,
                                MonitorConfig(), ParabolicSolveConfig(n_pseudo_steps=50))
        assert np.allclose(out.nodes, g.nodes, atol=1e-12)

    def test_single_tiny_step_is_near_identity(self):
        g = uniform_mesh(0, 1, 50)
        prof = np.tanh((g.nodes - 0.5) / 0.02)
        tiny = 1e-12
        out = parabolic_advance({"mom": prof}, g, MCFG,
                                ParabolicSolveConfig(n_pseudo_steps=1, pseudo_dt=tiny))
        assert np.max(np.abs(out.nodes - g.nodes)) < 1e-7

    def test_long_relaxation_approaches_elliptic(self):
        g = uniform_mesh(0, 1, 50)
        cfg = MonitorConfig(alpha2=50.0)
        prof = staircase_profile(draw_staircase_spec(np.random.default_rng(11), g), g)
        ell = elliptic_fixed_point({"mom": prof}, g, cfg)
        dists = []
        for nsteps in (100, 400, 1600, 6400):
            pg = parabolic_advance({"mom": prof}, g, cfg,
                                   ParabolicSolveConfig(n_pseudo_steps=nsteps))
            dists.append(np.max(np.abs(pg.nodes - ell.grid.nodes)))
        assert all(a > b for a, b in zip(dists, dists[1:]))
        assert dists[-1] < 0.1 * dists[0]
        # the partially relaxed mesh sits between start and equilibrium
        d0 = np.max(np.abs(g.nodes - ell.grid.nodes))
        assert all(d <= d0 + 1e-9 for d in dists)

    def test_crossing_recovery_by_halving(self):
        g = uniform_mesh(0, 1, 50)
        prof = staircase_profile(draw_staircase_spec(np.random.default_rng(2), g), g)
        # a deliberately unstable pseudo step must still produce a valid mesh
        out = parabolic_advance({"mom": prof}, g, MCFG,
                                ParabolicSolveConfig(n_pseudo_steps=200, pseudo_dt=5e-5))
        assert np.all(np.diff(out.nodes) > 0)
