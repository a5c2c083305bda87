import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shockzone.euler import (
    ConservedField,
    GasModel,
    PositivityError,
    PrimitiveField,
    cons_to_prim,
    eos_pressure,
    euler_flux,
    max_wavespeed,
    prim_to_cons,
)

GAS = GasModel()

positive = st.floats(min_value=1e-3, max_value=1e3)


def random_state(rng, n=8):
    rho = rng.uniform(0.1, 3.0, n)
    u = rng.uniform(-2.0, 2.0, n)
    p = rng.uniform(0.05, 5.0, n)
    return PrimitiveField(rho, u, p, p / (rho * (GAS.gamma - 1.0)))


class TestEos:
    def test_inverted_by_hand(self):
        # e chosen so p comes back to 1: e = 1/(rho*(gamma-1)) = 2.5
        assert np.isclose(eos_pressure(1.0, 2.5, GAS), 1.0, rtol=1e-15)

    def test_zero_internal_energy(self):
        assert eos_pressure(1.7, 0.0, GAS) == 0.0

    def test_sedov_initial_pressure(self):
        assert np.isclose(eos_pressure(1.0, 2.8049e-4, GAS), 1.12196e-4, rtol=1e-12)

    def test_rejects_nonpositive_density(self):
        with pytest.raises(PositivityError):
            eos_pressure(-1.0, 2.5, GAS)

    @given(positive, positive, positive)
    @settings(max_examples=50, deadline=None)
    def test_bilinear_in_rho_and_e(self, rho, e, c):
        p = eos_pressure(rho, e, GAS)
        assert np.isclose(eos_pressure(c * rho, e, GAS), c * p, rtol=1e-12)
        assert np.isclose(eos_pressure(rho, c * e, GAS), c * p, rtol=1e-12)


class TestConversions:
    def test_stagnant_decomposition(self):
        c = ConservedField(np.array([1.0]), np.array([0.0]), np.array([2.5]))
        prim = cons_to_prim(c, GAS)
        assert np.allclose([prim.rho[0], prim.u[0], prim.p[0], prim.e[0]], [1, 0, 1.0, 2.5])

    def test_zero_velocity_e_is_E_over_rho(self):
        c = ConservedField(np.array([2.0]), np.array([0.0]), np.array([3.0]))
        assert np.isclose(cons_to_prim(c, GAS).e[0], 1.5)

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_round_trip(self, seed):
        prim = random_state(np.random.default_rng(seed))
        c = prim_to_cons(prim, GAS)
        back = cons_to_prim(c, GAS)
        for name in ("rho", "u", "p", "e"):
            assert np.allclose(getattr(back, name), getattr(prim, name), rtol=1e-14, atol=1e-14)

    def test_negative_pressure_flagged(self):
        # kinetic energy exceeds the total: derived pressure goes negative
        c = ConservedField(np.array([1.0]), np.array([3.0]), np.array([1.0]))
        with pytest.raises(PositivityError) as err:
            cons_to_prim(c, GAS)
        assert err.value.cell_index == 0

    def test_energy_convention_flag(self):
        literal = GasModel(kinetic_half=False)
        prim = PrimitiveField(np.array([2.0]), np.array([3.0]), np.array([1.0]), np.array([0.0]))
        e = 1.0 / (2.0 * 0.4)
        assert np.isclose(prim_to_cons(prim, GAS).ener[0], 2 * e + 0.5 * 2 * 9)
        assert np.isclose(prim_to_cons(prim, literal).ener[0], 2 * e + 2 * 9)


class TestFlux:
    def test_stagnant_gas(self):
        c = prim_to_cons(PrimitiveField(np.array([1.3]), np.array([0.0]),
                                        np.array([0.7]), np.array([0.0])), GAS)
        f = euler_flux(c, GAS)
        assert np.allclose(f[:, 0], [0.0, 0.7, 0.0], atol=1e-15)

    def test_sod_left_state(self):
        c = prim_to_cons(PrimitiveField(np.array([1.0]), np.array([0.0]),
                                        np.array([1.0]), np.array([0.0])), GAS)
        assert np.allclose(euler_flux(c, GAS)[:, 0], [0.0, 1.0, 0.0], atol=1e-15)

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_matches_hand_expansion(self, seed):
        prim = random_state(np.random.default_rng(seed))
        c = prim_to_cons(prim, GAS)
        f = euler_flux(c, GAS)
        rho, u, p = prim.rho, prim.u, prim.p
        E = c.ener
        expected = np.stack([rho * u, rho * u * u + p, (E + p) * u])
        assert np.allclose(f, expected, rtol=1e-14, atol=1e-14)


class TestWavespeed:
    def test_sod_left_sound_speed(self):
        c = prim_to_cons(PrimitiveField(np.array([1.0]), np.array([0.0]),
                                        np.array([1.0]), np.array([0.0])), GAS)
        assert np.isclose(max_wavespeed(c, GAS), np.sqrt(1.4), rtol=1e-14)

    def test_stagnant_equals_sound_speed(self):
        prim = PrimitiveField(np.full(5, 2.0), np.zeros(5), np.full(5, 3.0), np.zeros(5))
        c = prim_to_cons(prim, GAS)
        assert np.isclose(max_wavespeed(c, GAS), np.sqrt(1.4 * 3.0 / 2.0), rtol=1e-14)

    @given(st.integers(min_value=0, max_value=2**32 - 1), st.floats(min_value=0.01, max_value=3.0))
    @settings(max_examples=30, deadline=None)
    def test_monotone_under_velocity_boost(self, seed, boost):
        prim = random_state(np.random.default_rng(seed))
        faster = PrimitiveField(prim.rho, prim.u + np.sign(prim.u + 1e-300) * boost, prim.p, prim.e)
        a0 = max_wavespeed(prim_to_cons(prim, GAS), GAS)
        a1 = max_wavespeed(prim_to_cons(faster, GAS), GAS)
        assert a1 >= a0 - 1e-12


def test_gas_model_rejects_gamma_at_most_one():
    with pytest.raises(ValueError):
        GasModel(gamma=1.0)
