"""Benchmark plants and the zero-order-hold noise model."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hgobank.plants import (
    NoiseModel,
    PendulumParams,
    canonical_derivative,
    derive_channel_seed,
    integrator_chain,
    measure,
    pendulum_F2,
    pendulum_subsystem_f,
    underwater_plant,
)


class TestCanonicalDerivative:
    def test_underwater_hand_value(self):
        plant = underwater_plant(a=1.0)
        dx = canonical_derivative(plant, np.array([0.0, 2.0]), 3.0)
        assert dx.tolist() == [2.0, -1.0]  # f = 3 - 1*2*|2|

    def test_equilibrium(self):
        plant = underwater_plant(a=1.0)
        assert canonical_derivative(plant, np.zeros(2), 0.0).tolist() == [0.0, 0.0]

    def test_pure_chain(self):
        plant = integrator_chain(2)
        assert canonical_derivative(plant, np.array([1.0, 1.0]), 5.0).tolist() == [1.0, 0.0]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            canonical_derivative(underwater_plant(), np.zeros(3), 0.0)

    @given(
        st.lists(st.floats(-10, 10), min_size=3, max_size=3),
        st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    )
    @settings(max_examples=50, deadline=None)
    def test_chain_linearity(self, xs, ys):
        plant = integrator_chain(3)
        x = np.array(xs)
        y = np.array(ys)
        lhs = canonical_derivative(plant, x + y, 0.0)
        rhs = canonical_derivative(plant, x, 0.0) + canonical_derivative(plant, y, 0.0)
        assert np.array_equal(lhs, rhs)


class TestNoiseModel:
    def test_noise_free(self):
        noise = NoiseModel(bound=0.0, sample_period=1e-4, seed=1)
        assert measure(np.array([2.5, 1.0]), noise, 0.123) == 2.5

    def test_within_bound(self):
        noise = NoiseModel(bound=0.01, sample_period=1e-4, seed=42)
        for t in np.linspace(0.0, 1.0, 500):
            y = measure(np.array([0.0, 0.0]), noise, float(t))
            assert abs(y) <= 0.01

    def test_deterministic(self):
        a = NoiseModel(bound=0.01, sample_period=1e-4, seed=9)
        b = NoiseModel(bound=0.01, sample_period=1e-4, seed=9)
        for t in (0.0, 0.37, 5.0001):
            assert measure(np.zeros(1), a, t) == measure(np.zeros(1), b, t)

    def test_zero_order_hold(self):
        noise = NoiseModel(bound=0.5, sample_period=1e-3, seed=3)
        base = noise.value_at(7e-3)
        for frac in (0.0, 0.2, 0.5, 0.999):
            assert noise.value_at(7e-3 + frac * 1e-3) == base
        assert noise.value_at(8e-3) != base

    def test_grid_times_land_in_their_sample(self):
        noise = NoiseModel(bound=0.5, sample_period=1e-4, seed=3)
        for k in (1, 10, 123456, 199999):
            assert noise.sample_index(k * 1e-4) == k

    def test_sequence_matches_scalar(self):
        noise = NoiseModel(bound=0.01, sample_period=1e-4, seed=77)
        seq = noise.sequence(1000)
        for i in (0, 1, 17, 999):
            assert seq[i] == noise.value(i)

    def test_uniform_deciles(self):
        noise = NoiseModel(bound=1.0, sample_period=1.0, seed=2024)
        seq = noise.sequence(1_000_000)
        counts, _ = np.histogram(seq, bins=10, range=(-1.0, 1.0))
        assert np.all(np.abs(counts - 100_000) <= 1_000)  # 1% per decile

    def test_channel_seed_derivation(self):
        assert derive_channel_seed(123, 0) == 123
        assert derive_channel_seed(123, 1) != 123
        assert derive_channel_seed(123, 1) != derive_channel_seed(123, 2)


class TestPendulum:
    def test_mass_ratio_exact(self):
        p = PendulumParams()
        assert p.c == 1.0 / 6.0

    def test_input_gain(self):
        p = PendulumParams()
        assert abs(pendulum_F2(p) - 6.0) < 1e-12

    def test_origin(self):
        p = PendulumParams()
        assert pendulum_subsystem_f(p, [0.0, 0.0], 0.0, 0.0) == 0.0

    def test_linear_term_hand_value(self):
        p = PendulumParams()
        # (g/(c l) - k a (a - c l)/(c m l^2)) * 0.1 = (58.8 - 0.04) * 0.1
        got = pendulum_subsystem_f(p, [0.1, 0.0], 0.0, 0.0)
        assert abs(got - 5.876) < 1e-9

    @given(
        st.lists(st.floats(-2, 2), min_size=2, max_size=2),
        st.lists(st.floats(-2, 2), min_size=2, max_size=2),
        st.floats(-10, 10),
    )
    @settings(max_examples=50, deadline=None)
    def test_coupling_symmetry(self, xa, xb, u):
        """Swapping the two subsystems' states swaps their drift values exactly."""
        p = PendulumParams()
        f_ab = pendulum_subsystem_f(p, xa, xb[0], u)
        f_ba = pendulum_subsystem_f(p, xb, xa[0], u)
        f_ab_sw = pendulum_subsystem_f(p, xb, xa[0], u)
        f_ba_sw = pendulum_subsystem_f(p, xa, xb[0], u)
        assert f_ab == f_ba_sw
        assert f_ba == f_ab_sw

    def test_rejects_nonpositive_parameters(self):
        with pytest.raises(ValueError):
            PendulumParams(m=0.0)
        with pytest.raises(ValueError):
            PendulumParams(l=-1.0)
