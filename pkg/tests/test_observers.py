"""Observer primitives: gains, bank dynamics, RLS fusion, selection, hull weights."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hgobank.integrate import OdeProblem, rk4_integrate
from hgobank.linalg import scaling_matrix
from hgobank.observers import (
    DegenerateSimplexError,
    ObserverBankState,
    ObserverGainProfile,
    RlsState,
    SelectorState,
    build_E,
    combine,
    combined_weights,
    convex_weights,
    hgo_derivative,
    hgo_gain,
    mhgo_bank_derivative,
    rls_derivative,
    selector_step,
    switching_schedule,
)

SLOW = ObserverGainProfile(kappa=(2.0, 1.0), eps=0.15)
FAST = ObserverGainProfile(kappa=(71.0, 70.0), eps=1e-3)
BANK_INITS = np.array([[5.0, 5.0], [-5.0, 5.0], [5.0, -5.0]])


class TestGainProfile:
    def test_gain_benchmark_slow(self):
        H = hgo_gain(SLOW)
        assert np.allclose(H, [2.0 / 0.15, 1.0 / 0.15**2])

    def test_gain_benchmark_fast(self):
        H = hgo_gain(FAST)
        assert np.allclose(H, [71000.0, 7e7])

    def test_eps_one_identity(self):
        prof = ObserverGainProfile(kappa=(3.0, 2.0), eps=1.0)
        assert np.array_equal(hgo_gain(prof), [3.0, 2.0])

    def test_rejects_non_hurwitz(self):
        with pytest.raises(ValueError):
            ObserverGainProfile(kappa=(-1.0, 1.0), eps=0.5)

    def test_rejects_bad_eps(self):
        with pytest.raises(ValueError):
            ObserverGainProfile(kappa=(2.0, 1.0), eps=0.0)
        with pytest.raises(ValueError):
            ObserverGainProfile(kappa=(2.0, 1.0), eps=1.5)

    def test_companion_form(self):
        Ao = SLOW.companion_Ao()
        assert Ao.tolist() == [[-2.0, 1.0], [-1.0, 0.0]]
        assert np.array_equal(SLOW.H_o(), [-2.0, -1.0])


class TestHgoDerivative:
    def test_consistent_rest(self):
        d = hgo_derivative(np.zeros(2), 0.0, 0.0, ObserverGainProfile((2.0, 1.0), 1.0))
        assert d.tolist() == [0.0, 0.0]

    def test_innovation_injection(self):
        prof = ObserverGainProfile((2.0, 1.0), 1.0)
        assert hgo_derivative(np.array([1.0, 0.0]), 1.0, 0.0, prof).tolist() == [0.0, 0.0]
        assert hgo_derivative(np.array([1.0, 0.0]), 2.0, 0.0, prof).tolist() == [2.0, 1.0]

    def test_nominal_model_enters_last_slot(self):
        prof = ObserverGainProfile((2.0, 1.0), 1.0)
        d = hgo_derivative(
            np.array([1.0, 0.0]), 1.0, 0.5, prof, f_o=lambda xh, u: 10.0 * u
        )
        assert d.tolist() == [0.0, 5.0]


class TestBank:
    def test_equal_estimates_equal_derivatives(self):
        bank = ObserverBankState(np.tile([1.0, 2.0], (3, 1)))
        d = mhgo_bank_derivative(bank, 0.5, SLOW)
        assert np.all(d == d[0])

    def test_zero_innovation_pure_shift(self):
        bank = ObserverBankState(np.array([[5.0, 3.0], [1.0, 2.0]]))
        d = mhgo_bank_derivative(bank, 5.0, SLOW)
        assert d[0].tolist() == [3.0, 0.0]

    def test_benchmark_hand_value(self):
        bank = ObserverBankState(BANK_INITS)
        d = mhgo_bank_derivative(bank, 0.0, SLOW)
        H = hgo_gain(SLOW)
        assert np.allclose(d[0], [5.0 - 5.0 * H[0], -5.0 * H[1]])

    def test_build_E_benchmark(self):
        E = build_E(ObserverBankState(BANK_INITS))
        assert E.tolist() == [[0.0, 10.0], [-10.0, -10.0]]

    def test_build_E_identical(self):
        E = build_E(ObserverBankState(np.tile([2.0, -1.0], (4, 1))))
        assert np.all(E == 0.0)

    def test_build_E_two_observers(self):
        E = build_E(ObserverBankState(np.array([[1.0, 2.0], [4.0, 6.0]])))
        assert E.tolist() == [[3.0], [4.0]]


class TestRls:
    def test_hand_value(self):
        rls = RlsState.initial(3, gamma=1000.0)
        E = np.array([[0.0, 10.0], [-10.0, -10.0]])
        dbeta, dinfo = rls_derivative(rls, E, y_tilde_N=-5.0)
        assert np.allclose(dbeta, [0.0, 50000.0])
        assert np.allclose(dinfo, [[0.0, 0.0], [0.0, 100.0]])

    def test_no_excitation(self):
        rls = RlsState.initial(3, gamma=10.0)
        dbeta, dinfo = rls_derivative(rls, np.zeros((2, 2)), y_tilde_N=3.0)
        assert np.all(dbeta == 0.0)
        assert np.all(dinfo == 0.0)

    def test_zero_residual(self):
        rls = RlsState.initial(3, gamma=10.0, beta0=np.array([0.5, 0.0]))
        E = np.array([[2.0, 4.0], [0.0, 0.0]])
        dbeta, dinfo = rls_derivative(rls, E, y_tilde_N=-1.0)
        assert np.all(dbeta == 0.0)
        assert np.all(dinfo == np.outer([2.0, 4.0], [2.0, 4.0]))

    def test_combine_starts_at_last_observer(self):
        bank = ObserverBankState(BANK_INITS)
        rls = RlsState.initial(3, gamma=1000.0, beta0=np.zeros(2))
        assert combine(bank, rls).tolist() == [5.0, -5.0]

    def test_combine_half_weights(self):
        bank = ObserverBankState(BANK_INITS)
        rls = RlsState.initial(3, gamma=1000.0, beta0=np.array([0.0, 0.5]))
        assert combine(bank, rls).tolist() == [0.0, 0.0]

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=80))
    @settings(max_examples=100, deadline=None)
    def test_weight_sum_exact(self, parts):
        # operating-range weights (partial sums near 1, as on real
        # trajectories): the implied last weight keeps the sum at 1 within
        # 1e-15 because it is algebraic, not integrated
        assume(abs(1.0 - math.fsum(parts)) <= 4.0)
        w = combined_weights(np.array(parts))
        assert abs(math.fsum(float(v) for v in w) - 1.0) <= 1e-15

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=80))
    @settings(max_examples=100, deadline=None)
    def test_weight_sum_two_ulp_general(self, parts):
        # arbitrary magnitudes: one rounding each from the partial sum and
        # from (1 - sum) bounds the defect by two ulps of the larger scale
        s = math.fsum(parts)
        w = combined_weights(np.array(parts))
        ulp = np.spacing(max(1.0, abs(1.0 - s), abs(s)))
        assert abs(math.fsum(float(v) for v in w) - 1.0) <= 2.0 * ulp

    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=2))
    @settings(max_examples=30, deadline=None)
    def test_combine_is_convex_identity(self, v):
        bank = ObserverBankState(np.tile(v, (3, 1)))
        rls = RlsState.initial(3, gamma=1.0, beta0=np.array([0.3, -1.7]))
        assert np.allclose(combine(bank, rls), v, atol=1e-12)


class TestConvexWeights:
    def test_benchmark_simplex(self):
        w = convex_weights(BANK_INITS, np.zeros(2))
        assert np.allclose(w, [0.0, 0.5, 0.5], atol=1e-12)

    def test_vertex(self):
        w = convex_weights(BANK_INITS, np.array([-5.0, 5.0]))
        assert np.allclose(w, [0.0, 1.0, 0.0], atol=1e-12)

    def test_collinear_outside_is_infeasible(self):
        inits = np.array([[5.0, 5.0], [6.0, 6.0], [7.0, 7.0]])
        assert convex_weights(inits, np.zeros(2)) is None

    def test_collinear_inside_is_degenerate(self):
        inits = np.array([[5.0, 5.0], [6.0, 6.0], [7.0, 7.0]])
        with pytest.raises(DegenerateSimplexError):
            convex_weights(inits, np.array([6.0, 6.0]))

    def test_outside_simplex_is_infeasible(self):
        assert convex_weights(BANK_INITS, np.array([50.0, 0.0])) is None

    def test_larger_bank_subset_search(self):
        rng = np.random.default_rng(4)
        inits = rng.uniform(-3.0, 3.0, size=(12, 2))
        x0 = inits[:4].mean(axis=0)  # certainly inside the hull
        w = convex_weights(inits, x0)
        assert w is not None
        assert np.all(w >= 0.0)
        assert abs(w.sum() - 1.0) <= 1e-12
        assert np.allclose(w @ inits, x0, atol=1e-9)

    def test_grid_81_contains_benchmark_start(self):
        grid = np.array([[a, b] for a in np.linspace(-3, 3, 9) for b in np.linspace(-3, 3, 9)])
        w = convex_weights(grid, np.array([1.0, 0.0]))
        assert w is not None
        assert np.allclose(w @ grid, [1.0, 0.0], atol=1e-9)

    def test_requires_enough_observers(self):
        with pytest.raises(ValueError):
            convex_weights(np.array([[0.0, 0.0], [1.0, 1.0]]), np.zeros(2))


class TestSwitching:
    def test_fast_before_switch(self):
        assert switching_schedule(0.0, 0.1, FAST, SLOW) is FAST

    def test_slow_after_switch(self):
        assert switching_schedule(1.0, 0.1, FAST, SLOW) is SLOW

    def test_degenerate_schedule(self):
        assert switching_schedule(0.0, 0.0, FAST, SLOW) is SLOW

    def test_rejects_negative_switch_time(self):
        with pytest.raises(ValueError):
            switching_schedule(0.0, -1.0, FAST, SLOW)


class TestSelector:
    def test_argmin(self):
        sel = SelectorState(mu=np.array([0.5, 0.2, 0.9]), alpha=0.1, sigma=1)
        out = selector_step(sel, np.zeros(3), 1e-4)
        assert out.sigma == 2

    def test_pure_decay(self):
        sel = SelectorState(mu=np.array([1.0, 2.0]), alpha=0.1, sigma=1)
        out = selector_step(sel, np.zeros(2), 0.5)
        assert np.allclose(out.mu, np.array([1.0, 2.0]) * math.exp(-0.05), rtol=1e-15)

    def test_initial_sigma_honored(self):
        sel = SelectorState(mu=np.zeros(3), alpha=0.1, sigma=3)
        assert sel.sigma == 3

    def test_tie_breaks_lowest_index(self):
        sel = SelectorState(mu=np.zeros(3), alpha=0.1, sigma=3)
        out = selector_step(sel, np.array([1.0, 1.0, 1.0]), 1e-3)
        assert out.sigma == 1


class TestBankErrorDynamics:
    def test_Eo_decay(self):
        """The scaled difference matrix contracts by 1e-6 over 20*eps seconds."""
        for eps in (0.05, 0.15):
            prof = ObserverGainProfile(kappa=(2.0, 1.0), eps=eps)

            def deriv(t, z):
                bank = ObserverBankState(z.reshape(3, 2))
                return mhgo_bank_derivative(bank, 0.0, prof).ravel()

            prob = OdeProblem(dim=6, deriv=deriv, stiffness_scale=prof.spectral_scale())
            steps = int(round(20.0 * eps / 1e-4))
            traj = rk4_integrate(prob, 0.0, BANK_INITS.ravel(), 1e-4, steps)
            D = scaling_matrix(eps, 2)

            def Eo_norm(flat):
                E = build_E(ObserverBankState(flat.reshape(3, 2)))
                return np.linalg.norm(D @ E)

            assert Eo_norm(traj[-1]) <= 1e-6 * Eo_norm(traj[0])

    def test_single_hgo_convergence_scales_with_eps(self):
        """Noise-free, exact model: error below 1e-6, time-to-threshold ~ eps."""
        times = {}
        for eps in (0.05, 0.15, 0.5):
            prof = ObserverGainProfile(kappa=(2.0, 1.0), eps=eps)

            def deriv(t, z):
                x, xh = z[:2], z[2:]
                dx = np.array([x[1], 0.0])
                dxh = hgo_derivative(xh, x[0], 0.0, prof, f_o=lambda w, u: 0.0)
                return np.concatenate([dx, dxh])

            prob = OdeProblem(dim=4, deriv=deriv, stiffness_scale=prof.spectral_scale())
            z0 = np.array([0.0, 0.0, 5.0, -5.0])
            steps = 30000
            traj = rk4_integrate(prob, 0.0, z0, 1e-3 * eps / 0.15, steps)
            err = np.linalg.norm(traj[:, :2] - traj[:, 2:], axis=1)
            below = np.nonzero(err < 1e-6)[0]
            assert below.size > 0
            times[eps] = below[0] * (1e-3 * eps / 0.15)
        # time-to-threshold should scale roughly linearly with eps
        r1 = times[0.15] / times[0.05]
        r2 = times[0.5] / times[0.15]
        assert 2.0 < r1 < 4.5
        assert 2.2 < r2 < 5.0


class TestInformationMonotonicity:
    def test_info_increments_are_psd(self):
        """Integrated information matrix is non-decreasing in the Loewner order."""
        prof = SLOW
        gamma = 1000.0

        def deriv(t, z):
            bank = ObserverBankState(z[:6].reshape(3, 2))
            beta = z[6:8]
            info = z[8:].reshape(2, 2)
            rls = RlsState(beta_hat=beta, info=info, gamma=gamma)
            E = build_E(bank)
            dbank = mhgo_bank_derivative(bank, 0.0, prof)
            dbeta, dinfo = rls_derivative(rls, E, 0.0 - bank.estimates[-1, 0])
            return np.concatenate([dbank.ravel(), dbeta, dinfo.ravel()])

        z0 = np.concatenate([BANK_INITS.ravel(), np.zeros(2), (np.eye(2) / gamma).ravel()])
        prob = OdeProblem(dim=12, deriv=deriv, stiffness_scale=2e4)
        traj = rk4_integrate(prob, 0.0, z0, 1e-4, 2000)
        infos = traj[::100, 8:].reshape(-1, 2, 2)
        for i in range(len(infos)):
            for j in range(i + 1, len(infos)):
                diff = infos[j] - infos[i]
                lam = np.linalg.eigvalsh(diff)[0]
                assert lam >= -1e-9
