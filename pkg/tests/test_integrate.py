"""Fixed-step RK4 with sub-stepping: accuracy, stiffness handling, divergence."""

import numpy as np
import pytest

from hgobank.integrate import (
    DivergenceError,
    OdeProblem,
    rk4_integrate,
    substep_count,
)


def expm_dense(A):
    """Oracle: matrix exponential by scaling-and-squaring of the Taylor series."""
    A = np.asarray(A, dtype=float)
    s = max(0, int(np.ceil(np.log2(max(1.0, np.abs(A).sum(axis=1).max())))) + 4)
    B = A / 2.0**s
    E = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, 25):
        term = term @ B / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def test_scalar_decay_single_step():
    prob = OdeProblem(dim=1, deriv=lambda t, x: -x, stiffness_scale=1.0)
    traj = rk4_integrate(prob, 0.0, np.array([1.0]), 0.1, 1)
    assert traj.shape == (2, 1)
    assert abs(traj[1, 0] - 0.90483742) <= 1e-7


def test_zero_field_constant():
    prob = OdeProblem(dim=2, deriv=lambda t, x: np.zeros(2))
    traj = rk4_integrate(prob, 0.0, np.array([3.0, -3.0]), 0.7, 5)
    assert np.all(traj == np.array([3.0, -3.0]))


def test_stiff_fast_mode_substepping():
    # the switching-observer fast-mode scale; one macro step spans 7 time constants
    lam = 70000.0
    prob = OdeProblem(dim=1, deriv=lambda t, x: -lam * x, stiffness_scale=lam)
    traj = rk4_integrate(prob, 0.0, np.array([1.0]), 1e-4, 1)
    exact = np.exp(-7.0)
    assert abs(traj[1, 0] - exact) / exact <= 1e-4
    assert substep_count(1e-4, lam) > 1


def test_substep_count_rule():
    assert substep_count(1e-4, 0.0) == 1
    assert substep_count(1e-4, 100.0) == 1
    n = substep_count(1e-4, 70000.0)
    assert 70000.0 * (1e-4 / n) <= 0.5  # stability margin contract


def test_divergence_carries_time():
    prob = OdeProblem(dim=1, deriv=lambda t, x: x * x, stiffness_scale=0.0)
    with pytest.raises(DivergenceError) as info:
        rk4_integrate(prob, 0.0, np.array([1.0]), 0.5, 10)
    assert 0.0 < info.value.time <= 5.0


def test_rejects_bad_inputs():
    prob = OdeProblem(dim=1, deriv=lambda t, x: -x)
    with pytest.raises(ValueError):
        rk4_integrate(prob, 0.0, np.array([1.0]), -0.1, 3)
    with pytest.raises(ValueError):
        rk4_integrate(prob, 0.0, np.array([np.inf]), 0.1, 3)
    with pytest.raises(ValueError):
        rk4_integrate(prob, 0.0, np.array([1.0, 2.0]), 0.1, 3)


def test_linear_systems_match_matrix_exponential():
    """1-second horizons, |lambda| * substep <= 0.5: within 1e-6 relative."""
    rng = np.random.default_rng(21)
    for n in (2, 3):
        for _ in range(8):
            A = rng.uniform(-2.0, 2.0, size=(n, n))
            A = A - (np.abs(np.linalg.eigvals(A).real).max() + 1.0) * np.eye(n)
            scale = float(np.abs(np.linalg.eigvals(A)).max())
            prob = OdeProblem(dim=n, deriv=lambda t, x, A=A: A @ x, stiffness_scale=scale)
            x0 = rng.uniform(-1.0, 1.0, size=n)
            steps = 1000
            traj = rk4_integrate(prob, 0.0, x0, 1e-3, steps)
            exact = expm_dense(A) @ x0
            denom = max(np.linalg.norm(exact), 1e-12)
            assert np.linalg.norm(traj[-1] - exact) / denom <= 1e-6
