"""Estimator state machines sharing one step/report contract.

Every strategy exposes the same surface, so the harness can swap them with
no other scenario change:

    state_dim        flat continuous state length
    initial_state()  flat vector
    derivative(t, est, y, u, est_all)   continuous dynamics
    estimate(t, est) delivered state estimate for the controller
    stiffness(t, est) fastest-mode magnitude, for sub-stepping
    macro_update(t, est, y, dt)         discrete per-macro-step transition
    snapshot(t, est) logged extras (fusion weights / selected index)

This is the plain-Python reference lane; the jitted engine reproduces the
same dynamics for the built-in benchmark configurations.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .observers import (
    ObserverBankState,
    ObserverGainProfile,
    RlsState,
    SelectorState,
    build_E,
    combine,
    combined_weights,
    hgo_derivative,
    mhgo_bank_derivative,
    rls_derivative,
    selector_step,
    switching_schedule,
)

__all__ = [
    "SingleHgo",
    "SwitchingHgo",
    "MultiObserver",
    "MhgoBank",
    "weight_sum_error",
]

NominalModel = Callable[[np.ndarray, float], float]


class SingleHgo:
    """One high-gain observer, optionally with a nominal model of the nonlinearity."""

    def __init__(
        self,
        profile: ObserverGainProfile,
        init,
        f_o: Optional[NominalModel] = None,
    ):
        self.profile = profile
        self.init = np.asarray(init, dtype=float)
        if self.init.shape != (profile.n,):
            raise ValueError(f"init must have shape ({profile.n},)")
        self.f_o = f_o
        self.state_dim = profile.n

    def initial_state(self) -> np.ndarray:
        return self.init.copy()

    def derivative(self, t, est, y, u, est_all=None) -> np.ndarray:
        return hgo_derivative(est, y, u, self.profile, self.f_o)

    def estimate(self, t, est) -> np.ndarray:
        return est

    def stiffness(self, t, est) -> float:
        return self.profile.spectral_scale()

    def macro_update(self, t, est, y, dt) -> np.ndarray:
        return est

    def snapshot(self, t, est) -> dict:
        return {}


class SwitchingHgo:
    """High-gain observer that swaps a fast gain profile for a slow one at t_switch.

    The observer state is continuous across the switch; only the injection
    gain changes.
    """

    def __init__(
        self,
        fast: ObserverGainProfile,
        slow: ObserverGainProfile,
        t_switch: float,
        init,
        f_o: Optional[NominalModel] = None,
    ):
        if fast.n != slow.n:
            raise ValueError("fast and slow profiles must share the dimension")
        if t_switch < 0.0:
            raise ValueError("t_switch must be >= 0")
        self.fast = fast
        self.slow = slow
        self.t_switch = float(t_switch)
        self.init = np.asarray(init, dtype=float)
        if self.init.shape != (slow.n,):
            raise ValueError(f"init must have shape ({slow.n},)")
        self.f_o = f_o
        self.state_dim = slow.n

    def _profile(self, t) -> ObserverGainProfile:
        return switching_schedule(t, self.t_switch, self.fast, self.slow)

    def initial_state(self) -> np.ndarray:
        return self.init.copy()

    def derivative(self, t, est, y, u, est_all=None) -> np.ndarray:
        return hgo_derivative(est, y, u, self._profile(t), self.f_o)

    def estimate(self, t, est) -> np.ndarray:
        return est

    def stiffness(self, t, est) -> float:
        return self._profile(t).spectral_scale()

    def macro_update(self, t, est, y, dt) -> np.ndarray:
        return est

    def snapshot(self, t, est) -> dict:
        return {}


class MultiObserver:
    """Bank of independent observers with best-observer selection.

    Each member runs the plain linear observer law; the selection criteria
    integrate the squared output residuals with forgetting and the delivered
    estimate is the bank member with the smallest criterion.  The criteria
    and the selected index live at the tail of the flat state and advance
    once per macro step (held-residual closed form), not inside the ODE.
    """

    def __init__(self, profile: ObserverGainProfile, inits, alpha: float, sigma0: int):
        self.profile = profile
        inits = np.asarray(inits, dtype=float)
        if inits.ndim != 2 or inits.shape[1] != profile.n:
            raise ValueError("inits must be (N, n)")
        self.inits = inits
        self.N = inits.shape[0]
        if alpha <= 0.0:
            raise ValueError("alpha must be > 0")
        if not (1 <= sigma0 <= self.N):
            raise ValueError("sigma0 must index an observer (1-based)")
        self.alpha = float(alpha)
        self.sigma0 = int(sigma0)
        self.n = profile.n
        # Layout: bank (N*n) | mu (N) | sigma (1, stored as float)
        self.state_dim = self.N * self.n + self.N + 1

    def _bank(self, est) -> ObserverBankState:
        return ObserverBankState(est[: self.N * self.n].reshape(self.N, self.n))

    def initial_state(self) -> np.ndarray:
        return np.concatenate(
            [self.inits.ravel(), np.zeros(self.N), [float(self.sigma0)]]
        )

    def derivative(self, t, est, y, u, est_all=None) -> np.ndarray:
        d = np.zeros_like(est)
        bank = self._bank(est)
        d[: self.N * self.n] = mhgo_bank_derivative(bank, y, self.profile).ravel()
        return d

    def estimate(self, t, est) -> np.ndarray:
        sigma = int(est[-1])
        base = (sigma - 1) * self.n
        return est[base : base + self.n]

    def stiffness(self, t, est) -> float:
        return self.profile.spectral_scale()

    def macro_update(self, t, est, y, dt) -> np.ndarray:
        bank = self._bank(est)
        sel = SelectorState(
            mu=est[self.N * self.n : self.N * self.n + self.N],
            alpha=self.alpha,
            sigma=int(est[-1]),
        )
        residuals = y - bank.estimates[:, 0]
        sel = selector_step(sel, residuals, dt)
        out = est.copy()
        out[self.N * self.n : self.N * self.n + self.N] = sel.mu
        out[-1] = float(sel.sigma)
        return out

    def snapshot(self, t, est) -> dict:
        return {"sigma": int(est[-1])}


class MhgoBank:
    """Observer bank fused by RLS-learned weights (information form).

    Layout of the flat state: bank (N*n) | beta_hat (N-1) | info matrix
    ((N-1)^2, row-major).  The implied last weight keeps the weight sum at
    one exactly; freeze=True pins the weights (and the information matrix)
    for validation runs.
    """

    def __init__(
        self,
        profile: ObserverGainProfile,
        inits,
        gamma: float,
        beta0=None,
        freeze: bool = False,
        f_o: Optional[NominalModel] = None,
    ):
        self.profile = profile
        inits = np.asarray(inits, dtype=float)
        if inits.ndim != 2 or inits.shape[1] != profile.n:
            raise ValueError("inits must be (N, n)")
        self.N = inits.shape[0]
        self.n = profile.n
        if self.N < self.n + 1:
            raise ValueError("N >= n+1 required")
        self.inits = inits
        self.rls0 = RlsState.initial(self.N, gamma, beta0)
        self.freeze = bool(freeze)
        self.f_o = f_o
        m = self.N - 1
        self.state_dim = self.N * self.n + m + m * m

    def parts(self, est):
        """(bank, beta_hat, info) views of a flat state vector."""
        Nn = self.N * self.n
        m = self.N - 1
        bank = ObserverBankState(est[:Nn].reshape(self.N, self.n))
        beta = est[Nn : Nn + m]
        info = est[Nn + m :].reshape(m, m)
        return bank, beta, info

    def initial_state(self) -> np.ndarray:
        return np.concatenate(
            [self.inits.ravel(), self.rls0.beta_hat, self.rls0.info.ravel()]
        )

    def derivative(self, t, est, y, u, est_all=None) -> np.ndarray:
        bank, beta, info = self.parts(est)
        d = np.zeros_like(est)
        Nn = self.N * self.n
        dbank = mhgo_bank_derivative(bank, y, self.profile)
        if self.f_o is not None:
            for i in range(self.N):
                dbank[i, -1] += self.f_o(bank.estimates[i], u)
        d[:Nn] = dbank.ravel()
        if not self.freeze:
            m = self.N - 1
            rls = RlsState(beta_hat=beta, info=info, gamma=self.rls0.gamma)
            E = build_E(bank)
            y_tilde = y - bank.estimates[-1, 0]
            dbeta, dinfo = rls_derivative(rls, E, y_tilde)
            d[Nn : Nn + m] = dbeta
            d[Nn + m :] = dinfo.ravel()
        return d

    def estimate(self, t, est) -> np.ndarray:
        bank, beta, _ = self.parts(est)
        return combined_weights(beta) @ bank.estimates

    def stiffness(self, t, est) -> float:
        scale = self.profile.spectral_scale()
        if not self.freeze:
            bank, _, info = self.parts(est)
            ce = build_E(bank)[0, :]
            # Fastest fusion mode: the nonzero eigenvalue of P ce ce^T.
            rate = float(ce @ np.linalg.solve(info, ce))
            scale = max(scale, rate)
        return scale

    def macro_update(self, t, est, y, dt) -> np.ndarray:
        return est

    def snapshot(self, t, est) -> dict:
        _, beta, info = self.parts(est)
        return {
            "beta": combined_weights(beta),
            "info": info.copy(),
        }


def weight_sum_error(beta_hat) -> float:
    """|sum of all N weights - 1| with the implied last weight, via exact summation."""
    w = combined_weights(np.asarray(beta_hat, dtype=float))
    return abs(math.fsum(float(v) for v in w) - 1.0)
