"""High-gain observer primitives: gains, bank dynamics, fusion and selection.

Four estimation strategies build on these pieces: a single observer, the
switched-gain variant, best-of-bank selection by an integrated residual
criterion, and the fused bank whose combination weights are learned by
recursive least squares (integrated in information form).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .linalg import LinalgError, is_hurwitz_poly, scaling_matrix

__all__ = [
    "DegenerateSimplexError",
    "ObserverGainProfile",
    "ObserverBankState",
    "RlsState",
    "SelectorState",
    "hgo_gain",
    "hgo_derivative",
    "mhgo_bank_derivative",
    "build_E",
    "rls_derivative",
    "combine",
    "combined_weights",
    "convex_weights",
    "switching_schedule",
    "selector_step",
]


class DegenerateSimplexError(LinalgError):
    """Affinely dependent initial estimates where a unique simplex was required."""


@dataclass(frozen=True)
class ObserverGainProfile:
    """Gain coefficients kappa_1..kappa_n and the bandwidth parameter eps.

    kappa must make s^n + kappa_1 s^(n-1) + ... + kappa_n Hurwitz and eps
    must lie in (0, 1]; both are enforced at construction.
    """

    kappa: tuple[float, ...]
    eps: float

    def __post_init__(self):
        kappa = tuple(float(k) for k in self.kappa)
        object.__setattr__(self, "kappa", kappa)
        if len(kappa) < 1:
            raise ValueError("kappa must have at least one coefficient")
        if not is_hurwitz_poly(kappa):
            raise ValueError(f"kappa={kappa} is not Hurwitz")
        if not (0.0 < self.eps <= 1.0):
            raise ValueError("eps must lie in (0, 1]")

    @property
    def n(self) -> int:
        return len(self.kappa)

    def gain(self) -> np.ndarray:
        return hgo_gain(self)

    def companion_Ao(self) -> np.ndarray:
        """Scaled error-dynamics matrix: first column -kappa, superdiagonal ones."""
        n = self.n
        Ao = np.zeros((n, n))
        for i in range(n):
            Ao[i, 0] = -self.kappa[i]
            if i < n - 1:
                Ao[i, i + 1] = 1.0
        return Ao

    def H_o(self) -> np.ndarray:
        """Scaled noise-injection vector [-kappa_1, ..., -kappa_n]."""
        return -np.asarray(self.kappa, dtype=float)

    def D(self) -> np.ndarray:
        return scaling_matrix(self.eps, self.n)

    def spectral_scale(self) -> float:
        """Safe upper bound on the fastest observer mode, for sub-stepping.

        Cauchy's bound 1 + max|kappa| on the root magnitudes, divided by eps.
        """
        return (1.0 + max(abs(k) for k in self.kappa)) / self.eps


@dataclass(frozen=True)
class ObserverBankState:
    """N observer estimates stacked row-wise: estimates[i] is the i-th x_hat."""

    estimates: np.ndarray

    def __post_init__(self):
        est = np.asarray(self.estimates, dtype=float)
        if est.ndim != 2:
            raise ValueError("estimates must be an (N, n) array")
        if not np.all(np.isfinite(est)):
            raise ValueError("estimates must be finite")
        object.__setattr__(self, "estimates", est)

    @property
    def N(self) -> int:
        return self.estimates.shape[0]

    @property
    def n(self) -> int:
        return self.estimates.shape[1]


@dataclass(frozen=True)
class RlsState:
    """Fusion-weight state: first N-1 weights plus the information matrix R = P^-1.

    The last weight is always implied as 1 - sum(beta_hat), so the weights
    sum to one exactly by construction instead of by integration.
    """

    beta_hat: np.ndarray
    info: np.ndarray
    gamma: float

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta_hat, dtype=float))
        info = np.asarray(self.info, dtype=float)
        if self.gamma <= 0.0:
            raise ValueError("gamma must be > 0")
        m = beta.shape[0]
        if info.shape != (m, m):
            raise ValueError("info must be (N-1) x (N-1)")
        if np.abs(info - info.T).max() > 1e-9 * max(1.0, np.abs(info).max()):
            raise ValueError("info must be symmetric")
        try:
            np.linalg.cholesky(info)
        except np.linalg.LinAlgError as exc:
            raise ValueError("info must be positive definite") from exc
        object.__setattr__(self, "beta_hat", beta)
        object.__setattr__(self, "info", info)

    @classmethod
    def initial(cls, N: int, gamma: float, beta0=None) -> "RlsState":
        """Start of adaptation: P(0) = gamma * I, i.e. R(0) = I / gamma."""
        m = N - 1
        if m < 1:
            raise ValueError("RLS needs at least two observers")
        beta = np.zeros(m) if beta0 is None else np.asarray(beta0, dtype=float)
        if beta.shape != (m,):
            raise ValueError(f"beta0 must have length {m}")
        return cls(beta_hat=beta, info=np.eye(m) / gamma, gamma=float(gamma))

    def weights(self) -> np.ndarray:
        """All N weights including the implied last one; sums to 1 to ~1 ulp."""
        parts = [float(b) for b in self.beta_hat]
        return np.array(parts + [1.0 - math.fsum(parts)])


@dataclass(frozen=True)
class SelectorState:
    """Best-observer selection state: criteria mu, forgetting rate, current pick."""

    mu: np.ndarray
    alpha: float
    sigma: int

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or not np.all(np.isfinite(mu)) or np.any(mu < 0.0):
            raise ValueError("mu must be a finite nonnegative vector")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be > 0")
        if not (1 <= self.sigma <= mu.shape[0]):
            raise ValueError("sigma must index an observer (1-based)")
        object.__setattr__(self, "mu", mu)


def hgo_gain(profile: ObserverGainProfile) -> np.ndarray:
    """Observer gain vector H with H_i = kappa_i / eps^i."""
    i = np.arange(1, profile.n + 1, dtype=float)
    return np.asarray(profile.kappa, dtype=float) / profile.eps**i


def hgo_derivative(
    xhat: np.ndarray,
    y: float,
    u: float,
    profile: ObserverGainProfile,
    f_o: Optional[Callable[[np.ndarray, float], float]] = None,
) -> np.ndarray:
    """Single-observer dynamics: chain shift + nominal model + innovation injection.

    f_o is the optional nominal model of the plant nonlinearity; None means
    the zero function (no model).
    """
    xhat = np.asarray(xhat, dtype=float)
    n = profile.n
    if xhat.shape != (n,):
        raise ValueError(f"xhat must have shape ({n},)")
    H = hgo_gain(profile)
    innov = y - xhat[0]
    dx = np.empty(n)
    dx[:-1] = xhat[1:]
    dx[-1] = f_o(xhat, u) if f_o is not None else 0.0
    dx += H * innov
    return dx


def mhgo_bank_derivative(
    bank: ObserverBankState, y: float, profile: ObserverGainProfile
) -> np.ndarray:
    """Derivatives of all bank members under the shared linear observer law.

    No nonlinearity is injected: each observer is the pure chain plus
    innovation feedback.
    """
    est = bank.estimates
    if bank.n != profile.n:
        raise ValueError("bank dimension does not match profile")
    H = hgo_gain(profile)
    innov = y - est[:, 0]
    d = np.empty_like(est)
    d[:, :-1] = est[:, 1:]
    d[:, -1] = 0.0
    d += innov[:, None] * H[None, :]
    return d


def build_E(bank: ObserverBankState) -> np.ndarray:
    """Difference matrix, n x (N-1): column i is x_hat_N - x_hat_i."""
    if bank.N < 2:
        raise ValueError("invalid bank: at least two observers required")
    est = bank.estimates
    return est[-1][:, None] - est[:-1].T


def rls_derivative(
    rls: RlsState, E: np.ndarray, y_tilde_N: float
) -> tuple[np.ndarray, np.ndarray]:
    """Continuous RLS in information form.

    Returns (d beta_hat, d info) with
        d beta_hat = -P (CE)^T (y_tilde_N + CE beta_hat),   P = info^-1,
        d info     = (CE)^T (CE),
    where CE is the first row of E.  The info derivative is the exact
    information-form counterpart of the covariance law dP = -P E^T C^T C E P.
    """
    E = np.asarray(E, dtype=float)
    m = rls.beta_hat.shape[0]
    if E.ndim != 2 or E.shape[1] != m:
        raise ValueError(f"E must have {m} columns")
    ce = E[0, :]
    resid = float(y_tilde_N) + float(ce @ rls.beta_hat)
    try:
        dbeta = -np.linalg.solve(rls.info, ce * resid)
    except np.linalg.LinAlgError as exc:
        raise LinalgError(f"information matrix is singular: {exc}") from exc
    dinfo = np.outer(ce, ce)
    return dbeta, dinfo


def combined_weights(beta_hat: np.ndarray) -> np.ndarray:
    """All N weights from the N-1 integrated ones; last = 1 - sum (exact by fsum)."""
    parts = [float(b) for b in np.atleast_1d(beta_hat)]
    return np.array(parts + [1.0 - math.fsum(parts)])


def combine(bank: ObserverBankState, rls: RlsState) -> np.ndarray:
    """Fused estimate: weighted sum of the bank with the implied last weight."""
    if rls.beta_hat.shape[0] != bank.N - 1:
        raise ValueError("weight vector does not match bank size")
    w = combined_weights(rls.beta_hat)
    return w @ bank.estimates


def convex_weights(
    bank_inits: np.ndarray, x0: np.ndarray, tol: float = 1e-9
) -> Optional[np.ndarray]:
    """Nonnegative weights summing to 1 with sum(beta_i * inits_i) = x0, or None.

    For N = n + 1 this is the exact barycentric solve; for larger banks a
    deterministic search over vertex subsets (size n + 1, then smaller, so
    flat hulls are still covered).  None means x0 lies outside the convex
    hull.  A degenerate N = n + 1 simplex that does contain x0 raises
    DegenerateSimplexError: the weights exist but are not unique.
    """
    inits = np.asarray(bank_inits, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if inits.ndim != 2:
        raise ValueError("bank_inits must be an (N, n) array")
    N, n = inits.shape
    if x0.shape != (n,):
        raise ValueError(f"x0 must have shape ({n},)")
    if N < n + 1:
        raise ValueError("N >= n+1 required")
    neg_tol = 1e-12 * max(1.0, float(np.abs(inits).max()))

    if N == n + 1:
        sol = _barycentric(inits, x0, tol)
        if sol is not None:
            if sol.min() < -neg_tol:
                return None
            return _clean_weights(sol, inits, x0, tol)
        # Degenerate simplex: decide hull membership on smaller subsets.
        found = _search_subsets(inits, x0, tol, neg_tol, max_size=n)
        if found is None:
            return None
        raise DegenerateSimplexError(
            "initial estimates are affinely dependent; weights are not unique"
        )

    found = _search_subsets(inits, x0, tol, neg_tol, max_size=n + 1)
    return found


def _barycentric(points: np.ndarray, x0: np.ndarray, tol: float) -> Optional[np.ndarray]:
    """Weights over a point subset (affine solve); None if degenerate/unsolvable."""
    k, n = points.shape
    M = np.vstack([points.T, np.ones((1, k))])
    rhs = np.concatenate([x0, [1.0]])
    scale = max(1.0, float(np.abs(rhs).max()), float(np.abs(points).max()))
    if k == n + 1:
        try:
            sol = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            return None
    else:
        sol, _, rank, _ = np.linalg.lstsq(M, rhs, rcond=None)
        if rank < k:
            return None
    if not np.all(np.isfinite(sol)):
        return None
    if np.abs(M @ sol - rhs).max() > tol * scale:
        return None
    return sol


def _clean_weights(
    sol: np.ndarray, points: np.ndarray, x0: np.ndarray, tol: float
) -> np.ndarray:
    w = np.clip(sol, 0.0, None)
    w = w / w.sum()
    if np.abs(w @ points - x0).max() > tol * max(1.0, float(np.abs(x0).max())):
        raise LinalgError("weight cleanup violated the reconstruction tolerance")
    return w


def _search_subsets(
    inits: np.ndarray, x0: np.ndarray, tol: float, neg_tol: float, max_size: int
) -> Optional[np.ndarray]:
    N = inits.shape[0]
    for size in range(max_size, 0, -1):
        for subset in itertools.combinations(range(N), size):
            sol = _barycentric(inits[list(subset)], x0, tol)
            if sol is None or sol.min() < -neg_tol:
                continue
            full = np.zeros(N)
            clean = _clean_weights(sol, inits[list(subset)], x0, tol)
            full[list(subset)] = clean
            return full
    return None


def switching_schedule(
    t: float,
    t_switch: float,
    fast: ObserverGainProfile,
    slow: ObserverGainProfile,
) -> ObserverGainProfile:
    """Fast profile strictly before t_switch, slow from t_switch onwards."""
    if t_switch < 0.0:
        raise ValueError("t_switch must be >= 0")
    return fast if t < t_switch else slow


def selector_step(sel: SelectorState, residuals, dt: float) -> SelectorState:
    """Advance the selection criteria one macro step and re-pick the observer.

    Each criterion obeys mu' = -alpha mu + residual^2 with the residual held
    over the step, integrated in closed form.  The new pick is the index of
    the minimal criterion, ties broken by the lowest index (1-based).
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    r = np.asarray(residuals, dtype=float)
    if r.shape != sel.mu.shape:
        raise ValueError("residuals must match mu in length")
    decay = math.exp(-sel.alpha * dt)
    mu = sel.mu * decay + (r * r) * ((1.0 - decay) / sel.alpha)
    sigma = int(np.argmin(mu)) + 1
    return replace(sel, mu=mu, sigma=sigma)
