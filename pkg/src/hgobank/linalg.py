"""Dense linear algebra sized for observer design.

Companion forms, Routh-Hurwitz stability tests, Lyapunov solves by
vectorization, and symmetric eigenvalue extremes.  Everything here assumes
small matrices (n <= 8); no sparse or large-scale paths.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "LinalgError",
    "NotHurwitzError",
    "IllConditionedError",
    "companion_triplet",
    "scaling_matrix",
    "is_hurwitz_poly",
    "char_poly_coeffs",
    "is_hurwitz_matrix",
    "solve_lyapunov",
    "min_max_eig_sym",
]

LYAPUNOV_RESIDUAL_TOL = 1e-10


class LinalgError(ValueError):
    """Invalid input or a failed numerical contract in a linalg primitive."""


class NotHurwitzError(LinalgError):
    """The matrix (or polynomial) has a root outside the open left-half plane."""


class IllConditionedError(LinalgError):
    """A linear solve could not meet its residual contract."""


def companion_triplet(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrator-chain triplet (A, B, C): shift matrix, last-unit input, first-unit output.

    A is n x n with ones on the superdiagonal, B = e_n (n x 1), C = e_1^T (1 x n).
    """
    if n < 1:
        raise LinalgError("invalid dimension: n must be >= 1")
    A = np.zeros((n, n))
    for i in range(n - 1):
        A[i, i + 1] = 1.0
    B = np.zeros((n, 1))
    B[n - 1, 0] = 1.0
    C = np.zeros((1, n))
    C[0, 0] = 1.0
    return A, B, C


def scaling_matrix(eps: float, n: int) -> np.ndarray:
    """Diagonal error-scaling matrix diag(1, eps, ..., eps^(n-1))."""
    if not np.isfinite(eps) or eps <= 0.0:
        raise LinalgError("invalid parameter: eps must be > 0")
    if n < 1:
        raise LinalgError("invalid dimension: n must be >= 1")
    return np.diag(float(eps) ** np.arange(n, dtype=float))


def is_hurwitz_poly(kappa) -> bool:
    """True iff s^n + kappa_1 s^(n-1) + ... + kappa_n has all roots in the open LHP.

    Routh-Hurwitz table on the coefficients; a zero or negative first-column
    entry anywhere means the polynomial is not strictly Hurwitz.  The empty
    coefficient list is the degree-0 polynomial, trivially stable.
    """
    coeffs = [1.0] + [float(k) for k in kappa]
    n = len(coeffs) - 1
    if n == 0:
        return True
    # Necessary condition for a monic real Hurwitz polynomial.
    if any((not np.isfinite(c)) or c <= 0.0 for c in coeffs[1:]):
        return False
    width = n // 2 + 1
    prev = coeffs[0::2]
    cur = coeffs[1::2]
    prev = prev + [0.0] * (width - len(prev))
    cur = cur + [0.0] * (width - len(cur))
    for _ in range(n - 1):
        if cur[0] <= 0.0:
            return False
        nxt = [0.0] * width
        for j in range(width - 1):
            nxt[j] = (cur[0] * prev[j + 1] - prev[0] * cur[j + 1]) / cur[0]
        prev, cur = cur, nxt
    return cur[0] > 0.0


def char_poly_coeffs(A: np.ndarray) -> np.ndarray:
    """Coefficients [c1, ..., cn] of det(sI - A) = s^n + c1 s^(n-1) + ... + cn.

    Faddeev-LeVerrier recursion; avoids any eigen-decomposition.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise LinalgError("invalid input: square matrix required")
    n = A.shape[0]
    M = np.eye(n)
    coeffs = np.empty(n)
    for k in range(1, n + 1):
        AM = A @ M
        ck = -np.trace(AM) / k
        coeffs[k - 1] = ck
        M = AM + ck * np.eye(n)
    return coeffs


def is_hurwitz_matrix(A: np.ndarray) -> bool:
    """True iff all eigenvalues of A have negative real part (via Routh-Hurwitz)."""
    return is_hurwitz_poly(char_poly_coeffs(A))


def solve_lyapunov(A_o: np.ndarray) -> np.ndarray:
    """Solve A_o^T P + P A_o = -I for the symmetric positive-definite P.

    The n(n+1)/2 distinct entries of P are solved as one dense linear system.
    Raises NotHurwitzError when A_o is not Hurwitz (no positive-definite
    solution exists) and IllConditionedError when the residual contract
    (max-norm <= 1e-10) cannot be met.
    """
    A = np.asarray(A_o, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise LinalgError("invalid input: square matrix required")
    if not np.all(np.isfinite(A)):
        raise LinalgError("invalid input: non-finite entries")
    if not is_hurwitz_matrix(A):
        raise NotHurwitzError("no solution: matrix is not Hurwitz")
    n = A.shape[0]
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    index = {p: k for k, p in enumerate(pairs)}
    m = len(pairs)
    M = np.zeros((m, m))
    rhs = np.zeros(m)
    for r, (i, j) in enumerate(pairs):
        # (A^T P + P A)[i, j] = sum_k A[k, i] P[k, j] + P[i, k] A[k, j]
        for k in range(n):
            M[r, index[(min(k, j), max(k, j))]] += A[k, i]
            M[r, index[(min(i, k), max(i, k))]] += A[k, j]
        rhs[r] = -1.0 if i == j else 0.0
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(f"Lyapunov system is singular: {exc}") from exc
    P = np.empty((n, n))
    for (i, j), k in index.items():
        P[i, j] = sol[k]
        P[j, i] = sol[k]
    residual = np.abs(A.T @ P + P @ A + np.eye(n)).max()
    if not np.isfinite(residual) or residual > LYAPUNOV_RESIDUAL_TOL:
        raise IllConditionedError(
            f"Lyapunov residual {residual:.3e} exceeds {LYAPUNOV_RESIDUAL_TOL:.0e}"
        )
    lam_min, _ = min_max_eig_sym(P)
    if lam_min <= 0.0:
        raise IllConditionedError("Lyapunov solution is not positive definite")
    return P


def min_max_eig_sym(P: np.ndarray) -> tuple[float, float]:
    """(smallest, largest) eigenvalue of a symmetric matrix.

    Closed form for n <= 2, cyclic Jacobi sweeps otherwise; accurate to well
    below 1e-10 at the sizes used here.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise LinalgError("invalid input: square matrix required")
    if not np.all(np.isfinite(P)):
        raise LinalgError("invalid input: non-finite entries")
    scale = max(1.0, float(np.abs(P).max()))
    if np.abs(P - P.T).max() > 1e-12 * scale:
        raise LinalgError("invalid input: matrix is not symmetric")
    n = P.shape[0]
    if n == 1:
        v = float(P[0, 0])
        return v, v
    if n == 2:
        a, b, d = float(P[0, 0]), float(P[0, 1]), float(P[1, 1])
        mean = 0.5 * (a + d)
        rad = float(np.hypot(0.5 * (a - d), b))
        return mean - rad, mean + rad
    evs = _jacobi_eigvals(P)
    return float(evs[0]), float(evs[-1])


def _jacobi_eigvals(S: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted ascending."""
    a = 0.5 * (S + S.T)
    n = a.shape[0]
    scale = max(1.0, float(np.abs(a).max()))
    for _ in range(60):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(a[p, q]))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t_sign = 1.0 if tau >= 0.0 else -1.0
                t = t_sign / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[p, k] = a[k, p]
                    a[k, q] = s * akp + c * akq
                    a[q, k] = a[k, q]
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = c * c * app - 2.0 * s * c * apq + s * s * aqq
                a[q, q] = s * s * app + 2.0 * s * c * apq + c * c * aqq
                a[p, q] = 0.0
                a[q, p] = 0.0
    return np.sort(np.diag(a))
