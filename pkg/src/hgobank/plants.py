"""Benchmark plants in integrator-chain form and the sampled measurement model.

Plants expose only the chain-terminal nonlinearity f(x, u); the measurement
is the first state plus zero-order-hold bounded noise.  Noise samples come
from a counter-based 64-bit generator keyed by (seed, sample index) so a
trajectory replays exactly no matter how the integrator sub-steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "NoiseModel",
    "PlantDefinition",
    "PendulumParams",
    "canonical_derivative",
    "measure",
    "pendulum_F1",
    "pendulum_F2",
    "pendulum_subsystem_f",
    "underwater_plant",
    "integrator_chain",
    "derive_channel_seed",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_CHANNEL_SALT = 0xC2B2AE3D27D4EB4F


def _mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit word."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive_channel_seed(seed: int, channel: int) -> int:
    """Independent per-channel noise seed; channel 0 keeps the scenario seed."""
    if channel == 0:
        return seed & _MASK64
    return _mix64((seed ^ (channel * _CHANNEL_SALT)) & _MASK64)


@dataclass(frozen=True)
class NoiseModel:
    """Zero-order-hold uniform noise on [-bound, bound].

    The sample for interval [j*sample_period, (j+1)*sample_period) is a pure
    function of (seed, j): same seed, same sequence, regardless of how the
    caller interleaves queries.
    """

    bound: float
    sample_period: float
    seed: int = 0

    def __post_init__(self):
        if self.bound < 0.0:
            raise ValueError("noise bound must be >= 0")
        if self.sample_period <= 0.0:
            raise ValueError("sample_period must be > 0")

    def sample_index(self, t: float) -> int:
        # Small forward shift absorbs float error in t so grid times k*period
        # land in sample k; the boundary itself belongs to the next interval.
        return max(0, int(t / self.sample_period + 1e-9))

    def value(self, index: int) -> float:
        if self.bound == 0.0:
            return 0.0
        z = _mix64((self.seed + (index + 1) * _GOLDEN) & _MASK64)
        u = (z >> 11) * 2.0**-53  # uniform in [0, 1)
        return self.bound * (2.0 * u - 1.0)

    def value_at(self, t: float) -> float:
        return self.value(self.sample_index(t))

    def sequence(self, count: int) -> np.ndarray:
        """First `count` held samples, vectorized; bit-identical to value(i)."""
        if self.bound == 0.0:
            return np.zeros(count)
        idx = np.arange(1, count + 1, dtype=np.uint64)
        z = (np.uint64(self.seed & _MASK64) + idx * np.uint64(_GOLDEN))
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        u = (z >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return self.bound * (2.0 * u - 1.0)


@dataclass(frozen=True)
class PlantDefinition:
    """Integrator chain of dimension n whose last state obeys x_n' = f(x, u).

    f_bound is the working bound of |f| over the operating region of
    interest (saturation-implied for the benchmarks); it only feeds the
    bound calculators, never the dynamics.
    """

    n: int
    f: Callable[[np.ndarray, float], float]
    f_bound: float
    label: str = "plant"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("plant dimension must be >= 1")
        if self.f_bound < 0.0:
            raise ValueError("f_bound must be >= 0")


def canonical_derivative(plant: PlantDefinition, x: np.ndarray, u: float) -> np.ndarray:
    """State derivative of the chain: shift plus f(x, u) in the last slot."""
    x = np.asarray(x, dtype=float)
    if x.shape != (plant.n,):
        raise ValueError(f"state must have shape ({plant.n},), got {x.shape}")
    dx = np.empty(plant.n)
    dx[:-1] = x[1:]
    dx[-1] = plant.f(x, u)
    return dx


def measure(x: np.ndarray, noise: NoiseModel, t: float) -> float:
    """Measured output y = x_1 + held noise sample at time t."""
    return float(x[0]) + noise.value_at(t)


def underwater_plant(a: float = 1.0, f_bound: float = 550.0) -> PlantDefinition:
    """Yaw model of an underwater vehicle: heading'' + a * heading' |heading'| = u.

    Default f_bound covers the 500-amplitude actuator plus the quadratic
    drag over |heading rate| <= 7.
    """
    if a <= 0.0:
        raise ValueError("drag coefficient a must be > 0")

    def f(x: np.ndarray, u: float) -> float:
        v = x[1]
        return u - a * v * abs(v)

    return PlantDefinition(n=2, f=f, f_bound=f_bound, label="underwater")


def integrator_chain(n: int = 2, f_bound: float = 0.0) -> PlantDefinition:
    """Pure integrator chain (f == 0); the linear validation plant."""

    def f(x: np.ndarray, u: float) -> float:
        return 0.0

    return PlantDefinition(n=n, f=f, f_bound=f_bound, label="chain")


@dataclass(frozen=True)
class PendulumParams:
    """Two spring-coupled inverted pendulums on carts (angles only).

    m, M in kg; a (spring attachment distance) and l in meters; k in N/m;
    g in m/s^2.  The mass ratio c = m / (m + M) is derived, never stored,
    so the defining identity holds exactly.
    """

    m: float = 1.0
    M: float = 5.0
    a: float = 0.2
    l: float = 1.0
    k: float = 1.0
    g: float = 9.8

    def __post_init__(self):
        for name in ("m", "M", "a", "l", "k", "g"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"pendulum parameter {name} must be > 0")

    @property
    def c(self) -> float:
        return self.m / (self.m + self.M)

    @property
    def coef_linear(self) -> float:
        """Coefficient of the own angle in F_k1."""
        c = self.c
        return self.g / (c * self.l) - self.k * self.a * (self.a - c * self.l) / (
            c * self.m * self.l**2
        )

    @property
    def coef_centrifugal(self) -> float:
        """Coefficient of sin(angle) * rate^2 in F_k1."""
        return self.m / self.M

    @property
    def coef_coupling(self) -> float:
        """Coefficient of the other pendulum's angle in F_k1."""
        c = self.c
        return self.k * self.a * (self.a - c * self.l) / (c * self.m * self.l**2)

    @property
    def input_gain(self) -> float:
        """F_k2 = 1 / (c m l^2)."""
        return 1.0 / (self.c * self.m * self.l**2)


def pendulum_F1(params: PendulumParams, x_k1: float, x_k2: float, x_j1: float) -> float:
    """Drift term F_k1 of subsystem k, fed by the other subsystem's angle x_j1."""
    return (
        params.coef_linear * x_k1
        - params.coef_centrifugal * np.sin(x_k1) * x_k2 * x_k2
        + params.coef_coupling * x_j1
    )


def pendulum_F2(params: PendulumParams) -> float:
    """Input gain F_k2 (identical for both subsystems)."""
    return params.input_gain


def pendulum_subsystem_f(
    params: PendulumParams, x_k, x_j1: float, u_k: float
) -> float:
    """Chain-terminal nonlinearity of subsystem k: F_k1(x) + F_k2 * u_k."""
    x_k = np.asarray(x_k, dtype=float)
    return pendulum_F1(params, float(x_k[0]), float(x_k[1]), float(x_j1)) + pendulum_F2(
        params
    ) * float(u_k)
