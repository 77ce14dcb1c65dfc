"""Tracking controllers for the benchmark plants and the saturation operator.

Both benchmark laws are static state feedbacks; ControllerSpec still carries
an adaptation hook (theta) so dynamic laws fit the same wiring, but with
theta_dim = 0 no adaptive state is ever allocated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .plants import PendulumParams, pendulum_F1, pendulum_F2

__all__ = [
    "ReferenceSignal",
    "ControllerSpec",
    "saturate",
    "underwater_reference",
    "pendulum_reference",
    "underwater_controller",
    "pendulum_controller",
]


@dataclass(frozen=True)
class ReferenceSignal:
    """Tracked output and its first two derivatives, all analytic functions of t."""

    y_d: Callable[[float], float]
    y_d_dot: Callable[[float], float]
    y_d_ddot: Callable[[float], float]


@dataclass(frozen=True)
class ControllerSpec:
    """Control law u = g(x, theta, t) with optional adaptation theta' = h(x, theta, t).

    The emitted control is always clamped to [-saturation, saturation].
    """

    g: Callable[[np.ndarray, np.ndarray, float], float]
    h: Optional[Callable[[np.ndarray, np.ndarray, float], np.ndarray]] = None
    theta_dim: int = 0
    saturation: float = 500.0

    def __post_init__(self):
        if self.theta_dim < 0:
            raise ValueError("theta_dim must be >= 0")
        if self.theta_dim > 0 and self.h is None:
            raise ValueError("adaptive controllers need an update law h")
        if self.saturation <= 0.0:
            raise ValueError("saturation must be > 0")


def saturate(u: float, limit: float) -> float:
    """Clamp u to [-limit, limit]."""
    if limit <= 0.0:
        raise ValueError("saturation limit must be > 0")
    if u > limit:
        return limit
    if u < -limit:
        return -limit
    return float(u)


def underwater_reference() -> ReferenceSignal:
    """Heading reference 5 + sin(2t)."""
    return ReferenceSignal(
        y_d=lambda t: 5.0 + math.sin(2.0 * t),
        y_d_dot=lambda t: 2.0 * math.cos(2.0 * t),
        y_d_ddot=lambda t: -4.0 * math.sin(2.0 * t),
    )


def pendulum_reference(k_index: int) -> ReferenceSignal:
    """Angle references 0.3 sin(t) for the first pendulum, 0.3 cos(t) for the second."""
    if k_index == 1:
        return ReferenceSignal(
            y_d=lambda t: 0.3 * math.sin(t),
            y_d_dot=lambda t: 0.3 * math.cos(t),
            y_d_ddot=lambda t: -0.3 * math.sin(t),
        )
    if k_index == 2:
        return ReferenceSignal(
            y_d=lambda t: 0.3 * math.cos(t),
            y_d_dot=lambda t: -0.3 * math.sin(t),
            y_d_ddot=lambda t: -0.3 * math.cos(t),
        )
    raise ValueError("k_index must be 1 or 2")


def underwater_controller(
    x,
    t: float,
    a: float = 1.0,
    limit: float = 500.0,
    literal_signs: bool = False,
) -> float:
    """Heading-tracking law for the underwater vehicle, saturated at `limit`.

    The default negates the two error terms, which places the tracking-error
    poles at -2, -2; literal_signs=True keeps the positive feedback variant
    (+4, +4) for side-by-side comparison, which destabilizes the error.
    """
    x = np.asarray(x, dtype=float)
    ref = underwater_reference()
    sign = 1.0 if literal_signs else -1.0
    u = (
        a * x[1] * abs(x[1])
        + ref.y_d_ddot(t)
        + sign * 4.0 * (x[1] - ref.y_d_dot(t))
        + sign * 4.0 * (x[0] - ref.y_d(t))
    )
    return saturate(u, limit)


def pendulum_controller(
    x_k,
    x_j1: float,
    t: float,
    params: PendulumParams,
    k_index: int,
    limit: float = 50.0,
) -> float:
    """Feedback-linearizing angle-tracking law for pendulum k, saturated at `limit`."""
    x_k = np.asarray(x_k, dtype=float)
    ref = pendulum_reference(k_index)
    F1 = pendulum_F1(params, float(x_k[0]), float(x_k[1]), float(x_j1))
    F2 = pendulum_F2(params)
    u = (
        -F1
        + ref.y_d_ddot(t)
        - 7.0 * (x_k[1] - ref.y_d_dot(t))
        - 12.0 * (x_k[0] - ref.y_d(t))
    ) / F2
    return saturate(u, limit)
