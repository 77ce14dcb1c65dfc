"""Closed-loop wiring: plant + estimator(s) + controller(s) as one joint ODE.

One coherent derivative evaluation per call: measure the outputs, read each
channel's delivered estimate, form the saturated controls, then evaluate the
plant and estimator dynamics.  With no estimator on a channel the controller
consumes the true states, which reduces the loop to plain state feedback.

This is the reference implementation; the jitted engine reproduces it for
the built-in benchmark configurations and is cross-checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .integrate import DivergenceError, rk4_macro_step, substep_count
from .plants import NoiseModel, measure

__all__ = ["LoopChannel", "JointSystem", "closed_loop_derivative"]

# controller(t, estimates_per_channel, k, theta) -> saturated control for channel k
ControlLaw = Callable[[float, Sequence[np.ndarray], int, np.ndarray], float]
# plant_deriv(x_full, u_per_channel) -> dx_full
PlantDeriv = Callable[[np.ndarray, np.ndarray], np.ndarray]
# theta_law(t, estimates_per_channel, theta) -> d theta
ThetaLaw = Callable[[float, Sequence[np.ndarray], np.ndarray], np.ndarray]


@dataclass
class LoopChannel:
    """One measured output channel with its estimator.

    x_offset/n locate the channel's states inside the full plant state;
    estimator None means the channel runs under state feedback.
    """

    x_offset: int
    n: int
    noise: NoiseModel
    estimator: Optional[object] = None


class JointSystem:
    """Joint state [x | estimator states, channel by channel | theta].

    Static controllers (theta_dim = 0, the benchmark case) allocate no
    adaptation block at all.
    """

    def __init__(
        self,
        n_x: int,
        plant_deriv: PlantDeriv,
        channels: Sequence[LoopChannel],
        control_law: ControlLaw,
        x0,
        base_scale: float = 20.0,
        theta_dim: int = 0,
        theta_law: Optional[ThetaLaw] = None,
        theta0=None,
    ):
        self.n_x = n_x
        self.plant_deriv = plant_deriv
        self.channels = list(channels)
        self.control_law = control_law
        self.x0 = np.asarray(x0, dtype=float)
        if self.x0.shape != (n_x,):
            raise ValueError(f"x0 must have shape ({n_x},)")
        self.base_scale = float(base_scale)
        if theta_dim < 0:
            raise ValueError("theta_dim must be >= 0")
        if theta_dim > 0 and theta_law is None:
            raise ValueError("adaptive controllers need a theta update law")
        self.theta_dim = int(theta_dim)
        self.theta_law = theta_law
        self.theta0 = (
            np.zeros(self.theta_dim) if theta0 is None else np.asarray(theta0, dtype=float)
        )
        if self.theta0.shape != (self.theta_dim,):
            raise ValueError(f"theta0 must have shape ({self.theta_dim},)")
        self._slices = []
        pos = n_x
        for ch in self.channels:
            d = ch.estimator.state_dim if ch.estimator is not None else 0
            self._slices.append(slice(pos, pos + d))
            pos += d
        self._theta_slice = slice(pos, pos + self.theta_dim)
        pos += self.theta_dim
        self.dim = pos

    def initial_state(self) -> np.ndarray:
        parts = [self.x0]
        for ch in self.channels:
            if ch.estimator is not None:
                parts.append(ch.estimator.initial_state())
        if self.theta_dim > 0:
            parts.append(self.theta0)
        return np.concatenate(parts) if len(parts) > 1 else self.x0.copy()

    def theta(self, z: np.ndarray) -> np.ndarray:
        return z[self._theta_slice]

    def channel_state(self, z: np.ndarray, k: int) -> np.ndarray:
        ch = self.channels[k]
        return z[ch.x_offset : ch.x_offset + ch.n]

    def estimator_state(self, z: np.ndarray, k: int) -> np.ndarray:
        return z[self._slices[k]]

    def estimates(self, t: float, z: np.ndarray) -> list[np.ndarray]:
        out = []
        for k, ch in enumerate(self.channels):
            if ch.estimator is None:
                out.append(self.channel_state(z, k))
            else:
                out.append(ch.estimator.estimate(t, z[self._slices[k]]))
        return out

    def controls(self, t: float, z: np.ndarray) -> np.ndarray:
        ests = self.estimates(t, z)
        theta = self.theta(z)
        return np.array(
            [self.control_law(t, ests, k, theta) for k in range(len(self.channels))]
        )

    def outputs(self, t: float, z: np.ndarray) -> np.ndarray:
        return np.array(
            [
                measure(self.channel_state(z, k), ch.noise, t)
                for k, ch in enumerate(self.channels)
            ]
        )

    def derivative(self, t: float, z: np.ndarray) -> np.ndarray:
        ests = self.estimates(t, z)
        theta = self.theta(z)
        u = np.array(
            [self.control_law(t, ests, k, theta) for k in range(len(self.channels))]
        )
        dz = np.empty_like(z)
        dz[: self.n_x] = self.plant_deriv(z[: self.n_x], u)
        for k, ch in enumerate(self.channels):
            if ch.estimator is None:
                continue
            y = measure(self.channel_state(z, k), ch.noise, t)
            dz[self._slices[k]] = ch.estimator.derivative(
                t, z[self._slices[k]], y, float(u[k]), ests
            )
        if self.theta_dim > 0:
            dz[self._theta_slice] = self.theta_law(t, ests, theta)
        return dz

    def stiffness(self, t: float, z: np.ndarray) -> float:
        scale = self.base_scale
        for k, ch in enumerate(self.channels):
            if ch.estimator is not None:
                scale = max(scale, ch.estimator.stiffness(t, z[self._slices[k]]))
        return scale

    def macro_update(self, t: float, z: np.ndarray, dt: float) -> np.ndarray:
        out = z
        for k, ch in enumerate(self.channels):
            if ch.estimator is None:
                continue
            y = measure(self.channel_state(z, k), ch.noise, t)
            view = z[self._slices[k]]
            new = ch.estimator.macro_update(t, view, y, dt)
            if new is not view:
                if out is z:
                    out = z.copy()
                out[self._slices[k]] = new
        return out

    def step(self, t: float, z: np.ndarray, dt: float) -> np.ndarray:
        """One macro step: sub-stepped RK4 then the discrete estimator updates.

        Discrete updates (selection criteria) sample the post-step state and
        output at t + dt.
        """
        n_sub = substep_count(dt, self.stiffness(t, z))
        z_new = rk4_macro_step(self.derivative, t, z, dt, n_sub)
        if not np.all(np.isfinite(z_new)):
            raise DivergenceError(t + dt)
        return self.macro_update(t + dt, z_new, dt)


def closed_loop_derivative(system: JointSystem, t: float, z: np.ndarray) -> np.ndarray:
    """Joint state derivative of the closed loop at (t, z)."""
    return system.derivative(t, z)
