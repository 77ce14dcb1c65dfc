"""Deterministic simulation runner, metric extraction, CSV emission, comparison.

run() advances plant + estimator + controller jointly at a fixed macro step,
holding noise per sample period, and returns the decimated trajectory plus a
metrics summary.  Identical (scenario, seed) pairs produce byte-identical
CSV output.

Two engines share the same semantics: the jitted kernel (default, covers the
built-in plants/controllers) and the plain-Python reference lane used for
cross-checking and for custom plants.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _engine
from .bounds import BoundInputs, convergence_time, h_value
from .control import (
    pendulum_controller,
    underwater_controller,
)
from .estimators import MhgoBank, MultiObserver, SingleHgo, SwitchingHgo
from .integrate import DivergenceError
from .linalg import min_max_eig_sym, scaling_matrix, solve_lyapunov
from .loop import JointSystem, LoopChannel
from .observers import ObserverGainProfile, combined_weights
from .plants import (
    NoiseModel,
    PendulumParams,
    derive_channel_seed,
    integrator_chain,
    pendulum_F1,
    pendulum_F2,
    underwater_plant,
)
from .scenario import Scenario, ScenarioError

__all__ = [
    "TrajectoryRecord",
    "Trajectory",
    "MetricsSummary",
    "Comparison",
    "run",
    "emit_csv",
    "compare",
    "summary_text",
]

_PLANT_CODE = {"chain": 0, "underwater": 1, "pendulum_carts": 2}
_CTRL_CODE = {"zero": 0, "underwater": 1, "pendulum": 2}
_EST_CODE = {
    "state_feedback": 0,
    "hgo": 1,
    "switching_hgo": 2,
    "multi_observer": 3,
    "mhgo": 4,
}
_BASE_SCALE = 20.0  # covers the benchmark plant/controller modes
_BOUND_FLOOR = 1e-9  # absolute floor so exact-zero bounds tolerate float noise


@dataclass(frozen=True)
class TrajectoryRecord:
    """One logged sample: states, delivered estimates, controls, outputs, fusion."""

    t: float
    x: np.ndarray
    xhat: np.ndarray
    u: np.ndarray
    y: np.ndarray
    beta: Optional[np.ndarray] = None   # (C, N) full weights, implied last included
    sigma: Optional[np.ndarray] = None  # (C,) selected observer indices


@dataclass(frozen=True)
class Trajectory:
    scenario: Scenario
    t: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    u: np.ndarray
    y: np.ndarray
    beta: Optional[np.ndarray]
    sigma: Optional[np.ndarray]
    info_snapshots: Optional[np.ndarray]
    diverged_at: Optional[float]
    # metric inputs at full macro-step resolution (one entry per grid point)
    err_inf_full: Optional[np.ndarray] = None
    err_2_full: Optional[np.ndarray] = None

    def records(self) -> list[TrajectoryRecord]:
        out = []
        for i in range(self.t.shape[0]):
            out.append(
                TrajectoryRecord(
                    t=float(self.t[i]),
                    x=self.x[i],
                    xhat=self.xhat[i],
                    u=self.u[i],
                    y=self.y[i],
                    beta=None if self.beta is None else self.beta[i],
                    sigma=None if self.sigma is None else self.sigma[i],
                )
            )
        return out


@dataclass(frozen=True)
class MetricsSummary:
    label: str
    estimator_kind: str
    band: float
    rms_tracking_error: float
    time_to_band: float
    steady_estimation_error: float
    peak_estimate: float
    f0_hat: float
    a1_hat: float
    l2_hat: float
    l3_hat: Optional[float]
    entry_time: Optional[float]
    bound_value: Optional[float]
    bound_satisfied: Optional[bool]
    diverged_at: Optional[float]
    wall_time: float


def run(
    scenario: Scenario,
    *,
    seed: Optional[int] = None,
    stride: Optional[int] = None,
    engine: str = "auto",
) -> tuple[Trajectory, MetricsSummary]:
    """Simulate one scenario; deterministic for a fixed (scenario, seed)."""
    sc = scenario
    if seed is not None:
        sc = replace(sc, seed=int(seed))
    if stride is not None:
        sc = replace(sc, output=replace(sc.output, stride=int(stride)))
    t0 = time.perf_counter()
    if engine in ("auto", "kernel"):
        raw = _run_kernel(sc)
    elif engine == "python":
        raw = _run_python(sc)
    else:
        raise ValueError("engine must be 'auto', 'kernel' or 'python'")
    wall = time.perf_counter() - t0
    return _assemble(sc, raw, wall)


# --------------------------------------------------------------------------
# kernel engine


def _profiles(sc: Scenario):
    est = sc.estimator
    slow = None
    fast = None
    if est.kind != "state_feedback":
        slow = ObserverGainProfile(kappa=est.kappa, eps=est.eps)
    if est.kind == "switching_hgo":
        fast = ObserverGainProfile(kappa=est.kappa_fast, eps=est.eps_fast)
    return slow, fast


def _plant_params(sc: Scenario) -> np.ndarray:
    if sc.plant.kind == "underwater":
        return np.array([sc.plant.a])
    if sc.plant.kind == "pendulum_carts":
        p = PendulumParams(
            m=sc.plant.m,
            M=sc.plant.M,
            a=sc.plant.spring_arm,
            l=sc.plant.l,
            k=sc.plant.k,
            g=sc.plant.g,
        )
        return np.array(
            [p.coef_linear, p.coef_centrifugal, p.coef_coupling, p.input_gain]
        )
    return np.zeros(1)


def _noise_arrays(sc: Scenario) -> np.ndarray:
    C = sc.channel_count
    count = int(round(sc.horizon / sc.noise.sample_period)) + 3
    rows = []
    for c in range(C):
        model = NoiseModel(
            bound=sc.noise.bound,
            sample_period=sc.noise.sample_period,
            seed=derive_channel_seed(sc.seed, c),
        )
        rows.append(model.sequence(count))
    return np.vstack(rows)


def _bank_inits(sc: Scenario) -> np.ndarray:
    est = sc.estimator
    if est.kind in ("hgo", "switching_hgo"):
        return np.array([est.init], dtype=float)
    if est.kind in ("multi_observer", "mhgo"):
        return np.asarray(est.inits, dtype=float)
    return np.zeros((0, sc.channel_dim))


def _kernel_state(sc: Scenario):
    """Flat initial state plus per-channel layout offsets."""
    C = sc.channel_count
    n = sc.channel_dim
    est = sc.estimator
    inits = _bank_inits(sc)
    N = inits.shape[0] if inits.size else 1
    parts = [np.asarray(sc.plant.x0, dtype=float)]
    off_bank = np.zeros(C, dtype=np.int64)
    off_beta = np.zeros(C, dtype=np.int64)
    off_R = np.zeros(C, dtype=np.int64)
    pos = sc.n_x
    for c in range(C):
        if est.kind == "state_feedback":
            continue
        off_bank[c] = pos
        parts.append(inits.ravel())
        pos += inits.size
        if est.kind == "mhgo":
            m = N - 1
            off_beta[c] = pos
            parts.append(np.asarray(est.beta0, dtype=float))
            pos += m
            off_R[c] = pos
            parts.append((np.eye(m) / est.gamma).ravel())
            pos += m * m
    z0 = np.concatenate(parts) if len(parts) > 1 else parts[0].copy()
    return z0, off_bank, off_beta, off_R, N


def _run_kernel(sc: Scenario) -> dict:
    C = sc.channel_count
    n = sc.channel_dim
    est = sc.estimator
    slow, fast = _profiles(sc)
    z0, off_bank, off_beta, off_R, N = _kernel_state(sc)
    K = sc.steps

    est_code = _EST_CODE[est.kind]
    store_rls = 1 if (est.kind == "mhgo" and N - 1 <= 8) else 0
    codes = np.array(
        [
            _PLANT_CODE[sc.plant.kind],
            _CTRL_CODE[sc.controller.kind],
            est_code,
            C,
            sc.n_x,
            K,
            sc.output.stride,
            store_rls,
            1 if est.nominal_model == "plant" else 0,
            1 if est.freeze_weights else 0,
            1 if sc.controller.literal_signs else 0,
        ],
        dtype=np.int64,
    )
    norm_P0 = 0.0
    if est.kind == "mhgo":
        _, norm_P0 = min_max_eig_sym(solve_lyapunov(slow.companion_Ao()))
    fpar = np.array(
        [
            sc.dt_macro,
            _BASE_SCALE,
            sc.controller.saturation,
            est.t_switch if est.kind == "switching_hgo" else 0.0,
            est.gamma,
            est.alpha,
            1.0 / sc.noise.sample_period,
            norm_P0,
        ]
    )
    chan_off = np.arange(C, dtype=np.int64) * n
    chan_n = np.full(C, n, dtype=np.int64)
    bank_N = np.full(C, N, dtype=np.int64)
    H_slow = np.zeros((C, n))
    H_fast = np.zeros((C, n))
    scale_slow = np.zeros(C)
    scale_fast = np.zeros(C)
    eps_pow = np.ones((C, n))
    P0 = np.zeros((C, n, n))
    if slow is not None:
        H_slow[:] = slow.gain()
        scale_slow[:] = slow.spectral_scale()
        eps_pow[:] = slow.eps ** np.arange(n, dtype=float)
    if fast is not None:
        H_fast[:] = fast.gain()
        scale_fast[:] = fast.spectral_scale()
    if est.kind == "mhgo":
        P0[:] = solve_lyapunov(slow.companion_Ao())
    sigma0 = np.full(C, est.sigma0 if est.kind == "multi_observer" else 1, dtype=np.int64)
    pp = _plant_params(sc)
    cp = pp if sc.controller.kind in ("pendulum",) else (
        np.array([sc.plant.a]) if sc.controller.kind == "underwater" else np.zeros(1)
    )
    noise = _noise_arrays(sc)

    out = _engine.run_kernel(
        z0, codes, fpar,
        chan_off, chan_n, bank_N, off_bank, off_beta, off_R,
        H_slow, H_fast, scale_slow, scale_fast, eps_pow, P0,
        sigma0, pp, cp, noise,
    )
    (
        log_t, log_x, log_xhat, log_u, log_y, log_beta, log_sigma, log_R,
        err_inf, err_2, track_sq, peak_est, f0_max, a1_max, l2_max,
        diverged_at, k_done, l_done,
    ) = out
    return {
        "t": log_t[:l_done],
        "x": log_x[:l_done],
        "xhat": log_xhat[:l_done],
        "u": log_u[:l_done],
        "y": log_y[:l_done],
        "beta_parts": log_beta[:l_done] if est.kind == "mhgo" else None,
        "sigma": log_sigma[:l_done] if est.kind == "multi_observer" else None,
        "info": log_R[:l_done] if store_rls == 1 else None,
        "err_inf": err_inf[: k_done + 1],
        "err_2": err_2[: k_done + 1],
        "track_sq": track_sq[: k_done + 1],
        "peak_estimate": float(peak_est),
        "f0_hat": float(f0_max),
        "a1_hat": float(a1_max),
        "l2_hat": float(l2_max),
        "diverged_at": None if math.isnan(diverged_at) else float(diverged_at),
        "k_done": int(k_done),
    }


# --------------------------------------------------------------------------
# python reference engine


def _python_plant(sc: Scenario):
    kind = sc.plant.kind
    if kind == "underwater":
        plant = underwater_plant(a=sc.plant.a, f_bound=sc.plant.f_bound)

        def deriv(x, u):
            v = x[1]
            return np.array([v, u[0] - sc.plant.a * v * abs(v)])

        def f_abs(x, u, c):
            return abs(u[0] - sc.plant.a * x[1] * abs(x[1]))

        return plant.f, deriv, f_abs
    if kind == "chain":
        plant = integrator_chain(sc.plant.n)

        def deriv(x, u):
            dx = np.empty_like(x)
            dx[:-1] = x[1:]
            dx[-1] = 0.0
            return dx

        def f_abs(x, u, c):
            return 0.0

        return plant.f, deriv, f_abs
    params = PendulumParams(
        m=sc.plant.m, M=sc.plant.M, a=sc.plant.spring_arm,
        l=sc.plant.l, k=sc.plant.k, g=sc.plant.g,
    )
    F2 = pendulum_F2(params)

    def deriv(x, u):
        return np.array(
            [
                x[1],
                pendulum_F1(params, x[0], x[1], x[2]) + F2 * u[0],
                x[3],
                pendulum_F1(params, x[2], x[3], x[0]) + F2 * u[1],
            ]
        )

    def f_abs(x, u, c):
        k0 = 2 * c
        j0 = 2 * (1 - c)
        return abs(pendulum_F1(params, x[k0], x[k0 + 1], x[j0]) + F2 * u[c])

    return None, deriv, f_abs


def _python_controller(sc: Scenario):
    kind = sc.controller.kind
    sat = sc.controller.saturation
    if kind == "zero":
        return lambda t, ests, k, theta: 0.0
    if kind == "underwater":
        a = sc.plant.a
        literal = sc.controller.literal_signs

        def law(t, ests, k, theta):
            return underwater_controller(
                ests[0], t, a=a, limit=sat, literal_signs=literal
            )

        return law
    params = PendulumParams(
        m=sc.plant.m, M=sc.plant.M, a=sc.plant.spring_arm,
        l=sc.plant.l, k=sc.plant.k, g=sc.plant.g,
    )

    def law(t, ests, k, theta):
        return pendulum_controller(
            ests[k], float(ests[1 - k][0]), t, params, k + 1, limit=sat
        )

    return law


def _python_estimator(sc: Scenario, f_plant):
    est = sc.estimator
    if est.kind == "state_feedback":
        return lambda: None
    slow, fast = _profiles(sc)
    f_o = None
    if est.nominal_model == "plant":
        if sc.plant.kind == "pendulum_carts":
            raise ScenarioError(
                "nominal_model='plant' on the pendulum pair needs the kernel engine"
            )
        f_o = f_plant

    def make():
        if est.kind == "hgo":
            return SingleHgo(slow, est.init, f_o=f_o)
        if est.kind == "switching_hgo":
            return SwitchingHgo(fast, slow, est.t_switch, est.init, f_o=f_o)
        if est.kind == "multi_observer":
            return MultiObserver(slow, est.inits, est.alpha, est.sigma0)
        return MhgoBank(
            slow, est.inits, est.gamma,
            beta0=np.asarray(est.beta0), freeze=est.freeze_weights, f_o=f_o,
        )

    return make


def _run_python(sc: Scenario) -> dict:
    C = sc.channel_count
    n = sc.channel_dim
    est = sc.estimator
    f_plant, plant_deriv, f_abs = _python_plant(sc)
    law = _python_controller(sc)
    make_est = _python_estimator(sc, f_plant)
    channels = []
    for c in range(C):
        channels.append(
            LoopChannel(
                x_offset=c * n,
                n=n,
                noise=NoiseModel(
                    bound=sc.noise.bound,
                    sample_period=sc.noise.sample_period,
                    seed=derive_channel_seed(sc.seed, c),
                ),
                estimator=make_est(),
            )
        )
    system = JointSystem(
        n_x=sc.n_x,
        plant_deriv=plant_deriv,
        channels=channels,
        control_law=law,
        x0=sc.plant.x0,
        base_scale=_BASE_SCALE,
    )
    K = sc.steps
    dt = sc.dt_macro
    stride = sc.output.stride
    mhgo = est.kind == "mhgo"
    m = (len(est.inits) - 1) if mhgo else 0
    store_rls = mhgo and m <= 8

    z = system.initial_state()
    log = {
        "t": [], "x": [], "xhat": [], "u": [], "y": [],
        "beta_parts": [], "sigma": [], "info": [],
    }
    err_inf = np.empty(K + 1)
    err_2 = np.empty(K + 1)
    track_sq = np.empty(K + 1)
    peak = 0.0
    f0_hat = 0.0
    a1_hat = 0.0
    l2_hat = 0.0
    diverged_at = None
    k_done = K

    slow, _ = _profiles(sc)
    P0 = solve_lyapunov(slow.companion_Ao()) if mhgo else None
    lam_max_P0 = min_max_eig_sym(P0)[1] if mhgo else 0.0
    eps_pow = slow.eps ** np.arange(n, dtype=float) if mhgo else None

    def references(t):
        if sc.controller.kind == "underwater":
            return [5.0 + math.sin(2.0 * t)]
        if sc.controller.kind == "pendulum":
            return [0.3 * math.sin(t), 0.3 * math.cos(t)]
        return [0.0] * C

    with np.errstate(all="ignore"):
        for k in range(K + 1):
            t = k * dt
            ests = system.estimates(t, z)
            u = system.controls(t, z)
            y = system.outputs(t, z)
            x = z[: sc.n_x]
            xhat = np.concatenate(ests)
            diff = x - xhat
            err_inf[k] = np.abs(diff).max()
            err_2[k] = float(np.linalg.norm(diff))
            refs = references(t)
            track_sq[k] = math.fsum(
                (float(x[c * n]) - refs[c]) ** 2 for c in range(C)
            )
            peak = max(peak, float(np.abs(xhat).max()))
            for c in range(C):
                f0_hat = max(f0_hat, f_abs(x, u, c))
            if mhgo and not est.freeze_weights:
                for c, ch in enumerate(channels):
                    bank, beta, info = ch.estimator.parts(system.estimator_state(z, c))
                    E = bank.estimates[-1][:, None] - bank.estimates[:-1].T
                    ce = E[0, :]
                    P = np.linalg.inv(info)
                    v = P0 @ (eps_pow * (E @ (P @ ce)))
                    a1_hat = max(a1_hat, 2.0 * float(np.linalg.norm(v)))
                    Eo = eps_pow[:, None] * E
                    l2_hat = max(
                        l2_hat,
                        2.0 * lam_max_P0 * float(np.sum(Eo * Eo)) * float(np.linalg.norm(P)),
                    )
            if k % stride == 0 or k == K:
                log["t"].append(t)
                log["x"].append(x.copy())
                log["xhat"].append(xhat)
                log["u"].append(u)
                log["y"].append(y)
                if mhgo:
                    betas = [
                        channels[c].estimator.parts(system.estimator_state(z, c))[1].copy()
                        for c in range(C)
                    ]
                    log["beta_parts"].append(np.vstack(betas))
                    if store_rls:
                        infos = [
                            channels[c].estimator.parts(system.estimator_state(z, c))[2].copy()
                            for c in range(C)
                        ]
                        log["info"].append(np.stack(infos))
                if est.kind == "multi_observer":
                    log["sigma"].append(
                        np.array(
                            [int(system.estimator_state(z, c)[-1]) for c in range(C)],
                            dtype=np.int64,
                        )
                    )
            if k == K:
                break
            try:
                z = system.step(t, z, dt)
            except DivergenceError as exc:
                diverged_at = exc.time
                k_done = k
                break

    return {
        "t": np.array(log["t"]),
        "x": np.array(log["x"]),
        "xhat": np.array(log["xhat"]),
        "u": np.array(log["u"]),
        "y": np.array(log["y"]),
        "beta_parts": np.array(log["beta_parts"]) if mhgo else None,
        "sigma": np.array(log["sigma"]) if est.kind == "multi_observer" else None,
        "info": np.array(log["info"]) if (mhgo and store_rls and log["info"]) else None,
        "err_inf": err_inf[: k_done + 1],
        "err_2": err_2[: k_done + 1],
        "track_sq": track_sq[: k_done + 1],
        "peak_estimate": peak,
        "f0_hat": f0_hat,
        "a1_hat": a1_hat,
        "l2_hat": l2_hat,
        "diverged_at": diverged_at,
        "k_done": k_done,
    }


# --------------------------------------------------------------------------
# assembly, metrics, CSV


def _assemble(sc: Scenario, raw: dict, wall: float) -> tuple[Trajectory, MetricsSummary]:
    est = sc.estimator
    beta = None
    if raw["beta_parts"] is not None and raw["beta_parts"].size:
        parts = raw["beta_parts"]  # (L, C, N-1)
        L, C, m = parts.shape
        beta = np.empty((L, C, m + 1))
        beta[:, :, :m] = parts
        for l in range(L):
            for c in range(C):
                beta[l, c, m] = 1.0 - math.fsum(float(v) for v in parts[l, c])
    traj = Trajectory(
        scenario=sc,
        t=raw["t"],
        x=raw["x"],
        xhat=raw["xhat"],
        u=raw["u"],
        y=raw["y"],
        beta=beta,
        sigma=raw["sigma"],
        info_snapshots=raw["info"],
        diverged_at=raw["diverged_at"],
        err_inf_full=raw["err_inf"],
        err_2_full=raw["err_2"],
    )

    K = sc.steps
    k_done = raw["k_done"]
    dt = sc.dt_macro
    band = sc.output.band
    err_inf = raw["err_inf"]
    err_2 = raw["err_2"]
    track_sq = raw["track_sq"]

    above = np.nonzero(err_inf >= band)[0]
    if above.size == 0:
        t2b = 0.0
    elif above[-1] == k_done:
        t2b = math.inf
    else:
        t2b = float((above[-1] + 1) * dt)

    w_start = int(round(K * (1.0 - sc.output.final_window)))
    w_start = min(w_start, k_done)
    rms = float(np.sqrt(np.mean(track_sq[w_start:])))
    steady = float(err_2[w_start:].max())

    bound_value = None
    bound_ok = None
    l3_hat = None
    entry_time = None
    if est.kind == "mhgo":
        slow, _ = _profiles(sc)
        P0 = solve_lyapunov(slow.companion_Ao())
        lam_min, lam_max = min_max_eig_sym(P0)
        norm_P0Ho = float(np.linalg.norm(P0 @ slow.H_o()))
        l3_hat = _l3_from_l2(raw["l2_hat"], slow, lam_min)
        inputs = BoundInputs(
            n=sc.channel_dim,
            eps=slow.eps,
            f_bar=lam_max * raw["f0_hat"],
            nu_bar=sc.noise.bound,
            a1=raw["a1_hat"],
            a2=2.0 * norm_P0Ho,
            V1_0=_initial_lyapunov_value(sc, slow, P0),
            l3=l3_hat,
        )
        bound_value = math.sqrt(lam_max / lam_min) * h_value(inputs)
        bound_ok = bool(steady <= bound_value + _BOUND_FLOOR)
        if inputs.f_bar > 0.0:
            entry_time = convergence_time(inputs, lam_max)

    metrics = MetricsSummary(
        label=sc.label,
        estimator_kind=est.kind,
        band=band,
        rms_tracking_error=rms,
        time_to_band=t2b,
        steady_estimation_error=steady,
        peak_estimate=raw["peak_estimate"],
        f0_hat=raw["f0_hat"],
        a1_hat=raw["a1_hat"],
        l2_hat=raw["l2_hat"],
        l3_hat=l3_hat,
        entry_time=entry_time,
        bound_value=bound_value,
        bound_satisfied=bound_ok,
        diverged_at=raw["diverged_at"],
        wall_time=wall,
    )
    return traj, metrics


def _l3_from_l2(l2_hat: float, profile: ObserverGainProfile, lam_min: float) -> float:
    """Transient inflation constant from the measured cross-term level.

    exp(l2 eps / (2 lambda lam_min)) capped at 10, with lambda the slowest
    decay rate of the gain polynomial's roots; 1 when nothing was measured
    (frozen weights or a bank that never moved).
    """
    if l2_hat <= 0.0:
        return 1.0
    lam = -float(np.max(np.roots([1.0, *profile.kappa]).real))
    exponent = l2_hat * profile.eps / (2.0 * lam * lam_min)
    return 10.0 if exponent > math.log(10.0) else float(math.exp(exponent))


def _initial_lyapunov_value(sc: Scenario, profile: ObserverGainProfile, P0: np.ndarray) -> float:
    """V1(0): worst channel's scaled initial fused error through P0."""
    est = sc.estimator
    inits = np.asarray(est.inits, dtype=float)
    w = combined_weights(np.asarray(est.beta0))
    xo0 = w @ inits
    D = scaling_matrix(profile.eps, profile.n)
    worst = 0.0
    n = sc.channel_dim
    for c in range(sc.channel_count):
        x0 = np.asarray(sc.plant.x0[c * n : (c + 1) * n], dtype=float)
        eta0 = D @ (x0 - xo0)
        worst = max(worst, float(eta0 @ P0 @ eta0))
    return worst


def _fmt(v: float) -> str:
    return format(float(v), ".15g")


def emit_csv(trajectory: Trajectory, path) -> None:
    """Write the trajectory as CSV: 15-significant-digit fields, LF-terminated.

    A diverged run gets its rows up to the failure plus a trailing comment
    line carrying the divergence time.
    """
    sc = trajectory.scenario
    C = sc.channel_count
    n_x = sc.n_x
    cols = ["t"]
    cols += [f"x{i + 1}" for i in range(n_x)]
    cols += [f"xhat{i + 1}" for i in range(n_x)]
    cols += ["u"] if C == 1 else [f"u{c + 1}" for c in range(C)]
    cols += ["y"] if C == 1 else [f"y{c + 1}" for c in range(C)]
    if trajectory.beta is not None:
        N = trajectory.beta.shape[2]
        for c in range(C):
            prefix = "beta" if C == 1 else f"beta{c + 1}"
            cols += [f"{prefix}_{i + 1}" for i in range(N)]
    if trajectory.sigma is not None:
        cols += ["sigma"] if C == 1 else [f"sigma{c + 1}" for c in range(C)]

    path = Path(path)
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            for i in range(trajectory.t.shape[0]):
                row = [_fmt(trajectory.t[i])]
                row += [_fmt(v) for v in trajectory.x[i]]
                row += [_fmt(v) for v in trajectory.xhat[i]]
                row += [_fmt(v) for v in trajectory.u[i]]
                row += [_fmt(v) for v in trajectory.y[i]]
                if trajectory.beta is not None:
                    for c in range(C):
                        row += [_fmt(v) for v in trajectory.beta[i, c]]
                if trajectory.sigma is not None:
                    row += [str(int(v)) for v in trajectory.sigma[i]]
                fh.write(",".join(row) + "\n")
            if trajectory.diverged_at is not None:
                fh.write(f"# diverged at t={_fmt(trajectory.diverged_at)}\n")
    except OSError as exc:
        raise OSError(f"cannot write trajectory CSV to {path}: {exc}") from exc


_METRIC_FIELDS = (
    ("rms_tracking_error", "min"),
    ("time_to_band", "min"),
    ("steady_estimation_error", "min"),
    ("peak_estimate", "min"),
)


@dataclass(frozen=True)
class Comparison:
    rows: tuple[MetricsSummary, ...]
    winners: dict

    def to_csv_text(self) -> str:
        header = ["label", "estimator"] + [name for name, _ in _METRIC_FIELDS] + [
            "bound_value",
            "bound_satisfied",
            "diverged_at",
        ]
        lines = [",".join(header)]
        for r in self.rows:
            lines.append(
                ",".join(
                    [
                        r.label,
                        r.estimator_kind,
                        _fmt(r.rms_tracking_error),
                        _fmt(r.time_to_band),
                        _fmt(r.steady_estimation_error),
                        _fmt(r.peak_estimate),
                        "" if r.bound_value is None else _fmt(r.bound_value),
                        "" if r.bound_satisfied is None else str(r.bound_satisfied).lower(),
                        "" if r.diverged_at is None else _fmt(r.diverged_at),
                    ]
                )
            )
        lines.append(
            "winner,,"
            + ",".join(self.winners[name] for name, _ in _METRIC_FIELDS)
            + ",,,"
        )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        width = max(len(r.label) for r in self.rows) + 2
        head = f"{'scenario':<{width}}{'estimator':<16}{'rms_track':>12}{'t_to_band':>12}{'steady_err':>12}{'peak_est':>12}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(
                f"{r.label:<{width}}{r.estimator_kind:<16}"
                f"{r.rms_tracking_error:>12.4g}{r.time_to_band:>12.4g}"
                f"{r.steady_estimation_error:>12.4g}{r.peak_estimate:>12.4g}"
            )
        lines.append("")
        for name, _ in _METRIC_FIELDS:
            lines.append(f"winner[{name}]: {self.winners[name]}")
        return "\n".join(lines) + "\n"


def compare(
    scenarios: Sequence[Scenario],
    *,
    seed: Optional[int] = None,
    engine: str = "auto",
) -> tuple[Comparison, list[tuple[Trajectory, MetricsSummary]]]:
    """Run the scenarios side by side and declare a winner per metric.

    All scenarios must share the plant kind, horizon and band; lower is
    better for every compared metric.
    """
    if not scenarios:
        raise ScenarioError("compare needs at least one scenario")
    first = scenarios[0]
    for sc in scenarios[1:]:
        if sc.plant.kind != first.plant.kind:
            raise ScenarioError("invalid comparison: scenarios use different plants")
        if abs(sc.horizon - first.horizon) > 1e-12:
            raise ScenarioError("invalid comparison: scenarios use different horizons")
        if abs(sc.output.band - first.output.band) > 1e-12:
            raise ScenarioError("invalid comparison: scenarios use different bands")
    results = [run(sc, seed=seed, engine=engine) for sc in scenarios]
    rows = tuple(m for _, m in results)
    winners = {}
    for name, mode in _METRIC_FIELDS:
        values = [getattr(r, name) for r in rows]
        best = min(range(len(values)), key=lambda i: values[i])
        winners[name] = rows[best].label
    return Comparison(rows=rows, winners=winners), results


def summary_text(sc: Scenario, metrics: MetricsSummary) -> str:
    """Plain-text run report: metrics plus the echoed effective scenario."""
    lines = [
        f"scenario: {sc.label}",
        f"estimator: {metrics.estimator_kind}",
        f"horizon: {sc.horizon} s  dt_macro: {sc.dt_macro} s  seed: {sc.seed}",
        "",
        f"rms tracking error (final window): {metrics.rms_tracking_error:.6g}",
        f"time to band (band={metrics.band}): {metrics.time_to_band:.6g} s",
        f"steady estimation error (sup, final window): {metrics.steady_estimation_error:.6g}",
        f"peak estimate magnitude: {metrics.peak_estimate:.6g}",
        f"measured nonlinearity bound f0_hat: {metrics.f0_hat:.6g}",
    ]
    if metrics.bound_value is not None:
        lines += [
            f"measured fusion cross-term a1_hat: {metrics.a1_hat:.6g}",
            f"transient inflation l3_hat: {metrics.l3_hat:.6g} (from measured l2_hat {metrics.l2_hat:.6g})",
            f"ultimate error bound: {metrics.bound_value:.6g}",
            f"steady error within bound: {metrics.bound_satisfied}",
        ]
    if metrics.entry_time is not None:
        lines.append(f"invariant-set entry time T(eps): {metrics.entry_time:.6g} s")
    if metrics.bound_value is not None:
        lines.append(
            "composite closed-loop admissibility constants (inner eps/noise "
            "thresholds of the recovery guarantee): existence-level, not computed"
        )
    if metrics.diverged_at is not None:
        lines.append(f"DIVERGED at t={metrics.diverged_at:.6g} s")
    lines += [
        f"wall time: {metrics.wall_time:.3f} s",
        "",
        "effective scenario:",
        sc.effective_toml(),
    ]
    return "\n".join(lines)
