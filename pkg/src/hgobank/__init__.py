"""Output-feedback control with banks of high-gain observers.

Simulation library and CLI for canonical-form nonlinear plants under four
estimation strategies (single high-gain observer, switched-gain observer,
best-of-bank selection, and an RLS-fused observer bank), together with
calculators for the closed-form noise/bandwidth trade-off bounds.
"""

from .bounds import (
    BoundInputs,
    EmptyIntervalError,
    MinimizerResult,
    convergence_time,
    eps_interval,
    h_minimizer,
    h_value,
    nu_star,
    ultimate_bound,
)
from .control import (
    ControllerSpec,
    ReferenceSignal,
    pendulum_controller,
    saturate,
    underwater_controller,
)
from .estimators import MhgoBank, MultiObserver, SingleHgo, SwitchingHgo
from .integrate import DivergenceError, OdeProblem, rk4_integrate, substep_count
from .linalg import (
    IllConditionedError,
    LinalgError,
    NotHurwitzError,
    companion_triplet,
    is_hurwitz_poly,
    min_max_eig_sym,
    scaling_matrix,
    solve_lyapunov,
)
from .loop import JointSystem, LoopChannel, closed_loop_derivative
from .observers import (
    DegenerateSimplexError,
    ObserverBankState,
    ObserverGainProfile,
    RlsState,
    SelectorState,
    build_E,
    combine,
    convex_weights,
    hgo_derivative,
    hgo_gain,
    mhgo_bank_derivative,
    rls_derivative,
    selector_step,
    switching_schedule,
)
from .plants import (
    NoiseModel,
    PendulumParams,
    PlantDefinition,
    canonical_derivative,
    integrator_chain,
    measure,
    pendulum_subsystem_f,
    underwater_plant,
)
from .scenario import (
    Scenario,
    ScenarioError,
    bundled_scenario_names,
    load_scenario,
    resolve_scenario,
)
from .simrun import (
    Comparison,
    MetricsSummary,
    Trajectory,
    TrajectoryRecord,
    compare,
    emit_csv,
    run,
)

__version__ = "0.1.0"
