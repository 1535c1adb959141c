"""Time-slotted simulator and bound engine for hierarchical online gradient
tracking over delayed master-worker networks."""

from .baselines import BASELINE_KINDS, baseline_params, run_baseline
from .bounds import (
    BoundReport,
    contraction_beta,
    contraction_eta,
    evaluate_bounds,
    one_step_contraction_slack,
    path_measure_bound,
    random_quadratic_instance,
    squared_measure_bound,
    squared_measure_bound_total_delay,
)
from .compression import CompressedData, GaussianNoise, IdentityCompression, UniformQuantizer, make_scheme
from .costs import (
    CostScenario,
    DriftSpec,
    LocalData,
    ScenarioSpec,
    build_scenario,
    cross_term,
    local_gradient,
    power_iteration,
)
from .engine import (
    EngineParams,
    MODE_LOCAL,
    MODE_ZERO_LOCAL,
    master_slot,
    run_episode,
    warmup_decision,
    worker_slot,
)
from .errors import ConfigError, ContractError, ConvergenceError, ProtocolError
from .geometry import Ball, Box, FeasibleSet, gradient_step, uniform_set
from .metrics import (
    attach_error_measures,
    dynamic_regret,
    grad_at_optima_sq,
    gradient_error_measures,
    path_length,
    slotwise_tracking_slacks,
    squared_path_length,
    tracking_recursion_slack,
)
from .network import DelayConfig, DownlinkPayload, Envelope, Link, UplinkPayload
from .trace import RunTrace

__version__ = "0.1.0"
