"""Distributed fixed-confidence best-arm identification in linear bandits.

A library and CLI simulator for multi-agent identification with
event-triggered communication, including a small-cell service-placement
environment, a batched optimistic-learner baseline, and a reproducible
experiment harness.
"""

from .bai import (
    Arm,
    ArmSet,
    ConfidenceConfig,
    Direction,
    RatioSolution,
    check_stop,
    confidence_radius,
    gap_confidence,
    gap_estimate,
    greedy_next_arm,
    optimal_weights,
    problem_complexity,
    ratio_next_arm,
    sample_complexity_bound,
    select_direction,
)
from .baselines import OfulState, cumulative_delay, oful_batch_round, run_oful
from .environments import (
    LinearEnvironment,
    ServiceInstance,
    ServicePlacementScenario,
    build_demand,
    build_service_env,
    build_synthetic,
    heterogeneous_view,
)
from .linalg import (
    DesignMatrix,
    make_regularized,
    rank_one_update,
    rls_estimate,
    weighted_norm_inv,
)
from .protocol import (
    AgentState,
    CoordinatorState,
    RunResult,
    SyncPolicy,
    Trace,
    comm_bound,
    comm_trigger,
    local_view,
    replay_stop_round,
    replay_trace,
    run_distlingape,
    speedup,
    synchronize,
    threshold_from_budget,
)

__version__ = "0.1.0"
