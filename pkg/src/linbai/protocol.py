"""Multi-agent identification protocol with event-triggered synchronization.

``M`` agents share the same bandit instance and exchange sufficient statistics
through a central coordinator. Each agent accumulates local deltas (Gram
matrix, observation vector, pull counts) on top of the last coordinator
broadcast; when any agent's local information has grown enough — measured by
``delta_t * log(det(A_local) / det(A_broadcast)) > D`` — all agents upload
their deltas at the end of the round and receive the new aggregate.

The round semantics are fixed as: all agents complete round ``t`` in ascending
id order (stop check, then pull), then at most one synchronization happens if
any agent's trigger fired during the round. The first agent (lowest id,
earliest round) whose stopping bound falls to the target accuracy terminates
the whole run and names the identified arm.

Uploads can be failure-injected: at each synchronization only a subset of
agents' deltas reach the coordinator. Agents with failed uploads keep their
deltas (reporting them at the next successful sync), so no sample is ever
lost or double-counted; the broadcast itself is assumed reliable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Collection, Sequence

import numpy as np

from .bai import (
    ArmSet,
    ConfidenceConfig,
    Direction,
    DirectionSolver,
    greedy_next_arm,
    optimal_weights,
    select_direction,
)
from .environments import LinearEnvironment
from .linalg import DesignMatrix

__all__ = [
    "AgentState",
    "CoordinatorState",
    "SyncPolicy",
    "RunResult",
    "Trace",
    "agent_stream",
    "local_view",
    "comm_trigger",
    "synchronize",
    "run_distlingape",
    "replay_trace",
    "replay_stop_round",
    "threshold_from_budget",
    "comm_bound",
    "speedup",
]

STRATEGIES = ("greedy", "ratio")


def agent_stream(seed: int, stream_id: int) -> np.random.Generator:
    """The per-agent noise stream: one generator per (run seed, stream id)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream_id)]))


class AgentState:
    """One agent's local statistics and its composed view of the world.

    The composed design matrix ``lam*I + A_broadcast + delta_A`` and the
    composed observation vector are maintained incrementally (rank-one update
    per pull, dense rebuild at synchronizations), so every quantity the
    selection rules need is O(d^2) per round.
    """

    def __init__(self, agent_id: int, arms: ArmSet, lam: float, rng: np.random.Generator):
        d, K = arms.dim, arms.n_arms
        self.agent_id = agent_id
        self.arms = arms
        self.lam = lam
        self.rng = rng
        self.delta_A = np.zeros((d, d))
        self.delta_b = np.zeros(d)
        self.delta_t = 0
        self.delta_T = np.zeros(K, dtype=np.int64)
        self.synced_A = np.zeros((d, d))
        self.synced_b = np.zeros(d)
        self.synced_T = np.zeros(K, dtype=np.int64)
        self.synced_logdet = d * math.log(lam)
        self.view = DesignMatrix(d, lam)
        self.b_view = np.zeros(d)
        self.counts_view = np.zeros(K, dtype=np.int64)
        self.pulls = 0

    def record_pull(self, arm: int, reward: float) -> None:
        x = self.arms.context(arm)
        xx = x[:, None] * x[None, :]
        self.view._apply(x, xx)
        self.delta_A += xx
        xr = x * reward
        self.delta_b += xr
        self.b_view += xr
        self.delta_t += 1
        self.delta_T[arm] += 1
        self.counts_view[arm] += 1
        self.pulls += 1

    def pull_counts(self) -> np.ndarray:
        """Global pull counts as visible to this agent (broadcast + local)."""
        return self.counts_view

    def reset_deltas(self) -> None:
        self.delta_A = np.zeros_like(self.delta_A)
        self.delta_b = np.zeros_like(self.delta_b)
        self.delta_t = 0
        self.delta_T = np.zeros_like(self.delta_T)

    def receive_broadcast(
        self,
        A_coor: np.ndarray,
        b_coor: np.ndarray,
        T: np.ndarray,
        coor_view: DesignMatrix,
    ) -> None:
        """Install a coordinator broadcast and rebuild the composed view."""
        self.synced_A = A_coor.copy()
        self.synced_b = b_coor.copy()
        self.synced_T = T.copy()
        self.counts_view = self.synced_T + self.delta_T
        self.synced_logdet = coor_view.logdet
        if self.delta_t == 0 and not self.delta_A.any():
            self.view = coor_view.copy()
        else:
            self.view = DesignMatrix.from_matrix(
                self.lam * np.eye(self.arms.dim) + self.synced_A + self.delta_A, self.lam
            )
        self.b_view = self.synced_b + self.delta_b


class CoordinatorState:
    """Aggregated statistics collected from successful uploads."""

    def __init__(self, d: int, n_arms: int):
        self.A = np.zeros((d, d))
        self.b = np.zeros(d)
        self.T = np.zeros(n_arms, dtype=np.int64)
        self.sync_count = 0

    def regularized_view(self, lam: float) -> DesignMatrix:
        """``lam*I + A`` with dense inverse/logdet (one factorization per sync)."""
        return DesignMatrix.from_matrix(lam * np.eye(self.A.shape[0]) + self.A, lam)


@dataclass(frozen=True)
class SyncPolicy:
    """Communication policy of a run.

    ``threshold`` is the trigger level ``D`` (``inf`` = never synchronize,
    i.e. fully independent agents). ``failure_schedule``, when given, lists
    for each synchronization event the set of agent ids whose uploads succeed;
    events beyond the end of the list succeed for everyone. ``budget`` is an
    optional communication budget that the harness resolves into a threshold
    via :func:`threshold_from_budget`.
    """

    threshold: float = math.inf
    failure_schedule: Sequence[Collection[int]] | None = None
    budget: int | None = None

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError(f"sync threshold must be positive, got {self.threshold!r}")

    def surviving(self, sync_index: int, n_agents: int) -> list[int]:
        if self.failure_schedule is None or sync_index >= len(self.failure_schedule):
            return list(range(n_agents))
        return sorted(set(self.failure_schedule[sync_index]))


@dataclass
class Trace:
    """Pull/reward/synchronization record of a run, for replay analyses.

    ``arms_pulled[t]`` and ``rewards[t]`` list one entry per acting agent in
    ascending id order for global round ``t+1``; the final round may be
    shorter when the run stopped mid-round. ``sync_rounds`` holds the 1-based
    rounds that ended with a synchronization event.
    """

    arms_pulled: list[list[int]] = field(default_factory=list)
    rewards: list[list[float]] = field(default_factory=list)
    sync_rounds: list[int] = field(default_factory=list)

    @property
    def n_rounds(self) -> int:
        return len(self.arms_pulled)


@dataclass
class RunResult:
    """Outcome of one identification run."""

    best_arm: int
    tau_m: np.ndarray
    tau: int
    comm_rounds: int
    per_arm_pulls: np.ndarray
    correct: bool
    stop_round: int
    stop_agent: int | None
    truncated: bool
    trace: Trace | None = None


def local_view(agent: AgentState) -> tuple[DesignMatrix, np.ndarray, np.ndarray]:
    """The agent's effective design matrix, observation vector and pull counts,
    composed from the last broadcast plus local deltas."""
    return agent.view, agent.b_view, agent.pull_counts()


def comm_trigger(agent: AgentState, threshold: float) -> bool:
    """True iff local information growth warrants a synchronization.

    Evaluates ``delta_t * log(det(A_local) / det(lam*I + A_broadcast)) > D``
    from the cached log-determinants (no dense determinant).
    """
    return agent.delta_t * (agent.view.logdet - agent.synced_logdet) > threshold


def synchronize(
    coordinator: CoordinatorState,
    agents: Sequence[AgentState],
    lam: float,
    surviving: Collection[int] | None = None,
) -> None:
    """Aggregate deltas of surviving agents and broadcast the new state.

    Deltas are applied in ascending agent id. Surviving agents reset their
    deltas; agents whose upload failed keep theirs for the next event. The
    broadcast reaches every agent.
    """
    ids = sorted(surviving) if surviving is not None else range(len(agents))
    for m in ids:
        agent = agents[m]
        coordinator.A += agent.delta_A
        coordinator.b += agent.delta_b
        coordinator.T += agent.delta_T
        agent.reset_deltas()
    coordinator.sync_count += 1
    coor_view = coordinator.regularized_view(lam)
    for agent in agents:
        agent.receive_broadcast(coordinator.A, coordinator.b, coordinator.T, coor_view)


class _GreedyStrategy:
    def next_arm(self, agent: AgentState, direction: Direction) -> int:
        return greedy_next_arm(agent.arms, direction, agent.view)


class _RatioStrategy:
    """Ratio tracking with memoized L1 programs (one solve per direction).

    Caches the reciprocal target ratios (infinite off the support), so the
    per-round tracking step is a single weighted argmin over the counts.
    """

    def __init__(self, n_agents: int):
        self._cache: list[dict[tuple[int, int], tuple[np.ndarray, np.ndarray]]] = [
            {} for _ in range(n_agents)
        ]

    def next_arm(self, agent: AgentState, direction: Direction) -> int:
        key = (direction.best, direction.ambiguous)
        cache = self._cache[agent.agent_id]
        entry = cache.get(key)
        if entry is None:
            solution = optimal_weights(agent.arms, *key)
            support = solution.ratios > 0
            inv_ratios = np.zeros_like(solution.ratios)
            np.divide(1.0, solution.ratios, out=inv_ratios, where=support)
            # Off-support arms are never eligible, whatever their counts.
            penalty = np.where(support, 0.0, np.inf)
            entry = (inv_ratios, penalty)
            cache[key] = entry
        inv_ratios, penalty = entry
        return int(np.argmin(agent.counts_view * inv_ratios + penalty))


def _make_strategy(name: str, n_agents: int):
    if name == "greedy":
        return _GreedyStrategy()
    if name == "ratio":
        return _RatioStrategy(n_agents)
    raise ValueError(f"unknown strategy {name!r}; expected one of {STRATEGIES}")


def run_distlingape(
    env: LinearEnvironment,
    arms: ArmSet | Sequence[ArmSet],
    cfg: ConfidenceConfig,
    policy: SyncPolicy | None = None,
    strategy: str = "ratio",
    max_rounds: int = 10_000_000,
    seed: int = 0,
    record_trace: bool = False,
    stream_ids: Sequence[int] | None = None,
) -> RunResult:
    """Run the distributed identification protocol to its stopping condition.

    Parameters
    ----------
    env : LinearEnvironment
        Ground-truth reward model; sampled with per-agent noise streams.
    arms : ArmSet or sequence of ArmSet
        The shared arm set, or one set per agent for heterogeneous
        (positively scaled) views.
    cfg : ConfidenceConfig
        Confidence parameters; ``cfg.n_agents`` is the number of agents.
    policy : SyncPolicy
        Communication threshold and optional upload-failure schedule.
        Defaults to never synchronizing (independent agents).
    strategy : {"ratio", "greedy"}
        Arm-selection rule.
    max_rounds : int
        Safety valve on global rounds; exceeding it flags the result as
        truncated instead of raising.
    seed : int
        Run seed; agent ``m`` draws noise from ``agent_stream(seed, m)``.
    record_trace : bool
        Keep the full pull/reward/sync trace on the result (replay analyses).
    stream_ids : sequence of int, optional
        Override the per-agent stream ids (default ``0..M-1``); lets a
        single-agent run reproduce the stream of agent ``m`` in a wider run.

    Runs are deterministic given (seed, config): agents act in ascending id
    order, at most one synchronization happens per global round, and all ties
    break toward the lowest arm id.
    """
    M = cfg.n_agents
    if policy is None:
        policy = SyncPolicy()
    if isinstance(arms, ArmSet):
        arm_sets = [arms] * M
    else:
        arm_sets = list(arms)
        if len(arm_sets) != M:
            raise ValueError(f"got {len(arm_sets)} arm sets for {M} agents")
    K = arm_sets[0].n_arms
    if K < 2:
        raise ValueError("identification needs at least two arms")
    if max_rounds < 1:
        raise ValueError(f"max_rounds must be >= 1, got {max_rounds!r}")
    if any(a.n_arms != K or a.dim != arm_sets[0].dim for a in arm_sets):
        raise ValueError("all agents must see the same number of arms and dimension")
    if stream_ids is None:
        stream_ids = range(M)

    agents = [
        AgentState(m, arm_sets[m], cfg.lam, agent_stream(seed, sid))
        for m, sid in zip(range(M), stream_ids)
    ]
    coordinator = CoordinatorState(arm_sets[0].dim, K)
    chooser = _make_strategy(strategy, M)
    solvers = [DirectionSolver(aset, cfg) for aset in arm_sets]
    mean_rewards = [aset.contexts @ env.theta_star for aset in arm_sets]
    noise_scales = [
        (env.noise_scales if env.noise_scales is not None
         else np.full(K, env.noise_scale))
        for _ in range(M)
    ]
    true_best = _argmax_set(mean_rewards[0])
    trace = Trace() if record_trace else None

    stop_agent: int | None = None
    best_arm: int | None = None
    stop_round = 0
    threshold = policy.threshold
    for t in range(1, max_rounds + 1):
        round_arms: list[int] = []
        round_rewards: list[float] = []
        any_trigger = False
        for agent in agents:
            m = agent.agent_id
            direction = solvers[m].select(agent.view, agent.b_view)
            if direction.bound <= cfg.epsilon:
                stop_agent = m
                best_arm = direction.best
                stop_round = t
                break
            a = chooser.next_arm(agent, direction)
            # Same draw discipline as LinearEnvironment.sample_reward, with
            # the per-agent means and scales precomputed.
            scale = noise_scales[m][a]
            r = float(mean_rewards[m][a])
            if scale != 0.0:
                r += scale * agent.rng.standard_normal()
            agent.record_pull(a, r)
            round_arms.append(a)
            round_rewards.append(r)
            if agent.delta_t * (agent.view.logdet - agent.synced_logdet) > threshold:
                any_trigger = True
        if trace is not None and round_arms:
            trace.arms_pulled.append(round_arms)
            trace.rewards.append(round_rewards)
        if stop_agent is not None:
            break
        if any_trigger:
            surviving = policy.surviving(coordinator.sync_count, M)
            synchronize(coordinator, agents, cfg.lam, surviving)
            if trace is not None:
                trace.sync_rounds.append(t)

    truncated = stop_agent is None
    if truncated:
        # Out of budget: report the lowest-id agent's current belief.
        stop_round = max_rounds
        direction = select_direction(agents[0].arms, agents[0].view, agents[0].b_view, cfg)
        best_arm = direction.best

    tau_m = np.array([agent.pulls for agent in agents], dtype=np.int64)
    # Aggregated counts plus every not-yet-uploaded delta cover each pull once.
    per_arm = coordinator.T.copy()
    for agent in agents:
        per_arm += agent.delta_T

    return RunResult(
        best_arm=int(best_arm),
        tau_m=tau_m,
        tau=int(tau_m.sum()),
        comm_rounds=coordinator.sync_count,
        per_arm_pulls=per_arm,
        correct=int(best_arm) in true_best,
        stop_round=stop_round,
        stop_agent=stop_agent,
        truncated=truncated,
        trace=trace,
    )


def _argmax_set(values: np.ndarray) -> set[int]:
    top = values.max()
    return {int(k) for k in np.flatnonzero(values == top)}


def replay_trace(
    trace: Trace,
    arms: ArmSet | Sequence[ArmSet],
    cfg: ConfidenceConfig,
    schedule: Sequence[Collection[int]] | None = None,
    probe: Callable[[int, list[AgentState], CoordinatorState], None] | None = None,
) -> tuple[list[AgentState], CoordinatorState]:
    """Re-drive agent/coordinator statistics from a recorded trace.

    Pulls, rewards and synchronization rounds are taken from the trace (the
    trigger rule is not re-evaluated); ``schedule`` optionally injects upload
    failures into those recorded synchronization events, which is how the
    information-degradation analyses compare a failure run against its
    full-communication twin on identical data. ``probe`` is called after each
    completed round.
    """
    M = len(trace.arms_pulled[0]) if trace.arms_pulled else cfg.n_agents
    arm_sets = [arms] * M if isinstance(arms, ArmSet) else list(arms)
    agents = [
        AgentState(m, arm_sets[m], cfg.lam, np.random.default_rng(0)) for m in range(M)
    ]
    coordinator = CoordinatorState(arm_sets[0].dim, arm_sets[0].n_arms)
    syncs = set(trace.sync_rounds)
    for t in range(1, trace.n_rounds + 1):
        for m, (a, r) in enumerate(zip(trace.arms_pulled[t - 1], trace.rewards[t - 1])):
            agents[m].record_pull(a, r)
        if t in syncs:
            if schedule is not None and coordinator.sync_count < len(schedule):
                surviving = sorted(set(schedule[coordinator.sync_count]))
            else:
                surviving = list(range(M))
            synchronize(coordinator, agents, cfg.lam, surviving)
        if probe is not None:
            probe(t, agents, coordinator)
    return agents, coordinator


def replay_stop_round(
    trace: Trace,
    arms: ArmSet | Sequence[ArmSet],
    cfg: ConfidenceConfig,
    schedule: Sequence[Collection[int]] | None = None,
) -> tuple[int, int, int] | None:
    """First (round, agent, arm) at which the stop condition fires in a replay.

    Agents are checked in ascending id before their recorded pull is applied,
    mirroring the live round structure. Returns None when the trace ends
    without the stopping condition holding — e.g. when upload failures have
    kept the confidence widths too large to stop within the recorded data.
    """
    M = len(trace.arms_pulled[0]) if trace.arms_pulled else cfg.n_agents
    arm_sets = [arms] * M if isinstance(arms, ArmSet) else list(arms)
    agents = [
        AgentState(m, arm_sets[m], cfg.lam, np.random.default_rng(0)) for m in range(M)
    ]
    coordinator = CoordinatorState(arm_sets[0].dim, arm_sets[0].n_arms)
    syncs = set(trace.sync_rounds)
    for t in range(1, trace.n_rounds + 2):
        pulls = trace.arms_pulled[t - 1] if t <= trace.n_rounds else []
        rewards = trace.rewards[t - 1] if t <= trace.n_rounds else []
        for m in range(M):
            agent = agents[m]
            direction = select_direction(agent.arms, agent.view, agent.b_view, cfg)
            if direction.bound <= cfg.epsilon:
                return t, m, direction.best
            if m < len(pulls):
                agent.record_pull(pulls[m], rewards[m])
        if t in syncs:
            if schedule is not None and coordinator.sync_count < len(schedule):
                surviving = sorted(set(schedule[coordinator.sync_count]))
            else:
                surviving = list(range(M))
            synchronize(coordinator, agents, cfg.lam, surviving)
    return None


def threshold_from_budget(M: int, tau_estimate: float, d: int, B_c: int) -> float:
    """Trigger threshold that keeps the communication cost within a budget.

    Inverts the communication-cost bound: ``D = M^2 tau d log2(tau) / B_c^2``.
    """
    if M < 1 or d < 1:
        raise ValueError("agent count and dimension must be positive")
    if not tau_estimate >= 2:
        raise ValueError(f"sample-count estimate must be >= 2, got {tau_estimate!r}")
    if not B_c >= 1:
        raise ValueError(f"communication budget must be a positive integer, got {B_c!r}")
    return M**2 * tau_estimate * d * math.log2(tau_estimate) / B_c**2


def comm_bound(M: int, tau: float, d: int, D: float) -> float:
    """Upper-bound shape ``M * sqrt(tau d log2(tau) / D)`` on sync events
    (unit constant; for order-of-magnitude sanity checks)."""
    if not tau >= 2:
        raise ValueError(f"sample count must be >= 2, got {tau!r}")
    return M * math.sqrt(tau * d * math.log2(tau) / D)


def speedup(tau_single: float, tau_per_agent: float) -> float:
    """Per-agent sample-count ratio of a single-agent run to a collaborative one."""
    if not (tau_single > 0 and tau_per_agent > 0):
        raise ValueError("sample counts must be positive")
    return tau_single / tau_per_agent
