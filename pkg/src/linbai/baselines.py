"""Comparison algorithms.

The main baseline is a centralized regret-minimizing learner that, for parity
with ``M`` parallel agents, pulls the ``M`` arms with the highest optimistic
indices each round (index = estimated reward + confidence width). Independent
identification (agents that never synchronize) needs no code of its own: it
is the distributed protocol with an infinite communication threshold.
"""

from __future__ import annotations

import numpy as np

from .bai import ArmSet, ConfidenceConfig, confidence_radius
from .environments import LinearEnvironment
from .linalg import DesignMatrix, rls_estimate
from .protocol import agent_stream

__all__ = ["OfulState", "oful_batch_round", "run_oful", "cumulative_delay"]


class OfulState:
    """Design matrix, observation vector and round counter of the learner."""

    def __init__(self, dim: int, cfg: ConfidenceConfig):
        self.cfg = cfg
        self.A = DesignMatrix(dim, cfg.lam)
        self.b = np.zeros(dim)
        self.round = 0


def oful_batch_round(
    state: OfulState,
    arms: ArmSet,
    env: LinearEnvironment,
    batch: int,
    rngs: list[np.random.Generator],
) -> list[int]:
    """Pull the ``batch`` distinct arms with the highest optimistic indices.

    Ties break toward the lowest arm id. The state is updated with all
    ``batch`` observations; the reward of batch slot ``s`` is drawn from
    ``rngs[s]``, mirroring parallel observers.
    """
    K = arms.n_arms
    if not 1 <= batch <= K:
        raise ValueError(f"batch size must be in [1, {K}], got {batch!r}")
    theta = rls_estimate(state.A, state.b)
    means = arms.contexts @ theta
    quad = np.einsum("kd,kd->k", arms.contexts @ state.A.inverse, arms.contexts)
    indices = means + confidence_radius(state.A, state.cfg) * np.sqrt(np.maximum(quad, 0.0))
    chosen = list(np.lexsort((np.arange(K), -indices))[:batch])
    for slot, a in enumerate(chosen):
        x = arms.context(int(a))
        r = env.sample_reward(x, rngs[slot], arm=int(a))
        state.A.update(x)
        state.b += x * r
    state.round += 1
    return [int(a) for a in chosen]


def run_oful(
    env: LinearEnvironment,
    arms: ArmSet,
    cfg: ConfidenceConfig,
    n_rounds: int,
    batch: int,
    seed: int = 0,
) -> list[list[int]]:
    """Run the batched optimistic learner for a fixed horizon.

    Returns the per-round lists of pulled arms. Slot ``s`` uses the noise
    stream ``agent_stream(seed, s)`` so a paired identification run with the
    same seed sees identically distributed noise.
    """
    rngs = [agent_stream(seed, s) for s in range(batch)]
    state = OfulState(arms.dim, cfg)
    return [oful_batch_round(state, arms, env, batch, rngs) for _ in range(n_rounds)]


def cumulative_delay(trace, env: LinearEnvironment, arms: ArmSet, noisy: bool = False,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    """Running total of the delay improvement of a pull sequence.

    ``trace`` is a sequence of arm ids, or of per-round lists of arm ids,
    which is flattened. By default the expected reward ``x_a^T theta*`` of
    each pull is accumulated (smooth curves); ``noisy=True`` accumulates
    sampled rewards instead, drawn from ``rng``.
    """
    flat: list[int] = []
    for entry in trace:
        if np.iterable(entry):
            flat.extend(int(a) for a in entry)
        else:
            flat.append(int(entry))
    if not flat:
        return np.zeros(0)
    means = arms.contexts @ env.theta_star
    values = means[flat]
    if noisy:
        if rng is None:
            raise ValueError("noisy accumulation needs an rng")
        values = np.array(
            [env.sample_reward(arms.context(a), rng, arm=a) for a in flat]
        )
    return np.cumsum(values)
