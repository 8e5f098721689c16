"""Single-agent best-arm-identification mathematics for linear bandits.

Given arms with context vectors ``x_1..x_K`` and a reward model
``r = x^T theta + noise``, this module provides the confidence machinery of a
gap-based identification round:

* the confidence radius ``C`` of the regularized least-squares estimate,
* estimated reward gaps and their confidence widths,
* the direction-selection step (empirical best arm ``i``, most ambiguous
  competitor ``j``, stopping bound ``B``),
* the two sampling strategies (greedy uncertainty reduction, and tracking of
  an L1-optimal allocation ratio),
* the instance-hardness constant and evaluable sample-complexity bounds.

All arm indices are 0-based. Ties are always broken toward the lowest index
so that runs are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog

from .linalg import DesignMatrix, rls_estimate, weighted_norm_inv

__all__ = [
    "Arm",
    "ArmSet",
    "ConfidenceConfig",
    "Direction",
    "RatioSolution",
    "confidence_radius",
    "gap_estimate",
    "gap_confidence",
    "select_direction",
    "greedy_next_arm",
    "optimal_weights",
    "ratio_next_arm",
    "check_stop",
    "problem_complexity",
    "sample_complexity_bound",
]


@dataclass(frozen=True)
class Arm:
    """A selectable option with its context vector."""

    index: int
    context: np.ndarray


class ArmSet:
    """The shared set of ``K`` context vectors, stored as a (K, d) array."""

    def __init__(self, contexts: np.ndarray):
        contexts = np.asarray(contexts, dtype=float)
        if contexts.ndim != 2:
            raise ValueError(f"expected a (K, d) context array, got shape {contexts.shape}")
        if contexts.shape[0] < 1:
            raise ValueError("an arm set needs at least one arm")
        if not np.all(np.isfinite(contexts)):
            raise ValueError("arm contexts must be finite")
        self._contexts = contexts
        self._contexts.setflags(write=False)

    @property
    def contexts(self) -> np.ndarray:
        return self._contexts

    @property
    def n_arms(self) -> int:
        return self._contexts.shape[0]

    @property
    def dim(self) -> int:
        return self._contexts.shape[1]

    @cached_property
    def norm_bound(self) -> float:
        """Smallest L with ||x_k||_2 <= L for every arm."""
        return float(np.sqrt((self._contexts**2).sum(axis=1).max()))

    def arm(self, k: int) -> Arm:
        return Arm(k, self._contexts[k])

    def context(self, k: int) -> np.ndarray:
        return self._contexts[k]

    def scaled(self, c: float) -> "ArmSet":
        """All contexts multiplied by a positive factor (heterogeneous views)."""
        if not c > 0:
            raise ValueError(f"scale must be positive, got {c!r}")
        return ArmSet(self._contexts * c)

    def __len__(self) -> int:
        return self.n_arms

    def __repr__(self) -> str:  # pragma: no cover
        return f"ArmSet(K={self.n_arms}, d={self.dim})"


@dataclass(frozen=True)
class ConfidenceConfig:
    """Parameters of the confidence ellipsoid and the stopping rule.

    Attributes
    ----------
    R : float
        Sub-Gaussian scale of the reward noise.
    S : float
        Known bound on ||theta*||_2.
    lam : float
        Regularization weight; must match the design matrices in use.
    delta_m : float
        Per-agent error probability. The run-level error is ``M * delta_m``.
    epsilon : float
        Target accuracy of the returned arm (0 = exact best arm).
    n_agents : int
        Number of collaborating agents ``M``.
    """

    R: float
    S: float
    lam: float
    delta_m: float
    epsilon: float = 0.0
    n_agents: int = 1

    def __post_init__(self):
        if self.R < 0:
            raise ValueError(f"noise scale R must be nonnegative, got {self.R!r}")
        if self.S < 0:
            raise ValueError(f"parameter bound S must be nonnegative, got {self.S!r}")
        if not self.lam > 0:
            raise ValueError(f"regularization must be positive, got {self.lam!r}")
        if not 0 < self.delta_m <= 1:
            raise ValueError(f"delta_m must lie in (0, 1], got {self.delta_m!r}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon!r}")
        if self.n_agents < 1:
            raise ValueError(f"agent count must be >= 1, got {self.n_agents!r}")
        # delta_m = 1/M is a degenerate but valid boundary (total error 1).
        if self.n_agents * self.delta_m > 1:
            raise ValueError(
                f"total error M*delta_m = {self.n_agents * self.delta_m} exceeds 1"
            )


@dataclass(frozen=True)
class Direction:
    """Outcome of the direction-selection step.

    ``best`` is the empirically best arm, ``ambiguous`` the competitor whose
    optimistically inflated gap against ``best`` is largest, and ``bound`` that
    largest inflated gap. ``best == ambiguous`` only once the stopping
    condition already holds (the self-gap term is exactly 0).
    """

    best: int
    ambiguous: int
    bound: float


@dataclass(frozen=True)
class RatioSolution:
    """L1-minimal representation of a direction and its sampling ratio.

    ``weights`` solves ``min ||w||_1 s.t. sum_k w_k x_k = x_i - x_j``;
    ``alpha = ||w||_1`` and ``ratios = |weights| / alpha`` is the target
    allocation over arms.
    """

    weights: np.ndarray
    alpha: float
    ratios: np.ndarray


def confidence_radius(A: DesignMatrix, cfg: ConfidenceConfig) -> float:
    """Radius ``C`` of the confidence ellipsoid for the current design matrix.

    ``C = R * sqrt(2 * log( det(A)^{1/2} / (lam^{d/2} * delta_m) )) + sqrt(lam) * S``,
    evaluated through the cached log-determinant.
    """
    inner = 0.5 * A.logdet - 0.5 * A.dim * math.log(cfg.lam) + math.log(1.0 / cfg.delta_m)
    # det(A) >= lam^d and delta_m <= 1 guarantee inner >= 0 up to roundoff.
    return cfg.R * math.sqrt(2.0 * max(inner, 0.0)) + math.sqrt(cfg.lam) * cfg.S


def gap_estimate(x_i: np.ndarray, x_j: np.ndarray, theta_hat: np.ndarray) -> float:
    """Estimated reward gap ``(x_i - x_j)^T theta_hat`` (antisymmetric in i, j)."""
    return float((np.asarray(x_i) - np.asarray(x_j)) @ np.asarray(theta_hat))


def gap_confidence(
    x_i: np.ndarray, x_j: np.ndarray, A: DesignMatrix, cfg: ConfidenceConfig
) -> float:
    """Confidence width ``||x_i - x_j||_{A^-1} * C`` of the estimated gap."""
    return weighted_norm_inv(A, np.asarray(x_i) - np.asarray(x_j)) * confidence_radius(A, cfg)


class DirectionSolver:
    """Reusable direction-selection step for a fixed arm set and config.

    Caches the per-best-arm difference matrices ``x_j - x_i`` so that repeated
    calls inside a run cost a handful of array operations; one-shot callers
    can use :func:`select_direction`.
    """

    def __init__(self, arms: ArmSet, cfg: ConfidenceConfig):
        if arms.n_arms < 2:
            raise ValueError("direction selection needs at least two arms")
        self.arms = arms
        self.cfg = cfg
        self._diffs: dict[int, np.ndarray] = {}

    def select(self, A: DesignMatrix, b: np.ndarray) -> Direction:
        contexts = self.arms.contexts
        theta = A.inverse @ b
        means = contexts @ theta
        i = int(np.argmax(means))
        diff = self._diffs.get(i)
        if diff is None:
            diff = contexts - contexts[i]
            self._diffs[i] = diff
        quad = np.einsum("kd,kd->k", diff @ A.inverse, diff)
        np.maximum(quad, 0.0, out=quad)
        radius = confidence_radius(A, self.cfg)
        scores = (means - means[i]) + radius * np.sqrt(quad)
        j = int(np.argmax(scores))
        return Direction(best=i, ambiguous=j, bound=float(scores[j]))


def select_direction(
    arms: ArmSet, A: DesignMatrix, b: np.ndarray, cfg: ConfidenceConfig
) -> Direction:
    """Pick the empirically best arm and its most ambiguous competitor.

    The best arm maximizes the estimated reward; the competitor maximizes the
    optimistically inflated gap against it. The competitor search ranges over
    all arms including the best one itself, whose inflated self-gap is exactly
    0; the returned bound is therefore always >= 0 and the stopping test
    ``bound <= epsilon`` with ``epsilon = 0`` requires every true competitor's
    inflated gap to be nonpositive.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (A.dim,):
        raise ValueError(f"expected vector of dim {A.dim}, got shape {b.shape}")
    return DirectionSolver(arms, cfg).select(A, b)


def greedy_next_arm(arms: ArmSet, direction: Direction, A: DesignMatrix) -> int:
    """Arm whose observation most shrinks the selected direction's uncertainty.

    Evaluates ``||x_i - x_j||`` under ``(A + x_a x_a^T)^-1`` for every candidate
    via the rank-one inverse formula without mutating ``A`` (O(K d^2) total).
    Ties break toward the lowest arm index.
    """
    y = arms.context(direction.best) - arms.context(direction.ambiguous)
    contexts = arms.contexts
    u = A.inverse @ y
    base = float(y @ u)
    cross = contexts @ u
    quad = np.einsum("kd,kd->k", contexts @ A.inverse, contexts)
    shrunk = base - cross**2 / (1.0 + quad)
    return int(np.argmin(shrunk))


def optimal_weights(arms: ArmSet, i: int, j: int) -> RatioSolution:
    """L1-minimal weights representing ``x_i - x_j`` over the arm contexts.

    Solved as the standard linear program with the positive/negative split
    ``w = u - v``; ``w = e_i - e_j`` is always feasible, so ``alpha <= 2``.
    """
    if i == j:
        raise ValueError("a direction needs two distinct arms")
    contexts = arms.contexts
    K = arms.n_arms
    y = contexts[i] - contexts[j]
    res = linprog(
        np.ones(2 * K),
        A_eq=np.hstack([contexts.T, -contexts.T]),
        b_eq=y,
        bounds=[(0, None)] * (2 * K),
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(
            f"L1 program for direction ({i}, {j}) failed: "
            f"status={res.status} message={res.message!r}"
        )
    weights = res.x[:K] - res.x[K:]
    # Scrub solver dust so supports and ratios are exact.
    weights[np.abs(weights) < 1e-12] = 0.0
    alpha = float(np.abs(weights).sum())
    ratios = np.abs(weights) / alpha
    return RatioSolution(weights=weights, alpha=alpha, ratios=ratios)


def ratio_next_arm(solution: RatioSolution, pull_counts: np.ndarray) -> int:
    """Arm keeping the empirical allocation closest to the target ratio.

    Returns ``argmin_{a: ratios_a > 0} pull_counts[a] / ratios_a``, ties toward
    the lowest arm index.
    """
    support = solution.ratios > 0
    if not support.any():
        raise ValueError("ratio solution has empty support")
    counts = np.asarray(pull_counts, dtype=float)
    deficits = np.full(counts.shape, np.inf)
    deficits[support] = counts[support] / solution.ratios[support]
    return int(np.argmin(deficits))


def check_stop(direction: Direction, cfg: ConfidenceConfig) -> bool:
    """True iff the stopping bound has fallen to the target accuracy."""
    return direction.bound <= cfg.epsilon


def problem_complexity(arms: ArmSet, theta_star: np.ndarray, epsilon: float = 0.0) -> float:
    """Instance-hardness constant governing the sample-complexity bounds.

    Sums over arms ``k`` the worst case over ordered pairs ``(i, j)`` of
    ``|w*_k(i,j)| / max(eps, (eps + gap_i)/3, (eps + gap_j)/3)^2`` where
    ``gap_i`` is the true reward gap of arm ``i`` to the best arm (0 for the
    best arm itself) and ``w*`` the L1-minimal representation of
    ``x_i - x_j``. Note ``p*_k(i,j) * alpha(i,j) = |w*_k(i,j)|``.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    means = arms.contexts @ theta_star
    best = int(np.argmax(means))
    gaps = means[best] - means
    K = arms.n_arms
    if epsilon == 0.0 and np.sum(means == means[best]) > 1:
        raise ValueError("hardness is undefined at epsilon=0 without a unique best arm")

    terms = np.zeros(K)
    for i in range(K):
        for j in range(i + 1, K):
            denom = max(epsilon, (epsilon + gaps[i]) / 3.0, (epsilon + gaps[j]) / 3.0)
            sol = optimal_weights(arms, i, j)
            np.maximum(terms, np.abs(sol.weights) / denom**2, out=terms)
    return float(terms.sum())


def sample_complexity_bound(
    H: float, cfg: ConfidenceConfig, K: int, d: int, L: float
) -> tuple[float | None, float | None]:
    """Evaluate the two per-agent sample-complexity bounds when applicable.

    The small-regularization bound applies for
    ``lam <= (2 R^2 / S^2) * log(K^2 / delta_m)``:

        tau_m <= mu + 4 (H/M) R^2 (2 log(K^2/delta_m) + d log(1 + Y^2 L^2 / (lam d)))

    with ``mu = K/M + 1``, ``N = (8 H R^2 / M) log(K^2/delta_m)`` and
    ``Y = 2 sqrt(16 H^2 R^4 d L^2 / (M lam) + N^2)``. The large-regularization
    bound applies for ``lam > 4 H R^2 L^2``:

        tau_m <= 2 ((4 H R^2 / M) log(K^2/delta_m) + 2 H lam S^2 / M + mu)

    Outside its condition a bound is ``None`` (the intermediate regime is not
    covered by either formula).
    """
    if not H > 0:
        raise ValueError(f"hardness must be positive, got {H!r}")
    R, S, lam, M = cfg.R, cfg.S, cfg.lam, cfg.n_agents
    log_term = math.log(K**2 / cfg.delta_m)
    mu = K / M + 1.0

    case1 = None
    if S > 0 and lam <= (2.0 * R**2 / S**2) * log_term:
        N = 8.0 * H * R**2 / M * log_term
        Y = 2.0 * math.sqrt(16.0 * H**2 * R**4 * d * L**2 / (M * lam) + N**2)
        case1 = mu + 4.0 * H * R**2 / M * (
            2.0 * log_term + d * math.log(1.0 + Y**2 * L**2 / (lam * d))
        )

    case2 = None
    if lam > 4.0 * H * R**2 * L**2:
        case2 = 2.0 * (4.0 * H * R**2 / M * log_term + 2.0 * H * lam * S**2 / M + mu)
    return case1, case2
