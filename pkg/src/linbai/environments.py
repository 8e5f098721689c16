"""Ground-truth reward environments.

Two instance families are provided:

* a synthetic identification benchmark whose arms are the canonical basis
  vectors plus one almost-duplicate of the best arm at angle ``phi``, and
* a small-cell service-placement scenario where each arm is a deployable
  service, the reward is the total user-delay reduction of hosting that
  service at the edge instead of the cloud, and the context couples the
  service's long-term average delay gain with its average demand profile.

Both produce an :class:`~linbai.bai.ArmSet` and a :class:`LinearEnvironment`
with rewards ``r = x^T theta* + noise``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bai import ArmSet

__all__ = [
    "LinearEnvironment",
    "MonteCarloEstimate",
    "build_synthetic",
    "ServicePlacementScenario",
    "ServiceNetwork",
    "ServiceInstance",
    "dbm_to_watt",
    "db_to_linear",
    "uplink_rate",
    "channel_gain",
    "sbs_delay",
    "cloud_delay",
    "estimate_gain",
    "build_demand",
    "normalized_demand",
    "build_service_env",
    "heterogeneous_view",
]


class LinearEnvironment:
    """Linear reward model ``r = x^T theta* + noise``.

    ``noise_scale`` is the Gaussian noise std used for every arm unless a
    per-arm override vector ``noise_scales`` is given (e.g. when the demand
    noise of a service scales with that service's delay gain).
    """

    def __init__(
        self,
        theta_star: np.ndarray,
        noise_scale: float,
        noise_scales: np.ndarray | None = None,
    ):
        self.theta_star = np.asarray(theta_star, dtype=float)
        if self.theta_star.ndim != 1:
            raise ValueError("theta_star must be a vector")
        if noise_scale < 0:
            raise ValueError(f"noise scale must be nonnegative, got {noise_scale!r}")
        self.noise_scale = float(noise_scale)
        self.noise_scales = None if noise_scales is None else np.asarray(noise_scales, float)

    @property
    def dim(self) -> int:
        return self.theta_star.shape[0]

    def mean_reward(self, x: np.ndarray) -> float:
        return float(np.asarray(x) @ self.theta_star)

    def sample_reward(
        self, x: np.ndarray, rng: np.random.Generator, arm: int | None = None
    ) -> float:
        """One noisy reward observation, drawn from the caller's stream."""
        scale = self.noise_scale
        if self.noise_scales is not None and arm is not None:
            scale = self.noise_scales[arm]
        mean = self.mean_reward(x)
        if scale == 0.0:
            return mean
        return mean + scale * rng.standard_normal()


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A Monte Carlo mean with its standard error."""

    mean: float
    stderr: float
    n_draws: int


def build_synthetic(d: int, phi: float = 0.01) -> tuple[ArmSet, LinearEnvironment]:
    """The canonical-basis benchmark with one near-duplicate competitor.

    Arms 0..d-1 are ``e_1..e_d``; arm ``d`` is ``(cos phi, sin phi, 0, ...)``.
    The true parameter is ``(2, 0, ..., 0)`` and rewards carry unit Gaussian
    noise, so arm 0 is best for any ``phi`` in (0, pi/2) and arm ``d`` is its
    hardest competitor when ``phi`` is small.
    """
    if d < 2:
        raise ValueError(f"the benchmark needs d >= 2, got {d!r}")
    contexts = np.vstack([np.eye(d), np.zeros(d)])
    contexts[d, 0] = math.cos(phi)
    contexts[d, 1] = math.sin(phi)
    theta = np.zeros(d)
    theta[0] = 2.0
    return ArmSet(contexts), LinearEnvironment(theta, noise_scale=1.0)


# ---------------------------------------------------------------------------
# Small-cell service-placement scenario
# ---------------------------------------------------------------------------


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ServicePlacementScenario:
    """Parameters of the small-cell network and its demand model.

    Ranges ``(a, b)`` are sampled uniformly per request/draw. Defaults follow
    the simulation setup: 10 MHz uplink, 10 dBm transmit power, -104 dBm noise
    and -90 dBm interference power, 200 m cells on a 600 m ring around the
    macro station, path-loss coefficients -30 dB (cell) / -40 dB (macro) with
    exponent 2.5 and unit-mean Rayleigh fading power, [1,4] Gbit/s backhaul,
    [2,7] ms / [20,40] ms round trips, [0.5,1] MB tasks, [2.3,3.2] GHz edge
    and [4.6,5.6] GHz cloud CPUs at 100 cycles/bit.
    """

    n_services: int = 10
    n_cells: int = 6
    users_per_cell: int = 75
    n_periods: int = 8
    bandwidth_hz: float = 10e6
    tx_power_w: float = dbm_to_watt(10.0)
    noise_power_w: float = dbm_to_watt(-104.0)
    interference_w: float = dbm_to_watt(-90.0)
    backhaul_rate_bps: tuple[float, float] = (1e9, 4e9)
    rtt_sbs_s: tuple[float, float] = (2e-3, 7e-3)
    rtt_cloud_s: tuple[float, float] = (20e-3, 40e-3)
    task_size_bits: tuple[float, float] = (0.5 * 8e6, 1.0 * 8e6)
    cpu_cloud_hz: tuple[float, float] = (4.6e9, 5.6e9)
    cpu_sbs_hz: tuple[float, float] = (2.3e9, 3.2e9)
    cycles_per_bit: float = 100.0
    cell_radius_m: float = 200.0
    ring_radius_m: float = 400.0
    pathloss_sbs: float = db_to_linear(-30.0)
    pathloss_mbs: float = db_to_linear(-40.0)
    pathloss_exponent: float = 2.5
    ref_distance_m: float = 1.0
    zipf_s: float = 0.8
    lognorm_sigma: float = 0.3
    demand_noise: float = 100.0
    rate_log_base: str = "natural"  # "natural" per the rate formula; "log2" for bit/s

    def __post_init__(self):
        for name in ("backhaul_rate_bps", "rtt_sbs_s", "rtt_cloud_s",
                     "task_size_bits", "cpu_cloud_hz", "cpu_sbs_hz"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise ValueError(f"{name} must be a nonempty nonnegative range, got {(lo, hi)}")
        if self.rate_log_base not in ("natural", "log2"):
            raise ValueError(f"rate_log_base must be 'natural' or 'log2', got {self.rate_log_base!r}")
        if self.n_services < 1 or self.n_cells < 1 or self.users_per_cell < 1:
            raise ValueError("service, cell and user counts must be positive")


def uplink_rate(W: float, P: float, h, I: float, sigma2: float, base: str = "natural"):
    """Average uplink rate ``W * log(1 + P h / (I + sigma^2))``.

    The natural logarithm is used as written in the rate model; ``base="log2"``
    rescales to bits/s. Accepts scalar or array channel gains.
    """
    if not W > 0:
        raise ValueError(f"bandwidth must be positive, got {W!r}")
    if I + sigma2 <= 0:
        raise ValueError("interference plus noise power must be positive")
    snr = P * np.asarray(h) / (I + sigma2)
    log = np.log1p(snr)
    if base == "log2":
        log = log / math.log(2.0)
    return W * log


def channel_gain(rng: np.random.Generator, coeff: float, distance, exponent: float,
                 ref_distance: float = 1.0, size=None):
    """Rayleigh-faded path-loss gain: ``Exp(1) * coeff * (ref/d)^nu``."""
    fading = rng.exponential(1.0, size=size)
    return fading * coeff * (ref_distance / np.asarray(distance)) ** exponent


def sbs_delay(task_bits, rate, rtt, cpu_hz, cycles_per_bit):
    """Edge service delay: uplink transmission + round trip + processing."""
    return task_bits / rate + rtt + cycles_per_bit * task_bits / cpu_hz


def cloud_delay(task_bits, rate, backhaul_rate, rtt, cpu_hz, cycles_per_bit):
    """Cloud service delay: uplink + backbone transmission + round trip + processing."""
    return task_bits / rate + task_bits / backhaul_rate + rtt + cycles_per_bit * task_bits / cpu_hz


class ServiceNetwork:
    """A realized network: cell layout and static user positions.

    Cell centers sit on a ring around the macro station at the origin; users
    are placed uniformly inside their cell disk once per network seed (the
    long-term-average framing treats users as static while fading and
    per-request quantities are redrawn every draw).
    """

    def __init__(self, scenario: ServicePlacementScenario, rng: np.random.Generator):
        self.scenario = scenario
        s = scenario
        angles = 2.0 * math.pi * np.arange(s.n_cells) / s.n_cells
        centers = s.ring_radius_m * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        radii = s.cell_radius_m * np.sqrt(rng.random((s.n_cells, s.users_per_cell)))
        theta = 2.0 * math.pi * rng.random((s.n_cells, s.users_per_cell))
        offsets = np.stack([radii * np.cos(theta), radii * np.sin(theta)], axis=2)
        self.user_positions = centers[:, None, :] + offsets
        # Distances to the serving small cell and to the macro station.
        self.sbs_distance = np.maximum(radii, s.ref_distance_m)
        self.mbs_distance = np.maximum(
            np.linalg.norm(self.user_positions, axis=2), s.ref_distance_m
        )


def estimate_gain(
    network: ServiceNetwork, rng: np.random.Generator, n_draws: int = 10_000
) -> MonteCarloEstimate:
    """Monte Carlo estimate of the per-request delay gain of edge placement.

    Each draw picks a user uniformly at random, redraws the fading of every
    user in that cell (rates use the cell-average channel gain), and samples
    the per-request quantities from their ranges; the sample is
    ``cloud_delay - sbs_delay`` for one request.
    """
    s = network.scenario
    n_cells, n_users = network.sbs_distance.shape
    cells = rng.integers(0, n_cells, size=n_draws)

    pl_sbs = s.pathloss_sbs * (s.ref_distance_m / network.sbs_distance) ** s.pathloss_exponent
    pl_mbs = s.pathloss_mbs * (s.ref_distance_m / network.mbs_distance) ** s.pathloss_exponent
    fading_sbs = rng.exponential(1.0, size=(n_draws, n_users))
    fading_mbs = rng.exponential(1.0, size=(n_draws, n_users))
    h_sbs = (fading_sbs * pl_sbs[cells]).mean(axis=1)
    h_mbs = (fading_mbs * pl_mbs[cells]).mean(axis=1)

    rate_sbs = uplink_rate(s.bandwidth_hz, s.tx_power_w, h_sbs, s.interference_w,
                           s.noise_power_w, base=s.rate_log_base)
    rate_mbs = uplink_rate(s.bandwidth_hz, s.tx_power_w, h_mbs, s.interference_w,
                           s.noise_power_w, base=s.rate_log_base)

    task = rng.uniform(*s.task_size_bits, size=n_draws)
    d_sbs = sbs_delay(
        task,
        rate_sbs,
        rng.uniform(*s.rtt_sbs_s, size=n_draws),
        rng.uniform(*s.cpu_sbs_hz, size=n_draws),
        s.cycles_per_bit,
    )
    d_cloud = cloud_delay(
        task,
        rate_mbs,
        rng.uniform(*s.backhaul_rate_bps, size=n_draws),
        rng.uniform(*s.rtt_cloud_s, size=n_draws),
        rng.uniform(*s.cpu_cloud_hz, size=n_draws),
        s.cycles_per_bit,
    )
    diff = d_cloud - d_sbs
    return MonteCarloEstimate(
        mean=float(diff.mean()),
        stderr=float(diff.std(ddof=1) / math.sqrt(n_draws)),
        n_draws=n_draws,
    )


def build_demand(
    K: int, d: int, zipf_s: float, lognorm_sigma: float,
    rng: np.random.Generator, scale: float = 1.0,
) -> np.ndarray:
    """Per-service, per-period average demand: Zipf base times log-normal noise.

    The base demand of the k-th ranked service is ``scale * k^-s / sum_j j^-s``
    and every (service, period) entry multiplies it by an independent
    ``exp(N(0, sigma^2))`` factor. ``sigma = 0`` reproduces the exact Zipf
    profile in every period.
    """
    if K < 1 or d < 1:
        raise ValueError("demand matrix needs at least one service and one period")
    ranks = np.arange(1, K + 1, dtype=float)
    base = ranks**-zipf_s
    base *= scale / base.sum()
    if lognorm_sigma > 0:
        noise = np.exp(lognorm_sigma * rng.standard_normal((K, d)))
    else:
        noise = np.ones((K, d))
    return base[:, None] * noise


def normalized_demand(demand: np.ndarray) -> np.ndarray:
    """Demand rescaled to [0, 1] by the global maximum (presentation aid)."""
    return demand / demand.max()


@dataclass(frozen=True)
class ServiceInstance:
    """A fully realized service-placement bandit instance."""

    arms: ArmSet
    env: LinearEnvironment
    gains: np.ndarray
    gain_stderr: np.ndarray
    demand: np.ndarray
    omega: np.ndarray
    scenario: ServicePlacementScenario


def build_service_env(
    scenario: ServicePlacementScenario,
    seed: int,
    n_gain_draws: int = 10_000,
    noise_mode: str = "folded",
    omega_scale: float = 1.0,
) -> ServiceInstance:
    """Realize a service-placement instance from a scenario and a seed.

    Builds the network geometry, estimates each service's average per-request
    delay gain, draws the demand matrix and a positive unit-norm ground-truth
    parameter (scaled by ``omega_scale``), and assembles contexts
    ``x_k = gain_k * demand_k``. The reward noise is the demand noise scaled
    by the delay gain: with ``noise_mode="folded"`` a single scale
    ``max_k |gain_k| * demand_noise`` is used for all arms; with
    ``noise_mode="demand"`` each arm k gets its own ``|gain_k| * demand_noise``.
    """
    if noise_mode not in ("folded", "demand"):
        raise ValueError(f"noise_mode must be 'folded' or 'demand', got {noise_mode!r}")
    s = scenario
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5EC]))
    network = ServiceNetwork(s, rng)
    estimates = [estimate_gain(network, rng, n_gain_draws) for _ in range(s.n_services)]
    gains = np.array([e.mean for e in estimates])
    stderr = np.array([e.stderr for e in estimates])
    demand = build_demand(
        s.n_services, s.n_periods, s.zipf_s, s.lognorm_sigma, rng,
        scale=float(s.users_per_cell),
    )
    raw = np.abs(rng.standard_normal(s.n_periods))
    omega = omega_scale * raw / np.linalg.norm(raw)

    contexts = gains[:, None] * demand
    if not np.any(contexts):
        raise ValueError("degenerate scenario: all service contexts are zero")
    noise_floor = float(np.abs(gains).max() * s.demand_noise)
    per_arm = np.abs(gains) * s.demand_noise if noise_mode == "demand" else None
    env = LinearEnvironment(omega, noise_scale=noise_floor, noise_scales=per_arm)
    return ServiceInstance(
        arms=ArmSet(contexts),
        env=env,
        gains=gains,
        gain_stderr=stderr,
        demand=demand,
        omega=omega,
        scenario=s,
    )


def heterogeneous_view(arms: ArmSet, scales) -> list[ArmSet]:
    """Per-agent arm sets whose contexts are positively scaled copies.

    Positive scaling preserves the reward ordering and the sign of every gap,
    so agents with different user densities still solve the same
    identification problem.
    """
    scales = np.asarray(scales, dtype=float)
    if scales.ndim != 1 or scales.size < 1:
        raise ValueError("expected a vector of per-agent scales")
    if not np.all(scales > 0):
        raise ValueError("all scales must be positive")
    return [arms.scaled(float(c)) for c in scales]
