"""Experiment runner: configs, seeded repetitions, aggregation, CSV metrics.

A config fully determines an experiment: the scenario (synthetic benchmark or
service placement), the algorithm (collaborative, independent, or the batched
optimistic baseline), confidence parameters, the communication policy, the
repetition count and the base seed. Run ``i`` uses seed ``base_seed + i`` and
agent ``m`` inside it draws noise from the stream keyed ``(run seed, m)``;
identical configs therefore produce bit-identical output files.

Each experiment writes one aggregated record to a CSV (stable column set) and
a JSON sidecar with the resolved config and the per-run seeds. Evaluable
theory bounds (per-agent sample complexity where the regularization regime
applies, and the communication-cost shape) are logged alongside the observed
quantities.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bai import ArmSet, ConfidenceConfig, problem_complexity, sample_complexity_bound
from .baselines import cumulative_delay, run_oful
from .environments import (
    LinearEnvironment,
    ServicePlacementScenario,
    build_service_env,
    build_synthetic,
    heterogeneous_view,
)
from .protocol import RunResult, SyncPolicy, comm_bound, run_distlingape, speedup, threshold_from_budget

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "MetricsRecord",
    "load_config",
    "config_from_dict",
    "run_experiment",
    "sweep",
    "write_records",
    "CSV_COLUMNS",
]

ALGORITHMS = ("distlingape", "independent", "oful")
SCENARIOS = ("synthetic", "service-placement")


class ConfigError(ValueError):
    """A configuration field is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one experiment.

    ``scenario_params`` holds the scenario-specific fields (``d``/``phi`` for
    the synthetic benchmark; scenario seed and network/demand parameters for
    service placement). ``D`` may be ``inf`` (never synchronize); if ``D`` is
    None and a communication ``budget`` is given, the threshold is derived
    from the budget and ``tau_estimate``.
    """

    scenario: str = "synthetic"
    scenario_params: dict = field(default_factory=dict)
    algorithm: str = "distlingape"
    strategy: str = "ratio"
    M: int = 1
    D: float | None = None
    budget: int | None = None
    tau_estimate: float | None = None
    delta_m: float = 0.05
    epsilon: float = 0.0
    lam: float = 1.0
    S: float = 2.0
    R: float | None = None
    noise_scale: float | None = None
    repetitions: int = 1
    seed: int = 0
    max_rounds: int = 10_000_000
    out: str = "metrics.csv"
    reference_samples_per_agent: float | None = None
    track_cumulative: bool = False
    heterogeneous_scales: tuple | None = None

    def resolved_threshold(self) -> float:
        if self.algorithm == "independent":
            return math.inf
        if self.D is not None:
            return self.D
        if self.budget is not None:
            if self.tau_estimate is None:
                raise ConfigError("tau_estimate: required when deriving D from a budget")
            d = _scenario_dim(self)
            return threshold_from_budget(self.M, self.tau_estimate, d, self.budget)
        raise ConfigError("D: a communication threshold (or budget) is required")


@dataclass
class MetricsRecord:
    """Aggregates over exactly ``repetitions`` runs of one configuration."""

    label: str
    config: ExperimentConfig
    correct_rate: float
    tau_mean: float
    tau_std: float
    tau_m_mean: float
    tau_m_std: float
    comm_rounds_mean: float
    comm_rounds_std: float
    stop_round_mean: float
    per_arm_pulls_mean: np.ndarray
    truncated_runs: int
    speedup_vs_reference: float | None
    cum_delay_mean: float | None
    hardness: float | None
    tau_bound_small_lam: float | None
    tau_bound_large_lam: float | None
    tau_m_max: float
    comm_rounds_max: float
    comm_bound_value: float | None
    within_tau_bound: bool | None
    within_comm_bound: bool | None
    R_resolved: float = 0.0
    wall_clock_s: float = 0.0


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

_SCALAR_FIELDS: dict[str, type] = {
    "algorithm": str,
    "strategy": str,
    "M": int,
    "budget": int,
    "tau_estimate": float,
    "delta_m": float,
    "epsilon": float,
    "lam": float,
    "S": float,
    "R": float,
    "noise_scale": float,
    "repetitions": int,
    "seed": int,
    "max_rounds": int,
    "out": str,
    "reference_samples_per_agent": float,
    "track_cumulative": bool,
}

_OPTIONAL_NONE = {"budget", "tau_estimate", "R", "noise_scale", "reference_samples_per_agent"}


def config_from_dict(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Build and validate a config from a JSON-shaped dict.

    ``overrides`` (e.g. CLI flags) replace file values before validation.
    Raises :class:`ConfigError` with the offending field path.
    """
    if not isinstance(raw, dict):
        raise ConfigError(f"config root: expected an object, got {type(raw).__name__}")
    data = dict(raw)
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key.startswith("scenario."):
                data.setdefault("scenario", {})
                if not isinstance(data["scenario"], dict):
                    raise ConfigError("scenario: expected an object")
                data["scenario"] = {**data["scenario"], key.split(".", 1)[1]: value}
            else:
                data[key] = value

    known = {f.name for f in fields(ExperimentConfig)} | {"scenario", "D", "lambda"}
    for key in data:
        if key not in known and key not in _SCALAR_FIELDS:
            raise ConfigError(f"{key}: unknown config field")

    scenario_block = data.get("scenario", {"kind": "synthetic"})
    if isinstance(scenario_block, str):
        scenario_block = {"kind": scenario_block}
    if not isinstance(scenario_block, dict):
        raise ConfigError("scenario: expected an object or a kind string")
    kind = scenario_block.get("kind", "synthetic")
    if kind not in SCENARIOS:
        raise ConfigError(f"scenario.kind: expected one of {SCENARIOS}, got {kind!r}")
    scenario_params = {k: v for k, v in scenario_block.items() if k != "kind"}

    kwargs: dict = {"scenario": kind, "scenario_params": scenario_params}
    if "lambda" in data and "lam" not in data:
        data["lam"] = data.pop("lambda")

    for name, typ in _SCALAR_FIELDS.items():
        if name not in data:
            continue
        value = data[name]
        if value is None:
            if name in _OPTIONAL_NONE:
                kwargs[name] = None
                continue
            raise ConfigError(f"{name}: must not be null")
        try:
            if typ is bool:
                if not isinstance(value, bool):
                    raise TypeError
                kwargs[name] = value
            else:
                kwargs[name] = typ(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: expected {typ.__name__}, got {value!r}") from None
    if "lam" in data:
        try:
            kwargs["lam"] = float(data["lam"])
        except (TypeError, ValueError):
            raise ConfigError(f"lambda: expected float, got {data['lam']!r}") from None

    if "D" in data:
        D = data["D"]
        if D is None:
            kwargs["D"] = None
        elif isinstance(D, str):
            if D.lower() in ("inf", "infinity"):
                kwargs["D"] = math.inf
            else:
                try:
                    kwargs["D"] = float(D)
                except ValueError:
                    raise ConfigError(f"D: expected a number or 'inf', got {D!r}") from None
        else:
            kwargs["D"] = float(D)

    if "heterogeneous_scales" in data and data["heterogeneous_scales"] is not None:
        scales = data["heterogeneous_scales"]
        if not isinstance(scales, (list, tuple)) or not scales:
            raise ConfigError("heterogeneous_scales: expected a nonempty list")
        kwargs["heterogeneous_scales"] = tuple(float(c) for c in scales)

    config = ExperimentConfig(**kwargs)
    _validate(config)
    return config


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        with open(path) as f:
            raw = json.load(f)
    except OSError as exc:
        raise ConfigError(f"config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file: invalid JSON ({exc})") from exc
    return config_from_dict(raw, overrides)


def _validate(config: ExperimentConfig) -> None:
    if config.algorithm not in ALGORITHMS:
        raise ConfigError(f"algorithm: expected one of {ALGORITHMS}, got {config.algorithm!r}")
    if config.strategy not in ("ratio", "greedy"):
        raise ConfigError(f"strategy: expected 'ratio' or 'greedy', got {config.strategy!r}")
    if config.M < 1:
        raise ConfigError(f"M: must be >= 1, got {config.M}")
    if config.repetitions < 1:
        raise ConfigError(f"repetitions: must be >= 1, got {config.repetitions}")
    if not 0 < config.delta_m <= 1:
        raise ConfigError(f"delta_m: must lie in (0, 1], got {config.delta_m}")
    if config.M * config.delta_m > 1:
        raise ConfigError(f"delta_m: total error M*delta_m = {config.M * config.delta_m} exceeds 1")
    if config.epsilon < 0:
        raise ConfigError(f"epsilon: must be >= 0, got {config.epsilon}")
    if not config.lam > 0:
        raise ConfigError(f"lambda: must be > 0, got {config.lam}")
    if config.S < 0:
        raise ConfigError(f"S: must be >= 0, got {config.S}")
    if config.R is not None and config.R < 0:
        raise ConfigError(f"R: must be >= 0, got {config.R}")
    if config.noise_scale is not None and config.noise_scale < 0:
        raise ConfigError(f"noise_scale: must be >= 0, got {config.noise_scale}")
    if config.max_rounds < 1:
        raise ConfigError(f"max_rounds: must be >= 1, got {config.max_rounds}")
    if config.D is not None and not config.D > 0:
        raise ConfigError(f"D: must be > 0, got {config.D}")
    if config.budget is not None and config.budget < 1:
        raise ConfigError(f"budget: must be >= 1, got {config.budget}")
    if config.heterogeneous_scales is not None:
        if len(config.heterogeneous_scales) != config.M:
            raise ConfigError(
                f"heterogeneous_scales: expected {config.M} entries, got {len(config.heterogeneous_scales)}"
            )
        if any(c <= 0 for c in config.heterogeneous_scales):
            raise ConfigError("heterogeneous_scales: all scales must be positive")
    if config.algorithm == "oful":
        if config.max_rounds > 1_000_000:
            raise ConfigError("max_rounds: the oful baseline needs an explicit finite horizon (<= 1e6)")
        if config.M > _scenario_arms_lower_bound(config):
            raise ConfigError("M: batch size must not exceed the number of arms")
    if config.algorithm == "distlingape" and config.D is None and config.budget is None:
        raise ConfigError("D: a communication threshold (or budget) is required for distlingape")
    _check_scenario_params(config)


def _check_scenario_params(config: ExperimentConfig) -> None:
    params = config.scenario_params
    if config.scenario == "synthetic":
        allowed = {"d", "phi"}
        for key in params:
            if key not in allowed:
                raise ConfigError(f"scenario.{key}: unknown synthetic-benchmark field")
        if int(params.get("d", 5)) < 2:
            raise ConfigError("scenario.d: must be >= 2")
    else:
        allowed = {"seed", "n_gain_draws", "noise_mode", "omega_scale"} | {
            f.name for f in fields(ServicePlacementScenario)
        }
        for key in params:
            if key not in allowed:
                raise ConfigError(f"scenario.{key}: unknown service-placement field")


def _scenario_dim(config: ExperimentConfig) -> int:
    if config.scenario == "synthetic":
        return int(config.scenario_params.get("d", 5))
    return int(config.scenario_params.get("n_periods", 8))


def _scenario_arms_lower_bound(config: ExperimentConfig) -> int:
    if config.scenario == "synthetic":
        return int(config.scenario_params.get("d", 5)) + 1
    return int(config.scenario_params.get("n_services", 10))


# ---------------------------------------------------------------------------
# Instance construction
# ---------------------------------------------------------------------------


def build_instance(config: ExperimentConfig) -> tuple[ArmSet, LinearEnvironment]:
    """Realize the configured scenario into (arms, environment)."""
    if config.scenario == "synthetic":
        d = int(config.scenario_params.get("d", 5))
        phi = float(config.scenario_params.get("phi", 0.01))
        arms, env = build_synthetic(d, phi)
    else:
        params = dict(config.scenario_params)
        seed = int(params.pop("seed", 0))
        n_gain_draws = int(params.pop("n_gain_draws", 10_000))
        noise_mode = str(params.pop("noise_mode", "folded"))
        omega_scale = float(params.pop("omega_scale", 1.0))
        try:
            scenario = ServicePlacementScenario(**params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"scenario: {exc}") from exc
        instance = build_service_env(
            scenario, seed, n_gain_draws=n_gain_draws,
            noise_mode=noise_mode, omega_scale=omega_scale,
        )
        arms, env = instance.arms, instance.env
    if config.noise_scale is not None:
        env = LinearEnvironment(env.theta_star, config.noise_scale)
    return arms, env


def confidence_config(config: ExperimentConfig, env: LinearEnvironment) -> ConfidenceConfig:
    R = config.R if config.R is not None else env.noise_scale
    theta_norm = float(np.linalg.norm(env.theta_star))
    if theta_norm > config.S + 1e-9:
        raise ConfigError(
            f"S: parameter bound {config.S} is below the instance's ||theta*|| = {theta_norm:.6g}"
        )
    return ConfidenceConfig(
        R=R, S=config.S, lam=config.lam, delta_m=config.delta_m,
        epsilon=config.epsilon, n_agents=config.M,
    )


# ---------------------------------------------------------------------------
# Running and aggregation
# ---------------------------------------------------------------------------

CSV_COLUMNS = [
    "label", "scenario", "algorithm", "strategy", "M", "D", "delta_m", "epsilon",
    "lambda", "S", "R", "repetitions", "base_seed", "max_rounds",
    "correct_rate", "tau_mean", "tau_std", "tau_m_mean", "tau_m_std",
    "comm_rounds_mean", "comm_rounds_std", "stop_round_mean",
    "per_arm_pulls_mean", "truncated_runs", "speedup", "cum_delay_mean",
    "hardness", "tau_bound_small_lam", "tau_bound_large_lam", "tau_m_max",
    "comm_rounds_max", "comm_bound", "within_tau_bound", "within_comm_bound",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _record_row(record: MetricsRecord, label: str | None = None) -> dict:
    cfg = record.config
    return {
        "label": label if label is not None else record.label,
        "scenario": cfg.scenario,
        "algorithm": cfg.algorithm,
        "strategy": cfg.strategy,
        "M": cfg.M,
        "D": cfg.resolved_threshold() if cfg.algorithm != "oful" else None,
        "delta_m": cfg.delta_m,
        "epsilon": cfg.epsilon,
        "lambda": cfg.lam,
        "S": cfg.S,
        "R": record.R_resolved,
        "repetitions": cfg.repetitions,
        "base_seed": cfg.seed,
        "max_rounds": cfg.max_rounds,
        "correct_rate": record.correct_rate,
        "tau_mean": record.tau_mean,
        "tau_std": record.tau_std,
        "tau_m_mean": record.tau_m_mean,
        "tau_m_std": record.tau_m_std,
        "comm_rounds_mean": record.comm_rounds_mean,
        "comm_rounds_std": record.comm_rounds_std,
        "stop_round_mean": record.stop_round_mean,
        "per_arm_pulls_mean": ";".join(repr(float(v)) for v in record.per_arm_pulls_mean),
        "truncated_runs": record.truncated_runs,
        "speedup": record.speedup_vs_reference,
        "cum_delay_mean": record.cum_delay_mean,
        "hardness": record.hardness,
        "tau_bound_small_lam": record.tau_bound_small_lam,
        "tau_bound_large_lam": record.tau_bound_large_lam,
        "tau_m_max": record.tau_m_max,
        "comm_rounds_max": record.comm_rounds_max,
        "comm_bound": record.comm_bound_value,
        "within_tau_bound": record.within_tau_bound,
        "within_comm_bound": record.within_comm_bound,
    }


def write_records(records: list[MetricsRecord], out: str | Path,
                  labels: list[str] | None = None) -> None:
    """Write aggregated records as CSV plus a JSON metadata sidecar.

    The CSV content is a pure function of the configs and seeds, so re-running
    a config reproduces the file byte for byte (wall-clock times live only in
    the in-memory records).
    """
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for idx, record in enumerate(records):
            label = labels[idx] if labels else None
            writer.writerow({k: _fmt(v) for k, v in _record_row(record, label).items()})
    meta = {
        "version": __version__,
        "columns": CSV_COLUMNS,
        "records": [
            {
                "label": labels[idx] if labels else record.label,
                "config": _config_json(record.config),
                "run_seeds": list(range(record.config.seed,
                                        record.config.seed + record.config.repetitions)),
            }
            for idx, record in enumerate(records)
        ],
    }
    with open(str(out) + ".meta.json", "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")


def _config_json(config: ExperimentConfig) -> dict:
    raw = asdict(config)
    raw["scenario"] = {"kind": config.scenario, **config.scenario_params}
    raw.pop("scenario_params")
    if raw.get("heterogeneous_scales") is not None:
        raw["heterogeneous_scales"] = list(raw["heterogeneous_scales"])
    if raw.get("D") == math.inf:
        raw["D"] = "inf"
    return raw


def _aggregate(
    config: ExperimentConfig,
    label: str,
    results: list[RunResult],
    arms: ArmSet,
    env: LinearEnvironment,
    cfg: ConfidenceConfig,
    cum_delays: list[float] | None,
    wall_clock: float,
) -> MetricsRecord:
    taus = np.array([r.tau for r in results], dtype=float)
    tau_ms = np.array([r.tau_m.mean() for r in results], dtype=float)
    comms = np.array([r.comm_rounds for r in results], dtype=float)
    stops = np.array([r.stop_round for r in results], dtype=float)
    per_arm = np.mean([r.per_arm_pulls for r in results], axis=0)
    correct = float(np.mean([r.correct for r in results]))
    truncated = int(sum(r.truncated for r in results))

    hardness = None
    bound1 = bound2 = None
    within_tau = None
    if config.algorithm != "oful":
        try:
            hardness = problem_complexity(arms, env.theta_star, config.epsilon)
        except ValueError:
            hardness = None
        if hardness is not None:
            bound1, bound2 = sample_complexity_bound(
                hardness, cfg, arms.n_arms, arms.dim, arms.norm_bound
            )
            applicable = [b for b in (bound1, bound2) if b is not None]
            if applicable:
                limit = min(applicable)
                within_tau = bool(max(r.tau_m.max() for r in results) <= limit)

    D = config.resolved_threshold() if config.algorithm != "oful" else None
    cb = None
    within_comm = None
    if D is not None and math.isfinite(D):
        slack = [comm_bound(config.M, max(r.tau, 2), arms.dim, D) - r.comm_rounds for r in results]
        cb = comm_bound(config.M, max(float(np.mean(taus)), 2.0), arms.dim, D)
        within_comm = bool(min(slack) >= 0)
    elif D is not None:
        cb = 0.0
        within_comm = bool(max(comms) == 0)

    ref = config.reference_samples_per_agent
    return MetricsRecord(
        label=label,
        config=config,
        correct_rate=correct,
        tau_mean=float(taus.mean()),
        tau_std=float(taus.std()),
        tau_m_mean=float(tau_ms.mean()),
        tau_m_std=float(tau_ms.std()),
        comm_rounds_mean=float(comms.mean()),
        comm_rounds_std=float(comms.std()),
        stop_round_mean=float(stops.mean()),
        per_arm_pulls_mean=per_arm,
        truncated_runs=truncated,
        speedup_vs_reference=(speedup(ref, float(tau_ms.mean())) if ref else None),
        cum_delay_mean=(float(np.mean(cum_delays)) if cum_delays else None),
        hardness=hardness,
        tau_bound_small_lam=bound1,
        tau_bound_large_lam=bound2,
        tau_m_max=float(max(r.tau_m.max() for r in results)),
        comm_rounds_max=float(comms.max()),
        comm_bound_value=cb,
        within_tau_bound=within_tau,
        within_comm_bound=within_comm,
        R_resolved=cfg.R,
        wall_clock_s=wall_clock,
    )


def run_record(config: ExperimentConfig, label: str = "run") -> MetricsRecord:
    """Execute one config (repetitions included) and aggregate, without I/O."""
    t0 = time.perf_counter()
    arms, env = build_instance(config)
    cfg = confidence_config(config, env)
    if config.heterogeneous_scales is not None:
        agent_arms: ArmSet | list[ArmSet] = heterogeneous_view(arms, config.heterogeneous_scales)
    else:
        agent_arms = arms

    results: list[RunResult] = []
    cum_delays: list[float] | None = [] if (config.track_cumulative or config.algorithm == "oful") else None
    for i in range(config.repetitions):
        run_seed = config.seed + i
        if config.algorithm == "oful":
            trace = run_oful(env, arms, cfg, config.max_rounds, config.M, seed=run_seed)
            results.append(_oful_result(trace, arms, env))
            if cum_delays is not None:
                cum_delays.append(float(cumulative_delay(trace, env, arms)[-1]))
        else:
            policy = SyncPolicy(threshold=config.resolved_threshold())
            res = run_distlingape(
                env, agent_arms, cfg, policy,
                strategy=config.strategy, max_rounds=config.max_rounds,
                seed=run_seed, record_trace=cum_delays is not None,
            )
            results.append(res)
            if cum_delays is not None:
                flat = [a for round_arms in res.trace.arms_pulled for a in round_arms]
                cum_delays.append(float(cumulative_delay(flat, env, arms)[-1]) if flat else 0.0)
    wall = time.perf_counter() - t0
    return _aggregate(config, label, results, arms, env, cfg, cum_delays, wall)


def _oful_result(trace: list[list[int]], arms: ArmSet, env: LinearEnvironment) -> RunResult:
    """Shape a fixed-horizon baseline run into the common result record."""
    per_arm = np.zeros(arms.n_arms, dtype=np.int64)
    for round_arms in trace:
        for a in round_arms:
            per_arm[a] += 1
    batch = len(trace[0]) if trace else 0
    means = arms.contexts @ env.theta_star
    true_best = set(np.flatnonzero(means == means.max()))
    most_pulled = int(per_arm.argmax())
    return RunResult(
        best_arm=most_pulled,
        tau_m=np.full(max(batch, 1), len(trace), dtype=np.int64),
        tau=int(per_arm.sum()),
        comm_rounds=0,
        per_arm_pulls=per_arm,
        correct=most_pulled in true_best,
        stop_round=len(trace),
        stop_agent=None,
        truncated=True,
        trace=None,
    )


def run_experiment(config: ExperimentConfig, label: str = "run") -> MetricsRecord:
    """Run one config and write its record (CSV + metadata sidecar)."""
    record = run_record(config, label)
    write_records([record], config.out)
    return record


def sweep(config: ExperimentConfig, axis: str, values: list) -> list[MetricsRecord]:
    """One record per axis value, emitted as a single table.

    ``axis`` is a config field name (``scenario.<field>`` reaches into the
    scenario block). When sweeping ``M`` with 1 among the values, the M=1
    record is computed first and used as the speedup reference for the rest.
    """
    records: list[MetricsRecord] = []
    labels: list[str] = []
    configs: list[ExperimentConfig] = []
    for value in values:
        if axis.startswith("scenario."):
            params = {**config.scenario_params, axis.split(".", 1)[1]: value}
            cfg_v = replace(config, scenario_params=params)
        elif axis in {f.name for f in fields(ExperimentConfig)}:
            cfg_v = replace(config, **{axis: value})
        elif axis == "lambda":
            cfg_v = replace(config, lam=float(value))
        else:
            raise ConfigError(f"axis: {axis!r} does not name a config field")
        _validate(cfg_v)
        configs.append(cfg_v)
        labels.append(f"{axis}={value}")

    reference: float | None = None
    if axis == "M" and any(int(v) == 1 for v in values):
        order = sorted(range(len(values)), key=lambda i: int(values[i]) != 1)
    else:
        order = list(range(len(values)))
    records_by_index: dict[int, MetricsRecord] = {}
    for i in order:
        cfg_i = configs[i]
        if axis == "M" and reference is not None and cfg_i.reference_samples_per_agent is None:
            cfg_i = replace(cfg_i, reference_samples_per_agent=reference)
        record = run_record(cfg_i, labels[i])
        records_by_index[i] = record
        if axis == "M" and int(values[i]) == 1 and reference is None:
            reference = record.tau_m_mean
    records = [records_by_index[i] for i in range(len(values))]
    write_records(records, config.out, labels)
    return records
