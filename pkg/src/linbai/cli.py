"""Command-line experiment runner.

Subcommands:

* ``run``      — execute one configured experiment and write its metrics CSV.
* ``sweep``    — repeat an experiment along one config axis, one CSV table.
* ``validate`` — parse and check a config file, run nothing.

Flags mirror config fields and override values from ``--config``. Exit codes:
0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    ConfigError,
    config_from_dict,
    load_config,
    run_experiment,
    sweep,
)

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linbai",
        description="Distributed best-arm identification simulator and experiment harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--scenario", choices=["synthetic", "service-placement"])
        p.add_argument("--algorithm", choices=["distlingape", "independent", "oful"])
        p.add_argument("--strategy", choices=["ratio", "greedy"])
        p.add_argument("-M", "--agents", type=int, dest="M", help="number of agents")
        p.add_argument("-D", "--threshold", dest="D", help="communication threshold (number or 'inf')")
        p.add_argument("--budget", type=int, help="communication budget B_c (derives D)")
        p.add_argument("--tau-estimate", type=float, dest="tau_estimate")
        p.add_argument("--delta-m", type=float, dest="delta_m")
        p.add_argument("--epsilon", type=float)
        p.add_argument("--lambda", type=float, dest="lam")
        p.add_argument("-S", type=float, dest="S")
        p.add_argument("-R", type=float, dest="R")
        p.add_argument("--noise-scale", type=float, dest="noise_scale")
        p.add_argument("--max-rounds", type=int, dest="max_rounds")
        p.add_argument("--reps", type=int, dest="repetitions", help="repetitions (default 1)")
        p.add_argument("--seed", type=int, help="base seed (default 0)")
        p.add_argument("--out", help="metrics CSV path (default metrics.csv)")
        p.add_argument("--track-cumulative", action="store_true", default=None,
                       dest="track_cumulative")
        p.add_argument("--d", type=int, dest="scenario.d", help="synthetic context dimension")
        p.add_argument("--phi", type=float, dest="scenario.phi", help="synthetic competitor angle")
        p.add_argument("--scenario-seed", type=int, dest="scenario.seed",
                       help="service-placement instance seed")

    run_p = sub.add_parser("run", help="run one experiment")
    add_common(run_p)

    sweep_p = sub.add_parser("sweep", help="sweep one config axis")
    add_common(sweep_p)
    sweep_p.add_argument("--axis", required=True, help="config field to sweep (e.g. M, D, scenario.d)")
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated axis values (numbers, or 'inf' for D)")

    val_p = sub.add_parser("validate", help="check a config file without running")
    val_p.add_argument("--config", required=True)

    return parser


_FLAG_KEYS = [
    "scenario", "algorithm", "strategy", "M", "D", "budget", "tau_estimate",
    "delta_m", "epsilon", "lam", "S", "R", "noise_scale", "max_rounds",
    "repetitions", "seed", "out", "track_cumulative",
    "scenario.d", "scenario.phi", "scenario.seed",
]


def _overrides(args: argparse.Namespace) -> dict:
    out: dict = {}
    ns = vars(args)
    for key in _FLAG_KEYS:
        value = ns.get(key)
        if value is None:
            continue
        if key == "scenario":
            out["scenario"] = {"kind": value}
        elif key == "lam":
            out["lambda"] = value
        else:
            out[key] = value
    return out


def _resolve_config(args: argparse.Namespace):
    overrides = _overrides(args)
    if args.config:
        return load_config(args.config, overrides)
    return config_from_dict({}, overrides)


def _parse_axis_values(axis: str, raw: str) -> list:
    values: list = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        if item.lower() in ("inf", "infinity"):
            values.append(float("inf"))
        elif axis in ("strategy", "algorithm", "scenario"):
            values.append(item)
        else:
            number = float(item)
            values.append(int(number) if number.is_integer() and axis in ("M", "seed", "repetitions", "max_rounds", "scenario.d", "scenario.seed", "budget") else number)
    if not values:
        raise ConfigError("values: expected at least one axis value")
    return values


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            config = load_config(args.config)
            print(f"ok: {args.config} ({config.scenario}/{config.algorithm}, "
                  f"M={config.M}, reps={config.repetitions})")
            return 0
        config = _resolve_config(args)
        if args.command == "run":
            record = run_experiment(config)
            print(json.dumps(_summary(record), indent=2, sort_keys=True))
            return 0
        if args.command == "sweep":
            values = _parse_axis_values(args.axis, args.values)
            records = sweep(config, args.axis, values)
            for value, record in zip(values, records):
                print(json.dumps({"value": value, **_summary(record)}, sort_keys=True))
            return 0
        raise AssertionError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _summary(record) -> dict:
    return {
        "out": record.config.out,
        "correct_rate": record.correct_rate,
        "tau_mean": record.tau_mean,
        "tau_m_mean": record.tau_m_mean,
        "comm_rounds_mean": record.comm_rounds_mean,
        "speedup": record.speedup_vs_reference,
        "truncated_runs": record.truncated_runs,
        "wall_clock_s": round(record.wall_clock_s, 3),
    }


if __name__ == "__main__":
    sys.exit(main())
