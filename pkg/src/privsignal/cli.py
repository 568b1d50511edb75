"""Command line entry point: ``python -m privsignal {run,sweep,validate-config}``.

Every leaf of the configuration document is also a flag, spelled as its
dotted path (``--privacy.p_dire 0.1``).  Exit codes: 0 success, 2 bad
configuration, 3 failure while running.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, UnknownAxis
from .experiment import (
    CONTROLLERS, ExperimentConfig, coerce_value, leaf_paths, run_experiment, sweep, write_outputs,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

# Short spellings for the flags used most often.
SHORTCUTS = {"seed": "replications.seeds", "scenarios": "stochastic.scenarios"}


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML config file (defaults apply to missing keys)")
    group = p.add_argument_group("config overrides")
    for path in leaf_paths():
        flag = "--" + path
        extra = {}
        if path == "controller":
            extra["choices"] = CONTROLLERS
        group.add_argument(flag, dest=f"set:{path}", metavar="V", **extra)
    for short, path in SHORTCUTS.items():
        group.add_argument("--" + short, dest=f"set:{path}", metavar="V",
                           help=f"alias for --{path}")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="privsignal", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate every replication seed of one configuration")
    _config_args(run)
    run.add_argument("--out", type=Path, default=Path("runs/latest"), help="output directory")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--dump", type=Path, metavar="DIR",
                     help="write each decision's LP instance and aggregation transcript")

    sw = sub.add_parser("sweep", help="repeat a run across values of one or more config paths")
    _config_args(sw)
    sw.add_argument("--axis", action="append", required=True,
                    help="dotted config path; repeat for a grid")
    sw.add_argument("--values", action="append", required=True,
                    help="comma-separated values, one list per --axis")
    sw.add_argument("--out", type=Path, default=Path("runs/sweep"))
    sw.add_argument("--workers", type=int, default=1)

    val = sub.add_parser("validate-config", help="check a config and print the resolved document")
    _config_args(val)
    return ap


def _resolve(args) -> ExperimentConfig:
    exp = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    for key, text in vars(args).items():
        if key.startswith("set:") and text is not None:
            path = key[4:]
            exp = exp.replace(path, coerce_value(path, text))
    return exp


def _split_values(axis: str, text: str) -> list:
    if axis == "replications.seeds":
        raise ConfigError("seeds are shared across sweep cells and cannot be an axis")
    return [coerce_value(axis, v.strip()) for v in text.split(",") if v.strip()]


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        exp = _resolve(args)
        if args.command == "sweep":
            if len(args.axis) != len(args.values):
                raise ConfigError("give one --values list per --axis")
            for a in args.axis:
                if a not in leaf_paths():
                    raise UnknownAxis(a)
            grids = [_split_values(a, v) for a, v in zip(args.axis, args.values)]
    except (ConfigError, UnknownAxis, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "validate-config":
            sys.stdout.write(exp.to_yaml())
        elif args.command == "run":
            results = run_experiment(exp, args.workers, args.dump)
            out = write_outputs(exp, results, args.out)
            for r in results:
                m = r.metrics
                print(f"{r.controller} seed={r.seed} delay={m.avg_delay:.2f}s "
                      f"stops/veh={m.stops_per_vehicle:.3f} residual={m.residual_vehicles}")
            print(f"wrote {out}")
        else:
            if len(args.axis) == 1:
                rows = sweep(exp, args.axis[0], grids[0], args.out, args.workers)
            else:
                rows = sweep(exp, args.axis, grids, args.out, args.workers)
            for row in rows:
                print(f"{row['axis']}={row['value']} delay={row['avg_delay_mean']:.2f}"
                      f"±{row['avg_delay_std']:.2f}s residual={row['residual_vehicles_mean']:.1f}")
            print(f"wrote {args.out / 'sweep.csv'}")
    except Exception as exc:  # noqa: BLE001 - any failure maps to the runtime exit code
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
