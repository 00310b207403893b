"""Command-line front end.

Subcommands:
    sweep     run the configured parameter sweep, write CSV + manifest
    trial     run a single trial and print its record as JSON
    graph     export one trial's connectivity graph as JSON
    localize  run localization for one trial and print summary JSON
    validate  check a config file without running anything

Exit codes: 0 success, 1 configuration error, 2 I/O error. Errors go to
stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__, localization, routing
from .config import load_config, scenario_from_dict, validate
from .errors import ConfigurationError, DomainError
from .experiment import build_trial_graph, run_sweep, run_trial, trial_deployment
from .rng import substream

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uoan-sim",
        description="Monte Carlo simulator for hybrid opto-acoustic underwater networks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_trial=False):
        p.add_argument("--config", help="YAML scenario file (defaults apply if omitted)")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY.PATH=VALUE",
            help="override a config value, e.g. optical.tx_power_w=0.1",
        )
        p.add_argument("--seed", type=int, help="override experiment.seed")
        p.add_argument("--trials", type=int, help="override experiment.trials")
        if with_trial:
            p.add_argument("--trial", type=int, default=0, help="trial index (default 0)")

    p = sub.add_parser("sweep", help="run the configured sweep and write results")
    common(p)
    p.add_argument("--out", required=True, help="output CSV path (manifest written alongside)")
    p.add_argument("--workers", type=int, help="worker processes (default: UOAN_SIM_THREADS or CPU count)")

    p = sub.add_parser("trial", help="run one trial and print its record")
    common(p, with_trial=True)

    p = sub.add_parser("graph", help="export one trial's graph as JSON")
    common(p, with_trial=True)
    p.add_argument("--out", help="output path (stdout if omitted)")

    p = sub.add_parser("localize", help="run localization for one trial")
    common(p, with_trial=True)

    p = sub.add_parser("validate", help="validate a config file")
    common(p)
    return parser


def _config_from_args(args) -> dict:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"experiment.seed={args.seed}")
    if getattr(args, "trials", None) is not None:
        overrides.append(f"experiment.trials={args.trials}")
    return load_config(args.config, overrides)


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def parse_and_dispatch(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "validate":
            validate(cfg)
            print("configuration ok")
            return EXIT_OK
        sc = scenario_from_dict(cfg)
        if args.command == "sweep":
            run_sweep(cfg, out_csv=args.out, workers=args.workers)
            return EXIT_OK
        if args.command == "trial":
            record = run_trial(sc, args.trial)
            print(json.dumps(record, sort_keys=True))
            return EXIT_OK
        if args.command == "graph":
            graph = build_trial_graph(sc, args.trial)
            _emit(routing.graph_to_json(graph), args.out)
            return EXIT_OK
        if args.command == "localize":
            dep = trial_deployment(sc, args.trial)
            out = {}
            for mode in sc.localization_modes:
                res = localization.network_localize(
                    dep,
                    mode,
                    sc.faces(),
                    substream(sc.seed, args.trial, 1),
                    opt_params=sc.optical_params(),
                    water=sc.water(),
                    aco_params=sc.acoustic_params(),
                    noise_sigma_db_optical=sc.noise_sigma_db_optical,
                    noise_sigma_db_acoustic=sc.noise_sigma_db_acoustic,
                    weighting=sc.weighting,
                )
                out[mode] = {
                    "rmse_m": res.rmse,
                    "rmse_inclusive_m": res.rmse_inclusive,
                    "localized_fraction": res.localized_fraction,
                    "rounds": res.rounds,
                }
            print(json.dumps(out, sort_keys=True))
            return EXIT_OK
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigurationError, DomainError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
