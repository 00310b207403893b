"""Seeded Monte Carlo orchestration: trials, sweeps, CSV and manifest output.

Every trial is a pure function of (seed, trial_index) plus the scenario
parameters; deployments draw from a substream keyed only on the seed and
trial index so sweep points share common random numbers. Trials may run on
several workers without changing any output byte.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, localization, routing
from .config import Scenario, apply_sweep_value, dump_config, scenario_from_dict, validate
from .errors import ConfigurationError
from .geometry import sample_deployment
from .rng import substream

# substream purposes within one trial
_STREAM_DEPLOY = 0
_STREAM_LOC_NOISE = 1

CSV_COLUMNS = [
    "sweep_param",
    "sweep_value",
    "water_type",
    "n_faces",
    "divergence_rad",
    "trials",
    "mean_e2e_bps",
    "stderr_e2e_bps",
    "conn_prob",
    "rmse_acoustic_m",
    "rmse_optical_m",
    "rmse_hybrid_m",
    "localized_frac_acoustic",
    "localized_frac_optical",
    "localized_frac_hybrid",
    "mean_e2e_reachable_bps",
    "stderr_rmse_acoustic_m",
    "stderr_rmse_optical_m",
    "stderr_rmse_hybrid_m",
    "rmse_localized_acoustic_m",
    "rmse_localized_optical_m",
    "rmse_localized_hybrid_m",
]


@dataclass(frozen=True)
class SweepResult:
    sweep_param: str | None
    rows: list  # one dict per sweep point, keys = CSV_COLUMNS


def trial_deployment(sc: Scenario, trial_index: int):
    """Deployment for (seed, trial_index); independent of swept channel knobs."""
    rng = substream(sc.seed, trial_index, _STREAM_DEPLOY)
    dep = sample_deployment(sc.node_count, sc.anchor_count, sc.box(), rng)
    if sc.anchor_placement == "surface":
        anchors = dep.anchor_positions.copy()
        anchors[:, 2] = dep.volume.hi[2]
        dep = type(dep)(
            node_positions=dep.node_positions,
            anchor_positions=anchors,
            sink_position=dep.sink_position,
            volume=dep.volume,
        )
    return dep


def build_trial_graph(sc: Scenario, trial_index: int) -> routing.NetworkGraph:
    dep = trial_deployment(sc, trial_index)
    return routing.build_graph(
        dep,
        sc.faces(),
        sc.optical_params(),
        sc.water(),
        sc.acoustic_params(),
        sc.routing_mode,
    )


def run_trial(sc: Scenario, trial_index: int) -> dict:
    """One deterministic Monte Carlo trial: routing metrics + localization."""
    dep = trial_deployment(sc, trial_index)
    rec: dict = {"trial": trial_index}

    if sc.run_routing:
        graph = routing.build_graph(
            dep, sc.faces(), sc.optical_params(), sc.water(), sc.acoustic_params(), sc.routing_mode
        )
        rates = routing.e2e_rates(graph, graph.sink_id)
        values = np.array(sorted(rates.values()), dtype=float)
        reachable = values[values > 0.0]
        rec["mean_e2e_bps"] = float(values.mean())
        rec["mean_e2e_reachable_bps"] = float(reachable.mean()) if len(reachable) else 0.0
        rec["connected"] = routing.is_connected(rates, sc.connectivity_threshold_bps)

    for mode in sc.localization_modes:
        # a fresh substream per mode with identical keys gives matched noise
        res = localization.network_localize(
            dep,
            mode,
            sc.faces(),
            substream(sc.seed, trial_index, _STREAM_LOC_NOISE),
            opt_params=sc.optical_params(),
            water=sc.water(),
            aco_params=sc.acoustic_params(),
            noise_sigma_db_optical=sc.noise_sigma_db_optical,
            noise_sigma_db_acoustic=sc.noise_sigma_db_acoustic,
            weighting=sc.weighting,
        )
        rec[f"rmse_incl_{mode}"] = res.rmse_inclusive
        rec[f"rmse_localized_{mode}"] = res.rmse
        rec[f"frac_{mode}"] = res.localized_fraction
    return rec


def _worker_count() -> int:
    env = os.environ.get("UOAN_SIM_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError(f"UOAN_SIM_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigurationError("UOAN_SIM_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _run_point_trials(sc: Scenario, workers: int) -> list:
    indices = range(sc.trials)
    if workers <= 1:
        return [run_trial(sc, i) for i in indices]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_trial, [sc] * sc.trials, indices, chunksize=8))


def _mean_stderr(values) -> tuple:
    arr = np.array([v for v in values if not (isinstance(v, float) and math.isnan(v))], dtype=float)
    if len(arr) == 0:
        return float("nan"), float("nan")
    if len(arr) == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(len(arr)))


def _aggregate(sc: Scenario, sweep_param, sweep_value, records: list) -> dict:
    row = dict.fromkeys(CSV_COLUMNS, float("nan"))
    row["sweep_param"] = sweep_param if sweep_param is not None else ""
    row["sweep_value"] = sweep_value if sweep_value is not None else ""
    row["water_type"] = sc.water_type
    row["n_faces"] = sc.n_faces
    row["divergence_rad"] = sc.faces().divergence_half_angle
    row["trials"] = sc.trials

    if sc.run_routing:
        key = "mean_e2e_bps" if sc.unreachable_as_zero else "mean_e2e_reachable_bps"
        mean, err = _mean_stderr([r[key] for r in records])
        row["mean_e2e_bps"], row["stderr_e2e_bps"] = mean, err
        row["mean_e2e_reachable_bps"] = _mean_stderr(
            [r["mean_e2e_reachable_bps"] for r in records]
        )[0]
        row["conn_prob"] = sum(1 for r in records if r["connected"]) / len(records)
    for mode in ("acoustic", "optical", "hybrid"):
        if mode not in sc.localization_modes:
            continue
        mean, err = _mean_stderr([r[f"rmse_incl_{mode}"] for r in records])
        row[f"rmse_{mode}_m"], row[f"stderr_rmse_{mode}_m"] = mean, err
        row[f"rmse_localized_{mode}_m"] = _mean_stderr(
            [r[f"rmse_localized_{mode}"] for r in records]
        )[0]
        row[f"localized_frac_{mode}"] = _mean_stderr([r[f"frac_{mode}"] for r in records])[0]
    return row


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(result: SweepResult) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in result.rows:
        lines.append(",".join(_format(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def run_sweep(cfg: dict, out_csv: str | None = None, workers: int | None = None) -> SweepResult:
    """Run all sweep points and optionally write the CSV plus a manifest.

    The manifest (<out>.manifest.yaml) echoes the full resolved config with
    the seed and tool version, enough to rerun the sweep identically.
    """
    validate(cfg)
    exp = cfg["experiment"]
    sweep_param = exp["sweep_param"]
    points = (
        [(sweep_param, v) for v in exp["sweep_values"]]
        if sweep_param is not None
        else [(None, None)]
    )
    if workers is None:
        workers = _worker_count()

    out_path = Path(out_csv) if out_csv is not None else None
    if out_path is not None:
        # fail on unwritable output before burning any compute
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w") as fh:
            fh.write("")

    rows = []
    for param, value in points:
        point_cfg = cfg if param is None else apply_sweep_value(cfg, param, value)
        sc = scenario_from_dict(point_cfg)
        records = _run_point_trials(sc, workers)
        rows.append(_aggregate(sc, param, value, records))
    result = SweepResult(sweep_param=sweep_param, rows=rows)

    if out_path is not None:
        out_path.write_text(render_csv(result))
        manifest = {
            "tool": "uoan-sim",
            "version": __version__,
            "seed": exp["seed"],
            "config": cfg,
        }
        manifest_path = Path(str(out_path) + ".manifest.yaml")
        manifest_path.write_text(dump_config(manifest))
    return result
