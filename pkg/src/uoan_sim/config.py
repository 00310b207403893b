"""Experiment configuration: defaults, YAML loading, overrides, validation.

Config files are YAML documents with one section per module (experiment,
geometry, optical, acoustic, localization). Every key has a default, so an
empty file is a valid scenario; unknown keys are rejected with their full
key path. Command-line overrides use dotted paths, e.g.
``optical.tx_power_w=0.1``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import yaml

from .acoustic import AcousticParams
from .errors import ConfigurationError
from .geometry import Box, FaceSet, face_set
from .optical import EXTINCTION_PRESETS, OpticalParams, WaterType

DEFAULTS = {
    "experiment": {
        "seed": 1,
        "trials": 200,
        "node_count": 50,
        "anchor_count": 8,
        "connectivity_threshold_bps": 1.0e5,
        "routing_mode": "hybrid",  # optical | acoustic | hybrid
        "run_routing": True,
        # False reports the mean end-to-end rate over reachable nodes only
        # instead of counting unreachable nodes as 0 bps
        "unreachable_as_zero": True,
        "sweep_param": None,  # n_faces | divergence_half_angle | water_type | node_count | noise_sigma_db
        "sweep_values": [],
    },
    "geometry": {
        # the experiment's "volume of 500" is read as a 500 m cube; see docs
        "volume_edge_m": 500.0,
        "n_faces": 8,
        "divergence_half_angle_rad": None,  # None -> equal-solid-angle rule
        "anchor_placement": "volume",  # volume | surface
    },
    "optical": {
        "water_type": "clear_ocean",
        "extinction_coeff_per_m": None,  # None -> preset for water_type
        "tx_power_w": 0.2,
        "tx_efficiency": 0.9,
        "rx_efficiency": 0.9,
        "rx_aperture_m2": 0.005,
        "responsivity_a_per_w": 0.5,
        "noise_variance_a2": 1.0e-21,
        "bandwidth_hz": 1.0e6,
        "fec_ber_threshold": 1.0e-3,
    },
    "acoustic": {
        "source_level_db": 135.0,
        "frequency_khz": 20.0,
        "spreading_exponent": 1.5,
        "bandwidth_hz": 5.0e3,
        "shipping_factor": 0.5,
        "wind_speed_mps": 5.0,
        "fec_ber_threshold": 1.0e-3,
    },
    "localization": {
        "modes": ["acoustic", "optical", "hybrid"],
        "noise_sigma_db_optical": 1.0,
        "noise_sigma_db_acoustic": 1.0,
        "weighting": "uniform",  # uniform | inverse_variance
    },
}

SWEEPABLE = ("n_faces", "divergence_half_angle", "water_type", "node_count", "noise_sigma_db")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        full = f"{path}{key}"
        if key not in base:
            raise ConfigurationError(f"unknown config key: {full}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"config key {full} must be a section")
            out[key] = _merge(base[key], value, f"{full}.")
        else:
            out[key] = value
    return out


def _coerce(text: str):
    return yaml.safe_load(text)


def apply_overrides(cfg: dict, overrides: list) -> dict:
    """Apply dotted key=value overrides; keys must already exist."""
    out = copy.deepcopy(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not of the form key.path=value")
        dotted, raw = item.split("=", 1)
        keys = dotted.strip().split(".")
        cursor = out
        for k in keys[:-1]:
            if not isinstance(cursor, dict) or k not in cursor:
                raise ConfigurationError(f"unknown config key: {dotted}")
            cursor = cursor[k]
        leaf = keys[-1]
        if not isinstance(cursor, dict) or leaf not in cursor:
            raise ConfigurationError(f"unknown config key: {dotted}")
        if isinstance(cursor[leaf], dict):
            raise ConfigurationError(f"config key {dotted} is a section, not a value")
        cursor[leaf] = _coerce(raw)
    return out


def load_config(path: str | None = None, overrides: list = ()) -> dict:
    """Merged config dict from defaults, an optional YAML file, and overrides."""
    merged = copy.deepcopy(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
        if not isinstance(doc, dict):
            raise ConfigurationError(f"config file {path} must contain a mapping")
        merged = _merge(merged, doc)
    merged = apply_overrides(merged, list(overrides))
    validate(merged)
    return merged


def validate(cfg: dict) -> None:
    """Check cross-field constraints; raises ConfigurationError with key paths."""
    exp = cfg["experiment"]
    if not isinstance(exp["trials"], int) or exp["trials"] < 1:
        raise ConfigurationError("experiment.trials must be a positive integer")
    if not isinstance(exp["node_count"], int) or exp["node_count"] < 1:
        raise ConfigurationError("experiment.node_count must be a positive integer")
    if exp["anchor_count"] < 0:
        raise ConfigurationError("experiment.anchor_count must be >= 0")
    if exp["connectivity_threshold_bps"] <= 0:
        raise ConfigurationError("experiment.connectivity_threshold_bps must be positive")
    if exp["routing_mode"] not in ("optical", "acoustic", "hybrid"):
        raise ConfigurationError("experiment.routing_mode must be optical, acoustic, or hybrid")
    for key in ("run_routing", "unreachable_as_zero"):
        if not isinstance(exp[key], bool):
            raise ConfigurationError(f"experiment.{key} must be a boolean")
    if exp["sweep_param"] is not None:
        if exp["sweep_param"] not in SWEEPABLE:
            raise ConfigurationError(
                f"experiment.sweep_param must be one of {SWEEPABLE}, got {exp['sweep_param']!r}"
            )
        if not exp["sweep_values"]:
            raise ConfigurationError("experiment.sweep_values must be a nonempty list")
    geo = cfg["geometry"]
    if geo["volume_edge_m"] <= 0:
        raise ConfigurationError("geometry.volume_edge_m must be positive")
    if not isinstance(geo["n_faces"], int) or geo["n_faces"] < 1:
        raise ConfigurationError("geometry.n_faces must be a positive integer")
    if geo["anchor_placement"] not in ("volume", "surface"):
        raise ConfigurationError("geometry.anchor_placement must be volume or surface")
    wt = cfg["optical"]["water_type"]
    if wt not in EXTINCTION_PRESETS and cfg["optical"]["extinction_coeff_per_m"] is None:
        raise ConfigurationError(
            f"optical.water_type {wt!r} has no preset; set optical.extinction_coeff_per_m"
        )
    loc = cfg["localization"]
    for mode in loc["modes"]:
        if mode not in ("acoustic", "optical", "hybrid"):
            raise ConfigurationError(f"localization.modes contains unknown mode {mode!r}")
    if loc["weighting"] not in ("inverse_variance", "uniform"):
        raise ConfigurationError("localization.weighting must be inverse_variance or uniform")
    for key in ("noise_sigma_db_optical", "noise_sigma_db_acoustic"):
        if loc[key] < 0:
            raise ConfigurationError(f"localization.{key} must be >= 0")
    # parameter record and geometry invariants, including per sweep point
    points = (
        [(exp["sweep_param"], v) for v in exp["sweep_values"]]
        if exp["sweep_param"] is not None
        else [(None, None)]
    )
    for param, value in points:
        resolved = cfg if param is None else apply_sweep_value(cfg, param, value)
        sc = scenario_from_dict(resolved)
        try:
            sc.optical_params()
            sc.acoustic_params()
            sc.water()
            sc.box()
            sc.faces()
        except (ConfigurationError, ValueError) as err:
            raise ConfigurationError(str(err)) from None


@dataclass(frozen=True)
class Scenario:
    """One fully resolved simulation point (a config with sweep value applied)."""

    seed: int
    trials: int
    node_count: int
    anchor_count: int
    connectivity_threshold_bps: float
    routing_mode: str
    run_routing: bool
    unreachable_as_zero: bool
    volume_edge_m: float
    n_faces: int
    divergence_half_angle_rad: float | None
    anchor_placement: str
    water_type: str
    extinction_coeff_per_m: float | None
    optical_raw: dict = field(repr=False, default_factory=dict)
    acoustic_raw: dict = field(repr=False, default_factory=dict)
    localization_modes: tuple = ()
    noise_sigma_db_optical: float = 1.0
    noise_sigma_db_acoustic: float = 1.0
    weighting: str = "uniform"

    def box(self) -> Box:
        return Box.cube(self.volume_edge_m)

    def faces(self) -> FaceSet:
        return face_set(self.n_faces, self.divergence_half_angle_rad)

    def water(self) -> WaterType:
        if self.extinction_coeff_per_m is not None:
            return WaterType(self.water_type, self.extinction_coeff_per_m)
        return WaterType.preset(self.water_type)

    def optical_params(self) -> OpticalParams:
        o = self.optical_raw
        return OpticalParams(
            tx_power=o["tx_power_w"],
            tx_efficiency=o["tx_efficiency"],
            rx_efficiency=o["rx_efficiency"],
            rx_aperture_area=o["rx_aperture_m2"],
            responsivity=o["responsivity_a_per_w"],
            noise_variance=o["noise_variance_a2"],
            bandwidth=o["bandwidth_hz"],
            fec_ber_threshold=o["fec_ber_threshold"],
        )

    def acoustic_params(self) -> AcousticParams:
        a = self.acoustic_raw
        return AcousticParams(
            source_level=a["source_level_db"],
            frequency=a["frequency_khz"],
            spreading_exponent=a["spreading_exponent"],
            bandwidth=a["bandwidth_hz"],
            shipping_factor=a["shipping_factor"],
            wind_speed=a["wind_speed_mps"],
            fec_ber_threshold=a["fec_ber_threshold"],
        )


def scenario_from_dict(cfg: dict) -> Scenario:
    exp, geo, o, a, loc = (
        cfg["experiment"],
        cfg["geometry"],
        cfg["optical"],
        cfg["acoustic"],
        cfg["localization"],
    )
    return Scenario(
        seed=exp["seed"],
        trials=exp["trials"],
        node_count=exp["node_count"],
        anchor_count=exp["anchor_count"],
        connectivity_threshold_bps=exp["connectivity_threshold_bps"],
        routing_mode=exp["routing_mode"],
        run_routing=exp["run_routing"],
        unreachable_as_zero=exp["unreachable_as_zero"],
        volume_edge_m=geo["volume_edge_m"],
        n_faces=geo["n_faces"],
        divergence_half_angle_rad=geo["divergence_half_angle_rad"],
        anchor_placement=geo["anchor_placement"],
        water_type=o["water_type"],
        extinction_coeff_per_m=o["extinction_coeff_per_m"],
        optical_raw=dict(o),
        acoustic_raw=dict(a),
        localization_modes=tuple(loc["modes"]),
        noise_sigma_db_optical=loc["noise_sigma_db_optical"],
        noise_sigma_db_acoustic=loc["noise_sigma_db_acoustic"],
        weighting=loc["weighting"],
    )


def apply_sweep_value(cfg: dict, param: str, value) -> dict:
    """Copy of the config dict with one sweep value substituted."""
    out = copy.deepcopy(cfg)
    if param == "n_faces":
        out["geometry"]["n_faces"] = int(value)
    elif param == "divergence_half_angle":
        out["geometry"]["divergence_half_angle_rad"] = float(value)
    elif param == "water_type":
        out["optical"]["water_type"] = str(value)
        out["optical"]["extinction_coeff_per_m"] = None
    elif param == "node_count":
        out["experiment"]["node_count"] = int(value)
    elif param == "noise_sigma_db":
        out["localization"]["noise_sigma_db_optical"] = float(value)
        out["localization"]["noise_sigma_db_acoustic"] = float(value)
    else:
        raise ConfigurationError(f"unsweepable parameter {param!r}")
    return out


def dump_config(cfg: dict) -> str:
    """Deterministic YAML echo used for run manifests."""
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False)
