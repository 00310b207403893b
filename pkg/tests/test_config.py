import pytest
import yaml

from uoan_sim.config import (
    DEFAULTS,
    apply_overrides,
    apply_sweep_value,
    dump_config,
    load_config,
    scenario_from_dict,
    validate,
)
from uoan_sim.errors import ConfigurationError


def test_defaults_load_and_validate():
    cfg = load_config(None)
    validate(cfg)
    sc = scenario_from_dict(cfg)
    assert sc.node_count == 50
    assert sc.anchor_count == 8
    assert sc.volume_edge_m == 500.0
    assert sc.connectivity_threshold_bps == 1.0e5
    assert sc.water().name == "clear_ocean"
    assert sc.faces().n_faces == 8


def test_empty_file_is_a_valid_scenario(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    assert load_config(str(p)) == load_config(None)


def test_file_values_merge_over_defaults(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("geometry:\n  volume_edge_m: 90.0\noptical:\n  water_type: coastal\n")
    cfg = load_config(str(p))
    sc = scenario_from_dict(cfg)
    assert sc.volume_edge_m == 90.0
    assert sc.water().extinction_c == 0.305
    assert cfg["experiment"]["trials"] == DEFAULTS["experiment"]["trials"]


def test_unknown_keys_rejected_with_path(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("geometry:\n  volume_edge: 90.0\n")
    with pytest.raises(ConfigurationError, match="geometry.volume_edge"):
        load_config(str(p))


def test_overrides_parse_and_coerce():
    cfg = apply_overrides(load_config(None), ["optical.tx_power_w=0.1", "experiment.trials=7"])
    assert cfg["optical"]["tx_power_w"] == 0.1
    assert cfg["experiment"]["trials"] == 7
    with pytest.raises(ConfigurationError, match="no.such.key"):
        apply_overrides(cfg, ["no.such.key=1"])
    with pytest.raises(ConfigurationError):
        apply_overrides(cfg, ["malformed"])


def test_validate_cross_field_errors():
    for key, value in [
        ("experiment.trials", 0),
        ("experiment.node_count", -1),
        ("experiment.routing_mode", "sonar"),
        ("geometry.volume_edge_m", -5),
        ("localization.weighting", "magic"),
        ("localization.noise_sigma_db_optical", -1),
    ]:
        with pytest.raises(ConfigurationError):
            load_config(None, [f"{key}={value}"])


def test_single_face_needs_divergence_override():
    with pytest.raises(ConfigurationError):
        load_config(None, ["geometry.n_faces=1"])
    cfg = load_config(None, ["geometry.n_faces=1", "geometry.divergence_half_angle_rad=0.5"])
    assert scenario_from_dict(cfg).faces().divergence_half_angle == 0.5


def test_sweep_validation_covers_every_point():
    with pytest.raises(ConfigurationError):
        load_config(None, ["experiment.sweep_param=tx_power"])
    with pytest.raises(ConfigurationError):
        load_config(None, ["experiment.sweep_param=n_faces"])  # empty values
    # an invalid value anywhere in the sweep fails validation up front
    with pytest.raises(ConfigurationError):
        load_config(
            None,
            ["experiment.sweep_param=water_type", "experiment.sweep_values=[coastal, lake]"],
        )
    cfg = load_config(
        None, ["experiment.sweep_param=n_faces", "experiment.sweep_values=[2, 8]"]
    )
    assert cfg["experiment"]["sweep_values"] == [2, 8]


def test_apply_sweep_value_per_parameter():
    cfg = load_config(None)
    assert apply_sweep_value(cfg, "n_faces", 16)["geometry"]["n_faces"] == 16
    assert (
        apply_sweep_value(cfg, "divergence_half_angle", 0.3)["geometry"][
            "divergence_half_angle_rad"
        ]
        == 0.3
    )
    assert apply_sweep_value(cfg, "water_type", "harbor")["optical"]["water_type"] == "harbor"
    assert apply_sweep_value(cfg, "node_count", 10)["experiment"]["node_count"] == 10
    out = apply_sweep_value(cfg, "noise_sigma_db", 2.5)["localization"]
    assert out["noise_sigma_db_optical"] == 2.5
    assert out["noise_sigma_db_acoustic"] == 2.5
    with pytest.raises(ConfigurationError):
        apply_sweep_value(cfg, "tx_power", 1.0)
    # sweep substitution never mutates the source dict
    assert cfg == load_config(None)


def test_dump_config_is_deterministic_yaml():
    cfg = load_config(None)
    text = dump_config(cfg)
    assert yaml.safe_load(text) == cfg
    assert text == dump_config(load_config(None))


def test_extinction_override_decouples_from_presets():
    cfg = load_config(
        None, ["optical.water_type=custom", "optical.extinction_coeff_per_m=0.2"]
    )
    assert scenario_from_dict(cfg).water().extinction_c == 0.2
    with pytest.raises(ConfigurationError):
        load_config(None, ["optical.water_type=custom"])
