import json

import pytest

from swipt_alloc.config import ConfigError, ScenarioConfig, config_from_dict, validate_config


def write(tmp_path, data):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return p


def test_empty_config_gives_table_defaults(tmp_path):
    cfg = validate_config(write(tmp_path, {}))
    assert cfg.num_subcarriers == 16
    assert cfg.num_users_per_cell == 4
    assert cfg.num_cells == 3
    assert cfg.num_antennas_per_user == 2
    assert cfg.noise_power_dbm == -120.0
    assert cfg.subcarrier_bandwidth_hz == 180e3
    assert cfg.p_max_dbm == 30.0
    assert cfg.r_min_bps_hz == 1.0
    assert cfg.conversion_efficiency == 0.3
    assert cfg.amplifier_efficiency == 0.2
    assert cfg.circuit_power_dbm == 23.0
    assert cfg.eh_min_dbm == 0.0
    assert cfg.i_max_dbm == -70.0
    assert cfg.reference_distance_m == 5.0
    assert cfg.cell_coverage_m == 20.0
    assert cfg.num_realizations == 100
    assert cfg.path_loss_exponent == 2.76
    assert cfg.z_count == 8


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown config keys"):
        validate_config(write(tmp_path, {"bogus_field": 1}))


def test_negative_path_loss_exponent_named_error():
    with pytest.raises(ConfigError, match="pathLossExponent must be positive"):
        config_from_dict({"path_loss_exponent": -1.0})


def test_inverted_rings_rejected():
    with pytest.raises(ConfigError, match="referenceDistance"):
        config_from_dict({"reference_distance_m": 30.0, "cell_coverage_m": 20.0})


def test_single_antenna_with_rate_floor_rejected_for_switching(tmp_path):
    path = write(tmp_path, {"num_antennas_per_user": 1, "r_min_bps_hz": 1.0})
    with pytest.raises(ConfigError, match="numAntennasPerUser"):
        validate_config(path, experiment="ee-vs-pmax")
    # fine for experiments without antenna switching
    cfg = validate_config(path, experiment="eh-vs-pmax")
    assert cfg.num_antennas_per_user == 1


def test_conversion_efficiency_range():
    with pytest.raises(ConfigError, match="conversionEfficiency"):
        config_from_dict({"conversion_efficiency": 1.5})


def test_unit_conversions():
    cfg = ScenarioConfig()
    assert cfg.p_max_w == pytest.approx(1.0)
    assert cfg.noise_power_w == pytest.approx(1e-15)
    assert cfg.circuit_power_w == pytest.approx(10 ** (-0.7))


def test_missing_file_is_config_error():
    with pytest.raises(ConfigError, match="not found"):
        validate_config("/nonexistent/cfg.json")


def test_invalid_json_is_config_error(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        validate_config(p)
