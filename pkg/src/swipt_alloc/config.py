"""Scenario configuration: JSON loading, validation, and defaults.

Field names mirror the simulation-parameter tables; an empty config yields the
full default single-cell scenario.  Unknown keys and out-of-range values are
rejected with named errors.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .units import dbm_to_watt


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    cell_coverage_m: float = 20.0  # d_max
    reference_distance_m: float = 5.0  # d0
    num_cells: int = 3  # J (multi-cell chapters; the harvested-energy chapter uses one)
    num_users_per_cell: int = 4  # K
    num_id_users_per_cell: int = 2  # separated-receiver chapter
    num_eh_users_per_cell: int = 2
    num_antennas_per_user: int = 2  # M
    num_subcarriers: int = 16  # N
    id_subcarrier_count: int | None = None  # Z, defaults to N/2
    noise_power_dbm: float = -120.0
    subcarrier_bandwidth_hz: float = 180e3
    path_loss_exponent: float = 2.76
    path_loss_intercept_db: float = 31.7
    shadowing_std_db: float = 8.0
    rician_factor_db: float = 3.0
    conversion_efficiency: float = 0.3  # eps
    amplifier_efficiency: float = 0.2  # kappa
    p_max_dbm: float = 30.0
    r_min_bps_hz: float = 1.0
    eh_min_dbm: float = 0.0  # tabulated floor; far above reachable harvest at
    # these ranges, so experiment configs override it (see README)
    i_max_dbm: float = -70.0
    circuit_power_dbm: float = 23.0  # P_c^SBS
    num_realizations: int = 100
    fixed_distance_m: float | None = None  # pin users to one radius (distance sweeps)
    sbs_spacing_m: float | None = None  # inter-site distance; default 6 * d_max
    circuit_per_sbs: bool = False
    rate_bandwidth_scaling: bool = False  # report bit/s instead of bps/Hz

    @property
    def p_max_w(self) -> float:
        return dbm_to_watt(self.p_max_dbm)

    @property
    def noise_power_w(self) -> float:
        return dbm_to_watt(self.noise_power_dbm)

    @property
    def eh_min_w(self) -> float:
        return dbm_to_watt(self.eh_min_dbm)

    @property
    def i_max_w(self) -> float:
        return dbm_to_watt(self.i_max_dbm)

    @property
    def circuit_power_w(self) -> float:
        return dbm_to_watt(self.circuit_power_dbm)

    @property
    def z_count(self) -> int:
        return self.id_subcarrier_count if self.id_subcarrier_count is not None else self.num_subcarriers // 2

    @property
    def rate_unit_scale(self) -> float:
        return self.subcarrier_bandwidth_hz if self.rate_bandwidth_scaling else 1.0

    def replace(self, **kw) -> "ScenarioConfig":
        data = asdict(self)
        data.update(kw)
        return ScenarioConfig(**data)


_VALIDATORS = {
    "cell_coverage_m": (lambda v: v > 0, "cellCoverage must be positive"),
    "reference_distance_m": (lambda v: v > 0, "referenceDistance must be positive"),
    "num_cells": (lambda v: v >= 1, "numCells must be at least 1"),
    "num_users_per_cell": (lambda v: v >= 1, "numUsersPerCell must be at least 1"),
    "num_id_users_per_cell": (lambda v: v >= 0, "numIdUsersPerCell must be non-negative"),
    "num_eh_users_per_cell": (lambda v: v >= 0, "numEhUsersPerCell must be non-negative"),
    "num_antennas_per_user": (lambda v: v >= 1, "numAntennasPerUser must be at least 1"),
    "num_subcarriers": (lambda v: v >= 1, "numSubcarriers must be at least 1"),
    "path_loss_exponent": (lambda v: v > 0, "pathLossExponent must be positive"),
    "shadowing_std_db": (lambda v: v >= 0, "shadowingStd must be non-negative"),
    "conversion_efficiency": (lambda v: 0 < v < 1, "conversionEfficiency must lie in (0, 1)"),
    "amplifier_efficiency": (lambda v: 0 < v <= 1, "amplifierEfficiency must lie in (0, 1]"),
    "r_min_bps_hz": (lambda v: v >= 0, "rMin must be non-negative"),
    "num_realizations": (lambda v: v >= 1, "numRealizations must be at least 1"),
    "subcarrier_bandwidth_hz": (lambda v: v > 0, "subcarrierBandwidth must be positive"),
}


def config_from_dict(data: dict) -> ScenarioConfig:
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ScenarioConfig(**data)
    for name, (check, message) in _VALIDATORS.items():
        value = getattr(cfg, name)
        if value is not None and not check(value):
            raise ConfigError(message)
    if cfg.reference_distance_m >= cfg.cell_coverage_m:
        raise ConfigError("referenceDistance must be smaller than cellCoverage")
    if cfg.id_subcarrier_count is not None and not (0 < cfg.id_subcarrier_count < cfg.num_subcarriers):
        raise ConfigError("idSubcarrierCount must lie strictly between 0 and numSubcarriers")
    if cfg.fixed_distance_m is not None and cfg.fixed_distance_m <= 0:
        raise ConfigError("fixedDistance must be positive")
    if cfg.sbs_spacing_m is not None and cfg.sbs_spacing_m <= 0:
        raise ConfigError("sbsSpacing must be positive")
    return cfg


def validate_config(path: str | Path, experiment: str | None = None) -> ScenarioConfig:
    """Load + validate a JSON config; fills table defaults for absent fields.

    With an experiment hint, chapter-specific rules are enforced as well (a
    single harvesting-capable antenna cannot meet a positive rate floor)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    cfg = config_from_dict(data)
    antenna_switching = experiment is not None and (
        experiment.startswith("ee") or experiment in {"throughput-vs-pmax", "harvest-vs-pmax"}
    )
    if antenna_switching and cfg.num_antennas_per_user == 1 and cfg.r_min_bps_hz > 0:
        raise ConfigError(
            "numAntennasPerUser=1 with a positive rate floor is infeasible for "
            "antenna-switching scenarios (the lone antenna must harvest everywhere)"
        )
    return cfg


def config_hash(cfg: ScenarioConfig) -> str:
    import hashlib

    blob = json.dumps(asdict(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]
