"""Bridge from a validated config to per-realization solver scenarios."""

from __future__ import annotations

import numpy as np

from .channel import (
    ROLE_COLOCATED,
    ROLE_EH,
    ROLE_ID,
    ChannelParams,
    TopologySpec,
    UserSpec,
    draw_realization,
    place_users,
)
from .config import ScenarioConfig
from .eemax import EeScenario
from .ehmax import EhScenario
from .ratemax import MultiCellScenario


def channel_params(cfg: ScenarioConfig) -> ChannelParams:
    return ChannelParams(
        path_loss_intercept_db=cfg.path_loss_intercept_db,
        path_loss_exponent=cfg.path_loss_exponent,
        reference_distance_m=cfg.reference_distance_m,
        shadowing_std_db=cfg.shadowing_std_db,
        rician_factor_db=cfg.rician_factor_db,
        noise_power_dbm=cfg.noise_power_dbm,
    )


def build_eh_scenario(cfg: ScenarioConfig, rng: np.random.Generator) -> EhScenario:
    """Single-cell co-located scenario: one access point, K users, the same
    physical channel carrying both transfer types (single antenna, no
    splitter), and the spectrum split into the first Z ID subcarriers."""
    spec = TopologySpec(
        cell_count=1,
        cell_radius_m=cfg.cell_coverage_m,
        reference_distance_m=cfg.reference_distance_m,
        users_per_cell=(UserSpec(cfg.num_users_per_cell, ROLE_COLOCATED),),
        fixed_distance_m=cfg.fixed_distance_m,
    )
    topo = place_users(spec, rng)
    real = draw_realization(topo, channel_params(cfg), cfg.num_subcarriers, rng,
                            tie_energy_to_info=True)
    gains = real.info_gain_sq[0, :, :, 0]  # (N, K)
    z = cfg.z_count
    return EhScenario(
        subcarrier_count=cfg.num_subcarriers,
        id_subcarriers=np.arange(z),
        eh_subcarriers=np.arange(z, cfg.num_subcarriers),
        info_gain_sq=gains,
        energy_gain_sq=real.energy_gain_sq[0, :, :, 0],
        noise_power_w=cfg.noise_power_w,
        conversion_efficiency=np.full(cfg.num_users_per_cell, cfg.conversion_efficiency),
        p_max_w=cfg.p_max_w,
        r_min_bps_hz=cfg.r_min_bps_hz,
    )


def build_multicell_scenario(cfg: ScenarioConfig, rng: np.random.Generator) -> MultiCellScenario:
    """Separated-receiver multi-cell scenario: far ID users, near EH users."""
    spec = TopologySpec(
        cell_count=cfg.num_cells,
        cell_radius_m=cfg.cell_coverage_m,
        reference_distance_m=cfg.reference_distance_m,
        users_per_cell=(
            UserSpec(cfg.num_id_users_per_cell, ROLE_ID),
            UserSpec(cfg.num_eh_users_per_cell, ROLE_EH),
        ),
        fixed_distance_m=cfg.fixed_distance_m,
        sbs_spacing_m=cfg.sbs_spacing_m,
    )
    topo = place_users(spec, rng)
    real = draw_realization(topo, channel_params(cfg), cfg.num_subcarriers, rng)
    is_id = np.array([r == ROLE_ID for r in topo.user_roles])
    return MultiCellScenario(
        cell_count=cfg.num_cells,
        subcarrier_count=cfg.num_subcarriers,
        user_cells=topo.user_cells,
        user_is_id=is_id,
        info_gain_sq=real.info_gain_sq[:, :, :, 0],
        energy_gain_sq=real.energy_gain_sq[:, :, :, 0],
        noise_power_w=cfg.noise_power_w,
        conversion_efficiency=np.full(topo.user_count, cfg.conversion_efficiency),
        p_max_w=cfg.p_max_w,
        r_min_bps_hz=cfg.r_min_bps_hz,
        eh_min_w=cfg.eh_min_w,
        i_max_w=cfg.i_max_w,
    )


def build_ee_scenario(cfg: ScenarioConfig, rng: np.random.Generator) -> EeScenario:
    """Co-located multi-antenna scenario for the antenna-switching solver."""
    spec = TopologySpec(
        cell_count=cfg.num_cells,
        cell_radius_m=cfg.cell_coverage_m,
        reference_distance_m=cfg.reference_distance_m,
        users_per_cell=(UserSpec(cfg.num_users_per_cell, ROLE_COLOCATED),),
        antennas_per_user=cfg.num_antennas_per_user,
        fixed_distance_m=cfg.fixed_distance_m,
        sbs_spacing_m=cfg.sbs_spacing_m,
    )
    topo = place_users(spec, rng)
    real = draw_realization(topo, channel_params(cfg), cfg.num_subcarriers, rng)
    return EeScenario(
        cell_count=cfg.num_cells,
        subcarrier_count=cfg.num_subcarriers,
        user_cells=topo.user_cells,
        antennas_per_user=cfg.num_antennas_per_user,
        info_gain_sq=real.info_gain_sq,
        energy_gain_sq=real.energy_gain_sq,
        noise_power_w=cfg.noise_power_w,
        conversion_efficiency=np.full(topo.user_count, cfg.conversion_efficiency),
        amplifier_efficiency=np.full(cfg.num_cells, cfg.amplifier_efficiency),
        circuit_power_w=cfg.circuit_power_w,
        p_max_w=cfg.p_max_w,
        r_min_bps_hz=cfg.r_min_bps_hz,
        circuit_per_sbs=cfg.circuit_per_sbs,
    )
