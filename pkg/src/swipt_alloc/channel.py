"""Network topology and random channel generation.

Links follow a distance-dependent path loss (dB intercept + 10*alpha*log10(d/d0)),
log-normal shadowing, and unit-power Rician small-scale fading.  One path-loss and
one shadowing draw per transmitter/receiver link; independent fades per subcarrier
and receive antenna.  Everything is driven by an explicit numpy Generator so that
realizations are reproducible and parallelizable by seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .units import db_to_linear, dbm_to_watt

# Roles a user can take in a topology.
ROLE_ID = "id"
ROLE_EH = "eh"
ROLE_COLOCATED = "co-located"


@dataclass(frozen=True)
class ChannelParams:
    """Propagation parameters for cellular links (defaults follow the indoor
    small-cell setting used throughout: 31.7 + 27.6 log10(d/d0) path loss,
    Rician factor 3 dB, -120 dBm noise)."""

    path_loss_intercept_db: float = 31.7
    path_loss_exponent: float = 2.76
    reference_distance_m: float = 5.0
    shadowing_std_db: float = 8.0
    rician_factor_db: float = 3.0
    noise_power_dbm: float = -120.0

    def __post_init__(self) -> None:
        if self.path_loss_exponent <= 0:
            raise ValueError("pathLossExponent must be positive")
        if self.reference_distance_m <= 0:
            raise ValueError("referenceDistanceM must be positive")
        if self.shadowing_std_db < 0:
            raise ValueError("shadowingStdDb must be non-negative")
        if self.noise_power_w <= 0 or not np.isfinite(self.noise_power_w):
            raise ValueError("noise power must convert to a positive linear watt value")

    @property
    def noise_power_w(self) -> float:
        return dbm_to_watt(self.noise_power_dbm)


@dataclass(frozen=True)
class UserSpec:
    """How many users of each role a cell carries."""

    count: int
    role: str  # ROLE_ID | ROLE_EH | ROLE_COLOCATED


@dataclass(frozen=True)
class TopologySpec:
    cell_count: int
    cell_radius_m: float  # d_max
    reference_distance_m: float  # d0: inner ring boundary
    users_per_cell: tuple[UserSpec, ...]
    antennas_per_user: int = 1
    # Optional: pin every user of a role to a fixed radial distance (distance sweeps).
    fixed_distance_m: float | None = None
    # Distance between neighbouring SBSs; the default leaves two cell
    # diameters of guard space between adjacent coverage discs.
    sbs_spacing_m: float | None = None

    def __post_init__(self) -> None:
        if self.reference_distance_m >= self.cell_radius_m:
            raise ValueError("reference distance d0 must be smaller than cell radius d_max")
        if self.antennas_per_user < 1:
            raise ValueError("antennasPerUser must be >= 1")
        if self.cell_count < 1:
            raise ValueError("cellCount must be >= 1")


@dataclass(frozen=True)
class Topology:
    """Placed network: SBS coordinates plus per-user (cell, role, position)."""

    cell_count: int
    cell_radius_m: float
    reference_distance_m: float
    antennas_per_user: int
    sbs_positions: np.ndarray  # (J, 2)
    user_positions: np.ndarray  # (U, 2)
    user_cells: np.ndarray  # (U,) serving cell index
    user_roles: tuple[str, ...]  # (U,)

    @property
    def user_count(self) -> int:
        return int(self.user_positions.shape[0])

    def users_in_cell(self, j: int, role: str | None = None) -> np.ndarray:
        mask = self.user_cells == j
        if role is not None:
            mask &= np.array([r == role for r in self.user_roles])
        return np.nonzero(mask)[0]

    def link_distances(self) -> np.ndarray:
        """(J, U) distance from every SBS to every user."""
        diff = self.sbs_positions[:, None, :] - self.user_positions[None, :, :]
        return np.linalg.norm(diff, axis=2)


@dataclass(frozen=True)
class ChannelRealization:
    """Squared channel gains for information (h) and power (g) transfer.

    Arrays are indexed [cell j][subcarrier n][user k][antenna m]; all entries are
    strictly positive linear power gains.
    """

    info_gain_sq: np.ndarray
    energy_gain_sq: np.ndarray
    seed: int = field(default=0)

    def __post_init__(self) -> None:
        for name, arr in (("info", self.info_gain_sq), ("energy", self.energy_gain_sq)):
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ValueError(f"{name} gains must be strictly positive and finite")
        if self.info_gain_sq.shape != self.energy_gain_sq.shape:
            raise ValueError("gain tensors must share the same shape")


def realization_rng(master_seed: int, realization_index: int) -> np.random.Generator:
    """Independent, reproducible generator for realization r of a run.

    A PCG64 stream keyed by SeedSequence([master_seed, r]): disjoint per index,
    bitwise reproducible across platforms.
    """
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(realization_index)]))


def realization_seed(master_seed: int, realization_index: int) -> int:
    """Stable integer label for the derived stream (reported in result rows)."""
    ss = np.random.SeedSequence([int(master_seed), int(realization_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _sbs_positions(cell_count: int, cell_radius_m: float, spacing_m: float | None = None) -> np.ndarray:
    """SBS layout: single cell at the origin; otherwise a ring sized so that
    neighbouring SBSs sit ``spacing_m`` apart (default 6 * d_max)."""
    if cell_count == 1:
        return np.zeros((1, 2))
    spacing = spacing_m if spacing_m is not None else 6.0 * cell_radius_m
    ring = (spacing / 2.0) / np.sin(np.pi / cell_count)
    angles = 2.0 * np.pi * np.arange(cell_count) / cell_count
    return ring * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def _draw_radius(rng: np.random.Generator, r_lo: float, r_hi: float) -> float:
    # Area-uniform draw in the annulus (r_lo, r_hi].
    u = rng.uniform()
    return float(np.sqrt(r_lo**2 + u * (r_hi**2 - r_lo**2)))


def place_users(spec: TopologySpec, rng: np.random.Generator) -> Topology:
    """Draw user positions: ID and co-located users area-uniform in the outer
    annulus (d0, d_max); EH users in the inner disc (0, d0]."""
    sbs = _sbs_positions(spec.cell_count, spec.cell_radius_m, spec.sbs_spacing_m)
    positions = []
    cells = []
    roles: list[str] = []
    d0 = spec.reference_distance_m
    d_max = spec.cell_radius_m
    for j in range(spec.cell_count):
        for group in spec.users_per_cell:
            for _ in range(group.count):
                if spec.fixed_distance_m is not None:
                    r = spec.fixed_distance_m
                elif group.role == ROLE_EH:
                    r = _draw_radius(rng, 0.0, d0)
                else:
                    r = _draw_radius(rng, d0, d_max)
                theta = rng.uniform(0.0, 2.0 * np.pi)
                positions.append(sbs[j] + r * np.array([np.cos(theta), np.sin(theta)]))
                cells.append(j)
                roles.append(group.role)
    return Topology(
        cell_count=spec.cell_count,
        cell_radius_m=d_max,
        reference_distance_m=d0,
        antennas_per_user=spec.antennas_per_user,
        sbs_positions=sbs,
        user_positions=np.array(positions),
        user_cells=np.array(cells, dtype=int),
        user_roles=tuple(roles),
    )


def path_loss_db(d_m: float, params: ChannelParams) -> float:
    """intercept + 10*alpha*log10(d/d0); distances below d0 are clamped to d0."""
    if d_m <= 0:
        raise ValueError("distance must be positive")
    d_eff = max(d_m, params.reference_distance_m)
    return params.path_loss_intercept_db + 10.0 * params.path_loss_exponent * np.log10(
        d_eff / params.reference_distance_m
    )


def rician_fade(rng: np.random.Generator, rician_factor_db: float, size=None) -> np.ndarray | complex:
    """Unit-mean-square-magnitude Rician sample(s):
    fade = sqrt(Kf/(Kf+1)) + sqrt(1/(Kf+1)) * CN(0,1), Kf = 10^(rho/10).

    rho >= 100 dB is treated as the pure line-of-sight limit (|fade| = 1).
    """
    if not np.isfinite(rician_factor_db):
        raise ValueError("Rician factor must be finite (in dB)")
    if rician_factor_db >= 100.0:
        out = np.ones(size, dtype=complex) if size is not None else complex(1.0)
        return out
    kf = db_to_linear(rician_factor_db)
    los = np.sqrt(kf / (kf + 1.0))
    scatter_std = np.sqrt(1.0 / (kf + 1.0))
    n = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return los + scatter_std * n / np.sqrt(2.0)


def draw_realization(
    topology: Topology,
    params: ChannelParams,
    subcarrier_count: int,
    rng: np.random.Generator,
    tie_energy_to_info: bool = False,
) -> ChannelRealization:
    """One channel realization over all (cell, subcarrier, user, antenna) links.

    |h|^2 = |fade|^2 * 10^(-(pathloss + shadow)/10), with a single path-loss and
    shadowing draw per (cell, user) link shared by both transfer types, and
    independent small-scale fades per subcarrier/antenna for h and for g.  With
    ``tie_energy_to_info`` the energy gains reuse the information fades (single
    antenna co-located receivers see one physical channel).
    """
    dist = topology.link_distances()  # (J, U)
    j_count, u_count = dist.shape
    n = subcarrier_count
    m = topology.antennas_per_user

    loss_db = np.empty_like(dist)
    for j in range(j_count):
        for u in range(u_count):
            loss_db[j, u] = path_loss_db(dist[j, u], params)
    shadow_db = (
        rng.standard_normal(dist.shape) * params.shadowing_std_db
        if params.shadowing_std_db > 0
        else np.zeros_like(dist)
    )
    large_scale = 10.0 ** (-(loss_db + shadow_db) / 10.0)  # (J, U)

    fade_h = rician_fade(rng, params.rician_factor_db, size=(j_count, n, u_count, m))
    fade_g = fade_h if tie_energy_to_info else rician_fade(rng, params.rician_factor_db, size=(j_count, n, u_count, m))

    ls = large_scale[:, None, :, None]
    info = np.abs(fade_h) ** 2 * ls
    energy = np.abs(fade_g) ** 2 * ls
    return ChannelRealization(info_gain_sq=info, energy_gain_sq=energy)
