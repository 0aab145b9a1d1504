"""Brute-force reference solvers for desk-scale instances.

Independent ground truth for the iterative solvers: binary assignments are
enumerated exhaustively and powers grid-searched (log-spaced levels plus an
exact zero), with feasibility checked at a small absolute tolerance so
grid-edge points are not falsely rejected.  Only the pure evaluators are
shared with the main solvers; none of the iterative machinery is.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .eemax import EeAllocation, EeScenario, ee_rate, harvested_power, per_user_rates, total_power
from .ehmax import EhAllocation, EhScenario, harvested_energy, user_rate
from .ratemax import MultiCellAllocation, MultiCellScenario, true_rates

_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    power_levels: int = 64  # log-spaced from p_max/1e4 to p_max, plus exact 0
    max_binary_patterns: int = 1_000_000

    def __post_init__(self) -> None:
        if self.power_levels < 2:
            raise ValueError("need at least two power levels")

    def levels(self, p_max: float) -> np.ndarray:
        grid = np.geomspace(p_max / 1e4, p_max, self.power_levels)
        return np.concatenate([[0.0], grid])


class PatternBudgetExceeded(RuntimeError):
    def __init__(self, count: int, cap: int):
        super().__init__(
            f"enumeration would visit {count} binary patterns (cap {cap}); shrink the instance"
        )


def _check_cap(count: int, grid: GridSpec) -> None:
    if count > grid.max_binary_patterns:
        raise PatternBudgetExceeded(count, grid.max_binary_patterns)


# -- chapter 3 -----------------------------------------------------------------


def oracle_eh_max(scenario: EhScenario, grid: GridSpec | None = None) -> EhAllocation:
    """Exhaustive search over per-subcarrier ownership.

    Per pattern the structure is exploited: ID power for each user is the
    cheapest grid combination meeting the rate floor, and the entire residual
    budget lands on the strongest conversion-weighted harvest link.
    """
    grid = grid or GridSpec()
    sc = scenario
    n, k = sc.subcarrier_count, sc.user_count
    _check_cap((k + 1) ** n, grid)
    levels = grid.levels(sc.p_max_w)
    ids = np.asarray(sc.id_subcarriers, dtype=int)
    ehs = np.asarray(sc.eh_subcarriers, dtype=int)

    best: EhAllocation | None = None
    for owners in itertools.product(range(-1, k), repeat=n):
        owners = np.asarray(owners, dtype=int)
        p_tilde = np.zeros((n, k))
        feasible = True
        budget = sc.p_max_w
        for u in range(k):
            mine = ids[owners[ids] == u]
            if sc.r_min_bps_hz <= 0:
                continue
            if mine.size == 0:
                feasible = False
                break
            gains = sc.info_gain_sq[mine, u]
            best_combo = None
            for combo in itertools.product(levels, repeat=mine.size):
                combo = np.asarray(combo)
                total = combo.sum()
                if total > budget + _FEAS_TOL:
                    continue
                rate = float(np.log2(1.0 + combo * gains / sc.noise_power_w).sum())
                if rate >= sc.r_min_bps_hz - _FEAS_TOL and (best_combo is None or total < best_combo[0]):
                    best_combo = (total, combo)
            if best_combo is None:
                feasible = False
                break
            p_tilde[mine, u] = best_combo[1]
            budget -= best_combo[0]
        if not feasible or budget < -_FEAS_TOL:
            continue
        eh_links = [(sc_i, owners[sc_i]) for sc_i in ehs if owners[sc_i] >= 0]
        if eh_links:
            credits = [sc.conversion_efficiency[u] * sc.energy_gain_sq[sc_i, u] for sc_i, u in eh_links]
            sc_i, u = eh_links[int(np.argmax(credits))]
            p_tilde[sc_i, u] += max(budget, 0.0)
        value = harvested_energy(p_tilde, sc.energy_gain_sq, sc.conversion_efficiency, ehs)
        if best is None or value > best.harvested_w:
            a = np.zeros((n, k))
            for sc_i in range(n):
                if owners[sc_i] >= 0:
                    a[sc_i, owners[sc_i]] = 1.0
            best = EhAllocation(
                a=a, a_bin=a.copy(), p=p_tilde.copy(), p_tilde=p_tilde.copy(),
                harvested_w=value,
                per_user_rate=user_rate(p_tilde, sc.info_gain_sq, sc.noise_power_w, ids),
                feasible=True,
            )
    if best is None:
        empty = np.zeros((n, k))
        best = EhAllocation(a=empty, a_bin=empty.copy(), p=empty.copy(), p_tilde=empty.copy(),
                            harvested_w=0.0, per_user_rate=np.zeros(k), feasible=False)
    return best


# -- chapter 4 -----------------------------------------------------------------


def _id_pattern_options(scenario: MultiCellScenario) -> list[list[tuple[int, ...]]]:
    """Per (cell, subcarrier): which ID user (or none) owns it."""
    out = []
    for j in range(scenario.cell_count):
        ids = list(scenario.id_users_of_cell(j))
        per_sub = [tuple([-1] + ids) for _ in range(scenario.subcarrier_count)]
        out.append(per_sub)
    return out


def oracle_rate_max(scenario: MultiCellScenario, grid: GridSpec | None = None) -> MultiCellAllocation:
    """Exhaustive ownership enumeration with a joint power grid under the true
    interference.  Harvest users are pinned at the cheapest single-link floor
    placement (extra harvest power only costs budget and interference), with
    the placement subcarrier enumerated."""
    grid = grid or GridSpec()
    sc = scenario
    j_count, n_count = sc.cell_count, sc.subcarrier_count
    id_opts = _id_pattern_options(sc)
    pattern_count = 1
    for j in range(j_count):
        for n in range(n_count):
            pattern_count *= len(id_opts[j][n])
    for u in sc.eh_users:
        pattern_count *= n_count if sc.eh_min_w > 0 else 1
    _check_cap(pattern_count, grid)

    levels = grid.levels(sc.p_max_w)
    shape = (j_count, n_count, sc.user_count)
    best_value = -np.inf
    best_q: np.ndarray | None = None

    eh_placements = (
        itertools.product(*[range(n_count) for _ in sc.eh_users])
        if sc.eh_min_w > 0 and sc.eh_users.size
        else [()]
    )
    for eh_choice in eh_placements:
        q_eh = np.zeros(shape)
        eh_ok = True
        eh_spend = np.zeros(j_count)
        for u, n in zip(sc.eh_users, eh_choice):
            j = sc.user_cells[u]
            g = sc.energy_gain_sq[j, n, u]
            need = sc.eh_min_w / (sc.conversion_efficiency[u] * g)
            q_eh[j, n, u] = need
            eh_spend[j] += need
            if eh_spend[j] > sc.p_max_w + _FEAS_TOL:
                eh_ok = False
        if not eh_ok:
            continue
        flat_opts = [id_opts[j][n] for j in range(j_count) for n in range(n_count)]
        for owners in itertools.product(*flat_opts):
            links = []
            for idx, owner in enumerate(owners):
                if owner < 0:
                    continue
                j, n = divmod(idx, n_count)
                links.append((j, n, owner))
            if sc.r_min_bps_hz > 0:
                covered = {u for (_, _, u) in links}
                if any(u not in covered for u in sc.id_users):
                    continue
            value, q = _best_power_combo(sc, links, q_eh, eh_spend, levels)
            if value > best_value:
                best_value, best_q = value, q
    if best_q is None:
        zeros = np.zeros(shape)
        return MultiCellAllocation(a=zeros, p=zeros.copy(), p_tilde=zeros.copy(), q_tilde=zeros.copy(),
                                   total_rate=0.0, per_user_rate=np.zeros(sc.user_count),
                                   per_user_eh=np.zeros(sc.user_count), feasible=False)
    rates = true_rates(best_q, sc)
    ehs_vec = np.zeros(sc.user_count)
    for u in sc.eh_users:
        j = sc.user_cells[u]
        ehs_vec[u] = sc.conversion_efficiency[u] * float(np.sum(best_q[j, :, u] * sc.energy_gain_sq[j, :, u]))
    a = (best_q > 0).astype(float)
    return MultiCellAllocation(a=a, p=best_q.copy(), p_tilde=best_q.copy(), q_tilde=best_q.copy(),
                               total_rate=float(rates[sc.id_users].sum()), per_user_rate=rates,
                               per_user_eh=ehs_vec, feasible=True)


def _best_power_combo(scenario, links, q_eh, eh_spend, levels) -> tuple[float, np.ndarray | None]:
    """Vectorized grid search over the ID links' powers (true interference)."""
    sc = scenario
    if not links:
        rates = true_rates(q_eh, sc)
        if sc.r_min_bps_hz > 0 and sc.id_users.size:
            return -np.inf, None
        return float(rates[sc.id_users].sum()), q_eh.copy()
    combos = [levels] * len(links)
    mesh = np.meshgrid(*combos, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)  # (C, L)
    # budget filter per cell
    ok = np.ones(flat.shape[0], dtype=bool)
    for j in range(sc.cell_count):
        cols = [i for i, (jj, _, _) in enumerate(links) if jj == j]
        if cols:
            ok &= flat[:, cols].sum(axis=1) <= sc.p_max_w - eh_spend[j] + _FEAS_TOL
    flat = flat[ok]
    if flat.size == 0:
        return -np.inf, None
    c = flat.shape[0]
    # per ID user rates across all combos
    totals = np.zeros(c)
    per_user = {u: np.zeros(c) for u in sc.id_users}
    for u in sc.id_users:
        j = sc.user_cells[u]
        for n in range(sc.subcarrier_count):
            own_cols = [i for i, (jj, nn, uu) in enumerate(links) if jj == j and nn == n and uu == u]
            if not own_cols:
                continue
            own = flat[:, own_cols[0]] * sc.info_gain_sq[j, n, u]
            interf = np.zeros(c)
            for i, (jj, nn, uu) in enumerate(links):
                if nn != n or jj == j or uu == u:
                    continue
                interf += flat[:, i] * sc.info_gain_sq[jj, n, u]
            for jj in range(sc.cell_count):
                if jj == j:
                    continue
                interf += float((q_eh[jj, n] * sc.info_gain_sq[jj, n, u]).sum()) - q_eh[jj, n, u] * sc.info_gain_sq[jj, n, u]
            rate = np.log2(1.0 + own / (sc.noise_power_w + interf))
            per_user[u] += rate
            totals += rate
    feas = np.ones(c, dtype=bool)
    if sc.r_min_bps_hz > 0:
        for u in sc.id_users:
            feas &= per_user[u] >= sc.r_min_bps_hz - _FEAS_TOL
    if not feas.any():
        return -np.inf, None
    totals = np.where(feas, totals, -np.inf)
    idx = int(np.argmax(totals))
    q = q_eh.copy()
    for i, (j, n, u) in enumerate(links):
        q[j, n, u] += flat[idx, i]
    return float(totals[idx]), q


# -- chapter 5 -----------------------------------------------------------------


def oracle_ee_max(scenario: EeScenario, grid: GridSpec | None = None) -> EeAllocation:
    """Joint enumeration of subcarrier ownership and harvesting-antenna modes
    with grid powers; maximizes the efficiency ratio over feasible points."""
    grid = grid or GridSpec()
    sc = scenario
    j_count, n_count, m_count = sc.cell_count, sc.subcarrier_count, sc.antennas_per_user
    owner_opts = []
    for j in range(j_count):
        users = list(sc.users_of_cell(j))
        for n in range(n_count):
            owner_opts.append(tuple([-1] + users))
    pattern_count = np.prod([len(o) for o in owner_opts]) * (m_count ** (j_count * n_count))
    _check_cap(int(pattern_count), grid)

    levels = grid.levels(sc.p_max_w)
    shape = (j_count, n_count, sc.user_count)
    best: EeAllocation | None = None
    for owners in itertools.product(*owner_opts):
        links = []
        for idx, owner in enumerate(owners):
            if owner < 0:
                continue
            j, n = divmod(idx, n_count)
            links.append((j, n, owner))
        if sc.r_min_bps_hz > 0:
            covered = {u for (_, _, u) in links}
            if any(u not in covered for u in range(sc.user_count)):
                continue
        for modes in itertools.product(range(m_count), repeat=len(links)):
            x = np.zeros((j_count, n_count, sc.user_count, m_count))
            x[:, :, :, 0] = 1.0  # unused slots: lowest-index antenna harvests
            for (j, n, u), m in zip(links, modes):
                x[:, n, u, :] = 0.0
                x[:, n, u, m] = 1.0
            combos = [levels] * len(links)
            mesh = np.meshgrid(*combos, indexing="ij")
            flat = np.stack([mm.ravel() for mm in mesh], axis=1) if links else np.zeros((1, 0))
            ok = np.ones(flat.shape[0], dtype=bool)
            for j in range(j_count):
                cols = [i for i, (jj, _, _) in enumerate(links) if jj == j]
                if cols:
                    ok &= flat[:, cols].sum(axis=1) <= sc.p_max_w + _FEAS_TOL
            flat = flat[ok]
            for row in flat:
                p = np.zeros(shape)
                a = np.zeros(shape)
                for i, (j, n, u) in enumerate(links):
                    p[j, n, u] = row[i]
                    a[j, n, u] = 1.0 if row[i] > 0 else 0.0
                rates = per_user_rates(a, x, p, sc)
                if sc.r_min_bps_hz > 0 and np.min(rates) < sc.r_min_bps_hz - _FEAS_TOL:
                    continue
                power = total_power(a, x, p, p, sc)
                value = ee_rate(a, x, p, sc) / power
                if best is None or value > best.ee_value:
                    best = EeAllocation(a=a, x=x.copy(), p=p.copy(), p_tilde=p.copy(),
                                        ee_value=value, total_rate=ee_rate(a, x, p, sc),
                                        total_power_w=power,
                                        harvested_w=harvested_power(x, p, sc),
                                        per_user_rate=rates, feasible=True)
    if best is None:
        zeros = np.zeros(shape)
        x = np.zeros((j_count, n_count, sc.user_count, m_count))
        x[:, :, :, 0] = 1.0
        best = EeAllocation(a=zeros, x=x, p=zeros.copy(), p_tilde=zeros.copy(), ee_value=0.0,
                            total_rate=0.0, total_power_w=sc.circuit_total_w, harvested_w=0.0,
                            per_user_rate=np.zeros(sc.user_count), feasible=False)
    return best
