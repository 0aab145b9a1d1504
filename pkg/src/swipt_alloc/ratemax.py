"""Multi-cell throughput maximization with separated ID / EH receivers.

Two solvers over the same scenario:

* ``solve_rate_max_mm``: the joint subcarrier/power method.  The
  difference-of-concave rate is minorized by linearizing its subtracted part,
  and the relaxed indicator penalty keeps the assignment meaningful.  OFDMA
  scheduling is then committed from the converged power pattern (the relaxed
  optimum time-shares, so the powers identify service), and a final
  minorize-maximize pass re-optimizes powers on the committed pattern; that
  pass is the reported, monotone trace.

* ``solve_rate_max_dual``: the low-complexity lower bound.  Interference is
  capped by a design parameter, making the problem convex; multilevel
  water-filling, a per-link marginal benefit, and threshold-based assignment
  alternate with projected subgradient multiplier updates.

Users are indexed globally; each is served by its own cell's SBS (cross-cell
serving is dominated by path loss), so decision tensors hold one link per
(user, subcarrier).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    TERM_CONVERGED,
    TERM_INFEASIBLE,
    TERM_ITERATION_CAP,
    ConcaveExpr,
    ConcaveProgram,
    DualState,
    MmOptions,
    SolverOptions,
    SolveTrace,
    linearized_penalty,
    max_change,
    mm_maximize,
    subgradient_step,
)
from .core.expr import LN2


@dataclass(frozen=True)
class MultiCellScenario:
    cell_count: int
    subcarrier_count: int
    user_cells: np.ndarray  # (U,)
    user_is_id: np.ndarray  # (U,) bool
    info_gain_sq: np.ndarray  # (J, N, U)
    energy_gain_sq: np.ndarray  # (J, N, U)
    noise_power_w: float
    conversion_efficiency: np.ndarray  # (U,)
    p_max_w: float
    r_min_bps_hz: float
    eh_min_w: float = 0.0
    i_max_w: float = 1e-10  # interference cap used by the dual algorithm

    def __post_init__(self) -> None:
        j, n, u = self.cell_count, self.subcarrier_count, self.user_count
        if self.info_gain_sq.shape != (j, n, u) or self.energy_gain_sq.shape != (j, n, u):
            raise ValueError("gain tensors must cover all (cell, subcarrier, user) links")
        if self.eh_min_w < 0:
            raise ValueError("EH floor must be non-negative")
        if self.i_max_w <= 0:
            raise ValueError("interference cap must be positive")

    @property
    def user_count(self) -> int:
        return int(self.user_cells.size)

    @property
    def id_users(self) -> np.ndarray:
        return np.flatnonzero(self.user_is_id)

    @property
    def eh_users(self) -> np.ndarray:
        return np.flatnonzero(~np.asarray(self.user_is_id, dtype=bool))

    def id_users_of_cell(self, j: int) -> np.ndarray:
        return np.flatnonzero((self.user_cells == j) & np.asarray(self.user_is_id, dtype=bool))

    def own_gain(self, u: int, n: int) -> float:
        return float(self.info_gain_sq[self.user_cells[u], n, u])


@dataclass
class MultiCellAllocation:
    a: np.ndarray  # (J, N, U)
    p: np.ndarray  # (J, N, U) watts
    p_tilde: np.ndarray  # (J, N, U) watts
    q_tilde: np.ndarray  # (J, N, U) watts (dual-algorithm power product)
    total_rate: float
    per_user_rate: np.ndarray  # (U,)
    per_user_eh: np.ndarray  # (U,)
    feasible: bool = True
    warning: str = ""
    iterations: int = 0


# -- pure evaluators ---------------------------------------------------------


def interference(p_tilde: np.ndarray, info_gain_sq: np.ndarray, j: int, n: int, k: int) -> float:
    """Co-channel power received by user k on subcarrier n from cells other
    than j (all transmissions to other users)."""
    total = 0.0
    j_count, _, u_count = info_gain_sq.shape
    for jp in range(j_count):
        if jp == j:
            continue
        for kp in range(u_count):
            if kp == k:
                continue
            total += p_tilde[jp, n, kp] * info_gain_sq[jp, n, k]
    return total


def user_rate_sinr(p_tilde: np.ndarray, scenario: MultiCellScenario, j: int, n: int, k: int) -> float:
    """log2(1 + p~ |h|^2 / (sigma^2 + I)) for the (j, n, k) link."""
    i_val = interference(p_tilde, scenario.info_gain_sq, j, n, k)
    snr = p_tilde[j, n, k] * scenario.info_gain_sq[j, n, k] / (scenario.noise_power_w + i_val)
    return float(np.log2(1.0 + snr))


def true_rates(p_tilde: np.ndarray, scenario: MultiCellScenario) -> np.ndarray:
    """Vectorized per-user rates under the true co-channel interference.
    p_tilde is the dense (J, N, U) power tensor."""
    sc = scenario
    tot = p_tilde.sum(axis=2)  # (J, N): per-cell transmit power per subcarrier
    rates = np.zeros(sc.user_count)
    for u in sc.id_users:
        j = sc.user_cells[u]
        h_u = sc.info_gain_sq[:, :, u]  # (J, N)
        i_all = (tot * h_u).sum(axis=0) - tot[j] * h_u[j]  # exclude the serving cell
        # own-index cross-cell powers are structurally zero, so k' != k is implicit
        own = p_tilde[j, :, u] * h_u[j]
        rates[u] = float(np.sum(np.log2(1.0 + own / (sc.noise_power_w + i_all))))
    return rates


def dc_split(p_tilde: np.ndarray, scenario: MultiCellScenario, j: int, k: int) -> tuple[float, float]:
    """Rate of user k in cell j as a difference of concave terms:
    sum_n log2(signal + noise + interference) minus sum_n log2(noise + interference)."""
    u_val = 0.0
    v_val = 0.0
    for n in range(scenario.subcarrier_count):
        i_val = interference(p_tilde, scenario.info_gain_sq, j, n, k)
        sig = p_tilde[j, n, k] * scenario.info_gain_sq[j, n, k]
        u_val += np.log2(sig + scenario.noise_power_w + i_val)
        v_val += np.log2(scenario.noise_power_w + i_val)
    return float(u_val), float(v_val)


# -- link bookkeeping --------------------------------------------------------


class _Links:
    """Flattened (user, subcarrier) link layout: link l = u * N + n."""

    def __init__(self, sc: MultiCellScenario):
        self.sc = sc
        u, n = sc.user_count, sc.subcarrier_count
        self.count = u * n
        self.user = np.repeat(np.arange(u), n)
        self.sub = np.tile(np.arange(n), u)
        self.cell = sc.user_cells[self.user]
        self.own_h = sc.info_gain_sq[self.cell, self.sub, self.user]
        self.own_g = sc.energy_gain_sq[self.cell, self.sub, self.user]
        self.is_id = np.asarray(sc.user_is_id, dtype=bool)[self.user]

    def of_user(self, u: int) -> np.ndarray:
        n = self.sc.subcarrier_count
        return np.arange(u * n, (u + 1) * n)

    def link(self, u: int, n: int) -> int:
        return u * self.sc.subcarrier_count + n

    def cross_coeff_rows(self, active: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """For every ID (user, subcarrier) pair, one row of interference
        coefficients over the active links plus the own-signal column.

        Returns (rows (R, n_active) for noise+interference, own column index
        per row); R iterates ID users x subcarriers.
        """
        sc = self.sc
        n_sub = sc.subcarrier_count
        act_idx = np.flatnonzero(active)
        col_of = -np.ones(self.count, dtype=int)
        col_of[act_idx] = np.arange(act_idx.size)
        id_users = sc.id_users
        rows = np.zeros((id_users.size * n_sub, act_idx.size))
        own_col = -np.ones(id_users.size * n_sub, dtype=int)
        for r, (u, n) in enumerate((u, n) for u in id_users for n in range(n_sub)):
            for l in act_idx:
                if self.sub[l] != n:
                    continue
                if self.cell[l] == sc.user_cells[u]:
                    if self.user[l] == u:
                        own_col[r] = col_of[l]
                    continue
                if self.user[l] == u:
                    continue
                rows[r, col_of[l]] = sc.info_gain_sq[self.cell[l], n, u]
        return rows, own_col


def _dense_from_links(links: _Links, values: np.ndarray, shape: tuple[int, int, int]) -> np.ndarray:
    out = np.zeros(shape)
    out[links.cell, links.sub, links.user] = values
    return out


# -- surrogate construction ---------------------------------------------------


def build_rate_surrogate(
    current_point: np.ndarray,
    scenario: MultiCellScenario,
    lam: float,
) -> ConcaveProgram:
    """Concave program over z = [a_id, p~_all] for one iteration of the joint
    method: total rate with the subtracted interference logs linearized at the
    current powers, the linearized indicator penalty, exclusivity / budget /
    rate-floor / harvest-floor constraints, and the p~ <= p_max a coupling.
    EH users' indicators are structurally 1 (they never compete under the
    exclusivity rule), so only ID indicators are decision variables.
    """
    links = _Links(scenario)
    sc = scenario
    id_links = np.flatnonzero(links.is_id)
    n_a = id_links.size
    n_p = links.count
    dim = n_a + n_p
    a_col_of_link = -np.ones(links.count, dtype=int)
    a_col_of_link[id_links] = np.arange(n_a)

    z = np.asarray(current_point, dtype=float)
    a0, p0 = z[:n_a], z[n_a:]

    active = np.ones(links.count, dtype=bool)
    rows, own_col = links.cross_coeff_rows(active)
    base_args = rows @ p0 + sc.noise_power_w  # noise + interference per (ID user, sub)

    # objective: sum_rows log2(own + noise + I) - linearized sum_rows log2(noise + I)
    log_c = np.zeros((rows.shape[0], dim))
    log_c[:, n_a:] = rows
    log_c[np.arange(rows.shape[0]), n_a + own_col] += links.own_h[own_col]
    v_grad_p = rows.T @ (1.0 / base_args) / LN2
    v_const = float(np.sum(np.log(base_args)) / LN2 - v_grad_p @ p0)

    pen_lin, pen_const = linearized_penalty(a0, lam)
    lin = np.zeros(dim)
    lin[:n_a] = pen_lin
    lin[n_a:] = -v_grad_p
    objective = ConcaveExpr(
        n=dim,
        const=-v_const + pen_const,
        lin=lin,
        log_w=np.full(rows.shape[0], 1.0 / LN2),
        log_c=log_c,
        log_d=np.full(rows.shape[0], sc.noise_power_w),
    )

    a_ub = []
    b_ub = []
    for j in range(sc.cell_count):  # C1 per (cell, subcarrier) over that cell's ID users
        cell_ids = sc.id_users_of_cell(j)
        for n in range(sc.subcarrier_count):
            row = np.zeros(dim)
            for u in cell_ids:
                row[a_col_of_link[links.link(u, n)]] = 1.0
            a_ub.append(row)
            b_ub.append(1.0)
    for j in range(sc.cell_count):  # C2: per-cell power budget
        row = np.zeros(dim)
        row[n_a + np.flatnonzero(links.cell == j)] = 1.0
        a_ub.append(row)
        b_ub.append(sc.p_max_w)
    if sc.eh_min_w > 0:  # C4: per-EH-user harvest floor (linear)
        for u in sc.eh_users:
            row = np.zeros(dim)
            ls = links.of_user(u)
            row[n_a + ls] = -sc.conversion_efficiency[u] * links.own_g[ls]
            a_ub.append(row)
            b_ub.append(-sc.eh_min_w)
    for l in id_links:  # C6 coupling for ID links only (EH indicators pinned to 1)
        row = np.zeros(dim)
        row[n_a + l] = 1.0
        row[a_col_of_link[l]] = -sc.p_max_w
        a_ub.append(row)
        b_ub.append(0.0)

    concave = []
    if sc.r_min_bps_hz > 0:
        n_sub = sc.subcarrier_count
        for pos, u in enumerate(sc.id_users):
            sel = slice(pos * n_sub, (pos + 1) * n_sub)
            g_lin = np.zeros(dim)
            g_lin[n_a:] = -(rows[sel].T @ (1.0 / base_args[sel]) / LN2)
            g_const = float(np.sum(np.log(base_args[sel])) / LN2 + g_lin[n_a:] @ p0)
            g = ConcaveExpr(
                n=dim,
                const=-g_const,
                lin=g_lin,
                log_w=np.full(n_sub, 1.0 / LN2),
                log_c=log_c[sel],
                log_d=np.full(n_sub, sc.noise_power_w),
            )
            concave.append((g, sc.r_min_bps_hz))

    lb = np.zeros(dim)
    ub = np.concatenate([np.ones(n_a), np.full(n_p, sc.p_max_w)])
    return ConcaveProgram(n=dim, objective=objective, a_ub=np.array(a_ub), b_ub=np.array(b_ub),
                          lb=lb, ub=ub, concave_ineqs=concave)


def _build_committed_program(
    scenario: MultiCellScenario,
    links: _Links,
    committed: np.ndarray,  # bool per link
    p0_active: np.ndarray,
) -> ConcaveProgram:
    """Power-only surrogate on a fixed binary assignment (variables are the
    committed links' p~)."""
    sc = scenario
    act_idx = np.flatnonzero(committed)
    dim = act_idx.size
    rows, own_col = links.cross_coeff_rows(committed)
    keep = own_col >= 0  # rate rows of links that survived the commitment
    rows_k = rows[keep]
    own_k = own_col[keep]
    base_args = rows_k @ p0_active + sc.noise_power_w

    log_c = rows_k.copy()
    log_c[np.arange(rows_k.shape[0]), own_k] += links.own_h[act_idx][own_k]
    v_grad = rows_k.T @ (1.0 / base_args) / LN2
    v_const = float(np.sum(np.log(base_args)) / LN2 - v_grad @ p0_active)
    objective = ConcaveExpr(
        n=dim,
        const=-v_const,
        lin=-v_grad,
        log_w=np.full(rows_k.shape[0], 1.0 / LN2),
        log_c=log_c,
        log_d=np.full(rows_k.shape[0], sc.noise_power_w),
    )

    a_ub = []
    b_ub = []
    for j in range(sc.cell_count):
        row = np.zeros(dim)
        row[links.cell[act_idx] == j] = 1.0
        a_ub.append(row)
        b_ub.append(sc.p_max_w)
    if sc.eh_min_w > 0:
        for u in sc.eh_users:
            row = np.zeros(dim)
            mask = links.user[act_idx] == u
            row[mask] = -sc.conversion_efficiency[u] * links.own_g[act_idx][mask]
            a_ub.append(row)
            b_ub.append(-sc.eh_min_w)

    concave = []
    if sc.r_min_bps_hz > 0:
        # map kept rate rows back to users
        n_sub = sc.subcarrier_count
        row_user = np.repeat(sc.id_users, n_sub)[keep]
        for u in sc.id_users:
            sel = np.flatnonzero(row_user == u)
            if sel.size == 0:
                # user lost every subcarrier; the floor is unreachable
                return ConcaveProgram(
                    n=dim,
                    objective=objective,
                    a_ub=np.array([[0.0] * dim]),
                    b_ub=np.array([-1.0]),  # deliberately infeasible
                    lb=np.zeros(dim),
                    ub=np.full(dim, sc.p_max_w),
                )
            g_lin = -(rows_k[sel].T @ (1.0 / base_args[sel]) / LN2)
            g_const = float(np.sum(np.log(base_args[sel])) / LN2 + g_lin @ p0_active)
            g = ConcaveExpr(
                n=dim,
                const=-g_const,
                lin=g_lin,
                log_w=np.full(sel.size, 1.0 / LN2),
                log_c=log_c[sel],
                log_d=np.full(sel.size, sc.noise_power_w),
            )
            concave.append((g, sc.r_min_bps_hz))

    return ConcaveProgram(n=dim, objective=objective, a_ub=np.array(a_ub), b_ub=np.array(b_ub),
                          lb=np.zeros(dim), ub=np.full(dim, sc.p_max_w), concave_ineqs=concave)


# -- feasible initialization ---------------------------------------------------


def _eh_floor_powers(scenario: MultiCellScenario, links: _Links) -> tuple[np.ndarray, bool]:
    """Minimum-power harvest plan: each EH user's floor on its best own link."""
    p = np.zeros(links.count)
    ok = True
    if scenario.eh_min_w <= 0:
        return p, ok
    for u in scenario.eh_users:
        ls = links.of_user(u)
        best = ls[int(np.argmax(links.own_g[ls]))]
        need = scenario.eh_min_w / (scenario.conversion_efficiency[u] * links.own_g[best])
        p[best] = need
        if need > scenario.p_max_w:
            ok = False
    return p, ok


def _initial_assignment(scenario: MultiCellScenario, links: _Links) -> dict[tuple[int, int], int]:
    """Round-robin best-gain subcarrier split among each cell's ID users."""
    out: dict[tuple[int, int], int] = {}
    for j in range(scenario.cell_count):
        cell_ids = list(scenario.id_users_of_cell(j))
        if not cell_ids:
            continue
        remaining = set(range(scenario.subcarrier_count))
        turn = 0
        while remaining:
            u = cell_ids[turn % len(cell_ids)]
            n = max(remaining, key=lambda nn: scenario.own_gain(u, nn))
            out[(j, n)] = u
            remaining.discard(n)
            turn += 1
    return out


def feasibility_precheck(scenario: MultiCellScenario) -> bool:
    """EH floors must be reachable with full budget on each EH user's best
    link, and the per-cell budget must cover all floors together."""
    links = _Links(scenario)
    p, ok = _eh_floor_powers(scenario, links)
    if not ok:
        return False
    for j in range(scenario.cell_count):
        if p[links.cell == j].sum() > scenario.p_max_w:
            return False
    return True


def _rates_of(scenario: MultiCellScenario, links: _Links, p: np.ndarray) -> np.ndarray:
    dense = _dense_from_links(links, p, (scenario.cell_count, scenario.subcarrier_count, scenario.user_count))
    rates = np.zeros(scenario.user_count)
    for u in scenario.id_users:
        j = scenario.user_cells[u]
        rates[u] = sum(user_rate_sinr(dense, scenario, j, n, u) for n in range(scenario.subcarrier_count))
    return rates


def _feasible_power_start(scenario: MultiCellScenario, links: _Links) -> np.ndarray | None:
    """Strictly feasible starting powers: harvest floors plus equal power on a
    round-robin assignment.

    Starting near the budget scale matters beyond feasibility: expanding the
    interference logs at near-zero cross powers produces ~1/noise gradients
    that freeze the first surrogate, while at equal power the expansion sees
    interference well above the noise floor.  Powers are scaled down
    geometrically if the rate floors happen to fail at full budget.
    """
    sc = scenario
    floors, ok = _eh_floor_powers(sc, links)
    if not ok:
        return None
    floors *= 1.02  # strict margin on the harvest floor
    assign = _initial_assignment(sc, links)
    p_base = np.zeros(links.count)
    for j in range(sc.cell_count):
        budget = 0.98 * sc.p_max_w - floors[links.cell == j].sum()
        if budget <= 0:
            return None
        mine = [(n, u) for (jj, n), u in assign.items() if jj == j]
        for n, u in mine:
            p_base[links.link(u, n)] = budget / max(len(mine), 1)
    for scale in (1.0, 0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3):
        p = floors + scale * p_base
        rates = _rates_of(sc, links, p)
        if sc.r_min_bps_hz <= 0 or np.all(rates[sc.id_users] > sc.r_min_bps_hz * 1.0001 + 1e-9):
            return p
    return None


# -- joint solver --------------------------------------------------------------


@dataclass(frozen=True)
class RateMmOptions:
    relaxed: MmOptions = field(default_factory=lambda: MmOptions(
        rel_tol=1e-4, max_iterations=15, subproblem=SolverOptions(tol=1e-4)))
    committed: MmOptions = field(default_factory=MmOptions)
    commit_threshold: float = 1e-9  # fraction of p_max below which a link is unused
    # Starting powers: "dual" warm-starts from the low-complexity algorithm's
    # coordinated solution (the equal-power start sits in a heavily
    # interference-limited basin the minorant steps cannot leave); "equal",
    # "full" and "zero" reproduce the classical initializations.
    initial_power: str = "dual"


def _commit_links(scenario: MultiCellScenario, links: _Links, p: np.ndarray, threshold: float) -> np.ndarray:
    """Binary link support: per (cell, subcarrier) the ID user carrying the
    most power wins; EH links always stay available."""
    committed = ~links.is_id  # all EH links
    floor = threshold * scenario.p_max_w
    for j in range(scenario.cell_count):
        cell_ids = scenario.id_users_of_cell(j)
        if cell_ids.size == 0:
            continue
        for n in range(scenario.subcarrier_count):
            ls = np.array([links.link(u, n) for u in cell_ids])
            best = int(np.argmax(p[ls]))
            if p[ls[best]] > floor:
                committed[ls[best]] = True
    return committed


def _ensure_coverage(scenario: MultiCellScenario, links: _Links, committed: np.ndarray) -> np.ndarray:
    """Guarantee every ID user owns at least one subcarrier when a rate floor
    is active, stealing unused or weakest-competitor subcarriers if needed."""
    if scenario.r_min_bps_hz <= 0:
        return committed
    committed = committed.copy()
    for u in scenario.id_users:
        ls = links.of_user(u)
        if committed[ls].any():
            continue
        j = scenario.user_cells[u]
        # prefer a subcarrier no cell-mate owns
        owned = {links.sub[l] for l in np.flatnonzero(committed & links.is_id & (links.cell == j))}
        free = [n for n in range(scenario.subcarrier_count) if n not in owned]
        if free:
            n = max(free, key=lambda nn: scenario.own_gain(u, nn))
        else:
            n = int(np.argmax([scenario.own_gain(u, nn) for nn in range(scenario.subcarrier_count)]))
            for l in np.flatnonzero(committed & links.is_id & (links.cell == j) & (links.sub == n)):
                committed[l] = False
        committed[links.link(u, n)] = True
    return committed


def _allocation_from_powers(
    scenario: MultiCellScenario, links: _Links, p: np.ndarray, committed: np.ndarray
) -> MultiCellAllocation:
    sc = scenario
    shape = (sc.cell_count, sc.subcarrier_count, sc.user_count)
    p = np.where(committed, p, 0.0)
    dense_p = _dense_from_links(links, p, shape)
    a = np.zeros(shape)
    used = committed & (p > 0)
    a[links.cell[used], links.sub[used], links.user[used]] = 1.0
    rates = np.zeros(sc.user_count)
    ehs = np.zeros(sc.user_count)
    for u in sc.id_users:
        j = sc.user_cells[u]
        rates[u] = sum(user_rate_sinr(dense_p, sc, j, n, u) for n in range(sc.subcarrier_count))
    for u in sc.eh_users:
        ls = links.of_user(u)
        ehs[u] = sc.conversion_efficiency[u] * float(np.sum(p[ls] * links.own_g[ls]))
    feasible = True
    if sc.r_min_bps_hz > 0 and rates[sc.id_users].size:
        feasible &= bool(np.min(rates[sc.id_users]) >= sc.r_min_bps_hz * (1 - 1e-6))
    if sc.eh_min_w > 0 and sc.eh_users.size:
        feasible &= bool(np.min(ehs[sc.eh_users]) >= sc.eh_min_w * (1 - 1e-6))
    for j in range(sc.cell_count):
        feasible &= bool(p[links.cell == j].sum() <= sc.p_max_w * (1 + 1e-6))
    return MultiCellAllocation(
        a=a,
        p=dense_p.copy(),
        p_tilde=dense_p,
        q_tilde=dense_p.copy(),
        total_rate=float(rates[sc.id_users].sum()),
        per_user_rate=rates,
        per_user_eh=ehs,
        feasible=feasible,
    )


def solve_rate_max_mm(
    scenario: MultiCellScenario, options: RateMmOptions | None = None
) -> tuple[MultiCellAllocation, SolveTrace]:
    """Joint assignment / power solver.  The reported trace is the committed
    power pass (monotone); the relaxed scheduling pass and total iteration
    count are exposed through trace.info."""
    options = options or RateMmOptions()
    sc = scenario
    links = _Links(sc)
    trace = SolveTrace()
    if not feasibility_precheck(sc):
        trace.termination = TERM_INFEASIBLE
        shape = (sc.cell_count, sc.subcarrier_count, sc.user_count)
        zeros = np.zeros(shape)
        return MultiCellAllocation(a=zeros, p=zeros.copy(), p_tilde=zeros.copy(), q_tilde=zeros.copy(),
                                   total_rate=0.0, per_user_rate=np.zeros(sc.user_count),
                                   per_user_eh=np.zeros(sc.user_count), feasible=False), trace

    p_start = _feasible_power_start(sc, links)
    id_links = np.flatnonzero(links.is_id)
    n_a = id_links.size
    if p_start is None:
        p_start = np.full(links.count, sc.p_max_w / (2.0 * links.count))
    anchor_p = p_start
    # large instances: the structural candidates carry the solution, and the
    # relaxed scheduling pass / dual warm start would dominate the runtime
    lean = links.count > 256
    dual_pattern = None
    if options.initial_power == "dual" and not lean:
        dual_alloc, _ = solve_rate_max_dual(sc)
        if dual_alloc.feasible:
            flat = dual_alloc.q_tilde[links.cell, links.sub, links.user]
            p_start = np.maximum(flat, 1e-9 * sc.p_max_w / links.count)
            dual_pattern = flat > 0
    elif options.initial_power == "full":
        p_start = np.full(links.count, 0.98 * sc.p_max_w / sc.subcarrier_count)
    elif options.initial_power == "zero":
        p_start = np.full(links.count, 1e-9 * sc.p_max_w / links.count)

    # relaxed scheduling pass; indicators start a shade inside 1/K so the
    # exclusivity rows are strictly slack and no repair pass is needed
    a_init = np.empty(n_a)
    for pos, l in enumerate(id_links):
        k_cell = max(1, sc.id_users_of_cell(links.cell[l]).size)
        a_init[pos] = (1.0 - 1e-3) / k_cell
    z0 = np.concatenate([a_init, p_start])
    z_anchor = np.concatenate([a_init, anchor_p])
    rate0 = _allocation_from_powers(sc, links, p_start, np.ones(links.count, dtype=bool)).total_rate
    # The commitment step extracts the binary assignment from the power
    # pattern, so the indicator penalty only tie-breaks here; weighting it at
    # the objective scale would trade rate for indicator shrinkage.
    lam = 0.01 * max(rate0, 1.0)
    if lean:
        z = z0
        relaxed_trace = SolveTrace()
    else:
        relaxed_builder = lambda z: build_rate_surrogate(z, sc, lam)
        z, relaxed_trace = mm_maximize(relaxed_builder, z0, options.relaxed, interior_anchor=z_anchor)
        if relaxed_trace.termination == TERM_INFEASIBLE:
            z = z0  # scheduling hints degrade to the start; the candidates still run

    full_reuse = _ensure_coverage(sc, links, _full_reuse_pattern(sc, links))
    partition = _ensure_coverage(sc, links, _partition_pattern(sc, links))
    # hybrid start: partition powers plus a slice spread over the reuse links,
    # so the power pass can grow profitable reuse without fighting the
    # near-zero-interference freeze
    hybrid_start = (0.7 * _pattern_power_start(sc, links, partition)
                    + 0.3 * _pattern_power_start(sc, links, full_reuse))
    candidates = [
        (_ensure_coverage(sc, links, _commit_links(sc, links, z[n_a:], options.commit_threshold)), z[n_a:]),
        (partition, None),
        (full_reuse, None),
        (full_reuse, hybrid_start),
    ]
    if sc.cell_count > 1 and sc.cell_count * sc.subcarrier_count <= 64:
        # small instances: block pairing interacts with harvest-floor costs,
        # so try every cyclic shift of the subcarrier partition
        for shift in range(sc.cell_count):
            candidates.append((_ensure_coverage(sc, links, _shift_partition(sc, links, shift)), None))
    if dual_pattern is not None:
        dual_committed = _ensure_coverage(sc, links, dual_pattern | ~links.is_id)
        # pull the dual's boundary point slightly toward a pattern-interior one
        blend = 0.95 * p_start + 0.05 * _pattern_power_start(sc, links, dual_committed)
        candidates.append((dual_committed, blend))
    allocation = None
    trace = relaxed_trace
    for committed, p_warm in candidates:
        start = p_warm if p_warm is not None else _pattern_power_start(sc, links, committed)
        committed, start = _trim_idle_eh_links(sc, links, committed, start)
        cand_alloc, cand_trace = _committed_power_pass(sc, links, committed, start, options)
        if not cand_alloc.feasible:
            continue
        if allocation is None or cand_alloc.total_rate > allocation.total_rate:
            allocation, trace = cand_alloc, cand_trace
    if allocation is None:
        fallback = _ensure_coverage(sc, links, ~links.is_id.copy())
        for (j, n), u in _initial_assignment(sc, links).items():
            fallback[links.link(u, n)] = True
        allocation, trace = _committed_power_pass(sc, links, fallback, p_start, options)
    trace.info["relaxation_phase"] = relaxed_trace.objective_values
    trace.info["total_iterations"] = relaxed_trace.iterations + trace.iterations
    allocation.iterations = relaxed_trace.iterations + trace.iterations
    return allocation, trace


def _full_reuse_pattern(scenario: MultiCellScenario, links: _Links) -> np.ndarray:
    """Every cell serves its best ID user on every subcarrier (full spectrum
    reuse); the power pass decides how hard to lean on the shared spectrum."""
    sc = scenario
    committed = ~links.is_id
    for (j, n), u in _best_gain_assignment(sc).items():
        committed[links.link(u, n)] = True
    return committed


def _partition_pattern(scenario: MultiCellScenario, links: _Links) -> np.ndarray:
    """Interference-free candidate: cells take disjoint subcarrier blocks,
    greedily picking their best remaining subcarrier in turn, each subcarrier
    going to the block owner's best ID user.  The relaxed pass cannot reach
    this structure from an interference-coupled start because the subtracted
    logs freeze near zero cross power."""
    sc = scenario
    committed = ~links.is_id  # EH links always available
    remaining = set(range(sc.subcarrier_count))
    cell_best = {}
    for j in range(sc.cell_count):
        ids = sc.id_users_of_cell(j)
        if ids.size:
            cell_best[j] = {n: max(sc.own_gain(u, n) for u in ids) for n in range(sc.subcarrier_count)}
    turn = 0
    order = [j for j in range(sc.cell_count) if j in cell_best]
    while remaining and order:
        j = order[turn % len(order)]
        n = max(remaining, key=lambda nn: cell_best[j][nn])
        ids = sc.id_users_of_cell(j)
        u = ids[int(np.argmax([sc.own_gain(uu, n) for uu in ids]))]
        committed[links.link(u, n)] = True
        remaining.discard(n)
        turn += 1
    return committed


def _shift_partition(scenario: MultiCellScenario, links: _Links, shift: int) -> np.ndarray:
    """Cyclic block partition: subcarrier n belongs to cell (n + shift) mod J,
    dealt round-robin to that cell's ID users by gain."""
    sc = scenario
    committed = ~links.is_id
    for j in range(sc.cell_count):
        ids = list(sc.id_users_of_cell(j))
        if not ids:
            continue
        block = [n for n in range(sc.subcarrier_count) if (n + shift) % sc.cell_count == j]
        pool = set(block)
        turn = 0
        while pool:
            u = ids[turn % len(ids)]
            n = max(pool, key=lambda nn: sc.own_gain(u, nn))
            committed[links.link(u, n)] = True
            pool.discard(n)
            turn += 1
    return committed


def _trim_idle_eh_links(scenario: MultiCellScenario, links: _Links, committed: np.ndarray,
                        start: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop harvest links carrying no starting power (keeping each harvest
    user's strongest link as an alternative); idle links only fight the
    barrier at the zero bound and slow every Newton step."""
    sc = scenario
    committed = committed.copy()
    for u in sc.eh_users:
        ls = links.of_user(u)
        keep = (start[ls] > 0) if start is not None else np.zeros(ls.size, dtype=bool)
        keep[int(np.argmax(links.own_g[ls]))] = True
        committed[ls] = keep
    return committed, start


def _pattern_power_start(scenario: MultiCellScenario, links: _Links, committed: np.ndarray) -> np.ndarray:
    """Starting powers tailored to a committed pattern: harvest floors go on
    the user's best own-cell link among the pattern's active subcarriers
    (same-cell placement interferes with nobody in that cell), and each cell's
    residual budget spreads equally over its committed ID links."""
    sc = scenario
    p = np.zeros(links.count)
    active_subs = {j: set() for j in range(sc.cell_count)}
    for l in np.flatnonzero(committed & links.is_id):
        active_subs[links.cell[l]].add(int(links.sub[l]))
    if sc.eh_min_w > 0:
        for u in sc.eh_users:
            j = sc.user_cells[u]
            gains = sc.energy_gain_sq[j, :, u]
            pool = sorted(active_subs[j]) or list(range(sc.subcarrier_count))
            n = max(pool, key=lambda nn: gains[nn])
            p[links.link(u, n)] = 1.02 * sc.eh_min_w / (sc.conversion_efficiency[u] * gains[n])
    for j in range(sc.cell_count):
        budget = 0.9 * sc.p_max_w - p[links.cell == j].sum()
        mine = np.flatnonzero(committed & links.is_id & (links.cell == j))
        if budget <= 0 or mine.size == 0:
            continue
        p[mine] = budget / mine.size
    return p


def _committed_power_pass(
    scenario: MultiCellScenario,
    links: _Links,
    committed: np.ndarray,
    p_full: np.ndarray,
    options: RateMmOptions,
) -> tuple[MultiCellAllocation, SolveTrace]:
    act_idx = np.flatnonzero(committed)
    # lift exact zeros off the box bound so warm starts stay strictly interior
    lift = 1e-9 * scenario.p_max_w / max(act_idx.size, 1)
    p0 = np.maximum(p_full[act_idx], lift)
    anchor = np.maximum(_pattern_power_start(scenario, links, committed)[act_idx], lift)
    builder = lambda p_act: _build_committed_program(scenario, links, committed, p_act)
    p_act, trace = mm_maximize(builder, p0, options.committed, interior_anchor=anchor)
    if trace.termination == TERM_INFEASIBLE:
        shape = (scenario.cell_count, scenario.subcarrier_count, scenario.user_count)
        zeros = np.zeros(shape)
        alloc = MultiCellAllocation(a=zeros, p=zeros.copy(), p_tilde=zeros.copy(), q_tilde=zeros.copy(),
                                    total_rate=0.0, per_user_rate=np.zeros(scenario.user_count),
                                    per_user_eh=np.zeros(scenario.user_count), feasible=False)
        return alloc, trace
    p = np.zeros(links.count)
    p[act_idx] = p_act
    allocation = _allocation_from_powers(scenario, links, p, committed)
    allocation.iterations = trace.iterations
    return allocation, trace


def solve_power_only(
    scenario: MultiCellScenario,
    assignment: dict[tuple[int, int], int],
    options: RateMmOptions | None = None,
) -> tuple[MultiCellAllocation, SolveTrace]:
    """Power optimization on an externally fixed subcarrier assignment
    (decoupled baselines)."""
    options = options or RateMmOptions()
    links = _Links(scenario)
    committed = ~links.is_id
    for (j, n), u in assignment.items():
        committed[links.link(u, n)] = True
    committed = _ensure_coverage(scenario, links, committed)
    p_start = _feasible_power_start(scenario, links)
    if p_start is None:
        p_start = np.full(links.count, scenario.p_max_w / (2.0 * links.count))
    return _committed_power_pass(scenario, links, committed, p_start, options)


# -- low-complexity dual algorithm ----------------------------------------------


def waterfill_power(state: DualState, scenario: MultiCellScenario, j: int, n: int, k: int) -> float:
    """Multilevel water-filling level for the (j, n, k) link:
    [ (1/ln2)(1+zeta)/(phi + theta |h|^2 - tau eps |g|^2) - (sigma^2 + I_max)/|h|^2 ]+,
    capped at p_max when harvest credit overwhelms the denominator."""
    h = scenario.info_gain_sq[j, n, k]
    g = scenario.energy_gain_sq[j, n, k]
    if not np.isfinite(h) or not np.isfinite(g):
        raise ValueError("channel gains must be finite")
    zeta = state.multipliers["zeta"][k] if k < state.multipliers["zeta"].size else 0.0
    theta = state.multipliers["theta"][k, n] if k < state.multipliers["theta"].shape[0] else 0.0
    tau = state.multipliers["tau"][k] if k < state.multipliers["tau"].size else 0.0
    phi = state.multipliers["phi"][j]
    denom = phi + theta * h - tau * scenario.conversion_efficiency[k] * g
    if denom <= 0:
        return scenario.p_max_w
    level = (1.0 + zeta) / (LN2 * denom)
    p = level - (scenario.noise_power_w + scenario.i_max_w) / h
    return float(np.clip(p, 0.0, scenario.p_max_w))


def marginal_benefit(
    state: DualState, scenario: MultiCellScenario, p_star: float, j: int, n: int, k: int
) -> float:
    """Dual-adjusted utility of serving user k on (j, n) at power p_star."""
    h = scenario.info_gain_sq[j, n, k]
    g = scenario.energy_gain_sq[j, n, k]
    denom = scenario.noise_power_w + scenario.i_max_w
    zeta = state.multipliers["zeta"][k] if k < state.multipliers["zeta"].size else 0.0
    theta = state.multipliers["theta"][k, n] if k < state.multipliers["theta"].shape[0] else 0.0
    tau = state.multipliers["tau"][k] if k < state.multipliers["tau"].size else 0.0
    phi = state.multipliers["phi"][j]
    chi = state.multipliers["chi"][j, n]
    snr_term = p_star * h
    benefit = (1.0 + zeta) * (
        np.log2(1.0 + snr_term / denom) - (snr_term / (snr_term + denom)) / LN2
    )
    benefit += tau * scenario.conversion_efficiency[k] * p_star * g
    benefit -= theta * p_star * h
    benefit -= phi * p_star
    benefit -= chi
    return float(benefit)


def assign_subcarriers(
    state: DualState, scenario: MultiCellScenario, p_star: np.ndarray
) -> np.ndarray:
    """Per (cell, subcarrier): the ID user with the highest marginal benefit
    wins if it meets the chi threshold; ties go to the lowest user index.
    p_star is (J, N, U); returns a binary (J, N, U) tensor."""
    sc = scenario
    a = np.zeros_like(p_star)
    for j in range(sc.cell_count):
        cell_ids = sc.id_users_of_cell(j)
        if cell_ids.size == 0:
            continue
        for n in range(sc.subcarrier_count):
            scores = np.array([marginal_benefit(state, sc, p_star[j, n, u], j, n, u) for u in cell_ids])
            best = int(np.argmax(scores))  # argmax takes the lowest index on ties
            if scores[best] >= state.multipliers["chi"][j, n]:
                a[j, n, cell_ids[best]] = 1.0
    return a


@dataclass(frozen=True)
class DualOptions:
    max_iterations: int = 500
    tol: float = 1e-4  # multiplier change, infinity norm relative to each family's scale
    step_scale: float = 0.1
    # Interference-cap multiples to try (the cap is an allocator design knob);
    # larger caps trade interference protection for headroom, and the cap also
    # sets the water-filling SINR floor, so absurdly large values self-defeat.
    # The tiny first entry makes the planning noise-referenced, whose opening
    # iterate matches a decoupled best-gain water-filling configuration.
    cap_scales: tuple = (1e-5, 1.0, 31.6, 1000.0, 31623.0)


def _dual_family_scales(scenario: MultiCellScenario) -> dict[str, float]:
    """Natural magnitude of each multiplier family; step sizes and the
    convergence norm are expressed in these units.  phi prices power
    (~rate-slope at the budget split), tau prices harvested watts, and theta
    prices interference: its equilibrium sits near 1 / (ln2 * q * h_own) at
    the cap-limited power q ~ i_max / (typical cross gain sum)."""
    sc = scenario
    phi_scale = sc.subcarrier_count / (sc.p_max_w * LN2)
    eh_g = [
        float(np.max(sc.energy_gain_sq[sc.user_cells[u], :, u]) * sc.conversion_efficiency[u])
        for u in sc.eh_users
    ]
    tau_scale = phi_scale / min(eh_g) if eh_g else 1.0
    theta_scale = phi_scale
    if sc.cell_count > 1 and sc.id_users.size:
        cross = []
        own = []
        for u in sc.id_users:
            j = sc.user_cells[u]
            others = [jp for jp in range(sc.cell_count) if jp != j]
            cross.append(float(np.median(sc.info_gain_sq[others, :, u])) * len(others))
            own.append(float(np.median(sc.info_gain_sq[j, :, u])))
        q_eq = sc.i_max_w / max(float(np.median(cross)), 1e-300)
        q_eq = min(q_eq, sc.p_max_w)
        theta_scale = 1.0 / (LN2 * q_eq * max(float(np.median(own)), 1e-300))
    return {
        "chi": 1.0,
        "phi": phi_scale,
        "zeta": 1.0,
        "tau": tau_scale,
        "theta": theta_scale,
    }


def _dual_initial_state(scenario: MultiCellScenario, options: DualOptions) -> DualState:
    sc = scenario
    u = sc.user_count
    scales = _dual_family_scales(sc)
    return DualState(
        multipliers={
            "chi": np.zeros((sc.cell_count, sc.subcarrier_count)),
            "phi": np.full(sc.cell_count, scales["phi"]),
            "zeta": np.zeros(u),
            "tau": np.zeros(u),
            "theta": np.zeros((u, sc.subcarrier_count)),
        },
        step_scales={k: options.step_scale * v for k, v in scales.items()},
    )


def _dual_q_from_state(scenario: MultiCellScenario, state: DualState) -> np.ndarray:
    """One primal pass: water-filling, assignment, and exact harvest floors."""
    sc = scenario
    shape = (sc.cell_count, sc.subcarrier_count, sc.user_count)
    p_star = np.zeros(shape)
    for j in range(sc.cell_count):
        for u in sc.id_users_of_cell(j):
            for n in range(sc.subcarrier_count):
                p_star[j, n, u] = waterfill_power(state, sc, j, n, u)
    a = assign_subcarriers(state, sc, p_star)
    q = a * p_star
    # coverage guard: a user priced out of every subcarrier still transmits on
    # its best own link (the rate-floor multiplier limit), keeping floors
    # repairable while the multipliers settle
    if sc.r_min_bps_hz > 0:
        for u in sc.id_users:
            j = sc.user_cells[u]
            if q[j, :, u].sum() <= 0:
                n = int(np.argmax(sc.info_gain_sq[j, :, u]))
                q[j, n, u] = p_star[j, n, u] if p_star[j, n, u] > 0 else waterfill_power(state, sc, j, n, u)
    if sc.eh_min_w > 0:
        for u in sc.eh_users:
            j = sc.user_cells[u]
            gains = sc.energy_gain_sq[j, :, u]
            best = int(np.argmax(gains))
            q[j, best, u] = sc.eh_min_w / (sc.conversion_efficiency[u] * gains[best])
    return q


def solve_rate_max_dual(
    scenario: MultiCellScenario, options: DualOptions | None = None
) -> tuple[MultiCellAllocation, SolveTrace]:
    """Interference-capped dual algorithm with an adaptive cap.

    The cap is a resource-allocator design knob (the interference level can be
    controlled by varying it), so the configured value and two looser ones are
    tried and the best feasible outcome kept.  Each run alternates the
    closed-form power / assignment pass with projected subgradient updates,
    then rebalances each cell's budget exactly (complementary slackness) and
    reports the achieved rate under the true interference."""
    options = options or DualOptions()
    # the iteration needs a feasible starting vector; the decoupled best-gain
    # water-filling configuration serves as iterate zero, and the best-iterate
    # policy below never returns anything worse than it
    seed_alloc = asm_baseline(scenario)
    best: tuple[MultiCellAllocation, SolveTrace] | None = None
    for cap_scale in options.cap_scales:
        capped = MultiCellScenario(
            cell_count=scenario.cell_count, subcarrier_count=scenario.subcarrier_count,
            user_cells=scenario.user_cells, user_is_id=scenario.user_is_id,
            info_gain_sq=scenario.info_gain_sq, energy_gain_sq=scenario.energy_gain_sq,
            noise_power_w=scenario.noise_power_w, conversion_efficiency=scenario.conversion_efficiency,
            p_max_w=scenario.p_max_w, r_min_bps_hz=scenario.r_min_bps_hz,
            eh_min_w=scenario.eh_min_w, i_max_w=scenario.i_max_w * cap_scale,
        )
        alloc, trace = _dual_single_cap(capped, options, seed_alloc)
        trace.info["i_max_w"] = capped.i_max_w
        if alloc.feasible and (best is None or not best[0].feasible
                               or alloc.total_rate > best[0].total_rate):
            best = (alloc, trace)
        elif best is None:
            best = (alloc, trace)
    return best


def _dual_single_cap(
    scenario: MultiCellScenario, options: DualOptions,
    seed_alloc: MultiCellAllocation | None = None,
) -> tuple[MultiCellAllocation, SolveTrace]:
    sc = scenario
    links = _Links(sc)
    trace = SolveTrace()
    if not feasibility_precheck(sc):
        trace.termination = TERM_INFEASIBLE
        shape = (sc.cell_count, sc.subcarrier_count, sc.user_count)
        zeros = np.zeros(shape)
        return MultiCellAllocation(a=zeros, p=zeros.copy(), p_tilde=zeros.copy(), q_tilde=zeros.copy(),
                                   total_rate=0.0, per_user_rate=np.zeros(sc.user_count),
                                   per_user_eh=np.zeros(sc.user_count), feasible=False), trace

    state = _dual_initial_state(sc, options)
    denom_cap = sc.noise_power_w + sc.i_max_w
    converged = False
    best_q = None
    best_rate = -np.inf
    if seed_alloc is not None and seed_alloc.feasible:
        best_q = seed_alloc.q_tilde.copy()
        best_rate = seed_alloc.total_rate
    for it in range(options.max_iterations):
        q = _dual_q_from_state(sc, state)
        # track the best budget-respecting iterate that meets all floors,
        # the fallback when the multipliers oscillate at the iteration cap
        q_scaled = q.copy()
        for j in range(sc.cell_count):
            spend_j = q_scaled[j].sum()
            if spend_j > sc.p_max_w:
                q_scaled[j] *= sc.p_max_w / spend_j
        cand_rates = true_rates(q_scaled, sc)
        floors_ok = sc.r_min_bps_hz <= 0 or (
            sc.id_users.size and float(np.min(cand_rates[sc.id_users])) >= sc.r_min_bps_hz
        )
        if sc.eh_min_w > 0:
            for u in sc.eh_users:
                j = sc.user_cells[u]
                got = sc.conversion_efficiency[u] * float(np.sum(q_scaled[j, :, u] * sc.energy_gain_sq[j, :, u]))
                floors_ok = floors_ok and got >= sc.eh_min_w * (1 - 1e-9)
        if floors_ok:
            cand_total = float(cand_rates[sc.id_users].sum()) if sc.id_users.size else 0.0
            if cand_total > best_rate:
                best_rate, best_q = cand_total, q_scaled.copy()
        violations = {}
        cell_power = np.array([q[j].sum() for j in range(sc.cell_count)])
        violations["phi"] = (cell_power - sc.p_max_w) / sc.p_max_w
        zeta_v = np.zeros(sc.user_count)
        theta_v = np.zeros((sc.user_count, sc.subcarrier_count))
        for u in sc.id_users:
            j = sc.user_cells[u]
            capped_rate = float(np.sum(np.log2(1.0 + q[j, :, u] * sc.info_gain_sq[j, :, u] / denom_cap)))
            zeta_v[u] = (sc.r_min_bps_hz - capped_rate) / max(1.0, sc.r_min_bps_hz)
            for n in range(sc.subcarrier_count):
                i_true = interference(q, sc.info_gain_sq, j, n, u)
                theta_v[u, n] = (i_true - sc.i_max_w) / sc.i_max_w
        violations["zeta"] = zeta_v
        violations["theta"] = theta_v
        tau_v = np.zeros(sc.user_count)
        for u in sc.eh_users:
            j = sc.user_cells[u]
            harvested = sc.conversion_efficiency[u] * float(np.sum(q[j, :, u] * sc.energy_gain_sq[j, :, u]))
            tau_v[u] = (sc.eh_min_w - harvested) / max(sc.eh_min_w, 1e-12)
        violations["tau"] = tau_v
        a_sum = q.astype(bool)[:, :, list(sc.id_users)].sum(axis=2) if sc.id_users.size else np.zeros((sc.cell_count, sc.subcarrier_count))
        violations["chi"] = a_sum - 1.0
        # bounded subgradients: raw normalized violations can start huge when
        # the interference cap is far below the uncontrolled level
        violations = {k: np.clip(v, -10.0, 10.0) for k, v in violations.items()}
        new_state = subgradient_step(state, violations)
        scales = _dual_family_scales(sc)
        change = max(
            float(np.max(np.abs(new_state.multipliers[k] - state.multipliers[k]), initial=0.0)) / scales[k]
            for k in scales
        )
        state = new_state
        trace.record(float(cell_power.sum()), max(0.0, float(np.max(violations["phi"], initial=0.0))))
        if change <= options.tol:
            converged = True
            break
    trace.termination = TERM_CONVERGED if converged else TERM_ITERATION_CAP
    # Exact budget rebalancing: bisect each cell's power price so the budget
    # binds (or is priced at ~zero when genuinely slack), which pins the
    # complementary-slackness residual phi_j * (sum q - p_max) to ~0.
    q = _dual_q_from_state(sc, state)
    warning = "" if converged else "no multiplier convergence at iteration cap"
    for j in range(sc.cell_count):
        eh_spend = sum(q[j, :, u].sum() for u in sc.eh_users)
        budget = sc.p_max_w - eh_spend
        if budget < 0:
            warning = "harvest floors exceed the power budget"
            continue
        ids = sc.id_users_of_cell(j)
        assigned = [(n, u) for u in ids for n in range(sc.subcarrier_count) if q[j, n, u] > 0]
        if not assigned:
            continue

        def spend(phi_val: float, j=j, assigned=assigned) -> float:
            st = state.copy()
            st.multipliers["phi"][j] = phi_val
            return sum(waterfill_power(st, sc, j, n, u) for n, u in assigned)

        lo = 1e-16
        if spend(lo) <= budget:
            # per-link caps bind before the budget does: budget slack, price ~0
            state.multipliers["phi"][j] = lo
        else:
            hi = max(state.multipliers["phi"][j], lo * 10)
            while spend(hi) > budget:
                hi *= 4.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if spend(mid) > budget:
                    lo = mid
                else:
                    hi = mid
            state.multipliers["phi"][j] = hi
        for n, u in assigned:
            q[j, n, u] = waterfill_power(state, sc, j, n, u)

    def finish(q_final: np.ndarray, warn: str) -> MultiCellAllocation:
        committed = np.zeros(links.count, dtype=bool)
        flat = np.zeros(links.count)
        for l in range(links.count):
            val = q_final[links.cell[l], links.sub[l], links.user[l]]
            flat[l] = val
            committed[l] = val > 0
        out = _allocation_from_powers(sc, links, flat, committed)
        out.q_tilde = out.p_tilde.copy()
        out.warning = warn
        out.iterations = trace.iterations
        return out

    allocation = finish(q, warning)
    if best_q is not None:
        alt = finish(best_q, warning)
        if (alt.feasible and not allocation.feasible) or (
            alt.feasible and allocation.feasible and alt.total_rate > allocation.total_rate
        ):
            alt.warning = warning or "best feasible iterate beat the rebalanced endpoint"
            allocation = alt
    trace.info["dual_state"] = state
    return allocation, trace


# -- decoupled baselines ---------------------------------------------------------


def _best_gain_assignment(scenario: MultiCellScenario) -> dict[tuple[int, int], int]:
    out: dict[tuple[int, int], int] = {}
    for j in range(scenario.cell_count):
        ids = scenario.id_users_of_cell(j)
        if ids.size == 0:
            continue
        for n in range(scenario.subcarrier_count):
            out[(j, n)] = int(ids[int(np.argmax([scenario.own_gain(u, n) for u in ids]))])
    return out


def asm_baseline(scenario: MultiCellScenario) -> MultiCellAllocation:
    """Thin decoupled heuristic: assign every subcarrier to the best own-gain
    ID user, then per-cell noise-referenced water-filling of the residual
    budget.  Fully decoupled (no interference awareness, no joint refinement);
    rates reported under the true interference."""
    sc = scenario
    links = _Links(sc)
    assign = _best_gain_assignment(sc)
    floors, ok = _eh_floor_powers(sc, links)
    p = floors.copy()
    if ok:
        for j in range(sc.cell_count):
            budget = sc.p_max_w - floors[links.cell == j].sum()
            mine = [(n, u) for (jj, n), u in assign.items() if jj == j]
            if budget <= 0 or not mine:
                continue
            latents = np.array([sc.noise_power_w / sc.own_gain(u, n) for n, u in mine])
            lo, hi = float(latents.min()), float(latents.min()) + budget * 2
            while np.sum(np.maximum(hi - latents, 0.0)) < budget:
                hi *= 2.0
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if np.sum(np.maximum(mid - latents, 0.0)) < budget:
                    lo = mid
                else:
                    hi = mid
            q = np.maximum(hi - latents, 0.0)
            for (n, u), qq in zip(mine, q):
                p[links.link(u, n)] = qq
    committed = p > 0
    allocation = _allocation_from_powers(sc, links, p, committed)
    allocation.feasible = allocation.feasible and ok
    return allocation


def equal_power_baseline(scenario: MultiCellScenario) -> MultiCellAllocation:
    """Best own-gain assignment with a flat p_max/N split (harvest floors
    carved out first)."""
    sc = scenario
    links = _Links(sc)
    assign = _best_gain_assignment(sc)
    floors, ok = _eh_floor_powers(sc, links)
    p = floors.copy()
    for j in range(sc.cell_count):
        budget = sc.p_max_w - floors[links.cell == j].sum()
        mine = [(n, u) for (jj, n), u in assign.items() if jj == j]
        if budget <= 0 or not mine:
            continue
        flat = min(sc.p_max_w / sc.subcarrier_count, budget / len(mine))
        for n, u in mine:
            p[links.link(u, n)] = flat
    committed = p > 0
    allocation = _allocation_from_powers(sc, links, p, committed)
    allocation.feasible = allocation.feasible and ok
    return allocation
