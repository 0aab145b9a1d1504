"""Single-cell harvested-energy maximization with disjoint ID / EH subcarriers.

Joint subcarrier assignment and power allocation: maximize the total harvested
power subject to a per-user minimum rate, a transmit power budget, OFDMA
exclusivity, and big-M product decoupling.  The binary indicators are relaxed
to [0,1] and pushed back to {0,1} by the a - a^2 penalty, whose subtracted
convex part is linearized each iteration (minorize-maximize).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    TERM_CONVERGED,
    TERM_INFEASIBLE,
    ConcaveExpr,
    ConcaveProgram,
    MmOptions,
    SolveTrace,
    binary_gap,
    linearized_penalty,
    mm_maximize,
    penalty_value,
)
from .core.expr import LN2


@dataclass(frozen=True)
class EhScenario:
    subcarrier_count: int
    id_subcarriers: np.ndarray  # indices, |.| = Z
    eh_subcarriers: np.ndarray  # complement
    info_gain_sq: np.ndarray  # (N, K)
    energy_gain_sq: np.ndarray  # (N, K)
    noise_power_w: float
    conversion_efficiency: np.ndarray  # (K,), each in (0, 1)
    p_max_w: float
    r_min_bps_hz: float

    def __post_init__(self) -> None:
        n = self.subcarrier_count
        ids = set(np.asarray(self.id_subcarriers).tolist())
        ehs = set(np.asarray(self.eh_subcarriers).tolist())
        if ids & ehs or ids | ehs != set(range(n)):
            raise ValueError("ID and EH subcarrier sets must partition {0..N-1}")
        eps = np.asarray(self.conversion_efficiency)
        if np.any(eps <= 0) or np.any(eps >= 1):
            raise ValueError("conversion efficiency must lie in (0, 1)")
        if self.p_max_w <= 0:
            raise ValueError("p_max must be positive")
        if self.info_gain_sq.shape != (n, self.user_count):
            raise ValueError("gain array shape must be (N, K)")

    @property
    def user_count(self) -> int:
        return int(self.info_gain_sq.shape[1])


@dataclass
class EhAllocation:
    a: np.ndarray  # (N, K) relaxed indicators as converged (binary-recovery checks)
    a_bin: np.ndarray  # (N, K) committed binary assignment
    p: np.ndarray  # (N, K) watts
    p_tilde: np.ndarray  # (N, K) watts
    harvested_w: float
    per_user_rate: np.ndarray  # (K,) bps/Hz
    feasible: bool = True
    iterations: int = 0


def harvested_energy(
    p_tilde: np.ndarray,
    energy_gain_sq: np.ndarray,
    eps: np.ndarray | float,
    eh_set: np.ndarray | None = None,
) -> float:
    """sum_k eps_k * sum_{n in EH set} p~[n,k] * |g[n,k]|^2 (noise term omitted:
    its contribution is negligible against the signal term)."""
    p_tilde = np.atleast_2d(np.asarray(p_tilde, dtype=float))
    g = np.atleast_2d(np.asarray(energy_gain_sq, dtype=float))
    rows = slice(None) if eh_set is None else np.asarray(eh_set, dtype=int)
    return float(np.sum(np.asarray(eps) * np.sum(p_tilde[rows] * g[rows], axis=0)))


def user_rate(
    p_tilde: np.ndarray,
    info_gain_sq: np.ndarray,
    noise_power_w: float,
    id_set: np.ndarray | None = None,
) -> np.ndarray:
    """Per-user Shannon rate sum_{n in ID set} log2(1 + p~ |h|^2 / sigma^2)."""
    p_tilde = np.atleast_2d(np.asarray(p_tilde, dtype=float))
    h = np.atleast_2d(np.asarray(info_gain_sq, dtype=float))
    rows = slice(None) if id_set is None else np.asarray(id_set, dtype=int)
    snr = p_tilde[rows] * h[rows] / noise_power_w
    return np.log2(1.0 + snr).sum(axis=0)


def _min_power_for_rate(gains: np.ndarray, noise_w: float, r_min: float) -> tuple[np.ndarray, float]:
    """Water-filling power of minimal total meeting sum log2(1 + p g / sigma^2) = r_min.

    Returns (per-subcarrier powers, total).  gains are the |h|^2 of the
    subcarriers available to one user.
    """
    if r_min <= 0 or gains.size == 0:
        return np.zeros_like(gains), 0.0 if r_min <= 0 else np.inf
    inv = noise_w / gains  # noise-normalized channel floor

    def rate_at(level: float) -> float:
        p = np.maximum(level - inv, 0.0)
        return float(np.log2(1.0 + p * gains / noise_w).sum())

    lo, hi = float(np.min(inv)), float(np.min(inv)) + noise_w / np.min(gains)
    while rate_at(hi) < r_min:
        hi *= 2.0
        if hi > 1e30:
            return np.full_like(gains, np.inf), np.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rate_at(mid) < r_min:
            lo = mid
        else:
            hi = mid
    p = np.maximum(hi - inv, 0.0)
    return p, float(p.sum())


def feasibility_precheck(scenario: EhScenario) -> tuple[bool, np.ndarray]:
    """Round-robin best-subcarrier assignment plus per-user minimum-power
    water-filling; feasible when the total fits the power budget.

    Returns (ok, assignment) with assignment[n] = user index or -1 on the ID set.
    """
    k_count = scenario.user_count
    ids = np.asarray(scenario.id_subcarriers, dtype=int)
    assign = -np.ones(scenario.subcarrier_count, dtype=int)
    if scenario.r_min_bps_hz <= 0:
        return True, assign
    remaining = set(ids.tolist())
    order = [[] for _ in range(k_count)]
    while remaining:
        for k in range(k_count):
            if not remaining:
                break
            best = max(remaining, key=lambda n: scenario.info_gain_sq[n, k])
            order[k].append(best)
            remaining.discard(best)
    total = 0.0
    for k in range(k_count):
        if not order[k]:
            return False, assign
        gains = scenario.info_gain_sq[np.array(order[k]), k]
        _, needed = _min_power_for_rate(gains, scenario.noise_power_w, scenario.r_min_bps_hz)
        total += needed
        for n in order[k]:
            assign[n] = k
    return total <= scenario.p_max_w, assign


def build_eh_surrogate(current_a: np.ndarray, scenario: EhScenario, lam: float) -> ConcaveProgram:
    """Concave program over z = [a (N*K), p~ (N*K)] for one MM iteration.

    Objective: harvested power (linear in p~) minus the penalty
    lam * (sum a - W~(a)) with W~ the tangent of sum a^2 at current_a.
    Constraints: per-subcarrier exclusivity, power budget, per-user rate floor
    in concave log form, and p~ <= p_max * a.  The plain power variable p is
    recovered as p := p~ afterwards, which satisfies the remaining big-M rows
    identically on [0,1] indicators.
    """
    n, k = scenario.subcarrier_count, scenario.user_count
    nk = n * k
    dim = 2 * nk

    lin = np.zeros(dim)
    pen_lin, pen_const = linearized_penalty(np.asarray(current_a).ravel(), lam)
    lin[:nk] = pen_lin
    credit = np.zeros((n, k))
    credit[scenario.eh_subcarriers] = (
        scenario.conversion_efficiency * scenario.energy_gain_sq[scenario.eh_subcarriers]
    )
    lin[nk:] = credit.ravel()
    objective = ConcaveExpr(n=dim, const=pen_const, lin=lin)

    rows = np.zeros((n + 1 + nk, dim))
    b = np.zeros(n + 1 + nk)
    for sc in range(n):  # C1 / C2: at most one user per subcarrier
        rows[sc, sc * k : (sc + 1) * k] = 1.0
        b[sc] = 1.0
    rows[n, nk:] = 1.0  # C3: sum p~ <= p_max
    b[n] = scenario.p_max_w
    for i in range(nk):  # C6: p~ - p_max * a <= 0
        rows[n + 1 + i, nk + i] = 1.0
        rows[n + 1 + i, i] = -scenario.p_max_w
        b[n + 1 + i] = 0.0

    concave = []
    if scenario.r_min_bps_hz > 0:
        ids = np.asarray(scenario.id_subcarriers, dtype=int)
        z = ids.size
        for u in range(k):  # C4: sum_{n in ID} log2(1 + p~ h / sigma^2) >= R_min
            c = np.zeros((z, dim))
            c[np.arange(z), nk + ids * k + u] = scenario.info_gain_sq[ids, u]
            g = ConcaveExpr(
                n=dim,
                const=-z * np.log(scenario.noise_power_w) / LN2,
                log_w=np.full(z, 1.0 / LN2),
                log_c=c,
                log_d=np.full(z, scenario.noise_power_w),
            )
            concave.append((g, scenario.r_min_bps_hz))

    lb = np.zeros(dim)
    ub = np.concatenate([np.ones(nk), np.full(nk, np.inf)])
    return ConcaveProgram(n=dim, objective=objective, a_ub=rows, b_ub=b, lb=lb, ub=ub,
                          concave_ineqs=concave)


@dataclass(frozen=True)
class EhSolveOptions:
    mm: MmOptions = field(default_factory=MmOptions)
    binary_tolerance: float = 1e-4
    max_penalty_escalations: int = 3
    initial_power: str = "equal"  # equal | full | zero


def _finalize_with_assignment(scenario: EhScenario, a_bin: np.ndarray) -> EhAllocation:
    """Exact power allocation for a fixed binary assignment: minimum power per
    user on its ID subcarriers, all residual budget on the best harvest link."""
    n, k = scenario.subcarrier_count, scenario.user_count
    p_tilde = np.zeros((n, k))
    ids = np.asarray(scenario.id_subcarriers, dtype=int)
    feasible = True
    budget = scenario.p_max_w
    for u in range(k):
        mine = ids[a_bin[ids, u] > 0.5]
        p_u, needed = _min_power_for_rate(
            scenario.info_gain_sq[mine, u], scenario.noise_power_w, scenario.r_min_bps_hz
        )
        if not np.isfinite(needed):
            feasible = False
            continue
        p_tilde[mine, u] = p_u
        budget -= needed
    if budget < -1e-12 * scenario.p_max_w:
        feasible = False
    budget = max(budget, 0.0)
    ehs = np.asarray(scenario.eh_subcarriers, dtype=int)
    ncand, kcand = np.nonzero(a_bin[ehs] > 0.5)
    if ncand.size:
        credit = scenario.conversion_efficiency[kcand] * scenario.energy_gain_sq[ehs[ncand], kcand]
        best = int(np.argmax(credit))
        p_tilde[ehs[ncand[best]], kcand[best]] += budget
    return EhAllocation(
        a=a_bin.astype(float),
        a_bin=a_bin.astype(float),
        p=p_tilde.copy(),
        p_tilde=p_tilde,
        harvested_w=harvested_energy(
            p_tilde, scenario.energy_gain_sq, scenario.conversion_efficiency, scenario.eh_subcarriers
        ),
        per_user_rate=user_rate(p_tilde, scenario.info_gain_sq, scenario.noise_power_w, scenario.id_subcarriers),
        feasible=feasible,
    )


def _extract_assignment(scenario: EhScenario, a_rel: np.ndarray, p_rel: np.ndarray) -> np.ndarray:
    """Binary assignment from a converged relaxed point.

    Relaxed optima routinely serve a rate floor through a vanishing indicator
    (the penalty rewards small a while the big-M row only needs a >= p~/p_max),
    so the committed power p~ identifies service more reliably than a itself.
    Per subcarrier the largest-p~ user wins (largest-a as tiebreak when no
    power landed); if that leaves some user without an ID subcarrier, the
    round-robin pre-check assignment is used for the ID set instead.
    """
    n, k = scenario.subcarrier_count, scenario.user_count
    a_bin = np.zeros((n, k))
    ehs = np.asarray(scenario.eh_subcarriers, dtype=int)
    ids = np.asarray(scenario.id_subcarriers, dtype=int)
    for sc in ehs:
        a_bin[sc, int(np.argmax(scenario.conversion_efficiency * scenario.energy_gain_sq[sc]))] = 1.0
    for sc in ids:
        u = int(np.argmax(p_rel[sc])) if np.max(p_rel[sc]) > 1e-15 else int(np.argmax(a_rel[sc]))
        a_bin[sc, u] = 1.0
    if scenario.r_min_bps_hz > 0:
        owned = a_bin[ids].sum(axis=0)
        if np.any(owned < 1):
            _, rr = feasibility_precheck(scenario)
            a_bin[ids] = 0.0
            for sc in ids:
                if rr[sc] >= 0:
                    a_bin[sc, rr[sc]] = 1.0
    return a_bin


def solve_eh_max(scenario: EhScenario, options: EhSolveOptions | None = None) -> tuple[EhAllocation, SolveTrace]:
    """Joint assignment / power solver (iterative minorize-maximize).

    Starts from a = 1/K with the configured power split, escalates the binary
    penalty (x10, bounded) until max |a(1-a)| meets the tolerance, then rounds
    (largest indicator wins) and re-solves the powers exactly.
    """
    options = options or EhSolveOptions()
    ok, _ = feasibility_precheck(scenario)
    if not ok:
        trace = SolveTrace()
        trace.termination = TERM_INFEASIBLE
        empty = np.zeros_like(scenario.info_gain_sq)
        return EhAllocation(a=empty, a_bin=empty.copy(), p=empty.copy(), p_tilde=empty.copy(),
                            harvested_w=0.0, per_user_rate=np.zeros(scenario.user_count),
                            feasible=False), trace

    n, k = scenario.subcarrier_count, scenario.user_count
    nk = n * k
    # a shade inside 1/K keeps the exclusivity rows strictly slack at the start
    a0 = np.full(nk, (1.0 - 1e-3) / k)
    p_per = {"equal": scenario.p_max_w / n, "full": scenario.p_max_w, "zero": 0.0}[options.initial_power]
    z0 = np.concatenate([a0, a0 * p_per])

    base = harvested_energy(
        np.full((n, k), scenario.p_max_w / (n * k)),
        scenario.energy_gain_sq,
        scenario.conversion_efficiency,
        scenario.eh_subcarriers,
    )
    lam = 10.0 * max(base, 1e-12)

    trace = SolveTrace()
    total_iters = 0
    z = z0
    anchor = z0 if options.initial_power == "equal" else None
    for escalation in range(options.max_penalty_escalations + 1):
        builder = lambda zz, lam=lam: build_eh_surrogate(zz[:nk], scenario, lam)
        z, trace = mm_maximize(builder, z, options.mm, interior_anchor=anchor)
        total_iters += trace.iterations
        if trace.termination == TERM_INFEASIBLE:
            empty = np.zeros_like(scenario.info_gain_sq)
            return EhAllocation(a=empty, a_bin=empty.copy(), p=empty.copy(), p_tilde=empty.copy(),
                                harvested_w=0.0, per_user_rate=np.zeros(k), feasible=False), trace
        if binary_gap(z[:nk]) <= options.binary_tolerance:
            break
        lam *= 10.0
    trace.info["total_iterations"] = total_iters
    trace.info["binary_gap"] = binary_gap(z[:nk])
    trace.info["penalty_weight"] = lam

    a_rel = z[:nk].reshape(n, k)
    a_bin = _extract_assignment(scenario, a_rel, z[nk:].reshape(n, k))
    allocation = _finalize_with_assignment(scenario, a_bin)
    allocation.a = a_rel  # callers inspect the relaxed indicators for binary recovery
    allocation.iterations = total_iters
    return allocation, trace


def baseline_equal_power(scenario: EhScenario, reference: EhAllocation | None = None) -> EhAllocation:
    """Reference method: the solver's assignment with flat p_max/N on every
    assigned subcarrier; flags infeasibility when the rate floor breaks."""
    if reference is None:
        reference, _ = solve_eh_max(scenario)
    a_bin = (reference.a_bin >= 0.5).astype(float)
    p_tilde = a_bin * (scenario.p_max_w / scenario.subcarrier_count)
    rates = user_rate(p_tilde, scenario.info_gain_sq, scenario.noise_power_w, scenario.id_subcarriers)
    feasible = bool(np.all(rates >= scenario.r_min_bps_hz - 1e-9))
    return EhAllocation(
        a=a_bin,
        a_bin=a_bin.copy(),
        p=p_tilde.copy(),
        p_tilde=p_tilde,
        harvested_w=harvested_energy(p_tilde, scenario.energy_gain_sq,
                                     scenario.conversion_efficiency, scenario.eh_subcarriers),
        per_user_rate=rates,
        feasible=feasible,
    )


def baseline_random_assignment(
    scenario: EhScenario, rng: np.random.Generator, max_redraws: int = 100
) -> EhAllocation:
    """Reference method: equal power with random assignment.  ID subcarriers are
    dealt randomly until each user meets the rate floor; every EH subcarrier
    goes to a random user."""
    n, k = scenario.subcarrier_count, scenario.user_count
    p_flat = scenario.p_max_w / n
    ids = np.asarray(scenario.id_subcarriers, dtype=int)
    ehs = np.asarray(scenario.eh_subcarriers, dtype=int)
    for _ in range(max_redraws):
        a = np.zeros((n, k))
        pool = list(rng.permutation(ids))
        ok = True
        for u in rng.permutation(k):
            rate = 0.0
            while rate < scenario.r_min_bps_hz:
                if not pool:
                    ok = False
                    break
                sc = pool.pop()
                a[sc, u] = 1.0
                rate += np.log2(1.0 + p_flat * scenario.info_gain_sq[sc, u] / scenario.noise_power_w)
            if not ok:
                break
        if not ok:
            continue
        a[ehs, rng.integers(0, k, size=ehs.size)] = 1.0
        p_tilde = a * p_flat
        rates = user_rate(p_tilde, scenario.info_gain_sq, scenario.noise_power_w, ids)
        return EhAllocation(
            a=a,
            a_bin=a.copy(),
            p=p_tilde.copy(),
            p_tilde=p_tilde,
            harvested_w=harvested_energy(p_tilde, scenario.energy_gain_sq,
                                         scenario.conversion_efficiency, ehs),
            per_user_rate=rates,
            feasible=bool(np.all(rates >= scenario.r_min_bps_hz - 1e-9)),
        )
    empty = np.zeros((n, k))
    return EhAllocation(a=empty, a_bin=empty.copy(), p=empty.copy(), p_tilde=empty.copy(),
                        harvested_w=0.0, per_user_rate=np.zeros(k), feasible=False)
