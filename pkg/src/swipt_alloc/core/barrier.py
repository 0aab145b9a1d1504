"""Log-barrier interior-point solver for small dense concave programs.

Newton steps with backtracking line search on the barrier potential; the barrier
parameter starts at t0 = 1 and grows by a factor of 10 per outer stage until the
duality gap m/t drops below the requested tolerance.  Infeasible starts are
repaired by a phase-1 pass that maximizes the feasibility margin.  Inequality
rows are equilibrated to unit norm and the objective gradient is rescaled to
O(1) internally, so tolerances behave uniformly across problems whose natural
units differ by many orders of magnitude.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from .expr import ConcaveExpr
from .program import DEFAULT_OPTIONS, ConcaveProgram, SolverOptions
from .trace import TERM_CONVERGED, TERM_INFEASIBLE, TERM_UNBOUNDED, SolveTrace

_MIN_SLACK = 1e-16


def _normalized(program: ConcaveProgram) -> ConcaveProgram:
    """Copy of the program with unit-norm inequality/equality rows and concave
    constraints rescaled so their affine coefficients are O(1).  Linearized
    interference terms can carry ~1/noise gradients; dividing a whole
    constraint (weights, coefficients and bound alike) keeps the Newton
    systems inside float64 range without changing the feasible set."""
    a_ub, b_ub = program.a_ub, program.b_ub
    if a_ub is not None:
        scale = np.maximum(np.abs(a_ub).max(axis=1), np.abs(b_ub))
        scale = np.where(scale > 0, scale, 1.0)
        a_ub = a_ub / scale[:, None]
        b_ub = b_ub / scale
    a_eq, b_eq = program.a_eq, program.b_eq
    if a_eq is not None:
        scale = np.maximum(np.abs(a_eq).max(axis=1), np.abs(b_eq))
        scale = np.where(scale > 0, scale, 1.0)
        a_eq = a_eq / scale[:, None]
        b_eq = b_eq / scale
    concave = []
    for g, bound in program.concave_ineqs:
        s = 1.0
        if g.lin is not None and g.lin.size:
            s = max(1.0, float(np.max(np.abs(g.lin))))
        if s > 1.0:
            g = ConcaveExpr(
                n=g.n,
                const=g.const / s,
                lin=None if g.lin is None else g.lin / s,
                quad=None if g.quad is None else g.quad / s,
                log_w=None if g.log_w is None else g.log_w / s,
                log_c=g.log_c,
                log_d=g.log_d,
            )
            bound = bound / s
        concave.append((g, bound))
    return ConcaveProgram(n=program.n, objective=program.objective, a_ub=a_ub, b_ub=b_ub,
                          a_eq=a_eq, b_eq=b_eq, lb=program.lb.copy(), ub=program.ub.copy(),
                          concave_ineqs=concave)


class _Workspace:
    def __init__(self, program: ConcaveProgram):
        self.prog = program
        self.n = program.n
        self.a_ub = program.a_ub
        self.b_ub = program.b_ub
        self.lo_idx = np.flatnonzero(np.isfinite(program.lb))
        self.hi_idx = np.flatnonzero(np.isfinite(program.ub))
        self.lb = program.lb
        self.ub = program.ub
        self.concave = program.concave_ineqs
        self.m = program.inequality_count

    def slacks(self, x: np.ndarray):
        s_ub = self.b_ub - self.a_ub @ x if self.a_ub is not None else None
        s_lo = x[self.lo_idx] - self.lb[self.lo_idx]
        s_hi = self.ub[self.hi_idx] - x[self.hi_idx]
        s_g = np.array([g.value(x) - bound for g, bound in self.concave])
        return s_ub, s_lo, s_hi, s_g

    def min_slack(self, x: np.ndarray) -> float:
        out = np.inf
        for s in self.slacks(x):
            if s is not None and s.size:
                out = min(out, float(np.min(s)))
        return out


def _potential(ws: _Workspace, obj: ConcaveExpr, w_obj: float, t: float, x: np.ndarray) -> float:
    if not obj.in_domain(x):
        return -np.inf
    total = t * w_obj * obj.value(x)
    for s in ws.slacks(x):
        if s is None or not s.size:
            continue
        if np.min(s) <= 0:
            return -np.inf
        total += float(np.sum(np.log(s)))
    return total


def _newton_system(ws: _Workspace, obj: ConcaveExpr, w_obj: float, t: float, x: np.ndarray):
    n = ws.n
    s_ub, s_lo, s_hi, s_g = ws.slacks(x)
    grad = t * w_obj * obj.grad(x)
    m_mat = -t * w_obj * obj.hess(x)

    if ws.a_ub is not None:
        inv = 1.0 / s_ub
        grad -= ws.a_ub.T @ inv
        scaled = ws.a_ub * inv[:, None]
        m_mat += scaled.T @ scaled
    diag = np.zeros(n)
    if ws.lo_idx.size:
        inv = 1.0 / s_lo
        grad[ws.lo_idx] += inv
        diag[ws.lo_idx] += inv**2
    if ws.hi_idx.size:
        inv = 1.0 / s_hi
        grad[ws.hi_idx] -= inv
        diag[ws.hi_idx] += inv**2
    m_mat[np.diag_indices(n)] += diag
    for (g, _), sg in zip(ws.concave, s_g):
        gg = g.grad(x)
        grad += gg / sg
        m_mat -= g.hess(x) / sg
        m_mat += np.outer(gg, gg) / sg**2
    return grad, m_mat


def _solve_step(m_mat: np.ndarray, grad: np.ndarray, a_eq: np.ndarray | None, ridge: float) -> np.ndarray:
    n = m_mat.shape[0]
    if not (np.all(np.isfinite(m_mat)) and np.all(np.isfinite(grad))):
        raise ArithmeticError("Newton system contains non-finite entries")
    # median keeps the regularization near the bulk curvature scale even when a
    # few near-active constraints push diagonal entries to ~1/slack^2
    base = ridge * max(1.0, float(np.median(np.diag(m_mat))))
    for attempt in range(9):
        reg = m_mat + (base * 10.0**attempt) * np.eye(n)
        try:
            if a_eq is None:
                c, low = scipy.linalg.cho_factor(reg, lower=True, check_finite=False)
                step = scipy.linalg.cho_solve((c, low), grad, check_finite=False)
            else:
                p = a_eq.shape[0]
                kkt = np.block([[reg, a_eq.T], [a_eq, np.zeros((p, p))]])
                rhs = np.concatenate([grad, np.zeros(p)])
                step = scipy.linalg.solve(kkt, rhs, assume_a="sym", check_finite=False)[:n]
            if np.all(np.isfinite(step)):
                return step
        except (scipy.linalg.LinAlgError, ValueError):
            pass
    raise ArithmeticError("Newton system is numerically singular")


def _center(ws, obj, w_obj, t, x, options, early_stop=None, loose=False):
    """Newton iterations at fixed barrier parameter. Returns (x, stopped_early).

    Intermediate stages only need the iterate back inside Newton's quadratic
    convergence region (``loose``); the final stage is centered tightly.
    """
    a_eq = ws.prog.a_eq
    # lambda^2/2 bounds the potential suboptimality (dimensionless); full
    # quadratic-region steps let the tight threshold sit near machine epsilon.
    threshold = 1e-2 if loose else 1e-12
    for _ in range(options.max_newton_per_stage):
        grad, m_mat = _newton_system(ws, obj, w_obj, t, x)
        step = _solve_step(m_mat, grad, a_eq, options.ridge)
        decrement = float(grad @ step)
        if decrement <= threshold:
            break
        # Inside Newton's quadratic region the potential improvement falls
        # below float rounding, so the sufficient-decrease test would stall;
        # a full step with a bare domain check converges to machine precision.
        quadratic = decrement <= 1e-2
        phi0 = -np.inf if quadratic else _potential(ws, obj, w_obj, t, x)
        alpha = 1.0
        x_new = None
        for _ in range(60):
            cand = x + alpha * step
            phi = _potential(ws, obj, w_obj, t, cand)
            if np.isfinite(phi) and (quadratic or phi >= phi0 + 0.25 * alpha * decrement):
                x_new = cand
                break
            alpha *= 0.5
        if x_new is None:
            break
        x = x_new
        if early_stop is not None and early_stop(x):
            return x, True
    return x, False


def _box_interior_point(lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
    x = np.zeros(lb.size)
    both = np.isfinite(lb) & np.isfinite(ub)
    x[both] = 0.5 * (lb[both] + ub[both])
    only_lo = np.isfinite(lb) & ~np.isfinite(ub)
    x[only_lo] = lb[only_lo] + 1.0
    only_hi = ~np.isfinite(lb) & np.isfinite(ub)
    x[only_hi] = ub[only_hi] - 1.0
    return x


def _extend_expr(g: ConcaveExpr, s_coeff: float) -> ConcaveExpr:
    """Lift g(x) to g(x) + s_coeff * s over the augmented variable (x, s)."""
    n = g.n
    lin = np.zeros(n + 1)
    if g.lin is not None:
        lin[:n] = g.lin
    lin[n] = s_coeff
    quad = None
    if g.quad is not None:
        quad = np.zeros((n + 1, n + 1))
        quad[:n, :n] = g.quad
    log_c = None
    if g.log_w is not None:
        log_c = np.hstack([g.log_c, np.zeros((g.log_c.shape[0], 1))])
    return ConcaveExpr(n=n + 1, const=g.const, lin=lin, quad=quad,
                       log_w=g.log_w, log_c=log_c, log_d=g.log_d)


def _phase1(program: ConcaveProgram, options: SolverOptions, x_hint: np.ndarray | None) -> np.ndarray | None:
    """Strictly feasible point via margin maximization, or None if infeasible.

    Box bounds stay hard (a box-interior start always exists); all other
    constraints are relaxed by a shared slack s that the pass drives negative.
    Assumes rows are already normalized so one s spans comparable scales.
    """
    n = program.n
    x = _box_interior_point(program.lb, program.ub)
    if x_hint is not None:
        pad = np.where(np.isfinite(program.ub - program.lb),
                       1e-9 * (1.0 + np.abs(program.lb) + np.abs(program.ub)), 1e-9)
        cand = np.clip(x_hint, program.lb + pad, program.ub - pad)
        if all(g.in_domain(cand) for g, _ in program.concave_ineqs):
            x = cand
    if not all(g.in_domain(x) for g, _ in program.concave_ineqs):
        return None  # builders keep box-interior points inside log domains

    viol = 0.0
    if program.a_ub is not None:
        viol = max(viol, float(np.max(program.a_ub @ x - program.b_ub, initial=0.0)))
    for g, bound in program.concave_ineqs:
        viol = max(viol, bound - g.value(x))
    s0 = viol + 1.0

    a_ub = b_ub = None
    if program.a_ub is not None:
        a_ub = np.hstack([program.a_ub, -np.ones((program.a_ub.shape[0], 1))])
        b_ub = program.b_ub
    concave = [(_extend_expr(g, 1.0), bound) for g, bound in program.concave_ineqs]
    lb = np.concatenate([program.lb, [-10.0 * s0]])
    ub = np.concatenate([program.ub, [s0 + 10.0]])
    a_eq = b_eq = None
    if program.a_eq is not None:
        a_eq = np.hstack([program.a_eq, np.zeros((program.a_eq.shape[0], 1))])
        b_eq = program.b_eq
    objective = ConcaveExpr.linear(n + 1, np.concatenate([np.zeros(n), [-1.0]]))
    aux = ConcaveProgram(n=n + 1, objective=objective, a_ub=a_ub, b_ub=b_ub,
                         a_eq=a_eq, b_eq=b_eq, lb=lb, ub=ub, concave_ineqs=concave)

    z = np.concatenate([x, [s0]])
    if program.a_eq is not None:
        z[:n] += np.linalg.lstsq(program.a_eq, program.b_eq - program.a_eq @ z[:n], rcond=None)[0]

    margin = 1e-7
    ws = _Workspace(aux)

    def early_stop(zz: np.ndarray) -> bool:
        return zz[n] < -margin

    # At small t the barrier's slack-enlarging pull on s dominates the -t*s
    # objective, so start with t comparable to the constraint count; only the
    # sign of s matters here, hence loose centering throughout.
    t = max(options.t0, 2.0 * ws.m)
    for _ in range(options.max_stages):
        try:
            z, stopped = _center(ws, objective, 1.0, t, z, options, early_stop, loose=True)
        except ArithmeticError:
            break
        if stopped:
            return z[:n]
        if t >= 1e8 * max(1.0, s0):
            break
        t *= options.barrier_step
    return z[:n] if z[n] < 0 else None


def kkt_residuals(program: ConcaveProgram, x: np.ndarray, t: float, w_obj: float) -> dict:
    """Stationarity / violation / complementary-slackness with the barrier's
    implied multipliers lambda_i = 1 / (t * slack_i)."""
    ws = _Workspace(program)
    s_ub, s_lo, s_hi, s_g = ws.slacks(x)
    stat = w_obj * program.objective.grad(x)
    comp = 0.0
    if ws.a_ub is not None:
        lam = 1.0 / (t * s_ub)
        stat -= ws.a_ub.T @ lam
        comp = max(comp, float(np.max(lam * s_ub)))
    if ws.lo_idx.size:
        lam = 1.0 / (t * s_lo)
        stat[ws.lo_idx] += lam
        comp = max(comp, float(np.max(lam * s_lo)))
    if ws.hi_idx.size:
        lam = 1.0 / (t * s_hi)
        stat[ws.hi_idx] -= lam
        comp = max(comp, float(np.max(lam * s_hi)))
    for (g, _), sg in zip(ws.concave, s_g):
        lam = 1.0 / (t * sg)
        stat += lam * g.grad(x)
        comp = max(comp, lam * sg)
    if program.a_eq is not None:
        q, _ = np.linalg.qr(program.a_eq.T)
        stat = stat - q @ (q.T @ stat)
    return {
        "stationarity": float(np.max(np.abs(stat))),
        "max_violation": max(0.0, program.max_violation(x)),
        "complementary_slackness": comp,
    }


def _usable_start(prog: ConcaveProgram, ws: _Workspace, x0: np.ndarray | None) -> np.ndarray | None:
    if x0 is None:
        return None
    x0 = np.asarray(x0, dtype=float)
    if (
        prog.objective.in_domain(x0)
        and all(g.in_domain(x0) for g, _ in prog.concave_ineqs)
        and ws.min_slack(x0) > _MIN_SLACK
        and (prog.a_eq is None or np.max(np.abs(prog.a_eq @ x0 - prog.b_eq)) < 1e-9)
    ):
        return x0.copy()
    return None


def solve_concave(
    program: ConcaveProgram,
    options: SolverOptions | None = None,
    x0: np.ndarray | None = None,
    fallback_x0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveTrace]:
    """Maximize a concave program; returns (point, trace).

    x0 (then fallback_x0) is used when strictly feasible; otherwise a phase-1
    pass constructs a start.  trace.termination is "converged" on success,
    "infeasible" when phase-1 proves an empty interior, "unbounded" when the
    objective passes the configured ceiling.
    """
    options = options or DEFAULT_OPTIONS
    trace = SolveTrace()
    prog = _normalized(program)
    ws = _Workspace(prog)
    obj = prog.objective

    warm = True
    x = _usable_start(prog, ws, x0)
    if x is None:
        x = _usable_start(prog, ws, fallback_x0)
    if x is None:
        warm = False
        with threadpool_limits(limits=1):
            x = _phase1(prog, options, x0)
        if x is None:
            trace.termination = TERM_INFEASIBLE
            return np.full(prog.n, np.nan), trace

    # Robust objective scaling: the interference logs can give a handful of
    # coordinates ~1/noise gradients near their zero bound, and normalizing by
    # the max would crush the objective term for every other coordinate.
    g0 = np.abs(obj.grad(x))
    g_scale = float(np.percentile(g0, 90)) if g0.size else 0.0
    if g_scale <= 0:
        g_scale = float(np.max(g0, initial=0.0))
    w_obj = 1.0 / float(np.clip(g_scale, 1e-10, 1e10))

    t = max(options.t0, options.warm_t0) if warm else options.t0
    m = max(ws.m, 1)
    with threadpool_limits(limits=1):  # threaded BLAS thrashes on these small kernels
        for _ in range(options.max_stages):
            final_stage = m / t <= 0.25 * options.tol
            try:
                x, _ = _center(ws, obj, w_obj, t, x, options, loose=not final_stage)
            except ArithmeticError as exc:
                trace.info["warning"] = f"newton breakdown at t={t:.1e}: {exc}"
                trace.termination = TERM_CONVERGED
                break
            val = obj.value(x)
            trace.record(val, max(0.0, prog.max_violation(x)))
            if val > options.objective_ceiling:
                trace.termination = TERM_UNBOUNDED
                return x, trace
            if final_stage:
                trace.termination = TERM_CONVERGED
                break
            t *= options.barrier_step
    trace.info["kkt"] = kkt_residuals(prog, x, t, w_obj)
    trace.info["barrier_t"] = t
    trace.info["objective_scale"] = w_obj
    return x, trace
