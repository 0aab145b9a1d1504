"""Monte-Carlo sweep harness: runs registered methods over seeded channel
realizations, writes long-format CSV rows plus a summary block, and keeps the
output byte-stable for a fixed master seed (modulo the timing column).

Seed discipline: realization r always uses the stream derived from
(master_seed, r), so every method and every sweep value sees identical
channels (paired comparisons)."""

from __future__ import annotations

import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import realization_rng, realization_seed
from .config import ScenarioConfig, config_hash
from .eemax import (
    EeSolveOptions,
    ee_rate,
    ee_ratio,
    harvested_power,
    per_user_rates,
    select_antennas,
    solve_ee,
    solve_joint_alloc_dinkelbach,
    total_power,
)
from .ehmax import (
    EhSolveOptions,
    baseline_equal_power,
    baseline_random_assignment,
    harvested_energy,
    solve_eh_max,
    user_rate,
)
from .ratemax import (
    RateMmOptions,
    asm_baseline,
    equal_power_baseline,
    solve_rate_max_dual,
    solve_rate_max_mm,
)
from .scenarios import build_ee_scenario, build_eh_scenario, build_multicell_scenario

SCHEMA_VERSION = 1
INFEASIBLE = "infeasible"
CSV_COLUMNS = ("experiment", "method", "sweep_value", "realization", "seed",
               "metric", "value", "iterations", "wall_clock_ms")


@dataclass(frozen=True)
class SweepSpec:
    experiment: str
    sweep_values: tuple = ()
    realization_count: int = 100
    master_seed: int = 1
    methods: tuple = ()
    workers: int = 1

    def resolved(self) -> "SweepSpec":
        exp = EXPERIMENTS[self.experiment]
        values = self.sweep_values or tuple(exp.default_values)
        methods = self.methods or tuple(exp.default_methods)
        if not values:
            raise ValueError("sweepValues must be nonempty")
        for m in methods:
            if m not in exp.methods:
                raise ValueError(f"method {m!r} is not registered for experiment {self.experiment!r}")
        return replace(self, sweep_values=tuple(values), methods=tuple(methods))


# -- chapter 3 methods -----------------------------------------------------------


def _eh_metrics(alloc, cfg: ScenarioConfig) -> dict[str, float]:
    scale = cfg.rate_unit_scale
    return {
        "eh_w": alloc.harvested_w,
        "min_user_rate": float(np.min(alloc.per_user_rate) * scale) if alloc.per_user_rate.size else 0.0,
    }


def _run_eh_mm(cfg, rng, init="equal"):
    sc = build_eh_scenario(cfg, rng)
    alloc, trace = solve_eh_max(sc, EhSolveOptions(initial_power=init))
    return alloc.feasible, _eh_metrics(alloc, cfg), alloc.iterations, trace


def _run_eh_equal(cfg, rng):
    sc = build_eh_scenario(cfg, rng)
    ref, _ = solve_eh_max(sc)
    alloc = baseline_equal_power(sc, ref)
    return alloc.feasible, _eh_metrics(alloc, cfg), 0, None


def _run_eh_random(cfg, rng):
    sc = build_eh_scenario(cfg, rng)
    alloc = baseline_random_assignment(sc, rng)
    return alloc.feasible, _eh_metrics(alloc, cfg), 0, None


def method_fixed_ps_baseline(scenario, ps_ratio: float = 0.5) -> dict[str, float]:
    """Power-splitting comparison: every subcarrier carries both streams, a
    fixed fraction of the received power harvested and the rest decoded;
    equal transmit power, best-gain user per subcarrier."""
    if not (0.0 <= ps_ratio <= 1.0):
        raise ValueError("psRatio must lie in [0, 1]")
    n, k = scenario.subcarrier_count, scenario.user_count
    p_flat = scenario.p_max_w / n
    a = np.zeros((n, k))
    a[np.arange(n), np.argmax(scenario.info_gain_sq, axis=1)] = 1.0
    p_tilde = a * p_flat
    rates = user_rate((1.0 - ps_ratio) * p_tilde, scenario.info_gain_sq, scenario.noise_power_w, None)
    harvested = harvested_energy(ps_ratio * p_tilde, scenario.energy_gain_sq,
                                 scenario.conversion_efficiency, None)
    return {"eh_w": harvested, "min_user_rate": float(np.min(rates))}


def _run_eh_fixed_ps(cfg, rng):
    sc = build_eh_scenario(cfg, rng)
    metrics = method_fixed_ps_baseline(sc)
    feasible = metrics["min_user_rate"] >= sc.r_min_bps_hz - 1e-9
    metrics["min_user_rate"] *= cfg.rate_unit_scale
    return feasible, metrics, 0, None


# -- chapter 4 methods -----------------------------------------------------------


def _rate_metrics(alloc, sc, cfg: ScenarioConfig) -> dict[str, float]:
    scale = cfg.rate_unit_scale
    id_rates = alloc.per_user_rate[sc.id_users] if sc.id_users.size else np.zeros(1)
    eh_vals = alloc.per_user_eh[sc.eh_users] if sc.eh_users.size else np.zeros(1)
    return {
        "total_rate": float(alloc.total_rate * scale),
        "min_user_rate": float(np.min(id_rates) * scale),
        "min_user_eh_w": float(np.min(eh_vals)),
    }


def _run_rate_mm(cfg, rng, init="dual"):
    sc = build_multicell_scenario(cfg, rng)
    alloc, trace = solve_rate_max_mm(sc, RateMmOptions(initial_power=init))
    return alloc.feasible, _rate_metrics(alloc, sc, cfg), alloc.iterations, trace


def _run_rate_dual(cfg, rng):
    sc = build_multicell_scenario(cfg, rng)
    alloc, trace = solve_rate_max_dual(sc)
    return alloc.feasible, _rate_metrics(alloc, sc, cfg), alloc.iterations, trace


def _run_rate_asm(cfg, rng):
    sc = build_multicell_scenario(cfg, rng)
    alloc = asm_baseline(sc)
    return alloc.feasible, _rate_metrics(alloc, sc, cfg), 0, None


def _run_rate_equal(cfg, rng):
    sc = build_multicell_scenario(cfg, rng)
    alloc = equal_power_baseline(sc)
    return alloc.feasible, _rate_metrics(alloc, sc, cfg), 0, None


# -- chapter 5 methods -----------------------------------------------------------


def _ee_metrics(alloc, cfg: ScenarioConfig) -> dict[str, float]:
    scale = cfg.rate_unit_scale
    return {
        "ee_bits_per_joule": float(alloc.ee_value * scale),
        "total_rate": float(alloc.total_rate * scale),
        "harvested_w": float(alloc.harvested_w),
    }


def _run_ee_mm(cfg, rng, init="equal"):
    sc = build_ee_scenario(cfg, rng)
    alloc, trace = solve_ee(sc, EeSolveOptions(initial_power=init))
    return alloc.feasible, _ee_metrics(alloc, cfg), alloc.dinkelbach_iterations, trace


def _run_ee_equal(cfg, rng):
    """Full-power reference: the solver's assignment and antenna modes with a
    flat power split."""
    sc = build_ee_scenario(cfg, rng)
    alloc, _ = solve_ee(sc)
    p = np.where(alloc.p_tilde > 0, sc.p_max_w / sc.subcarrier_count, 0.0)
    rates = per_user_rates(alloc.a, alloc.x, p, sc)
    feasible = sc.r_min_bps_hz <= 0 or bool(np.min(rates) >= sc.r_min_bps_hz * (1 - 1e-6))
    for j in range(sc.cell_count):
        feasible = feasible and p[j].sum() <= sc.p_max_w * (1 + 1e-9)
    metrics = {
        "ee_bits_per_joule": float(ee_ratio(alloc.a, alloc.x, p, p, sc) * cfg.rate_unit_scale),
        "total_rate": float(ee_rate(alloc.a, alloc.x, p, sc) * cfg.rate_unit_scale),
        "harvested_w": float(harvested_power(alloc.x, p, sc)),
    }
    return feasible, metrics, 0, None


def _run_ee_random(cfg, rng):
    """Random subcarrier ownership and antenna modes; power-only ratio solve."""
    sc = build_ee_scenario(cfg, rng)
    pattern = {}
    for j in range(sc.cell_count):
        users = sc.users_of_cell(j)
        for n in range(sc.subcarrier_count):
            pattern[(j, n)] = int(rng.choice(users))
    x = np.zeros((sc.cell_count, sc.subcarrier_count, sc.user_count, sc.antennas_per_user))
    modes = rng.integers(0, sc.antennas_per_user, size=(sc.subcarrier_count, sc.user_count))
    for n in range(sc.subcarrier_count):
        for u in range(sc.user_count):
            x[:, n, u, modes[n, u]] = 1.0
    a, p_tilde, trace, info = solve_joint_alloc_dinkelbach(sc, x, pattern=pattern)
    if info.get("pattern") is None:
        return False, {"ee_bits_per_joule": 0.0, "total_rate": 0.0, "harvested_w": 0.0}, 0, None
    rates = per_user_rates(a, x, p_tilde, sc)
    feasible = sc.r_min_bps_hz <= 0 or bool(np.min(rates) >= sc.r_min_bps_hz * (1 - 1e-6))
    metrics = {
        "ee_bits_per_joule": float(ee_ratio(a, x, p_tilde, p_tilde, sc) * cfg.rate_unit_scale),
        "total_rate": float(ee_rate(a, x, p_tilde, sc) * cfg.rate_unit_scale),
        "harvested_w": float(harvested_power(x, p_tilde, sc)),
    }
    return feasible, metrics, trace.iterations, trace


# -- experiment registry -----------------------------------------------------------


@dataclass(frozen=True)
class Experiment:
    chapter: str  # eh | rate | ee
    sweep_field: str | None  # config field the sweep value overrides
    default_values: tuple
    methods: dict
    default_methods: tuple
    metrics: tuple
    trace_metric: str | None = None  # iteration-trace experiments sweep the index

    def apply(self, cfg: ScenarioConfig, value) -> ScenarioConfig:
        if self.sweep_field is None:
            return cfg
        return cfg.replace(**{self.sweep_field: value})


_EH_METHODS = {
    "mm": _run_eh_mm,
    "equal-power": _run_eh_equal,
    "random": _run_eh_random,
    "fixed-ps": _run_eh_fixed_ps,
}
_EH_INIT_METHODS = {
    "init-equal": lambda cfg, rng: _run_eh_mm(cfg, rng, "equal"),
    "init-full": lambda cfg, rng: _run_eh_mm(cfg, rng, "full"),
    "init-zero": lambda cfg, rng: _run_eh_mm(cfg, rng, "zero"),
}
_RATE_METHODS = {
    "mm": _run_rate_mm,
    "dual": _run_rate_dual,
    "asm": _run_rate_asm,
    "equal-power": _run_rate_equal,
}
_RATE_INIT_METHODS = {
    "init-dual": lambda cfg, rng: _run_rate_mm(cfg, rng, "dual"),
    "init-equal": lambda cfg, rng: _run_rate_mm(cfg, rng, "equal"),
    "init-full": lambda cfg, rng: _run_rate_mm(cfg, rng, "full"),
    "init-zero": lambda cfg, rng: _run_rate_mm(cfg, rng, "zero"),
}
_EE_METHODS = {
    "mm": _run_ee_mm,
    "equal-power": _run_ee_equal,
    "random": _run_ee_random,
}
_EE_INIT_METHODS = {
    "init-equal": lambda cfg, rng: _run_ee_mm(cfg, rng, "equal"),
    "init-full": lambda cfg, rng: _run_ee_mm(cfg, rng, "full"),
    "init-zero": lambda cfg, rng: _run_ee_mm(cfg, rng, "zero"),
}

EXPERIMENTS: dict[str, Experiment] = {
    "eh-vs-pmax": Experiment("eh", "p_max_dbm", (20.0, 25.0, 30.0, 35.0, 40.0),
                             _EH_METHODS, ("mm", "equal-power", "random", "fixed-ps"),
                             ("eh_w", "min_user_rate")),
    "eh-vs-distance": Experiment("eh", "fixed_distance_m", (6.0, 8.0, 10.0, 14.0, 18.0),
                                 _EH_METHODS, ("mm", "equal-power", "random", "fixed-ps"),
                                 ("eh_w", "min_user_rate")),
    "eh-vs-rmin": Experiment("eh", "r_min_bps_hz", (1.0, 2.0, 3.0, 4.0),
                             _EH_METHODS, ("mm", "equal-power", "random"),
                             ("eh_w", "min_user_rate")),
    "eh-vs-iterations": Experiment("eh", None, tuple(range(1, 13)),
                                   _EH_INIT_METHODS, ("init-equal", "init-full", "init-zero"),
                                   ("eh_w",), trace_metric="eh_w"),
    "rate-vs-rmin": Experiment("rate", "r_min_bps_hz", (1.0, 2.0, 3.0, 4.0),
                               _RATE_METHODS, ("mm", "dual", "asm"),
                               ("total_rate", "min_user_rate", "min_user_eh_w")),
    "rate-vs-pmax": Experiment("rate", "p_max_dbm", (20.0, 25.0, 30.0, 35.0, 40.0),
                               _RATE_METHODS, ("mm", "dual", "asm"),
                               ("total_rate", "min_user_rate", "min_user_eh_w")),
    "rate-vs-iterations": Experiment("rate", None, tuple(range(1, 13)),
                                     _RATE_INIT_METHODS, ("init-dual", "init-equal", "init-zero"),
                                     ("total_rate",), trace_metric="total_rate"),
    "rate-vs-cells": Experiment("rate", "num_cells", (3, 4, 5, 6, 7),
                                _RATE_METHODS, ("mm",),
                                ("total_rate", "min_user_rate", "min_user_eh_w")),
    "ee-convergence": Experiment("ee", None, tuple(range(1, 9)),
                                 _EE_INIT_METHODS, ("init-equal", "init-full", "init-zero"),
                                 ("ee_bits_per_joule",), trace_metric="ee_bits_per_joule"),
    "ee-vs-pmax": Experiment("ee", "p_max_dbm", (20.0, 25.0, 30.0, 35.0, 40.0),
                             _EE_METHODS, ("mm", "equal-power", "random"),
                             ("ee_bits_per_joule", "total_rate", "harvested_w")),
    "ee-vs-rmin": Experiment("ee", "r_min_bps_hz", (1.0, 2.0, 3.0, 4.0),
                             _EE_METHODS, ("mm", "equal-power", "random"),
                             ("ee_bits_per_joule", "total_rate", "harvested_w")),
    "ee-vs-distance": Experiment("ee", "fixed_distance_m", (6.0, 8.0, 10.0, 14.0, 18.0),
                                 _EE_METHODS, ("mm", "equal-power"),
                                 ("ee_bits_per_joule", "total_rate", "harvested_w")),
    "throughput-vs-pmax": Experiment("ee", "p_max_dbm", (20.0, 25.0, 30.0, 35.0, 40.0),
                                     _EE_METHODS, ("mm", "equal-power", "random"),
                                     ("total_rate", "ee_bits_per_joule", "harvested_w")),
    "harvest-vs-pmax": Experiment("ee", "p_max_dbm", (20.0, 25.0, 30.0, 35.0, 40.0),
                                  _EE_METHODS, ("mm", "equal-power", "random"),
                                  ("harvested_w", "ee_bits_per_joule", "total_rate")),
}


# -- sweep execution -----------------------------------------------------------


def _run_task(args):
    """One (sweep value, realization): every requested method on the same
    channel stream."""
    spec_exp, methods, cfg, value, r, master_seed, trace_metric = args
    exp = EXPERIMENTS[spec_exp]
    cfg_v = exp.apply(cfg, value) if trace_metric is None else cfg
    rows = []
    for method in methods:
        rng = realization_rng(master_seed, r)
        seed_label = realization_seed(master_seed, r)
        t0 = time.perf_counter()
        try:
            feasible, metrics, iterations, trace = exp.methods[method](cfg_v, rng)
        except Exception as exc:  # solver defect: surface, never hide rows
            feasible, metrics, iterations, trace = False, {m: 0.0 for m in exp.metrics}, 0, None
            rows.append((spec_exp, method, value, r, seed_label, "error", repr(exc)[:80], 0, 0.0))
        ms = (time.perf_counter() - t0) * 1000.0
        if trace_metric is not None:
            series = trace.objective_values if trace is not None else []
            rows.append(("__trace__", method, r, seed_label, feasible, tuple(series), iterations, ms))
        else:
            for metric in exp.metrics:
                val = metrics[metric] if feasible else INFEASIBLE
                rows.append((spec_exp, method, value, r, seed_label, metric, val, iterations, ms))
    return rows


def run_sweep(spec: SweepSpec, cfg: ScenarioConfig, out_path: str | Path) -> dict:
    """Execute the sweep and write the CSV; returns {(method, value, metric): mean}.

    Infeasible runs keep their rows (value column holds an "infeasible"
    sentinel) and are excluded from the summary means."""
    spec = spec.resolved()
    exp = EXPERIMENTS[spec.experiment]
    is_trace = exp.trace_metric is not None

    tasks = []
    if is_trace:
        for r in range(spec.realization_count):
            tasks.append((spec.experiment, spec.methods, cfg, None, r, spec.master_seed, exp.trace_metric))
    else:
        for value in spec.sweep_values:
            for r in range(spec.realization_count):
                tasks.append((spec.experiment, spec.methods, cfg, value, r, spec.master_seed, None))

    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        results = [_run_task(t) for t in tasks]

    rows = []
    if is_trace:
        # expand per-iteration series into rows over the sweep (iteration) axis
        for chunk in results:
            for item in chunk:
                if item[0] != "__trace__":
                    rows.append(item)
                    continue
                _, method, r, seed_label, feasible, series, iterations, ms = item
                for value in spec.sweep_values:
                    idx = min(int(value) - 1, len(series) - 1)
                    val = series[idx] if (feasible and series) else INFEASIBLE
                    rows.append((spec.experiment, method, value, r, seed_label,
                                 exp.trace_metric, val, iterations, ms))
    else:
        for chunk in results:
            rows.extend(chunk)

    method_order = {m: i for i, m in enumerate(spec.methods)}
    value_order = {v: i for i, v in enumerate(spec.sweep_values)}
    metric_order = {m: i for i, m in enumerate(exp.metrics + ("error",))}
    rows.sort(key=lambda row: (value_order.get(row[2], 0), row[3],
                               method_order.get(row[1], 0), metric_order.get(row[5], 99)))

    summary: dict[tuple, float] = {}
    counts: dict[tuple, tuple[int, int]] = {}
    for method in spec.methods:
        for value in spec.sweep_values:
            for metric in exp.metrics:
                vals = [row[6] for row in rows
                        if row[1] == method and row[2] == value and row[5] == metric]
                numeric = [v for v in vals if not isinstance(v, str)]
                infeasible = len(vals) - len(numeric)
                if numeric:
                    summary[(method, value, metric)] = float(np.mean(numeric))
                counts[(method, value, metric)] = (len(numeric), infeasible)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write("# swipt-alloc results\n")
    buf.write(f"# schema_version: {SCHEMA_VERSION}\n")
    buf.write(f"# config_hash: {config_hash(cfg)}\n")
    buf.write(f"# experiment: {spec.experiment}\n")
    buf.write(f"# master_seed: {spec.master_seed}\n")
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        exp_tag, method, value, r, seed_label, metric, val, iterations, ms = row
        val_str = val if isinstance(val, str) else repr(float(val))
        buf.write(f"{exp_tag},{method},{value},{r},{seed_label},{metric},{val_str},{iterations},{ms:.3f}\n")
    for (method, value, metric), mean in sorted(
        summary.items(), key=lambda kv: (value_order[kv[0][1]], method_order[kv[0][0]], metric_order[kv[0][2]])
    ):
        n_ok, n_bad = counts[(method, value, metric)]
        buf.write(f"# summary,{spec.experiment},{method},{value},{metric},{mean!r},{n_ok},{n_bad}\n")
    out_path.write_text(buf.getvalue())
    return summary
