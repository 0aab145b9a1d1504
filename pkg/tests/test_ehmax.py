import numpy as np
import pytest

from swipt_alloc.core import binary_gap
from swipt_alloc.ehmax import (
    EhScenario,
    baseline_equal_power,
    baseline_random_assignment,
    build_eh_surrogate,
    harvested_energy,
    solve_eh_max,
    user_rate,
)


def scenario(h, g, p_max=1.0, r_min=0.0, z=None, eps=0.3):
    h = np.asarray(h, dtype=float)
    n, k = h.shape
    z = z if z is not None else n // 2
    return EhScenario(
        subcarrier_count=n,
        id_subcarriers=np.arange(z),
        eh_subcarriers=np.arange(z, n),
        info_gain_sq=h,
        energy_gain_sq=np.asarray(g, dtype=float),
        noise_power_w=1e-15,
        conversion_efficiency=np.full(k, eps),
        p_max_w=p_max,
        r_min_bps_hz=r_min,
    )


def random_scenario(seed, n=16, k=4, p_max=1.0, r_min=1.0):
    rng = np.random.default_rng(seed)
    h = rng.exponential(1.0, (n, k)) * 10 ** (-(31.7 + 27.6 * np.log10(rng.uniform(1, 4, (1, k)))) / 10)
    g = rng.exponential(1.0, (n, k)) * 10 ** (-(31.7 + 27.6 * np.log10(rng.uniform(1, 4, (1, k)))) / 10)
    return scenario(h, g, p_max=p_max, r_min=r_min, z=n // 2)


# -- pure evaluators ------------------------------------------------------------


def test_harvested_energy_zero_power():
    sc = random_scenario(0)
    assert harvested_energy(np.zeros((16, 4)), sc.energy_gain_sq, sc.conversion_efficiency,
                            sc.eh_subcarriers) == 0.0


def test_harvested_energy_hand_value():
    assert harvested_energy(np.array([[1.0]]), np.array([[1e-6]]), 0.3) == pytest.approx(3e-7)


def test_harvested_energy_linearity():
    sc = random_scenario(1)
    p = np.abs(np.random.default_rng(2).normal(0, 0.1, (16, 4)))
    one = harvested_energy(p, sc.energy_gain_sq, sc.conversion_efficiency, sc.eh_subcarriers)
    two = harvested_energy(2 * p, sc.energy_gain_sq, sc.conversion_efficiency, sc.eh_subcarriers)
    assert two == pytest.approx(2 * one)


def test_user_rate_values():
    h = np.array([[1e-15]])
    assert user_rate(np.zeros((1, 1)), h, 1e-15)[0] == 0.0
    assert user_rate(np.ones((1, 1)), h, 1e-15)[0] == pytest.approx(1.0)
    assert user_rate(1000 * np.ones((1, 1)), h, 1e-15)[0] == pytest.approx(np.log2(1001), rel=1e-9)


# -- surrogate ------------------------------------------------------------------


def test_surrogate_penalty_vanishes_on_binary_point():
    sc = random_scenario(3)
    a_bin = np.zeros(64)
    a_bin[::4] = 1.0
    prog = build_eh_surrogate(a_bin, sc, lam=5.0)
    z = np.concatenate([a_bin, np.zeros(64)])
    # objective at the binary expansion point reduces to the pure harvest term (0 power)
    assert prog.objective.value(z) == pytest.approx(0.0, abs=1e-12)


def test_surrogate_penalty_gradient_flat_at_half():
    sc = random_scenario(4)
    a_half = np.full(64, 0.5)
    prog = build_eh_surrogate(a_half, sc, lam=7.0)
    grad = prog.objective.grad(np.concatenate([a_half, np.zeros(64)]))
    assert np.allclose(grad[:64], 0.0)


def test_surrogate_zero_penalty_is_pure_harvest():
    sc = random_scenario(5)
    prog = build_eh_surrogate(np.full(64, 0.25), sc, lam=0.0)
    rng = np.random.default_rng(0)
    p = rng.uniform(0, 0.01, 64)
    z = np.concatenate([np.full(64, 0.25), p])
    expected = harvested_energy(p.reshape(16, 4), sc.energy_gain_sq,
                                sc.conversion_efficiency, sc.eh_subcarriers)
    assert prog.objective.value(z) == pytest.approx(expected, rel=1e-12)


# -- solver ----------------------------------------------------------------------


def test_all_power_to_harvest_without_rate_floor():
    sc = scenario(h=[[1e-6], [2e-6]], g=[[1e-6], [3e-6]], r_min=0.0, z=1)
    alloc, trace = solve_eh_max(sc)
    assert alloc.harvested_w == pytest.approx(0.3 * 1.0 * 3e-6, rel=1e-6)
    assert trace.is_monotone()


def test_closed_form_power_split_with_rate_floor():
    h = [[1e-6], [2e-6]]
    g = [[1e-6], [3e-6]]
    r_min = 10.0
    sc = scenario(h=h, g=g, r_min=r_min, z=1)
    alloc, _ = solve_eh_max(sc)
    p_id_expected = 1e-15 * (2**r_min - 1) / 1e-6
    assert alloc.p_tilde[0, 0] == pytest.approx(p_id_expected, rel=1e-6)
    assert alloc.harvested_w == pytest.approx(0.3 * (1.0 - p_id_expected) * 3e-6, rel=1e-6)
    assert alloc.per_user_rate[0] == pytest.approx(r_min, abs=1e-9)


def test_solver_binary_recovery_and_feasibility():
    for seed in range(5):
        sc = random_scenario(10 + seed)
        alloc, trace = solve_eh_max(sc)
        assert alloc.feasible
        assert binary_gap(alloc.a) <= 1e-4
        assert np.all(alloc.per_user_rate >= sc.r_min_bps_hz - 1e-6)
        assert alloc.p_tilde.sum() <= sc.p_max_w * (1 + 1e-9)
        assert np.all(alloc.a_bin[\
            np.asarray(sc.id_subcarriers)].sum(axis=1) <= 1 + 1e-12)
        assert trace.is_monotone()


def test_infeasible_rate_floor_reported():
    sc = scenario(h=[[1e-15], [1e-15]], g=[[1e-6], [1e-6]], p_max=1e-9, r_min=30.0, z=1)
    alloc, trace = solve_eh_max(sc)
    assert not alloc.feasible
    assert trace.termination == "infeasible"


def test_harvest_monotone_in_power_budget():
    base = random_scenario(20)
    values = []
    for p_dbm in (20.0, 25.0, 30.0, 35.0, 40.0):
        sc = scenario(base.info_gain_sq, base.energy_gain_sq,
                      p_max=10 ** ((p_dbm - 30) / 10), r_min=1.0)
        alloc, _ = solve_eh_max(sc)
        values.append(alloc.harvested_w)
    assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))


def test_harvest_non_increasing_in_rate_floor():
    base = random_scenario(21)
    values = []
    for r_min in (1.0, 2.0, 3.0, 4.0):
        sc = scenario(base.info_gain_sq, base.energy_gain_sq, p_max=1.0, r_min=r_min)
        alloc, _ = solve_eh_max(sc)
        values.append(alloc.harvested_w)
    assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))


# -- baselines -------------------------------------------------------------------


def test_equal_power_baseline_definition_single_user():
    sc = scenario(h=[[1e-6], [2e-6]], g=[[1e-6], [3e-6]], r_min=0.0, z=1)
    alloc, _ = solve_eh_max(sc)
    eq = baseline_equal_power(sc, alloc)
    used = eq.p_tilde[eq.a_bin > 0.5]
    assert np.allclose(used[used > 0], sc.p_max_w / sc.subcarrier_count)


def test_equal_power_dominated_by_solver():
    for seed in range(5):
        sc = random_scenario(30 + seed)
        alloc, _ = solve_eh_max(sc)
        eq = baseline_equal_power(sc, alloc)
        assert alloc.harvested_w >= eq.harvested_w >= 0


def test_random_baseline_reproducible_and_dominated():
    for seed in range(5):
        sc = random_scenario(40 + seed)
        alloc, _ = solve_eh_max(sc)
        r1 = baseline_random_assignment(sc, np.random.default_rng(seed))
        r2 = baseline_random_assignment(sc, np.random.default_rng(seed))
        assert np.array_equal(r1.a, r2.a)
        assert alloc.harvested_w >= r1.harvested_w


def test_random_baseline_zero_rate_floor_uses_all_harvest_subcarriers():
    sc = scenario(h=np.full((4, 2), 1e-6), g=np.full((4, 2), 1e-6), r_min=0.0, z=2)
    alloc = baseline_random_assignment(sc, np.random.default_rng(0))
    assert np.all(alloc.a[np.asarray(sc.id_subcarriers)].sum(axis=1) == 0)
    assert np.all(alloc.a[np.asarray(sc.eh_subcarriers)].sum(axis=1) == 1)
