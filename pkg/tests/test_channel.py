import numpy as np
import pytest

from swipt_alloc.channel import (
    ChannelParams,
    ROLE_COLOCATED,
    ROLE_EH,
    ROLE_ID,
    TopologySpec,
    UserSpec,
    draw_realization,
    path_loss_db,
    place_users,
    realization_rng,
    rician_fade,
)


def _spec(**kw):
    defaults = dict(cell_count=1, cell_radius_m=20.0, reference_distance_m=5.0,
                    users_per_cell=(UserSpec(4, ROLE_COLOCATED),))
    defaults.update(kw)
    return TopologySpec(**defaults)


def test_path_loss_at_reference_distance():
    params = ChannelParams()
    assert path_loss_db(5.0, params) == pytest.approx(31.7)


def test_path_loss_at_ten_reference_distances():
    params = ChannelParams()
    assert path_loss_db(50.0, params) == pytest.approx(31.7 + 27.6)


def test_path_loss_at_twice_reference_distance():
    params = ChannelParams()
    assert path_loss_db(10.0, params) == pytest.approx(31.7 + 27.6 * np.log10(2.0), abs=1e-3)


def test_path_loss_clamps_below_reference():
    params = ChannelParams()
    assert path_loss_db(1.0, params) == pytest.approx(31.7)


def test_path_loss_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        path_loss_db(0.0, ChannelParams())


def test_path_loss_monotone_in_distance():
    params = ChannelParams()
    d = np.linspace(5.0, 100.0, 200)
    vals = [path_loss_db(x, params) for x in d]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_annulus_placement_bounds():
    topo = place_users(_spec(), realization_rng(1, 0))
    r = np.linalg.norm(topo.user_positions - topo.sbs_positions[0], axis=1)
    assert np.all(r > 5.0) and np.all(r < 20.0)


def test_degenerate_annulus():
    spec = _spec(cell_radius_m=5.000001)
    topo = place_users(spec, realization_rng(1, 0))
    r = np.linalg.norm(topo.user_positions - topo.sbs_positions[0], axis=1)
    assert np.allclose(r, 5.0, rtol=1e-6)


def test_eh_users_inside_inner_disc():
    spec = _spec(users_per_cell=(UserSpec(2, ROLE_ID), UserSpec(2, ROLE_EH)))
    topo = place_users(spec, realization_rng(3, 0))
    r = np.linalg.norm(topo.user_positions - topo.sbs_positions[0], axis=1)
    is_eh = np.array([role == ROLE_EH for role in topo.user_roles])
    assert np.all(r[is_eh] <= 5.0)
    assert np.all(r[~is_eh] > 5.0)


def test_placement_deterministic_per_seed():
    a = place_users(_spec(), realization_rng(7, 3))
    b = place_users(_spec(), realization_rng(7, 3))
    assert np.array_equal(a.user_positions, b.user_positions)


def test_rejects_inverted_rings():
    with pytest.raises(ValueError):
        _spec(reference_distance_m=20.0, cell_radius_m=5.0)


def test_rician_pure_los_limit():
    fade = rician_fade(realization_rng(0, 0), 100.0, size=16)
    assert np.allclose(np.abs(fade), 1.0)


def test_rician_unit_mean_square():
    fade = rician_fade(realization_rng(0, 1), 3.0, size=10**6)
    assert np.mean(np.abs(fade) ** 2) == pytest.approx(1.0, rel=0.01)


@pytest.mark.parametrize("rho", [-10.0, 0.0, 3.0, 20.0])
def test_rician_unit_power_across_factors(rho):
    fade = rician_fade(realization_rng(2, int(rho) + 10), rho, size=2 * 10**5)
    assert np.mean(np.abs(fade) ** 2) == pytest.approx(1.0, rel=0.02)


def test_rician_deterministic_per_seed():
    a = rician_fade(realization_rng(5, 5), 3.0, size=100)
    b = rician_fade(realization_rng(5, 5), 3.0, size=100)
    assert np.array_equal(a, b)


def test_realization_pure_geometry_when_no_randomness():
    params = ChannelParams(shadowing_std_db=0.0, rician_factor_db=120.0)
    spec = _spec(cell_radius_m=5.000001)
    topo = place_users(spec, realization_rng(1, 0))
    real = draw_realization(topo, params, 4, realization_rng(1, 1))
    assert np.allclose(real.info_gain_sq, 10 ** (-3.17), rtol=1e-5)


def test_realization_gains_positive_and_deterministic():
    spec = _spec(users_per_cell=(UserSpec(2, ROLE_ID), UserSpec(2, ROLE_EH)), cell_count=2)
    topo = place_users(spec, realization_rng(9, 0))
    r1 = draw_realization(topo, ChannelParams(), 8, realization_rng(9, 1))
    r2 = draw_realization(topo, ChannelParams(), 8, realization_rng(9, 1))
    assert np.all(r1.info_gain_sq > 0)
    assert np.array_equal(r1.info_gain_sq, r2.info_gain_sq)
    assert np.array_equal(r1.energy_gain_sq, r2.energy_gain_sq)


def test_tied_energy_gains_reuse_info_fades():
    topo = place_users(_spec(), realization_rng(4, 0))
    real = draw_realization(topo, ChannelParams(), 4, realization_rng(4, 1), tie_energy_to_info=True)
    assert np.array_equal(real.info_gain_sq, real.energy_gain_sq)
