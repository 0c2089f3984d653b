import numpy as np
import pytest

from cfsim.channel import (DISTANCE_FLOOR_M, ChannelModelParams,
                           ChannelRealization, draw_channel, generate_layout,
                           large_scale_coeff, path_loss_db,
                           propagation_constant_db, subchannel)
from cfsim.errors import SimulationError

PARAMS = ChannelModelParams()


def test_propagation_constant_matches_hand_value():
    # Hand evaluation of the frequency/height constant at the default
    # parameters (f = 1900 MHz, h_AP = 15 m, h_u = 1.5 m).
    f = 1900.0
    expected = (46.3 + 33.9 * np.log10(f) - 13.82 * np.log10(15.0)
                - (1.11 * np.log10(f) - 0.7) * 1.5 + 1.56 * np.log10(f) - 0.8)
    assert propagation_constant_db(PARAMS) == pytest.approx(expected, abs=1e-12)
    assert propagation_constant_db(PARAMS) == pytest.approx(141.10, abs=0.01)


def test_path_loss_segments_continuous_at_breakpoints():
    d0, d1 = PARAMS.d0_m, PARAMS.d1_m
    for d in (d0, d1):
        below = path_loss_db(d - 1e-9, PARAMS)
        above = path_loss_db(d + 1e-9, PARAMS)
        assert below == pytest.approx(above, abs=1e-6)


def test_path_loss_inner_segment_value():
    d = PARAMS.d0_m
    big_d = propagation_constant_db(PARAMS)
    expected = -big_d - 10.0 * np.log10(PARAMS.d1_m ** 1.5 * d ** 2)
    assert path_loss_db(d, PARAMS) == pytest.approx(expected, abs=1e-12)


def test_path_loss_outer_slope_is_35_db_per_decade():
    d = 2.0 * PARAMS.d1_m
    diff = path_loss_db(d, PARAMS) - path_loss_db(PARAMS.d1_m, PARAMS)
    assert diff == pytest.approx(-35.0 * np.log10(2.0), abs=1e-12)


def test_path_loss_flat_below_d0_and_monotone():
    assert path_loss_db(3.0, PARAMS) == path_loss_db(9.0, PARAMS)
    d = np.linspace(DISTANCE_FLOOR_M, 600.0, 400)
    pl = path_loss_db(d, PARAMS)
    assert np.all(np.diff(pl) <= 1e-12)


def test_path_loss_distance_floor():
    assert path_loss_db(0.0, PARAMS) == path_loss_db(DISTANCE_FLOOR_M, PARAMS)


def test_path_loss_scalar_and_array_agree():
    d = np.array([5.0, 30.0, 200.0])
    arr = path_loss_db(d, PARAMS)
    assert arr.shape == (3,)
    for i, di in enumerate(d):
        assert isinstance(path_loss_db(float(di), PARAMS), float)
        assert path_loss_db(float(di), PARAMS) == arr[i]


def test_shadowing_applies_only_beyond_d1():
    z = 1.7
    near = large_scale_coeff(PARAMS.d1_m, z, PARAMS)
    assert near == pytest.approx(10 ** (path_loss_db(PARAMS.d1_m, PARAMS) / 10))
    far = large_scale_coeff(100.0, z, PARAMS)
    expected = 10 ** ((path_loss_db(100.0, PARAMS) + PARAMS.shadow_sigma_db * z) / 10)
    assert far == pytest.approx(expected, rel=1e-12)


def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelModelParams(d0_m=60.0, d1_m=50.0)
    with pytest.raises(ValueError):
        ChannelModelParams(csi_error_fraction=1.0)
    with pytest.raises(ValueError):
        ChannelModelParams(shadow_sigma_db=-1.0)


def test_generate_layout_single_cluster():
    layout = generate_layout(4, 8, 1, PARAMS, seed=1)
    assert layout.num_aps == 4 and layout.num_ues == 8
    assert np.all(layout.cluster_of_ap == 0)
    assert np.all(layout.cluster_of_ue == 0)
    assert np.all(layout.ap_positions >= 0.0)
    assert np.all(layout.ap_positions <= PARAMS.area_side_m)


def test_generate_layout_four_clusters_partition():
    layout = generate_layout(64, 128, 4, PARAMS, seed=2)
    assert layout.ap_counts.sum() == 64
    assert layout.ue_counts.sum() == 128
    # Membership matches the spatial tile of each node.
    half = PARAMS.area_side_m / 2.0
    for pos, cl in zip(layout.ap_positions, layout.cluster_of_ap):
        tile = (1 if pos[1] >= half else 0) * 2 + (1 if pos[0] >= half else 0)
        assert tile == cl


def test_generate_layout_rejects_bad_cluster_count():
    with pytest.raises(ValueError):
        generate_layout(4, 8, 3, PARAMS, seed=3)


def test_generate_layout_error_mode_raises_on_short_cluster():
    # With 4 clusters and only 4 APs, some draw will leave a tile empty;
    # error mode must surface it instead of redrawing.
    with pytest.raises(SimulationError):
        for seed in range(50):
            generate_layout(4, 40, 4, PARAMS, seed=seed,
                            on_short_cluster="error")


def test_generate_layout_regenerate_meets_minimum():
    layout = generate_layout(16, 16, 4, PARAMS, seed=4,
                             min_aps_per_cluster=2, min_ues_per_cluster=2)
    assert layout.ap_counts.min() >= 2
    assert layout.ue_counts.min() >= 2


def test_generate_layout_deterministic():
    a = generate_layout(8, 8, 1, PARAMS, seed=5)
    b = generate_layout(8, 8, 1, PARAMS, seed=5)
    assert np.array_equal(a.ap_positions, b.ap_positions)
    assert np.array_equal(a.ue_positions, b.ue_positions)


def test_draw_channel_split_and_scale():
    layout = generate_layout(32, 24, 1, PARAMS, seed=6)
    chan = draw_channel(layout, PARAMS, seed=7)
    assert chan.beta.shape == (32, 24)
    assert np.all(chan.beta > 0)
    np.testing.assert_allclose(chan.g_true, chan.g_hat + chan.g_err, atol=1e-15)


def test_draw_channel_error_fraction_zero_gives_zero_error():
    params = ChannelModelParams(csi_error_fraction=0.0)
    layout = generate_layout(8, 8, 1, params, seed=8)
    chan = draw_channel(layout, params, seed=9)
    assert np.all(chan.g_err == 0.0)
    np.testing.assert_array_equal(chan.g_true, chan.g_hat)


def test_draw_channel_error_variance_fraction():
    # Empirical split of variance between estimate and error.
    params = ChannelModelParams(csi_error_fraction=0.25, shadow_sigma_db=0.0)
    layout = generate_layout(60, 60, 1, params, seed=10)
    chan = draw_channel(layout, params, seed=11)
    ratio = np.mean(np.abs(chan.g_err) ** 2 / chan.beta)
    assert ratio == pytest.approx(0.25, rel=0.1)
    total = np.mean(np.abs(chan.g_true) ** 2 / chan.beta)
    assert total == pytest.approx(1.0, rel=0.1)


def test_channel_realization_rejects_inconsistent_split(rng):
    m = np.ones((2, 2))
    g = np.ones((2, 2), dtype=complex)
    with pytest.raises(ValueError):
        ChannelRealization(beta=m, g_true=g, g_hat=g, g_err=g)


def test_subchannel_selection_and_validation():
    layout = generate_layout(8, 8, 1, PARAMS, seed=12)
    chan = draw_channel(layout, PARAMS, seed=13)
    sub = subchannel(chan, [1, 3], [0, 2, 5])
    assert sub.beta.shape == (2, 3)
    assert sub.g_hat[0, 0] == chan.g_hat[1, 0]
    assert sub.g_hat[1, 2] == chan.g_hat[3, 5]
    with pytest.raises(IndexError):
        subchannel(chan, [9], [0])
    with pytest.raises(ValueError):
        subchannel(chan, [1, 1], [0])
