"""
Test unitari per il modello di canale.

Coprono pattern di radiazione, ampiezze LoS, campioni NLoS riproducibili,
rate Monte-Carlo e surrogato deterministico zeta.
"""

import math

import numpy as np
import pytest

from iosuav.config.settings import SceneConfig
from iosuav.core import channel, phase_design, scene

HOVER = (-100.0, -20.0)


@pytest.mark.unit
class TestRadiationPatterns:

    def setup_method(self):
        self.cfg = SceneConfig(n_elements=1)

    def test_arrival_pattern(self):
        # x - x_m = 7.5, d_Um = 12.5 -> (3/5)^3
        assert channel.arrival_pattern((7.5, 0.0), self.cfg, 0) == pytest.approx(0.216)

    def test_arrival_pattern_sign_symmetry(self):
        assert channel.arrival_pattern((-7.5, 0.0), self.cfg, 0) == pytest.approx(0.216)

    def test_arrival_pattern_on_plane_is_zero(self):
        assert channel.arrival_pattern((0.0, 30.0), self.cfg, 0) == 0.0

    def test_departure_pattern_transmissive_side(self):
        expected = 3.55 * (100.0 / math.sqrt(12000.0)) ** 3
        assert channel.departure_pattern(self.cfg, 0) == pytest.approx(expected)
        assert channel.departure_pattern(self.cfg, 0) == pytest.approx(2.7006, abs=1e-4)

    def test_departure_pattern_reflective_side(self):
        cfg = self.cfg.with_(reflective_sign=-1)
        assert channel.departure_pattern(cfg, 0) == pytest.approx((100.0 / math.sqrt(12000.0)) ** 3)

    def test_zero_epsilon_blocks_transmission(self):
        cfg = self.cfg.with_(epsilon=0.0)
        assert channel.departure_pattern(cfg, 0) == 0.0
        q = np.array([[-50.0, 0.0]])
        assert channel.ios_los_amplitudes(q, cfg)[0, 0] == 0.0
        assert channel.zeta(q[0], cfg) == pytest.approx(float(channel.direct_los_amplitudes(q, cfg)[0]))

    def test_element_gain_phase_rotation(self):
        q = (30.0, 5.0)
        g0 = channel.element_gain(q, 0.0, self.cfg, 0)
        g_pi = channel.element_gain(q, math.pi, self.cfg, 0)
        assert g0.real > 0 and g0.imag == 0.0
        assert g_pi.real == pytest.approx(-g0.real)
        assert abs(g_pi.imag) < 1e-12 * abs(g0)


@pytest.mark.unit
class TestLosAmplitudes:

    def test_direct_amplitude_at_hover(self):
        cfg = SceneConfig(rician_k=math.inf)
        h = channel.direct_channel(HOVER, cfg)
        assert abs(h) == pytest.approx(50.0 ** -2.5, rel=1e-9)
        assert abs(h) == pytest.approx(5.657e-5, rel=1e-3)

    def test_direct_channel_adds_scaled_nlos(self):
        cfg = SceneConfig(rician_k=3.0)
        sample = channel.NlosSample(direct=1.0 + 0j, ios=0j)
        h_los = channel.direct_channel(HOVER, cfg)
        h = channel.direct_channel(HOVER, cfg, sample)
        assert abs(h - h_los) == pytest.approx(0.5 * 50.0 ** -2.5)

    def test_no_elements_is_direct_only(self):
        cfg = SceneConfig(n_elements=0)
        Q = np.array([[-100.0, -20.0], [0.0, 20.0], [250.0, 20.0]])
        np.testing.assert_allclose(channel.zetas(Q, cfg), channel.direct_los_amplitudes(Q, cfg))

    def test_ios_amplitude_matches_zeta_term(self):
        cfg = SceneConfig(n_elements=4)
        Q = np.array([[-60.0, 10.0], [80.0, -5.0]])
        ios = channel.ios_los_amplitudes(Q, cfg).sum(axis=1)
        np.testing.assert_allclose(channel.zetas(Q, cfg), ios + channel.direct_los_amplitudes(Q, cfg),
                                   rtol=1e-12)

    def test_element_constant(self):
        cfg = SceneConfig()
        expected = 0.05 * 0.025 / (4.0 * math.pi) ** 1.5
        assert channel.element_constant(cfg) == pytest.approx(expected)

    def test_rician_weights(self):
        assert channel.rician_weights(3.0) == pytest.approx((math.sqrt(0.75), 0.5))
        assert channel.rician_weights(0.0) == pytest.approx((0.0, 1.0))
        assert channel.rician_weights(math.inf) == (1.0, 0.0)


@pytest.mark.unit
class TestNlosDraws:

    def test_prefix_is_stable(self):
        short = channel.draw_nlos(5, 3, seed=7)
        long = channel.draw_nlos(5, 2500, seed=7)
        np.testing.assert_array_equal(short.direct, long.direct[:3])
        np.testing.assert_array_equal(short.ios, long.ios[:3])

    def test_same_seed_same_samples(self):
        a = channel.draw_nlos(4, 100, seed=11)
        b = channel.draw_nlos(4, 100, seed=11)
        np.testing.assert_array_equal(a.direct, b.direct)

    def test_shared_mode_reuses_direct(self):
        draw = channel.draw_nlos(4, 10, seed=3, shared=True)
        assert draw.shared
        np.testing.assert_array_equal(draw.direct, draw.ios)

    def test_split_mode_is_independent(self):
        draw = channel.draw_nlos(4, 10, seed=3)
        assert not np.allclose(draw.direct, draw.ios)

    def test_unit_variance(self):
        draw = channel.draw_nlos(2, 20000, seed=5)
        assert np.mean(np.abs(draw.direct) ** 2) == pytest.approx(1.0, rel=0.03)
        assert abs(np.mean(draw.direct)) < 0.03

    def test_rejects_zero_draws(self):
        with pytest.raises(ValueError):
            channel.draw_nlos(3, 0, seed=1)


@pytest.mark.unit
class TestRates:

    def test_eta(self):
        assert SceneConfig().eta == pytest.approx(1e10)

    def test_single_slot_rate(self):
        cfg = SceneConfig(n_elements=0)
        z = channel.zeta(HOVER, cfg)
        tuned = cfg.with_(noise_power=cfg.tx_power * z * z / 3.0)
        assert channel.deterministic_rate(np.array([HOVER]), tuned) == pytest.approx(2.0)

    def test_expected_power_shared_mode(self):
        cfg = SceneConfig(n_elements=4)
        z = channel.zeta((30.0, 10.0), cfg)
        assert channel.expected_channel_power((30.0, 10.0), cfg, shared=True) == pytest.approx(z * z)

    def test_expected_power_split_mode_is_smaller(self):
        cfg = SceneConfig(n_elements=4)
        q = (30.0, 10.0)
        assert channel.expected_channel_power(q, cfg, shared=False) < channel.expected_channel_power(q, cfg)

    def test_expected_power_matches_samples(self):
        cfg = SceneConfig(n_elements=4)
        Q = np.array([[-60.0, 0.0]])
        psi = phase_design.optimal_phases(Q, cfg)
        draws = channel.draw_nlos(1, 40000, seed=21, shared=True)
        h = channel.composite_channels(Q, psi, cfg, draws)
        measured = float(np.mean(np.abs(h) ** 2))
        assert measured == pytest.approx(channel.expected_channel_power(Q[0], cfg), rel=0.03)

    @pytest.mark.slow
    def test_expected_power_converges_to_zeta_squared(self):
        cfg = SceneConfig(n_elements=16)
        Q = np.array([[-100.0, -20.0], [-20.0, 5.0], [5.0, 0.0], [150.0, 30.0]])
        psi = phase_design.optimal_phases(Q, cfg)
        draws = channel.draw_nlos(Q.shape[0], 100_000, seed=5, shared=True)
        measured = np.mean(np.abs(channel.composite_channels(Q, psi, cfg, draws)) ** 2, axis=0)
        np.testing.assert_allclose(measured, channel.zetas(Q, cfg) ** 2, rtol=0.02)

    def test_rate_increases_with_power(self, small_config):
        Q = np.linspace(small_config.uav_start, small_config.uav_end, small_config.n_slots)
        psi = phase_design.optimal_phases(Q, small_config)
        rates = [channel.average_rate(Q, psi, small_config.with_(tx_power=p), n_draws=200, seed=4)
                 for p in (0.01, 0.1, 1.0)]
        assert rates[0] < rates[1] < rates[2]

    def test_rate_decreases_with_noise(self, small_config):
        Q = np.linspace(small_config.uav_start, small_config.uav_end, small_config.n_slots)
        psi = phase_design.optimal_phases(Q, small_config)
        rates = [channel.average_rate(Q, psi, small_config.with_(noise_power=s2), n_draws=200, seed=4)
                 for s2 in (1e-12, 1e-11, 1e-10)]
        assert rates[0] > rates[1] > rates[2]

    def test_strong_los_matches_deterministic(self, small_config):
        cfg = small_config.with_(rician_k=1e4)
        Q = np.linspace(cfg.uav_start, cfg.uav_end, cfg.n_slots)
        psi = phase_design.optimal_phases(Q, cfg)
        estimate = channel.average_rate_estimate(Q, psi, cfg, n_draws=500, seed=2)
        assert estimate.mean == pytest.approx(channel.deterministic_rate(Q, cfg), rel=0.02)
        assert estimate.n_draws == 500

    def test_pure_los_has_zero_halfwidth(self, small_config):
        cfg = small_config.with_(rician_k=math.inf)
        Q = np.linspace(cfg.uav_start, cfg.uav_end, cfg.n_slots)
        psi = phase_design.optimal_phases(Q, cfg)
        estimate = channel.average_rate_estimate(Q, psi, cfg, n_draws=1, seed=2)
        assert estimate.half_width == 0.0
        assert estimate.mean == pytest.approx(channel.deterministic_rate(Q, cfg), rel=1e-9)

    def test_rate_is_seed_deterministic(self, small_config):
        Q = np.linspace(small_config.uav_start, small_config.uav_end, small_config.n_slots)
        psi = phase_design.optimal_phases(Q, small_config)
        a = channel.average_rate(Q, psi, small_config, n_draws=50, seed=9)
        b = channel.average_rate(Q, psi, small_config, n_draws=50, seed=9)
        assert a == b


@pytest.mark.unit
class TestSurfaceModel:

    def test_exact_for_small_surfaces(self):
        cfg = SceneConfig(n_elements=64, sca_tiles=16)
        model = channel.surface_model(cfg)
        assert not model.tiled
        assert model.n_terms == 64

    def test_tiles_keep_total_weight(self):
        cfg = SceneConfig(n_elements=600, sca_tiles=12)
        exact = channel.surface_model(cfg, tiles=0)
        tiled = channel.surface_model(cfg)
        assert tiled.tiled
        assert tiled.n_terms == 12
        assert tiled.weights.sum() == pytest.approx(exact.weights.sum())

    def test_tiled_zeta_close_to_exact(self):
        cfg = SceneConfig(n_elements=600, sca_tiles=12)
        Q = np.array([[-150.0, 20.0], [90.0, 0.0]])
        exact = channel.model_zeta(Q, channel.surface_model(cfg, tiles=0), cfg)
        tiled = channel.model_zeta(Q, channel.surface_model(cfg), cfg)
        np.testing.assert_allclose(tiled, exact, rtol=1e-3)

    def test_layout_consistency(self):
        cfg = SceneConfig(n_elements=9)
        model = channel.surface_model(cfg, tiles=0)
        np.testing.assert_array_equal(model.positions, scene.layout_elements(cfg).positions)
