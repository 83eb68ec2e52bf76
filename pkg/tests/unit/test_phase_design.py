"""
Test unitari per il progetto delle fasi.
"""

import math

import numpy as np
import pytest

from iosuav.config.settings import SceneConfig
from iosuav.core import channel, phase_design
from iosuav.core.error_handling import InstanceTooLarge
from iosuav.models.trajectory import TWO_PI


@pytest.mark.unit
class TestPathDifference:

    def test_fifth_of_wavelength(self):
        psi = phase_design.path_difference_phase(400.01, 300.0, 100.0, 0.05)
        assert psi == pytest.approx(0.4 * math.pi, abs=1e-6)
        assert psi == pytest.approx(1.2566, abs=1e-4)

    def test_zero_difference(self):
        assert phase_design.path_difference_phase(400.0, 300.0, 100.0, 0.05) == 0.0

    def test_wrap_stays_in_range(self):
        values = phase_design.wrap_2pi(np.array([-1e-18, TWO_PI, 3 * TWO_PI + 0.5, -0.5]))
        assert np.all(values >= 0.0) and np.all(values < TWO_PI)
        assert values[2] == pytest.approx(0.5)
        assert values[3] == pytest.approx(TWO_PI - 0.5)


@pytest.mark.unit
class TestOptimalPhases:

    def setup_method(self):
        self.cfg = SceneConfig(n_elements=4)
        self.Q = np.array([[-300.0, 20.0], [-100.0, -20.0], [0.0, 0.0], [150.0, 20.0]])

    def test_shape_and_range(self):
        schedule = phase_design.optimal_phases(self.Q, self.cfg)
        assert schedule.phases.shape == (4, 4)
        assert np.all(schedule.phases >= 0.0) and np.all(schedule.phases < TWO_PI)

    def test_coherent_sum(self):
        schedule = phase_design.optimal_phases(self.Q, self.cfg)
        amplitudes = channel.ios_los_amplitudes(self.Q, self.cfg).sum(axis=1)
        direct = channel.direct_los_amplitudes(self.Q, self.cfg)
        for n in range(self.Q.shape[0]):
            power = phase_design.los_power(self.Q[n], schedule.slot(n), self.cfg)
            assert power == pytest.approx((amplitudes[n] + direct[n]) ** 2, rel=1e-9)

    def test_no_elements(self):
        schedule = phase_design.optimal_phases(self.Q, SceneConfig(n_elements=0))
        assert schedule.phases.shape == (4, 0)

    def test_random_phases_never_win(self, rng):
        q = self.Q[1]
        best = phase_design.los_power(q, phase_design.optimal_phases(q[None, :], self.cfg).slot(0), self.cfg)
        for _ in range(200):
            psi = rng.uniform(0.0, TWO_PI, size=4)
            assert phase_design.los_power(q, psi, self.cfg) <= best * (1.0 + 1e-12)


@pytest.mark.unit
class TestBruteForceOracle:

    def test_single_element(self):
        cfg = SceneConfig(n_elements=1)
        q = (-50.0, 10.0)
        closed = phase_design.los_power(q, phase_design.optimal_phases(np.array([q]), cfg).slot(0), cfg)
        phases, power = phase_design.brute_force_phase_oracle(q, cfg, grid_size=32)
        assert phases.shape == (1,)
        assert power <= closed * (1.0 + 1e-12)
        assert power >= closed * (1.0 - 1e-3)

    def test_no_elements(self):
        cfg = SceneConfig(n_elements=0)
        phases, power = phase_design.brute_force_phase_oracle((0.0, 0.0), cfg, grid_size=8)
        assert phases.size == 0
        assert power == pytest.approx(float(channel.direct_los_amplitudes(np.zeros((1, 2)), cfg)[0]) ** 2)

    def test_rejects_large_surfaces(self):
        with pytest.raises(InstanceTooLarge):
            phase_design.brute_force_phase_oracle((0.0, 0.0), SceneConfig(n_elements=5), grid_size=8)

    def test_rejects_large_grid(self):
        with pytest.raises(InstanceTooLarge):
            phase_design.brute_force_phase_oracle((0.0, 0.0), SceneConfig(n_elements=2), grid_size=65)
