"""
Test unitari per il ciclo SCA della traiettoria.
"""

import math

import numpy as np
import pytest

from iosuav.config.settings import SceneConfig
from iosuav.core import channel
from iosuav.core.error_handling import DegenerateX, InfeasibleMission
from iosuav.core.sca_trajectory import (
    assemble_subproblem,
    check_trajectory,
    init_trajectory,
    log_objective,
    optimize_trajectory,
    substitute,
    taylor_coefficients,
)


@pytest.mark.unit
class TestInitTrajectory:

    def test_uniform_interpolation(self):
        traj = init_trajectory(SceneConfig(n_slots=5))
        np.testing.assert_allclose(traj.x, [-400.0, -200.0, 0.0, 200.0, 400.0])
        np.testing.assert_allclose(traj.y, 20.0)

    def test_reference_step(self):
        traj = init_trajectory(SceneConfig(n_slots=150))
        assert traj.max_step() == pytest.approx(800.0 / 149.0)
        check_trajectory(traj, SceneConfig(n_slots=150))


@pytest.mark.unit
class TestSubstitution:

    def test_auxiliary_values(self):
        cfg = SceneConfig(n_elements=1, uav_altitude=48.0)
        it = substitute(np.array([[1.0, 0.0], [6.0, 0.0]]), cfg)
        assert it.s[0] == pytest.approx(0.0, abs=1e-15)
        assert it.s[1] == pytest.approx(3.0 * math.log(6.0))
        assert it.u[1, 0] == pytest.approx(4.0 * math.log(10.0))
        assert it.u[1, 0] == pytest.approx(9.2103, abs=1e-4)

    def test_direct_auxiliary_at_hover(self):
        cfg = SceneConfig(n_elements=1)
        it = substitute(np.array([[-100.0, -20.0], [50.0, 0.0]]), cfg)
        assert it.v[0] == pytest.approx(-2.5 * math.log(50.0))
        assert it.v[0] == pytest.approx(-9.7800, abs=1e-4)

    def test_objective_matches_channel_rate(self, small_config):
        Q = init_trajectory(small_config).waypoints
        it = substitute(Q, small_config)
        assert it.obj == pytest.approx(channel.deterministic_rate(Q, small_config), rel=1e-12)

    def test_interior_waypoint_on_plane_is_nudged(self, small_config):
        Q = init_trajectory(small_config).waypoints.copy()
        Q[5, 0] = 0.0
        it = substitute(Q, small_config)
        assert it.trajectory.x[5] == pytest.approx(-small_config.x_guard)
        assert np.isfinite(it.s).all()

    def test_endpoint_on_plane_is_degenerate(self):
        cfg = SceneConfig(n_elements=4, uav_start=(0.0, 20.0))
        with pytest.raises(DegenerateX):
            substitute(init_trajectory(cfg), cfg)

    def test_no_surface_ignores_plane(self):
        cfg = SceneConfig(n_elements=0, uav_start=(0.0, 20.0))
        it = substitute(init_trajectory(cfg), cfg)
        assert it.u.shape == (cfg.n_slots, 0)
        assert np.isfinite(it.s).all()


@pytest.mark.unit
class TestTaylorCoefficients:

    def test_no_surface_coefficients(self):
        cfg = SceneConfig(n_elements=0)
        spec = taylor_coefficients(substitute(init_trajectory(cfg), cfg), cfg)
        assert np.all(spec.B == 0.0)
        assert spec.C.size == 0
        assert np.all(spec.D > 0.0)
        assert np.all(spec.A > 1.0)

    def test_weights(self, small_config):
        spec = taylor_coefficients(substitute(init_trajectory(small_config), small_config), small_config)
        ln2 = math.log(2.0)
        np.testing.assert_allclose(spec.weights_s, spec.B / (spec.A * ln2))
        np.testing.assert_allclose(spec.weights_v, spec.D / (spec.A * ln2))
        assert np.all(spec.weights_u <= 0.0)

    def test_linearization_is_global_minorant(self, small_config, rng):
        it = substitute(init_trajectory(small_config), small_config)
        spec = taylor_coefficients(it, small_config)
        eta = small_config.eta
        base = log_objective(it.s, it.u, it.v, spec.model, eta)
        for _ in range(50):
            ds = rng.normal(0.0, 0.5, size=it.s.shape)
            du = rng.normal(0.0, 0.5, size=it.u.shape)
            dv = rng.normal(0.0, 0.5, size=it.v.shape)
            value = log_objective(it.s + ds, it.u + du, it.v + dv, spec.model, eta)
            linear = base + spec.weights_s * ds + np.sum(spec.weights_u * du, axis=1) + spec.weights_v * dv
            assert np.all(value >= linear - 1e-9 * np.maximum(1.0, np.abs(value)))


@pytest.mark.unit
class TestCheckTrajectory:

    def test_wrong_length(self, small_config):
        with pytest.raises(ValueError):
            check_trajectory(np.zeros((3, 2)), small_config)

    def test_moved_endpoint(self, small_config):
        Q = init_trajectory(small_config).waypoints.copy()
        Q[-1, 1] += 1.0
        with pytest.raises(InfeasibleMission):
            check_trajectory(Q, small_config)

    def test_long_step(self, small_config):
        Q = init_trajectory(small_config).waypoints.copy()
        Q[1, 0] = Q[0, 0] + small_config.step_max + 1.0
        with pytest.raises(InfeasibleMission):
            check_trajectory(Q, small_config)


@pytest.mark.unit
class TestOptimizeTrajectory:

    def test_monotone_trace(self, small_config):
        traj, report = optimize_trajectory(init_trajectory(small_config), small_config)
        objectives = report.objectives
        assert len(objectives) >= 2
        assert all(b >= a - 1e-8 for a, b in zip(objectives, objectives[1:]))
        assert report.stop_reason in ("tolerance", "max_iters", "no_ascent")
        check_trajectory(traj, small_config, rtol=1e-6)
        assert report.final_objective == pytest.approx(channel.deterministic_rate(traj, small_config))

    def test_gets_closer_to_node(self, small_config):
        start = init_trajectory(small_config)
        traj, _ = optimize_trajectory(start, small_config)
        assert channel.deterministic_rate(traj, small_config) > channel.deterministic_rate(start, small_config)

    def test_infinite_tolerance_single_iteration(self, small_config):
        cfg = small_config.with_(sca_tol=math.inf)
        _, report = optimize_trajectory(init_trajectory(cfg), cfg)
        assert report.iterations == 1
        assert report.converged
        assert report.stop_reason == "tolerance"

    def test_iteration_cap(self, small_config):
        cfg = small_config.with_(sca_max_iters=2, sca_tol=1e-14)
        _, report = optimize_trajectory(init_trajectory(cfg), cfg)
        assert report.iterations <= 2
        assert report.records[0].iteration == 0


def mirrored(cfg: SceneConfig) -> SceneConfig:
    """Scenario riflesso rispetto all'asse y (x -> -x), lato riflessivo scambiato."""
    cx, cy, cz = cfg.ios_center
    return cfg.with_(
        uav_start=(-cfg.uav_start[0], cfg.uav_start[1]),
        uav_end=(-cfg.uav_end[0], cfg.uav_end[1]),
        ground_node=(-cfg.ground_node[0], cfg.ground_node[1]),
        ios_center=(-cx, cy, cz),
        reflective_sign=-cfg.reflective_sign,
    )


@pytest.mark.unit
class TestSideRelease:

    def test_released_slots_use_direct_minorant(self, small_config):
        spec = taylor_coefficients(substitute(init_trajectory(small_config), small_config), small_config)
        assert spec.released.any()
        prog = assemble_subproblem(spec)
        released = spec.released
        assert not prog.active_s[released].any()
        assert not prog.active_u[released].any()
        np.testing.assert_allclose(prog.weights_v[released], spec.weights_v_direct[released])
        np.testing.assert_allclose(prog.weights_v[~released], spec.weights_v[~released])

    def test_direct_minorant_is_below_objective(self, small_config, rng):
        it = substitute(init_trajectory(small_config), small_config)
        spec = taylor_coefficients(it, small_config)
        eta = small_config.eta
        V = spec.model.los_gain * np.exp(it.v)
        base = np.log1p(eta * V ** 2) / math.log(2.0)
        for _ in range(20):
            ds = rng.normal(0.0, 2.0, size=it.s.shape)
            du = rng.normal(0.0, 2.0, size=it.u.shape)
            dv = rng.normal(0.0, 0.5, size=it.v.shape)
            value = log_objective(it.s + ds, it.u + du, it.v + dv, spec.model, eta)
            linear = base + spec.weights_v_direct * dv
            assert np.all(value >= linear - 1e-9 * np.maximum(1.0, np.abs(value)))

    def test_side_keeping_program_constrains_every_slot(self, small_config):
        spec = taylor_coefficients(substitute(init_trajectory(small_config), small_config), small_config)
        prog = assemble_subproblem(spec, release=False)
        assert prog.active_s.sum() > assemble_subproblem(spec).active_s.sum()
        np.testing.assert_allclose(prog.weights_v, spec.weights_v)

    def test_no_surface_release_changes_nothing(self):
        cfg = SceneConfig(n_elements=0)
        spec = taylor_coefficients(substitute(init_trajectory(cfg), cfg), cfg)
        assert spec.released.all()
        np.testing.assert_allclose(spec.weights_v_direct, spec.weights_v)


@pytest.mark.unit
class TestMirrorSymmetry:

    def test_mirrored_scene_gives_mirrored_trajectory(self, small_config):
        traj, report = optimize_trajectory(init_trajectory(small_config), small_config)
        cfg_m = mirrored(small_config)
        traj_m, report_m = optimize_trajectory(init_trajectory(cfg_m), cfg_m)
        assert report_m.final_objective == pytest.approx(report.final_objective, abs=1e-6)
        np.testing.assert_allclose(traj_m.x, -traj.x, atol=1e-4)
        np.testing.assert_allclose(traj_m.y, traj.y, atol=1e-4)

    def test_mirrored_rate_is_unchanged(self, small_config):
        Q = init_trajectory(small_config).waypoints.copy()
        Q[3:9, 1] -= 15.0
        Q_m = Q * np.array([-1.0, 1.0])
        rate = channel.deterministic_rate(Q, small_config)
        assert channel.deterministic_rate(Q_m, mirrored(small_config)) == pytest.approx(rate, rel=1e-12)


@pytest.mark.unit
@pytest.mark.slow
class TestDeskConvergence:

    def test_straight_start_converges(self, desk_config):
        start = init_trajectory(desk_config)
        traj, report = optimize_trajectory(start, desk_config)
        assert report.converged, report.stop_reason
        assert report.iterations <= 30
        objectives = report.objectives
        assert all(b >= a - 1e-8 for a, b in zip(objectives, objectives[1:]))
        # i waypoint oltre la superficie attraversano il piano verso G
        assert int(np.sum(start.x > 0.0)) == 25
        assert int(np.sum(traj.x > 0.0)) <= 20
        assert report.final_objective > 2.1
