import math

import numpy as np
import pytest

import lifichan as lc
from lifichan import assembler
from lifichan.errors import GeometryError, GridMismatchError, PoseError

GRID = lc.FrequencyGrid(np.concatenate([[0.0], np.linspace(5e6, 250e6, 15)]))


@pytest.fixture
def mimo_scene(paper_room):
    tx_xy = [(1.9, 1.25), (3.9, 1.25), (1.9, 3.25), (3.9, 3.25)]
    txs = [
        lc.Emitter([x, y, 2.85], [0, 0, -1.0], order=3.0, name=f"tx{i + 1}")
        for i, (x, y) in enumerate(tx_xy)
    ]
    rx1 = lc.Detector([3.9, 2.25, 1.0], [0, 0, 1.0], 1e-4, math.radians(85), "rx1")
    rx2 = lc.Detector([1.9, 2.25, 1.0], [0, 0, 1.0], 1e-4, math.radians(85), "rx2")
    return lc.Scene.build(paper_room, txs, [rx1, rx2], dx=0.5)


class TestLinkResponse:
    def test_component_additivity_is_exact(self, mimo_scene):
        tf = lc.link_response(mimo_scene, mimo_scene.emitters[0], mimo_scene.detectors[0], GRID)
        assert np.array_equal(tf.samples, tf.los + tf.diffuse + tf.tail)
        assert tf.samples[0].imag == 0.0
        assert tf.samples[0].real >= 0.0

    def test_dark_room_is_pure_los(self):
        room = lc.Room.uniform(3.0, 3.0, 3.0, 0.0)
        tx = lc.Emitter([1.5, 1.5, 2.5], [0, 0, -1.0])
        rx = lc.Detector([1.5, 1.5, 1.0], [0, 0, 1.0], 1e-4)
        scene = lc.Scene.build(room, [tx], [rx], dx=0.5)
        tf = lc.link_response(scene, tx, rx, GRID)
        assert np.all(tf.diffuse == 0.0)
        assert np.all(tf.tail == 0.0)
        cpl = lc.emitter_to_detector(tx, rx)
        assert np.abs(tf.samples) == pytest.approx(np.full(len(GRID), cpl.gain), rel=1e-12)

    def test_fov_blocked_los_leaves_diffuse_and_tail(self, paper_room):
        tx = lc.Emitter([1.9, 2.25, 1.0], [0, 0, 1.0], order=3.0)
        rx = lc.Detector([3.9, 2.25, 1.0], [0, 0, 1.0], 1e-4, math.radians(85))
        scene = lc.Scene.build(paper_room, [tx], [rx], dx=0.5)
        tf = lc.link_response(scene, tx, rx, GRID)
        assert np.all(tf.los == 0.0)
        assert np.abs(tf.diffuse).max() > 0.0
        assert np.abs(tf.tail).max() > 0.0
        assert np.array_equal(tf.samples, tf.diffuse + tf.tail)

    def test_los_dominates_nearest_link_in_downlink(self, mimo_scene):
        # rx1 vs its closest transmitter tx2
        tf = lc.link_response(mimo_scene, mimo_scene.emitters[1], mimo_scene.detectors[0], GRID)
        assert abs(tf.los[0]) > abs(tf.diffuse[0]) + abs(tf.tail[0])


class TestMimoMatrix:
    def test_placement_symmetries(self, mimo_scene):
        matrix = lc.mimo_matrix(mimo_scene, GRID)
        h = {(r, t): matrix.entry(r, t).samples for r in range(2) for t in range(4)}

        def rel(a, b):
            return np.abs(a - b).max() / np.abs(a).max()

        assert rel(h[(0, 1)], h[(0, 3)]) < 1e-9  # rx1: tx2 == tx4
        assert rel(h[(1, 0)], h[(1, 2)]) < 1e-9  # rx2: tx1 == tx3
        assert rel(h[(1, 1)], h[(1, 3)]) < 1e-9  # rx2: tx2 == tx4

    def test_single_link_scene_reduces_to_link_response(self, paper_room):
        tx = lc.Emitter([2.9, 2.25, 2.85], [0, 0, -1.0], order=3.0)
        rx = lc.Detector([2.9, 2.25, 1.0], [0, 0, 1.0], 1e-4, math.radians(85))
        scene = lc.Scene.build(paper_room, [tx], [rx], dx=0.5)
        matrix = lc.mimo_matrix(scene, GRID)
        single = lc.link_response(scene, tx, rx, GRID)
        assert np.array_equal(matrix.entry(0, 0).samples, single.samples)

    def test_shape(self, mimo_scene):
        matrix = lc.mimo_matrix(mimo_scene, GRID)
        assert matrix.shape == (2, 4)


class TestMobilitySweep:
    def poses(self):
        return [
            lc.Pose(np.array([1.9, 1.25, 1.0])),
            lc.Pose(np.array([2.9, 1.25, 1.0])),
            lc.Pose(np.array([3.9, 2.25, 1.0])),
        ]

    def test_matches_cold_reevaluation_bitwise(self, mimo_scene):
        trace = lc.mobility_sweep(mimo_scene, self.poses(), GRID)
        template = mimo_scene.detectors[0]
        for p, pose in enumerate(self.poses()):
            rx = lc.Detector(pose.position, pose.orientation, template.area, template.fov)
            cold = lc.Scene.build(
                mimo_scene.room, mimo_scene.emitters, [rx], dx=mimo_scene.dx
            )
            matrix = lc.mimo_matrix(cold, GRID)
            for t in range(4):
                assert np.array_equal(trace.links[p][t].samples, matrix.entry(0, t).samples)

    def test_pose_outside_room_is_named(self, mimo_scene):
        poses = self.poses() + [lc.Pose(np.array([7.0, 1.0, 1.0]))]
        with pytest.raises(PoseError) as err:
            lc.mobility_sweep(mimo_scene, poses, GRID)
        assert err.value.index == 3

    def test_metrics_shape_and_distances(self, mimo_scene):
        trace = lc.mobility_sweep(mimo_scene, self.poses(), GRID, query_frequency=5e6)
        assert trace.distances.shape == (3, 4)
        assert trace.gains_db.shape == (3, 4)
        # first pose sits directly under tx1
        assert trace.distances[0, 0] == pytest.approx(1.85, rel=1e-12)


class TestGainDb:
    def test_unity_and_decade(self):
        grid = lc.FrequencyGrid(np.array([0.0, 5e6]))
        tf = lc.TransferFunction(grid, los=np.array([1.0, 0.01], dtype=complex))
        assert lc.gain_db(tf, 0.0) == pytest.approx(0.0, abs=1e-12)
        assert lc.gain_db(tf, 5e6) == pytest.approx(-40.0, abs=1e-12)
        assert lc.gain_db(tf, 5e6, convention="10log") == pytest.approx(-20.0, abs=1e-12)
        assert lc.gain_db(tf, 5e6, offset_db=3.0) == pytest.approx(-37.0, abs=1e-12)

    def test_nearest_sample_lookup(self):
        grid = lc.FrequencyGrid(np.array([0.0, 1e6, 2e6]))
        tf = lc.TransferFunction(grid, los=np.array([1.0, 0.1, 0.01], dtype=complex))
        assert lc.gain_db(tf, 1.4e6) == pytest.approx(-20.0, abs=1e-12)
        assert lc.gain_db(tf, 1.6e6) == pytest.approx(-40.0, abs=1e-12)

    def test_zero_is_minus_infinity(self):
        grid = lc.FrequencyGrid(np.array([0.0]))
        tf = lc.TransferFunction(grid)
        assert lc.gain_db(tf, 0.0) == -math.inf


class TestRelativeMse:
    def make(self, values):
        grid = lc.FrequencyGrid.from_range(0, 100e6, 10e6)
        scale = np.exp(-2j * np.pi * grid.samples * 4e-9)
        return lc.TransferFunction(grid, los=values * scale)

    def test_identical_inputs(self):
        tf = self.make(np.full(11, 2e-5))
        assert lc.relative_mse(tf, tf) == 0.0

    def test_zero_simulation_is_hundred_percent(self):
        tf = self.make(np.full(11, 2e-5))
        zero = lc.TransferFunction(tf.grid)
        assert lc.relative_mse(tf, zero) == pytest.approx(100.0, rel=1e-12)

    def test_scale_error_algebra(self):
        tf = self.make(np.full(11, 3e-6))
        inflated = self.make(np.full(11, 3e-6 * 1.1))
        assert lc.relative_mse(tf, inflated) == pytest.approx(1.0, rel=1e-9)

    def test_common_scale_invariance(self):
        base = self.make(np.linspace(1e-5, 3e-5, 11))
        other = self.make(np.linspace(1.2e-5, 2.9e-5, 11))
        a = lc.relative_mse(base, other)
        scaled = lc.relative_mse(
            lc.TransferFunction(base.grid, los=7.3 * base.samples),
            lc.TransferFunction(base.grid, los=7.3 * other.samples),
        )
        assert scaled == pytest.approx(a, rel=1e-12)

    def test_amplitude_mode_ignores_phase(self):
        tf = self.make(np.full(11, 1e-5))
        rotated = lc.TransferFunction(tf.grid, los=tf.samples * np.exp(0.3j))
        assert lc.relative_mse(tf, rotated, mode="amplitude") == pytest.approx(0.0, abs=1e-20)
        assert lc.relative_mse(tf, rotated, mode="complex") > 0.0

    def test_grid_mismatch_and_zero_reference(self):
        tf = self.make(np.full(11, 1e-5))
        other_grid = lc.FrequencyGrid.from_range(0, 50e6, 5e6)
        with pytest.raises(GridMismatchError):
            lc.relative_mse(tf, lc.TransferFunction(other_grid))
        with pytest.raises(GeometryError):
            lc.relative_mse(lc.TransferFunction(tf.grid), tf)


class TestHeatmap:
    def test_peak_under_single_emitter(self, paper_room):
        tx = lc.Emitter([2.1, 3.0, 2.85], [0, 0, -1.0], order=3.0)
        rx = lc.Detector([1.0, 1.0, 1.0], [0, 0, 1.0], 1e-4, math.radians(85))
        scene = lc.Scene.build(paper_room, [tx], [rx], dx=0.5)
        field = lc.dc_heatmap(scene, lc.HeatmapSpec(0.1, 0.1, 1.0, rx))
        iy, ix = np.unravel_index(np.argmax(field.values), field.values.shape)
        assert field.x[ix] == pytest.approx(2.1, abs=0.11)
        assert field.y[iy] == pytest.approx(3.0, abs=0.11)

    def test_power_scales_values(self, paper_room):
        rx = lc.Detector([1.0, 1.0, 1.0], [0, 0, 1.0], 1e-4, math.radians(85))
        spec = lc.HeatmapSpec(0.25, 0.25, 1.0, rx)
        weak = lc.Scene.build(
            paper_room, [lc.Emitter([2.9, 2.25, 2.85], [0, 0, -1.0], power=1.0)], [rx], 0.5
        )
        strong = lc.Scene.build(
            paper_room, [lc.Emitter([2.9, 2.25, 2.85], [0, 0, -1.0], power=2.5)], [rx], 0.5
        )
        a = lc.dc_heatmap(weak, spec)
        b = lc.dc_heatmap(strong, spec)
        assert b.values == pytest.approx(2.5 * a.values, rel=1e-12)

    def test_blind_template_gives_zeros(self, paper_room):
        tx = lc.Emitter([2.9, 2.25, 2.85], [0, 0, -1.0])
        rx = lc.Detector([1.0, 1.0, 1.0], [0, 0, 1.0], 1e-4, fov=1e-9)
        scene = lc.Scene.build(paper_room, [tx], [rx], dx=0.5)
        field = lc.dc_heatmap(scene, lc.HeatmapSpec(0.5, 0.5, 1.0, rx))
        assert np.all(field.values == 0.0)


class TestImpulseResponse:
    def test_pure_los_single_tap(self):
        grid = lc.FrequencyGrid.default()
        delay = 8e-9
        tf = lc.TransferFunction(
            grid, los=2e-5 * np.exp(-2j * np.pi * grid.samples * delay)
        )
        t, h = lc.impulse_response(tf)
        dt = 1.0 / (2 * grid.f_max)
        assert t[1] - t[0] == pytest.approx(dt, rel=1e-12)
        assert abs(t[np.argmax(np.abs(h))] - delay) <= dt

    def test_tail_time_constant_recovered(self, paper_room):
        params = lc.params_for_scene(
            lc.Scene.build(
                paper_room, [lc.Emitter([2.9, 2.25, 2.85], [0, 0, -1.0])], [], dx=0.5
            ),
            lc.Emitter([2.9, 2.25, 2.85], [0, 0, -1.0]),
            rx_area=1e-4,
        )
        grid = lc.FrequencyGrid.default()
        tf = lc.tail_response(params, grid)
        t, h = lc.impulse_response(tf)
        # log-linear fit over the early decay recovers the time constant
        peak = np.argmax(h)
        window = slice(peak, peak + 40)
        slope = np.polyfit(t[window], np.log(h[window]), 1)[0]
        assert -1.0 / slope == pytest.approx(params.decay, rel=0.05)

    def test_zero_input_zero_output(self):
        grid = lc.FrequencyGrid.default()
        t, h = lc.impulse_response(lc.TransferFunction(grid))
        assert np.all(h == 0.0)

    def test_nonuniform_grid_rejected(self):
        grid = lc.FrequencyGrid(np.array([0.0, 1e6, 3e6]))
        with pytest.raises(GridMismatchError):
            lc.impulse_response(lc.TransferFunction(grid))
