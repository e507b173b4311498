import numpy as np
import pytest

import lifichan as lc
from lifichan import coupling, diffuse
from lifichan.errors import CapacityError, SceneMismatchError

GRID = lc.FrequencyGrid(np.concatenate([[0.0], np.linspace(10e6, 250e6, 7)]))


def max_rel_dev(a, b):
    scale = np.abs(b).max()
    if scale == 0.0:
        return np.abs(a).max()
    return np.abs(a - b).max() / scale


class TestIntrinsicOperator:
    def test_unit_cube_couplings(self, unit_cube_scene):
        scene = unit_cube_scene(dx=1.0)
        op = lc.build_intrinsic(scene)
        assert op.n_patches == 6
        assert np.all(np.diag(op.gain) == 0.0)
        assert np.all(np.diag(op.delay) == 0.0)
        # every pair of distinct cube faces sees each other
        off_diag = ~np.eye(6, dtype=bool)
        assert np.all(op.gain[off_diag] > 0.0)
        assert np.all(op.delay[off_diag] > 0.0)

    def test_same_face_pairs_are_dark(self, unit_cube_scene):
        scene = unit_cube_scene(dx=0.5)
        op = lc.build_intrinsic(scene)
        same_face = scene.patches.face[:, None] == scene.patches.face[None, :]
        assert np.all(op.gain[same_face] == 0.0)

    def test_matches_scalar_coupling(self, unit_cube_scene, rng):
        scene = unit_cube_scene(dx=0.5)
        op = lc.build_intrinsic(scene)
        n = op.n_patches
        for _ in range(50):
            i, k = rng.integers(0, n, 2)
            if i == k:
                continue
            ref = lc.patch_to_patch(scene.patches.patch(k), scene.patches.patch(i))
            assert op.gain[i, k] == pytest.approx(ref.gain, rel=1e-12, abs=1e-300)
            assert op.delay[i, k] == pytest.approx(ref.delay, rel=1e-12)

    def test_reciprocity(self, unit_cube_scene, rng):
        scene = unit_cube_scene(dx=0.25)
        op = lc.build_intrinsic(scene)
        areas = scene.patches.areas
        n = op.n_patches
        pairs = rng.integers(0, n, size=(100, 2))
        for i, k in pairs:
            if i == k:
                continue
            assert op.gain[i, k] / areas[i] == pytest.approx(
                op.gain[k, i] / areas[k], rel=1e-12, abs=1e-300
            )

    def test_paper_room_patch_count(self, paper_room):
        tx = lc.Emitter([2.9, 2.25, 2.85], [0, 0, -1.0])
        scene = lc.Scene.build(paper_room, [tx], [], dx=0.25)
        assert len(scene.patches) == 1956

    def test_capacity_error(self, unit_cube_scene):
        scene = unit_cube_scene(dx=0.1)
        with pytest.raises(CapacityError) as err:
            lc.build_intrinsic(scene, memory_budget=1024)
        assert err.value.n_patches == len(scene.patches)
        assert err.value.required_bytes > 1024


class TestSourceField:
    def test_black_room_field_is_zero(self, unit_cube_scene):
        scene = unit_cube_scene(rho=0.0)
        op = lc.build_intrinsic(scene)
        field = lc.source_field(op, scene.emitters[0], GRID)
        assert np.all(field.values == 0.0)

    def test_single_bounce_dc_definition(self, unit_cube_scene):
        scene = unit_cube_scene()
        op = lc.build_intrinsic(scene)
        field = lc.source_field(op, scene.emitters[0], GRID, bounces=1)
        t_gains, _ = coupling.emitter_to_patches(scene.emitters[0], scene.patches)
        expected = scene.patches.reflectivity * t_gains
        assert field.values[0] == pytest.approx(expected, rel=1e-12)

    def test_emitter_outside_scene_rejected(self, unit_cube_scene):
        scene = unit_cube_scene()
        op = lc.build_intrinsic(scene)
        stranger = lc.Emitter([3.0, 3.0, 3.0], [0, 0, -1.0])
        with pytest.raises(SceneMismatchError):
            lc.source_field(op, stranger, GRID)

    def test_deterministic_across_calls(self, unit_cube_scene):
        scene = unit_cube_scene(dx=0.25)
        op = lc.build_intrinsic(scene)
        a = lc.source_field(op, scene.emitters[0], GRID)
        b = lc.source_field(op, scene.emitters[0], GRID)
        assert np.array_equal(a.values, b.values)

    def test_batch_matches_single(self, unit_cube_scene):
        scene = unit_cube_scene(dx=0.25)
        op = lc.build_intrinsic(scene)
        tx2 = lc.Emitter([0.25, 0.25, 0.9], [0, 0, -1.0], order=2.0)
        batch = lc.source_fields(op, [scene.emitters[0], tx2], GRID)
        single = lc.source_field(op, tx2, GRID)
        assert max_rel_dev(batch[1].values, single.values) < 1e-13


class TestOracleEquivalence:
    """diffuse_response against explicit path enumeration."""

    def test_unit_cube(self, unit_cube_scene):
        scene = unit_cube_scene(dx=0.25)  # 96 patches
        op = lc.build_intrinsic(scene)
        field = lc.source_field(op, scene.emitters[0], GRID)
        fast = lc.diffuse_response(field, scene.detectors[0], GRID)
        oracle = lc.brute_force_two_bounce(
            scene, scene.emitters[0], scene.detectors[0], GRID
        )
        assert max_rel_dev(fast.diffuse, oracle.diffuse) < 1e-10

    def test_tilted_devices(self):
        room = lc.Room.uniform(1.2, 0.9, 0.8, 0.55)
        ori = np.array([0.3, -0.2, -1.0])
        tx = lc.Emitter([0.6, 0.45, 0.7], ori / np.linalg.norm(ori), order=3.0)
        rx_ori = np.array([0.1, 0.4, 1.0])
        rx = lc.Detector(
            [0.2, 0.6, 0.15], rx_ori / np.linalg.norm(rx_ori), area=2e-4,
            fov=np.radians(60.0),
        )
        scene = lc.Scene.build(room, [tx], [rx], dx=0.3)
        op = lc.build_intrinsic(scene)
        field = lc.source_field(op, tx, GRID)
        fast = lc.diffuse_response(field, rx, GRID)
        oracle = lc.brute_force_two_bounce(scene, tx, rx, GRID)
        assert max_rel_dev(fast.diffuse, oracle.diffuse) < 1e-10

    def test_single_patch_room_hand_sum(self):
        # one-patch enclosure slice: only the first-bounce path exists and
        # the response is t * rho * r with the summed delay
        room = lc.Room.uniform(1.0, 1.0, 1.0, 0.5)
        tx = lc.Emitter([0.5, 0.5, 0.9], [0, 0, -1.0])
        rx = lc.Detector([0.25, 0.5, 0.9], [0, 0, -1.0], area=1e-4)
        scene = lc.Scene.build(room, [tx], [rx], dx=1.0)
        floor = scene.patches.patch(0)
        t = lc.emitter_to_patch(tx, floor)
        r = lc.patch_to_detector(floor, rx)
        tf = lc.brute_force_two_bounce(scene, tx, rx, GRID)
        # restrict to the floor path by zeroing every other face
        dark = {name: 0.0 for name in lc.FACE_NAMES}
        dark["floor"] = 0.5
        scene_dark = lc.Scene.build(lc.Room(1, 1, 1, dark), [tx], [rx], dx=1.0)
        tf_dark = lc.brute_force_two_bounce(scene_dark, tx, rx, GRID)
        expected = 0.5 * t.gain * r.gain * np.exp(
            -2j * np.pi * GRID.samples * (t.delay + r.delay)
        )
        assert tf_dark.diffuse == pytest.approx(expected, rel=1e-12)
        # the full cube response includes more paths
        assert np.abs(tf.diffuse[0]) > np.abs(tf_dark.diffuse[0])

    def test_zero_reflectivity(self, unit_cube_scene):
        scene = unit_cube_scene(rho=0.0)
        tf = lc.brute_force_two_bounce(scene, scene.emitters[0], scene.detectors[0], GRID)
        assert np.all(tf.diffuse == 0.0)


class TestDiffuseResponse:
    def test_blind_detector(self, unit_cube_scene):
        scene = unit_cube_scene()
        op = lc.build_intrinsic(scene)
        field = lc.source_field(op, scene.emitters[0], GRID)
        rx = lc.Detector([0.3, 0.4, 0.1], [0, 0, 1.0], area=1e-4, fov=1e-9)
        tf = lc.diffuse_response(field, rx, GRID)
        assert np.all(tf.diffuse == 0.0)

    def test_detector_facing_away_from_lit_face(self):
        # only the ceiling is lit (single bounce, other faces black); a
        # down-facing detector has the lit patches behind it
        rho = {name: 0.0 for name in lc.FACE_NAMES}
        rho["ceiling"] = 0.8
        room = lc.Room(1, 1, 1, rho)
        tx = lc.Emitter([0.5, 0.5, 0.5], [0, 0, 1.0])
        rx = lc.Detector([0.5, 0.5, 0.5], [0, 0, -1.0], area=1e-4)
        scene = lc.Scene.build(room, [tx], [rx], dx=0.5)
        op = lc.build_intrinsic(scene)
        field = lc.source_field(op, tx, GRID, bounces=1)
        assert np.abs(field.values).max() > 0.0
        tf = lc.diffuse_response(field, rx, GRID)
        assert np.all(tf.diffuse == 0.0)

    def test_dc_is_real_nonnegative(self, unit_cube_scene):
        scene = unit_cube_scene(dx=0.25)
        op = lc.build_intrinsic(scene)
        field = lc.source_field(op, scene.emitters[0], GRID)
        tf = lc.diffuse_response(field, scene.detectors[0], GRID)
        assert tf.diffuse[0].imag == 0.0
        assert tf.diffuse[0].real >= 0.0

    def test_grid_mismatch_rejected(self, unit_cube_scene):
        scene = unit_cube_scene()
        op = lc.build_intrinsic(scene)
        field = lc.source_field(op, scene.emitters[0], GRID)
        other = lc.FrequencyGrid.from_range(0, 100e6, 50e6)
        with pytest.raises(SceneMismatchError):
            lc.diffuse_response(field, scene.detectors[0], other)


class TestTruncationSemantics:
    def test_third_bounce_changes_results(self, unit_cube_scene):
        scene = unit_cube_scene(dx=0.5)
        op = lc.build_intrinsic(scene)
        two = lc.source_field(op, scene.emitters[0], GRID, bounces=2)
        three = lc.source_field(op, scene.emitters[0], GRID, bounces=3)
        assert not np.allclose(two.values, three.values, rtol=1e-12, atol=0.0)

    def test_reflectivity_scaling_of_bounce_orders(self, unit_cube_scene):
        # first-order term scales like rho, second-order like rho^2
        scene_full = unit_cube_scene(rho=0.8)
        scene_half = unit_cube_scene(rho=0.4)
        tx = scene_full.emitters[0]
        rx = scene_full.detectors[0]

        def bounce_terms(scene):
            op = lc.build_intrinsic(scene)
            one = lc.source_field(op, tx, GRID, bounces=1)
            two = lc.source_field(op, tx, GRID, bounces=2)
            first = lc.diffuse_response(one, rx, GRID).diffuse
            both = lc.diffuse_response(two, rx, GRID).diffuse
            return first, both - first

        f_full, s_full = bounce_terms(scene_full)
        f_half, s_half = bounce_terms(scene_half)
        assert f_full == pytest.approx(2.0 * f_half, rel=1e-12)
        assert s_full == pytest.approx(4.0 * s_half, rel=1e-12)


class TestCachingContract:
    def test_cached_reuse_equals_rebuild(self, unit_cube_scene, rng):
        scene = unit_cube_scene(dx=0.25)
        op = lc.build_intrinsic(scene)
        field = lc.source_field(op, scene.emitters[0], GRID)
        positions = rng.uniform(0.1, 0.9, size=(10, 3))
        for pos in positions:
            rx = lc.Detector(pos, [0, 0, 1.0], area=1e-4)
            cached = lc.diffuse_response(field, rx, GRID)
            op_fresh = lc.build_intrinsic(scene)
            field_fresh = lc.source_field(op_fresh, scene.emitters[0], GRID)
            fresh = lc.diffuse_response(field_fresh, rx, GRID)
            assert np.array_equal(cached.diffuse, fresh.diffuse)
