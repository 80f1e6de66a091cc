import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from occreg.geometry.point_cloud import SemanticPointCloud
from occreg.geometry.pose import Pose, pose_exp, pose_log
from occreg.geometry.spatial_index import SpatialIndex, nearest
from occreg.geometry.voxel_grid import VoxelGridSpec, world_voxel_keys
from occreg.utils.errors import DegeneratePoseError, VoxelRangeError


def random_pose(rng, max_angle=np.pi * 0.9, max_trans=10.0):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return Pose.from_rotvec(axis * rng.uniform(0.0, max_angle), rng.uniform(-max_trans, max_trans, 3))


class TestPoseCompose:
    def test_identity_is_neutral(self, rng):
        p = random_pose(rng)
        assert Pose.identity().compose(p).allclose(p)
        assert p.compose(Pose.identity()).allclose(p)

    def test_inverse(self, rng):
        p = random_pose(rng)
        assert p.compose(p.inverse()).allclose(Pose.identity(), atol=1e-12)

    def test_translations_commute(self):
        p = Pose(translation=(1.0, 0.0, 0.0)) * Pose(translation=(0.0, 2.0, 0.0))
        assert_allclose(p.translation, [1.0, 2.0, 0.0])

    def test_associative(self, rng):
        a, b, c = (random_pose(rng) for _ in range(3))
        assert a.compose(b).compose(c).allclose(a.compose(b.compose(c)), atol=1e-12)

    def test_quaternion_kept_in_upper_hemisphere(self):
        p = Pose((-1.0, 0.0, 0.0, 0.0))
        assert_array_equal(p.quaternion, [1.0, 0.0, 0.0, 0.0])

    def test_quaternion_normalized(self):
        p = Pose((2.0, 0.0, 0.0, 0.0))
        assert_allclose(np.linalg.norm(p.quaternion), 1.0)

    @pytest.mark.parametrize('quat', [(0.0, 0.0, 0.0, 0.0), (np.nan, 0.0, 0.0, 1.0), (1.0, 0.0, 0.0)])
    def test_invalid_quaternion(self, quat):
        with pytest.raises(ValueError):
            Pose(quat)


class TestPoseApply:
    def test_identity(self):
        assert_allclose(Pose.identity().apply([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])

    def test_yaw_quarter_turn(self):
        assert_allclose(Pose.from_yaw(np.pi / 2).apply([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)

    def test_rotation_then_translation(self):
        p = Pose.from_yaw(np.pi / 2, (1.0, 0.0, 0.0))
        assert_allclose(p.apply([1.0, 0.0, 0.0]), [1.0, 1.0, 0.0], atol=1e-12)

    def test_batch_matches_matrix(self, rng):
        p = random_pose(rng)
        pts = rng.normal(size=(50, 3))
        homo = np.column_stack([pts, np.ones(50)]) @ p.as_matrix().T
        assert_allclose(p.apply(pts), homo[:, :3], atol=1e-12)

    def test_from_matrix_round_trip(self, rng):
        p = random_pose(rng)
        assert Pose.from_matrix(p.as_matrix()).allclose(p, atol=1e-12)

    def test_yaw_readback(self):
        assert Pose.from_yaw(0.3).yaw() == pytest.approx(0.3)


class TestExpLog:
    def test_zero_twist(self):
        assert pose_exp(np.zeros(6)).allclose(Pose.identity())

    def test_pure_translation(self):
        p = pose_exp([1.0, 2.0, 3.0, 0.0, 0.0, 0.0])
        assert_allclose(p.translation, [1.0, 2.0, 3.0])
        assert_allclose(p.rotation_matrix, np.eye(3), atol=1e-15)

    def test_round_trip_random_twists(self, rng):
        worst = 0.0
        for _ in range(1000):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            twist = np.concatenate([rng.uniform(-5.0, 5.0, 3), axis * rng.uniform(0.0, 3.0)])
            worst = max(worst, np.max(np.abs(pose_log(pose_exp(twist)) - twist)))
        assert worst < 1e-8

    def test_small_angle_branch(self):
        twist = np.array([0.1, -0.2, 0.3, 1e-8, -2e-8, 0.0])
        assert_allclose(pose_log(pose_exp(twist)), twist, atol=1e-12)

    def test_log_near_pi_is_degenerate(self):
        with pytest.raises(DegeneratePoseError):
            pose_log(Pose.from_rotvec([0.0, 0.0, np.pi]))


class TestVoxelGrid:
    def test_lower_corner(self):
        assert VoxelGridSpec.default().voxel_of((-40.0, -40.0, -1.0)) == (0, 0, 0)

    def test_floor_formula(self):
        assert VoxelGridSpec.default().voxel_of((0.2, 0.2, 0.2)) == (100, 100, 3)

    def test_upper_bound_exclusive(self):
        assert VoxelGridSpec.default().voxel_of((40.0, 0.0, 0.0)) is None

    def test_centers(self):
        spec = VoxelGridSpec.default()
        assert_allclose(spec.voxel_center((0, 0, 0)), [-39.8, -39.8, -0.8])
        assert_allclose(spec.voxel_center((199, 199, 15)), [39.8, 39.8, 5.2])

    def test_center_out_of_range(self):
        with pytest.raises(VoxelRangeError):
            VoxelGridSpec.default().voxel_center((200, 0, 0))

    def test_center_maps_back_to_its_voxel(self, rng):
        spec = VoxelGridSpec.default()
        idx = np.column_stack([rng.integers(0, d, 200) for d in spec.dims])
        back, inside = spec.voxels_of(spec.voxel_centers(idx))
        assert inside.all()
        assert_array_equal(back, idx)

    def test_all_centers_count(self):
        spec = VoxelGridSpec(0.4, (0.0, 0.0, 0.0), (3, 4, 5))
        assert spec.all_centers().shape == (60, 3)
        assert spec.num_cells == 60

    @pytest.mark.parametrize('voxel_size,dims', [(0.0, (1, 1, 1)), (0.4, (0, 1, 1))])
    def test_invalid_spec(self, voxel_size, dims):
        with pytest.raises(ValueError):
            VoxelGridSpec(voxel_size, (0.0, 0.0, 0.0), dims)

    def test_world_keys_handle_rounding(self):
        # (0.2 + 1.0) / 0.4 fica ligeiramente abaixo de 3
        assert_array_equal(world_voxel_keys([[1.2, -0.1, 0.0]], 0.4), [[3, -1, 0]])


class TestSpatialIndex:
    def test_single_point(self):
        index = SpatialIndex(np.zeros((1, 3)))
        assert nearest(index, np.array([1.0, 0.0, 0.0]), 2.0) == (0, 1.0)

    def test_out_of_reach(self):
        index = SpatialIndex(np.zeros((1, 3)))
        assert index.nearest(np.array([3.0, 0.0, 0.0]), 2.0) is None

    def test_max_dist_inclusive(self):
        index = SpatialIndex(np.zeros((1, 3)))
        assert index.nearest(np.array([0.5, 0.0, 0.0]), 0.5) == (0, 0.5)

    def test_matches_linear_scan(self, rng):
        points = rng.uniform(-10.0, 10.0, size=(10000, 3))
        queries = rng.uniform(-10.0, 10.0, size=(1000, 3))
        ids, dists = SpatialIndex(points).nearest_many(queries, 1.0)
        best = np.empty(len(queries))
        for start in range(0, len(queries), 100):
            chunk = queries[start:start + 100]
            best[start:start + 100] = np.linalg.norm(chunk[:, None, :] - points[None, :, :], axis=2).min(axis=1)
        within = best <= 1.0
        assert_array_equal(ids >= 0, within)
        assert_allclose(dists[within], best[within])

    def test_empty_index_rejected(self):
        with pytest.raises(ValueError):
            SpatialIndex(np.empty((0, 3)))


class TestSemanticPointCloud:
    def test_from_voxels(self):
        spec = VoxelGridSpec.default()
        cloud = SemanticPointCloud.from_voxels(spec, [[100, 100, 3]], [11], frame_index=4)
        assert_allclose(cloud.positions, [[0.2, 0.2, 0.4]])
        assert cloud.frame_index == 4

    def test_arrays_are_read_only(self):
        cloud = SemanticPointCloud(np.zeros((2, 3)), [1, 2])
        with pytest.raises(ValueError):
            cloud.positions[0, 0] = 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            SemanticPointCloud(np.zeros((2, 3)), [1])

    def test_validate_duplicate_voxel(self):
        spec = VoxelGridSpec.default()
        cloud = SemanticPointCloud([[0.1, 0.1, 0.1], [0.15, 0.15, 0.15]], [11, 11])
        assert cloud.validate(spec) == "dois pontos partilham o mesmo voxel"

    def test_validate_labels(self, taxonomy):
        spec = VoxelGridSpec.default()
        cloud = SemanticPointCloud([[0.1, 0.1, 0.1]], [40])
        assert cloud.validate(spec, taxonomy.label_ids) is not None
        assert SemanticPointCloud([[0.1, 0.1, 0.1]], [11]).validate(spec, taxonomy.label_ids) is None
