import threading

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from occreg.geometry.point_cloud import SemanticPointCloud
from occreg.geometry.pose import Pose
from occreg.geometry.voxel_grid import world_voxel_keys
from occreg.orchestrator.odometry import STAGES, OdometryPipeline, OdometryState, run_sequence
from occreg.orchestrator.prefetch import prefetch
from occreg.utils.config import OdometryConfig
from occreg.utils.errors import SequenceError

# a sala tem pontos de 0.25 em 0.25 m: cada ponto cai sozinho no seu voxel
VOXEL = 0.25


def with_car(cloud):
    """Acrescenta um carro parado (3 x 3 pontos) ao chão da sala."""
    car = np.array([(2.0 + 0.25 * i, 2.0 + 0.25 * j, 0.5) for i in range(3) for j in range(3)])
    return SemanticPointCloud(np.concatenate([cloud.positions, car]),
                              np.concatenate([cloud.labels, np.full(9, 4)]), cloud.frame_index)


def moving_frames(cloud, n, step=0.1):
    """Frames vistos por um ego que avança `step` metros em x por frame."""
    frames = []
    for k in range(n):
        ego = Pose(translation=(step * k, 0.0, 0.0))
        frames.append(SemanticPointCloud(ego.inverse().apply(cloud.positions), cloud.labels, k))
    return frames


class TestInitialize:
    def test_seeds_map_at_identity(self, room_cloud):
        pipeline = OdometryPipeline(voxel_size=VOXEL)
        state = pipeline.initialize(room_cloud)
        expected = len(np.unique(world_voxel_keys(room_cloud.positions, VOXEL), axis=0))
        assert len(state.map) == expected
        ((index, pose),) = state.trajectory
        assert index == 0
        assert pose.allclose(Pose.identity())
        assert state.merged_frames == 1

    def test_empty_first_frame(self):
        with pytest.raises(SequenceError):
            OdometryPipeline().initialize(SemanticPointCloud.empty(0))

    def test_empty_sequence(self):
        with pytest.raises(SequenceError):
            OdometryPipeline().run_sequence([])


class TestProcessFrame:
    def test_same_view_gives_identity(self, room_cloud):
        pipeline = OdometryPipeline(voxel_size=VOXEL)
        state = pipeline.initialize(room_cloud)
        result = pipeline.process_frame(state, room_cloud.with_frame_index(1))
        assert not result.failed
        assert result.pose.allclose(Pose.identity(), atol=1e-9)
        assert result.merge.inserted == 0
        assert_array_equal(np.unique(state.map.f), [2])

    def test_recovers_ego_motion(self, room_cloud):
        truth = Pose.from_yaw(np.radians(2.0), (0.2, 0.1, 0.0))
        pipeline = OdometryPipeline(voxel_size=VOXEL)
        state = pipeline.initialize(room_cloud)
        moved = SemanticPointCloud(truth.inverse().apply(room_cloud.positions), room_cloud.labels, 1)
        result = pipeline.process_frame(state, moved)
        error = truth.inverse().compose(result.pose)
        assert np.linalg.norm(error.translation) < 0.01
        assert np.degrees(error.rotation_angle()) < 0.1
        assert result.coarse_pose is not None

    def test_index_must_increase(self, room_cloud):
        pipeline = OdometryPipeline(voxel_size=VOXEL)
        state = pipeline.initialize(room_cloud)
        with pytest.raises(SequenceError):
            pipeline.process_frame(state, room_cloud.with_frame_index(0))

    def test_failed_frame_keeps_prediction(self, room_cloud):
        pipeline = OdometryPipeline(voxel_size=VOXEL)
        state = pipeline.initialize(room_cloud)
        size = len(state.map)
        sparse = SemanticPointCloud([[30.0, 0.0, 0.0], [31.0, 0.0, 0.0], [32.0, 0.0, 0.0]], [11, 11, 11], 1)
        result = pipeline.process_frame(state, sparse)
        assert result.failed
        assert result.merge is None
        assert result.pose.allclose(Pose.identity())
        assert len(state.map) == size
        assert state.failed_frames == [1]
        assert state.merged_frames == 1
        assert state.trajectory[-1] == (1, result.pose)

    def test_metrics_row(self, room_cloud):
        pipeline = OdometryPipeline(voxel_size=VOXEL)
        state = pipeline.initialize(room_cloud)
        row = pipeline.process_frame(state, room_cloud.with_frame_index(1)).metrics_row()
        assert row['frame'] == 1
        assert row['failed'] == 0
        assert row['refine_pairs'] == len(room_cloud)
        assert row['dynamic_clusters'] == 0


class TestMotionModel:
    def state_with(self, poses):
        state = OdometryState(None)
        state.trajectory = list(enumerate(poses))
        return state

    def test_constant_velocity(self):
        step = Pose.from_yaw(0.1, (1.0, 0.0, 0.0))
        state = self.state_with([Pose.identity(), step])
        predicted = OdometryPipeline().predict(state)
        assert predicted.allclose(step.compose(step), atol=1e-12)

    def test_identity_model(self):
        step = Pose(translation=(1.0, 0.0, 0.0))
        pipeline = OdometryPipeline(OdometryConfig(motion_model='identity'))
        assert pipeline.predict(self.state_with([Pose.identity(), step])).allclose(step)

    def test_single_pose(self):
        assert OdometryPipeline().predict(self.state_with([Pose.identity()])).allclose(Pose.identity())


class TestFilters:
    def test_default_summary(self):
        summary = OdometryPipeline().get_filter_summary()
        assert summary['total_filters'] == 3
        assert summary['coarse_predicates'] == ['P_V']
        assert summary['refine_predicates'] == ['P_S', 'P_D', 'P_V']
        assert summary['preprocessing'] == []

    def test_label_filter_is_preprocessing(self):
        summary = OdometryPipeline(OdometryConfig(object_filter='label')).get_filter_summary()
        assert summary['preprocessing'] == ['P_L']
        assert summary['refine_predicates'] == ['P_S', 'P_V']

    def test_coarse_semantic(self):
        summary = OdometryPipeline(OdometryConfig(coarse_semantic=True)).get_filter_summary()
        assert summary['coarse_predicates'] == ['P_S', 'P_V']

    def test_remove_and_disable(self):
        pipeline = OdometryPipeline()
        pipeline.remove_filter('P_D')
        assert pipeline.get_filter('P_D') is None
        pipeline.get_filter('P_S').disable()
        assert pipeline.get_filter('P_S') is None
        summary = pipeline.get_filter_summary()
        assert (summary['total_filters'], summary['active_filters']) == (2, 1)

    def test_all_disabled(self):
        config = OdometryConfig(semantic_filter=False, object_filter='none', pfilter=False)
        assert OdometryPipeline(config).filters == []


class TestSequence:
    def test_straight_motion(self, room_cloud):
        run = OdometryPipeline(voxel_size=VOXEL).run_sequence(moving_frames(room_cloud, 4))
        assert [i for i, _ in run.trajectory] == [0, 1, 2, 3]
        assert run.failed_frames == []
        for k, pose in run.trajectory:
            assert_allclose(pose.translation, [0.1 * k, 0.0, 0.0], atol=0.01)

    def test_prefetch_gives_same_result(self, room_cloud):
        frames = moving_frames(room_cloud, 3)
        plain = OdometryPipeline(voxel_size=VOXEL).run_sequence(frames)
        threaded = OdometryPipeline(voxel_size=VOXEL).run_sequence(frames, prefetch_size=2)
        for (_, a), (_, b) in zip(plain.trajectory, threaded.trajectory):
            assert_array_equal(a.quaternion, b.quaternion)
            assert_array_equal(a.translation, b.translation)

    def test_tables(self, room_cloud):
        run = run_sequence(moving_frames(room_cloud, 3), voxel_size=VOXEL)
        metrics = run.metrics_frame()
        assert list(metrics['frame']) == [0, 1, 2]
        assert 'refine_pairs' in metrics.columns
        assert 'total_ms' in run.timings_frame().columns
        assert set(run.stage_totals()) == set(STAGES)

    def test_resume_from_saved_state(self, room_cloud, tmp_path):
        frames = moving_frames(room_cloud, 5)
        full = OdometryPipeline(voxel_size=VOXEL).run_sequence(frames)

        first = OdometryPipeline(voxel_size=VOXEL).run_sequence(frames[:3])
        first.state.save(tmp_path / 'state.npz')
        state = OdometryState.load(tmp_path / 'state.npz')
        assert len(state.map) == len(first.map)
        resumed = OdometryPipeline(voxel_size=VOXEL).run_sequence(frames[3:], state=state)

        assert [i for i, _ in resumed.trajectory] == [i for i, _ in full.trajectory]
        for (_, a), (_, b) in zip(resumed.trajectory, full.trajectory):
            assert a.allclose(b, atol=1e-6)

    def test_degrades_to_semantic_gicp(self, room_cloud):
        # 7 frames: o período de downsampling por omissão (5) é atingido
        frames = moving_frames(with_car(room_cloud), 7)
        neutral = OdometryConfig(displacement_threshold=float('inf'), pindex_threshold=0.0)
        assert neutral.downsample_period == 5
        reference = OdometryConfig(object_filter='none', pfilter=False)
        a = OdometryPipeline(neutral, voxel_size=VOXEL).run_sequence(frames)
        b = OdometryPipeline(reference, voxel_size=VOXEL).run_sequence(frames)
        for (_, pa), (_, pb) in zip(a.trajectory, b.trajectory):
            assert_array_equal(pa.quaternion, pb.quaternion)
            assert_array_equal(pa.translation, pb.translation)
        assert_array_equal(a.map.positions, b.map.positions)
        assert_array_equal(a.map.t0, b.map.t0)


class TestPrefetch:
    def test_order_preserved(self):
        assert list(prefetch(range(100), 3)) == list(range(100))

    def test_without_thread(self):
        assert list(prefetch(iter('abc'), 0)) == ['a', 'b', 'c']

    def test_producer_error_reaches_consumer(self):
        def items():
            yield from range(5)
            raise RuntimeError("disco")

        seen = []
        with pytest.raises(RuntimeError, match="disco"):
            for item in prefetch(items(), 2):
                seen.append(item)
        assert seen == [0, 1, 2, 3, 4]

    def test_early_stop_releases_producer(self):
        # fila cheia no fim dos itens: o marcador final não pode bloquear a thread
        stream = prefetch(iter([0, 1]), 1)
        assert next(stream) == 0
        stream.close()
        assert not any(t.name == 'occreg-prefetch' and t.is_alive() for t in threading.enumerate())
