import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from occreg.filters import (DynamicObjectFilter, DynamicVerdict, FilterContext, LabelBasedObjectFilter,
                            ObjectCluster, SemanticLabelFilter, VoxelPFilter, all_of, classify_dynamic, cluster_points,
                            dynamic_predicate, extract_movable, label_based_filter, persistence_predicate)
from occreg.geometry.point_cloud import SemanticPointCloud
from occreg.geometry.pose import Pose
from occreg.mapping.voxel_map import GlobalMap, MapSnapshot
from occreg.registration.correspondences import CorrespondenceSet

CAR = 4
BUS = 3
ROAD = 11


def blob(center, spacing=0.4):
    """3 x 3 pontos num plano horizontal em torno de `center`."""
    offsets = np.array([(i, j, 0.0) for i in (-1, 0, 1) for j in (-1, 0, 1)]) * spacing
    return np.asarray(center, dtype=np.float64) + offsets


def snapshot_of(positions, labels, p_index=None, t=0):
    n = len(labels)
    p_index = np.ones(n) if p_index is None else p_index
    return MapSnapshot(positions, labels, np.zeros((n, 3), dtype=np.int64), p_index, t)


def identity_pairs(n):
    return CorrespondenceSet(np.arange(n), np.arange(n), np.zeros(n))


class TestExtractMovable:
    def test_from_labels(self, taxonomy):
        assert_array_equal(extract_movable(np.array([11, 4, 15, 3, 8, 7]), taxonomy), [1, 3, 5])

    def test_from_cloud(self, taxonomy):
        cloud = SemanticPointCloud(np.zeros((3, 3)), [ROAD, ROAD, CAR])
        assert_array_equal(extract_movable(cloud, taxonomy), [2])

    def test_nothing_movable(self, taxonomy):
        assert len(extract_movable(np.array([11, 15, 16]), taxonomy)) == 0


class TestClustering:
    def test_two_separate_blobs(self):
        points = np.concatenate([blob((0.0, 0.0, 0.0)), blob((10.0, 0.0, 0.0))])
        clusters = cluster_points(points)
        assert len(clusters) == 2
        assert_allclose(clusters[0].centroid, [0.0, 0.0, 0.0], atol=1e-12)
        assert_allclose(clusters[1].centroid, [10.0, 0.0, 0.0], atol=1e-12)

    def test_chain_is_single_cluster(self):
        points = np.column_stack([np.arange(20) * 0.4, np.zeros(20), np.zeros(20)])
        clusters = cluster_points(points, radius=0.6)
        assert len(clusters) == 1
        assert len(clusters[0]) == 20

    def test_small_components_dropped(self):
        points = np.concatenate([blob((0.0, 0.0, 0.0)), [[20.0, 0.0, 0.0], [20.3, 0.0, 0.0]]])
        clusters = cluster_points(points, min_cluster_size=5)
        assert len(clusters) == 1
        assert_array_equal(clusters[0].point_ids, np.arange(9))

    def test_dominant_label_and_ids(self):
        points = blob((0.0, 0.0, 0.0))
        labels = np.array([CAR] * 5 + [BUS] * 4)
        (cluster,) = cluster_points(points, labels=labels, point_ids=np.arange(9) + 100, source='map')
        assert cluster.dominant_label == CAR
        assert cluster.source == 'map'
        assert_array_equal(cluster.point_ids, np.arange(100, 109))

    def test_dominant_label_tie_takes_smallest(self):
        points = blob((0.0, 0.0, 0.0))[:8]
        labels = np.array([CAR] * 4 + [BUS] * 4)
        (cluster,) = cluster_points(points, labels=labels)
        assert cluster.dominant_label == BUS

    def test_empty_input(self):
        assert cluster_points(np.empty((0, 3))) == []

    def test_invalid_radius(self):
        with pytest.raises(ValueError):
            cluster_points(blob((0.0, 0.0, 0.0)), radius=0.0)

    def test_invalid_source(self):
        with pytest.raises(ValueError):
            ObjectCluster([0], np.zeros(3), CAR, source='sky')


class TestClassifyDynamic:
    def cluster(self, ids, centroid, label=CAR, source='frame'):
        return ObjectCluster(np.asarray(ids), np.asarray(centroid, dtype=np.float64), label, source)

    def test_large_displacement_is_dynamic(self):
        frame = [self.cluster([0, 1, 2], (10.0, 0.0, 0.0))]
        gmap = [self.cluster([7, 8], (13.0, 0.0, 0.0), source='map')]
        verdict = classify_dynamic(frame, gmap, Pose.identity(), 2.0)
        assert verdict.records[0]['displacement'] == pytest.approx(3.0)
        assert verdict.records[0]['dynamic']
        assert_array_equal(verdict.frame_dynamic, [0, 1, 2])
        assert_array_equal(verdict.map_dynamic, [7, 8])

    def test_small_displacement_is_static(self):
        frame = [self.cluster([0, 1], (10.0, 0.0, 0.0))]
        gmap = [self.cluster([5], (11.0, 0.0, 0.0), source='map')]
        verdict = classify_dynamic(frame, gmap, Pose.identity(), 2.0)
        assert verdict.records[0]['displacement'] == pytest.approx(1.0)
        assert not verdict.records[0]['dynamic']
        assert len(verdict.frame_dynamic) == 0
        assert len(verdict.map_dynamic) == 0

    def test_centroid_is_moved_by_coarse_pose(self):
        frame = [self.cluster([0], (0.0, 0.0, 0.0))]
        gmap = [self.cluster([3], (5.0, 0.0, 0.0), source='map')]
        verdict = classify_dynamic(frame, gmap, Pose(translation=(5.0, 0.0, 0.0)), 2.0)
        assert verdict.records[0]['displacement'] == pytest.approx(0.0)
        assert not verdict.records[0]['dynamic']

    def test_unmatched_cluster_is_dynamic(self):
        frame = [self.cluster([0, 1], (0.0, 0.0, 0.0))]
        gmap = [self.cluster([4], (0.5, 0.0, 0.0), label=BUS, source='map')]
        verdict = classify_dynamic(frame, gmap, Pose.identity(), 2.0)
        record = verdict.records[0]
        assert record['map_cluster'] is None
        assert np.isinf(record['displacement'])
        assert record['dynamic']
        assert_array_equal(verdict.frame_dynamic, [0, 1])
        assert len(verdict.map_dynamic) == 0

    def test_beyond_match_radius_is_unmatched(self):
        frame = [self.cluster([0], (0.0, 0.0, 0.0))]
        gmap = [self.cluster([1], (6.0, 0.0, 0.0), source='map')]
        verdict = classify_dynamic(frame, gmap, Pose.identity(), 2.0, match_radius=4.0)
        assert np.isinf(verdict.records[0]['displacement'])

    def test_infinite_threshold_marks_nothing(self):
        frame = [self.cluster([0], (0.0, 0.0, 0.0)), self.cluster([1], (30.0, 0.0, 0.0))]
        gmap = [self.cluster([2], (3.0, 0.0, 0.0), source='map')]
        verdict = classify_dynamic(frame, gmap, Pose.identity(), float('inf'))
        assert verdict.dynamic_clusters == 0
        assert len(verdict.frame_dynamic) == 0

    def test_summary(self):
        frame = [self.cluster([0, 1, 2], (10.0, 0.0, 0.0))]
        gmap = [self.cluster([7, 8], (13.0, 0.0, 0.0), source='map')]
        summary = classify_dynamic(frame, gmap, Pose.identity(), 2.0).summary()
        assert summary == {'frame_clusters': 1, 'dynamic_clusters': 1,
                           'frame_dynamic_points': 3, 'map_dynamic_points': 2}


class TestDynamicPredicate:
    def test_rejects_either_side(self):
        frame = [ObjectCluster([1], np.zeros(3), CAR)]
        gmap = [ObjectCluster([2], np.array([3.0, 0.0, 0.0]), CAR, 'map')]
        verdict = classify_dynamic(frame, gmap, Pose.identity(), 2.0)
        pairs = CorrespondenceSet([0, 1, 3], [0, 4, 2], np.zeros(3))
        assert_array_equal(dynamic_predicate(verdict)(pairs), [True, False, False])

    def test_empty_verdict_accepts_all(self):
        assert dynamic_predicate(DynamicVerdict.empty())(identity_pairs(4)).all()


class TestDynamicObjectFilter:
    def scene(self, map_shift):
        ground = np.array([[x, y, 0.0] for x in range(-3, 4) for y in range(-3, 4)], dtype=np.float64)
        car = blob((0.0, 0.0, 1.0))
        frame = SemanticPointCloud(np.concatenate([ground, car]),
                                   np.concatenate([np.full(len(ground), ROAD), np.full(9, CAR)]))
        map_car = car + np.array([map_shift, 0.0, 0.0])
        snapshot = snapshot_of(np.concatenate([ground, map_car]),
                               np.concatenate([np.full(len(ground), ROAD), np.full(9, CAR)]))
        return frame, snapshot, len(ground)

    def test_moving_car_is_removed(self, taxonomy):
        frame, snapshot, n_ground = self.scene(map_shift=3.0)
        dyn = DynamicObjectFilter(displacement_threshold=2.0)
        context = FilterContext(frame, snapshot, taxonomy, Pose.identity())
        mask = dyn.predicate(context)(identity_pairs(len(frame)))
        assert mask[:n_ground].all()
        assert not mask[n_ground:].any()
        assert dyn.last_verdict.dynamic_clusters == 1

    def test_parked_car_is_kept(self, taxonomy):
        frame, snapshot, _ = self.scene(map_shift=0.5)
        dyn = DynamicObjectFilter(displacement_threshold=2.0)
        mask = dyn.predicate(FilterContext(frame, snapshot, taxonomy, Pose.identity()))(identity_pairs(len(frame)))
        assert mask.all()

    def test_needs_coarse_pose(self, taxonomy):
        frame, snapshot, _ = self.scene(map_shift=0.0)
        with pytest.raises(ValueError):
            DynamicObjectFilter().classify(FilterContext(frame, snapshot, taxonomy))

    def test_summary(self):
        summary = DynamicObjectFilter(displacement_threshold=1.5).summary()
        assert summary['symbol'] == 'P_D'
        assert summary['displacement_threshold'] == 1.5


class TestSemanticLabelFilter:
    def test_predicate_from_context(self, taxonomy):
        frame = SemanticPointCloud(np.zeros((2, 3)), [ROAD, CAR])
        snapshot = snapshot_of(np.zeros((2, 3)), [ROAD, ROAD])
        predicate = SemanticLabelFilter().predicate(FilterContext(frame, snapshot, taxonomy))
        assert_array_equal(predicate(identity_pairs(2)), [True, False])


class TestLabelBasedFilter:
    def test_drops_movable_points(self, taxonomy):
        cloud = SemanticPointCloud(np.arange(12, dtype=np.float64).reshape(4, 3), [CAR, ROAD, BUS, 15])
        kept = label_based_filter(cloud, taxonomy)
        assert_array_equal(kept.labels, [ROAD, 15])
        assert_allclose(kept.positions, [[3.0, 4.0, 5.0], [9.0, 10.0, 11.0]])

    def test_prepare_filters_both_sides(self, taxonomy):
        frame = SemanticPointCloud(np.zeros((3, 3)), [CAR, ROAD, ROAD])
        snapshot = snapshot_of(np.zeros((2, 3)), [BUS, 15])
        label_filter = LabelBasedObjectFilter()
        frame, snapshot = label_filter.prepare(frame, snapshot, taxonomy)
        assert len(frame) == 2
        assert_array_equal(snapshot.labels, [15])
        assert label_filter.predicate(FilterContext(frame, snapshot, taxonomy)) is None


class TestVoxelPFilter:
    def test_strict_threshold(self, taxonomy):
        snapshot = snapshot_of(np.zeros((3, 3)), [ROAD] * 3, p_index=np.array([1.0, 0.125, 0.5]))
        frame = SemanticPointCloud(np.zeros((3, 3)), [ROAD] * 3)
        predicate = VoxelPFilter(0.5).predicate(FilterContext(frame, snapshot, taxonomy))
        assert_array_equal(predicate(identity_pairs(3)), [True, False, False])

    def test_higher_threshold_accepts_subset(self, taxonomy, rng):
        values = rng.uniform(0.0, 1.0, 200)
        snapshot = snapshot_of(np.zeros((200, 3)), [ROAD] * 200, p_index=values)
        frame = SemanticPointCloud(np.zeros((200, 3)), [ROAD] * 200)
        previous = None
        for threshold in np.linspace(0.0, 1.0, 11):
            mask = VoxelPFilter(threshold).predicate(FilterContext(frame, snapshot, taxonomy))(identity_pairs(200))
            if previous is not None:
                assert not np.any(mask & ~previous)
            previous = mask

    def test_against_global_map(self):
        gmap = GlobalMap(0.4)
        steady, flicker = [0.2, 0.2, 0.2], [4.2, 0.2, 0.2]
        gmap.merge_frame(SemanticPointCloud([steady, flicker], [ROAD, ROAD]), Pose.identity(), 0)
        for t in (1, 2, 3):
            gmap.merge_frame(SemanticPointCloud([steady], [ROAD]), Pose.identity(), t)
        points = np.array([steady, flicker, [20.0, 0.0, 0.0]])
        assert_array_equal(gmap.persistent_at(points, 3, 0.5), [True, False, False])
        predicate = persistence_predicate(gmap, 3, 0.5, target_points=points)
        assert_array_equal(predicate(CorrespondenceSet([0, 1, 2], [2, 1, 0], np.zeros(3))),
                           [False, False, True])


class TestFilterBase:
    def test_enable_disable(self):
        f = VoxelPFilter()
        f.disable()
        assert not f.enabled
        assert f.summary()['enabled'] is False
        f.enable()
        assert f.enabled
        assert 'P_V' in repr(f)

    def test_all_of(self):
        pairs = identity_pairs(6)
        combined = all_of(lambda p: p.source_ids > 1, lambda p: p.source_ids < 5)
        assert_array_equal(combined(pairs), [False, False, True, True, True, False])
        assert all_of()(pairs).all()
