"""Geometria: poses SE(3), grelhas de voxels e índice espacial."""
from .pose import Pose, pose_apply, pose_compose, pose_exp, pose_log
from .voxel_grid import VoxelGridSpec, voxel_center, voxel_of, world_voxel_keys
from .point_cloud import SemanticPointCloud
from .spatial_index import SpatialIndex, build_index, nearest

__all__ = [
    'Pose', 'pose_apply', 'pose_compose', 'pose_exp', 'pose_log',
    'VoxelGridSpec', 'voxel_center', 'voxel_of', 'world_voxel_keys',
    'SemanticPointCloud',
    'SpatialIndex', 'build_index', 'nearest',
]
