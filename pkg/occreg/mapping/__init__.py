"""Mapa semântico global e p-Index."""
from .voxel_map import (GlobalMap, MapSnapshot, MapVoxel, MergeReport, downsample_persistent,
                        extract_persistent, local_crop, merge_frame, p_index)

__all__ = [
    'GlobalMap', 'MapSnapshot', 'MapVoxel', 'MergeReport',
    'downsample_persistent', 'extract_persistent', 'local_crop', 'merge_frame', 'p_index',
]
