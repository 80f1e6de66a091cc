"""
occreg: odometria sobre ocupação semântica 3D

Regista cada frame de ocupação semântica contra um mapa global persistente
com GICP em duas passagens, filtrando as correspondências por rótulo
semântico, por objetos dinâmicos e pela persistência dos voxels do mapa.
"""

__version__ = "1.0.0"

from .geometry.pose import Pose
from .geometry.point_cloud import SemanticPointCloud
from .geometry.voxel_grid import VoxelGridSpec
from .registration.gicp import GicpResult, GicpTarget, gicp_align
from .filters.base_filter import BaseFilter, FilterContext
from .filters.semantic_filter import SemanticLabelFilter
from .filters.dynamic_filter import DynamicObjectFilter
from .filters.label_filter import LabelBasedObjectFilter
from .filters.voxel_pfilter import VoxelPFilter
from .mapping.voxel_map import GlobalMap
from .orchestrator.odometry import OdometryPipeline, run_sequence
from .utils.config import GicpConfig, OdometryConfig
from .utils.errors import OccRegError

__all__ = [
    'Pose',
    'SemanticPointCloud',
    'VoxelGridSpec',
    'GicpResult',
    'GicpTarget',
    'gicp_align',
    'BaseFilter',
    'FilterContext',
    'SemanticLabelFilter',
    'DynamicObjectFilter',
    'LabelBasedObjectFilter',
    'VoxelPFilter',
    'GlobalMap',
    'OdometryPipeline',
    'run_sequence',
    'GicpConfig',
    'OdometryConfig',
    'OccRegError',
]
