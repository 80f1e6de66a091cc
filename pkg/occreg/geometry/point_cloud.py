"""
Nuvem de pontos semântica: a ocupação de um frame tratada como nuvem de pontos.
"""
from typing import Optional

import numpy as np

from .pose import Pose
from .voxel_grid import VoxelGridSpec


class SemanticPointCloud:
    """
    Posições (N, 3) em metros e rótulos (N,) uint8, imutáveis.

    Cada ponto corresponde a um voxel ocupado (no máximo um ponto por voxel).
    """

    __slots__ = ('positions', 'labels', 'frame_index', 'taxonomy_id')

    def __init__(self, positions: np.ndarray, labels: np.ndarray,
                 frame_index: int = 0, taxonomy_id: str = 'occ3d-nuscenes'):
        positions = np.array(positions, dtype=np.float64).reshape(-1, 3)
        labels = np.array(labels, dtype=np.uint8).reshape(-1)
        if len(positions) != len(labels):
            raise ValueError(f"{len(positions)} posições para {len(labels)} rótulos")
        if frame_index < 0:
            raise ValueError(f"frame_index negativo: {frame_index}")
        positions.setflags(write=False)
        labels.setflags(write=False)
        self.positions = positions
        self.labels = labels
        self.frame_index = int(frame_index)
        self.taxonomy_id = taxonomy_id

    @classmethod
    def empty(cls, frame_index: int = 0, taxonomy_id: str = 'occ3d-nuscenes') -> 'SemanticPointCloud':
        return cls(np.empty((0, 3)), np.empty(0, dtype=np.uint8), frame_index, taxonomy_id)

    @classmethod
    def from_voxels(cls, spec: VoxelGridSpec, indices: np.ndarray, labels: np.ndarray,
                    frame_index: int = 0, taxonomy_id: str = 'occ3d-nuscenes') -> 'SemanticPointCloud':
        """Converte voxels ocupados nos respetivos centros."""
        indices = np.asarray(indices, dtype=np.int64).reshape(-1, 3)
        positions = spec.voxel_centers(indices) if len(indices) else np.empty((0, 3))
        return cls(positions, labels, frame_index, taxonomy_id)

    def __len__(self):
        return len(self.labels)

    def is_empty(self) -> bool:
        return len(self.labels) == 0

    def subset(self, mask_or_ids: np.ndarray) -> 'SemanticPointCloud':
        return SemanticPointCloud(self.positions[mask_or_ids], self.labels[mask_or_ids],
                                  self.frame_index, self.taxonomy_id)

    def transformed(self, pose: Pose) -> 'SemanticPointCloud':
        return SemanticPointCloud(pose.apply(self.positions), self.labels,
                                  self.frame_index, self.taxonomy_id)

    def with_frame_index(self, frame_index: int) -> 'SemanticPointCloud':
        return SemanticPointCloud(self.positions, self.labels, frame_index, self.taxonomy_id)

    def voxel_indices(self, spec: VoxelGridSpec):
        """Índices de voxel (N, 3) e máscara de pontos dentro da grelha."""
        return spec.voxels_of(self.positions)

    def validate(self, spec: VoxelGridSpec, valid_labels: Optional[np.ndarray] = None) -> Optional[str]:
        """
        Verifica as invariantes da nuvem sob `spec`.

        Returns:
            None se válida; caso contrário a descrição do problema
        """
        idx, inside = self.voxel_indices(spec)
        if not np.all(inside):
            return f"{int(np.sum(~inside))} pontos fora da grelha"
        if len(idx) and len(np.unique(idx, axis=0)) != len(idx):
            return "dois pontos partilham o mesmo voxel"
        if valid_labels is not None and not np.all(np.isin(self.labels, valid_labels)):
            return "rótulos fora da taxonomia"
        return None

    def __repr__(self):
        return (f"SemanticPointCloud(frame={self.frame_index}, points={len(self)}, "
                f"taxonomy={self.taxonomy_id})")
