"""
Correspondências ponto-a-ponto entre a nuvem do frame (A) e o mapa (B).
"""
import numpy as np

from ..geometry.pose import Pose
from ..geometry.spatial_index import SpatialIndex


class CorrespondenceSet:
    """
    Conjunto de correspondências guardado por colunas.

    Os predicados de filtragem recebem este objeto e devolvem uma máscara
    booleana com uma entrada por par.
    """

    def __init__(self, source_ids: np.ndarray, target_ids: np.ndarray, sq_distances: np.ndarray):
        self.source_ids = np.asarray(source_ids, dtype=np.int64)
        self.target_ids = np.asarray(target_ids, dtype=np.int64)
        self.sq_distances = np.asarray(sq_distances, dtype=np.float64)

    @classmethod
    def empty(cls) -> 'CorrespondenceSet':
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0))

    def __len__(self):
        return len(self.source_ids)

    def subset(self, mask: np.ndarray) -> 'CorrespondenceSet':
        return CorrespondenceSet(self.source_ids[mask], self.target_ids[mask], self.sq_distances[mask])

    def __repr__(self):
        return f"CorrespondenceSet(pairs={len(self)})"


def find_correspondences(source_points: np.ndarray, source_pose: Pose,
                         target_index: SpatialIndex, max_dist: float) -> CorrespondenceSet:
    """
    Vizinho mais próximo no mapa de cada ponto do frame transformado.

    Args:
        source_points: Posições (N, 3) no referencial do frame
        source_pose: Pose atual do frame no mundo
        target_index: Índice espacial sobre os pontos do mapa
        max_dist: Distância máxima (inclusiva) em metros

    Returns:
        Um par por ponto com vizinho a <= max_dist; os restantes são omitidos
    """
    source_points = np.asarray(source_points, dtype=np.float64).reshape(-1, 3)
    if len(source_points) == 0:
        return CorrespondenceSet.empty()
    ids, dists = target_index.nearest_many(source_pose.apply(source_points), max_dist)
    hit = ids >= 0
    return CorrespondenceSet(np.flatnonzero(hit), ids[hit], dists[hit] ** 2)
