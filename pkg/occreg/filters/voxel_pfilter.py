"""
Voxel PFilter (P_V): só aceita pontos do mapa em voxels persistentes.
"""
from typing import Optional

import numpy as np

from ..mapping.voxel_map import GlobalMap, MapSnapshot
from .base_filter import BaseFilter, FilterContext, Predicate


def persistence_predicate(gmap: GlobalMap, t: int, threshold: float = 0.5,
                          target_points: Optional[np.ndarray] = None) -> Predicate:
    """
    P_V(b_i) = [p-Index(v) > threshold | b_i ∈ v], sobre pontos do mapa.

    Args:
        gmap: Mapa global
        t: Instante de avaliação do p-Index
        threshold: Limiar (0.5 por omissão)
        target_points: Pontos indexados por `target_ids`; por omissão as
            posições dos voxels do mapa. Pontos fora de qualquer voxel do
            mapa são rejeitados.
    """
    points = gmap.positions if target_points is None else np.asarray(target_points, dtype=np.float64)
    accepted = gmap.persistent_at(points, t, threshold)

    def predicate(pairs) -> np.ndarray:
        return accepted[pairs.target_ids]
    return predicate


def snapshot_persistence_predicate(snapshot: MapSnapshot, threshold: float = 0.5) -> Predicate:
    """P_V sobre um snapshot, cujo p-Index já foi avaliado no instante de extração."""
    accepted = snapshot.p_index > threshold

    def predicate(pairs) -> np.ndarray:
        return accepted[pairs.target_ids]
    return predicate


class VoxelPFilter(BaseFilter):
    """Rejeita pares cujo ponto do mapa está num voxel transitório."""

    def __init__(self, threshold: float = 0.5):
        super().__init__(name="Voxel PFilter", symbol="P_V")
        self.threshold = threshold

    def predicate(self, context: FilterContext) -> Predicate:
        return snapshot_persistence_predicate(context.snapshot, self.threshold)

    def summary(self):
        out = super().summary()
        out['threshold'] = self.threshold
        return out
