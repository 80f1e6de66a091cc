"""
Filtro de objetos por rótulo: remove todos os pontos de classes movíveis.

Variante indiscriminada usada como referência de ablação; perde também os
objetos parados (carros estacionados, autocarros), que são boas âncoras.
"""
from typing import Tuple

from ..geometry.point_cloud import SemanticPointCloud
from ..mapping.voxel_map import MapSnapshot
from ..utils.taxonomy import LabelTaxonomy
from .base_filter import BaseFilter, FilterContext


def label_based_filter(cloud: SemanticPointCloud, taxonomy: LabelTaxonomy) -> SemanticPointCloud:
    """Nuvem sem os pontos de rótulo movível."""
    return cloud.subset(~taxonomy.is_movable(cloud.labels))


class LabelBasedObjectFilter(BaseFilter):
    """Aplica label_based_filter ao frame e ao snapshot do mapa."""

    def __init__(self):
        super().__init__(name="Label-based Object Filter", symbol="P_L")

    def prepare(self, frame: SemanticPointCloud, snapshot: MapSnapshot,
                taxonomy: LabelTaxonomy) -> Tuple[SemanticPointCloud, MapSnapshot]:
        return label_based_filter(frame, taxonomy), snapshot.subset(~taxonomy.is_movable(snapshot.labels))

    def predicate(self, context: FilterContext):
        return None
