"""
Filtro de objetos dinâmicos (P_D).

Os pontos de classes movíveis são separados do frame e do mapa, agrupados em
objetos e comparados depois da primeira passagem GICP: um objeto cujo
centróide se deslocou mais do que o limiar é dinâmico e os seus pontos
(no frame, DA, e no mapa, DB) deixam de contar para o registo refinado.
"""
import logging
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..geometry.point_cloud import SemanticPointCloud
from ..geometry.pose import Pose
from ..utils.taxonomy import LabelTaxonomy
from .base_filter import BaseFilter, FilterContext, Predicate
from .clustering import ObjectCluster, cluster_points

logger = logging.getLogger(__name__)


def extract_movable(cloud: Union[SemanticPointCloud, np.ndarray], taxonomy: LabelTaxonomy) -> np.ndarray:
    """Índices dos pontos com rótulo movível."""
    labels = cloud.labels if isinstance(cloud, SemanticPointCloud) else np.asarray(cloud)
    return np.flatnonzero(taxonomy.is_movable(labels))


class DynamicVerdict:
    """Conjuntos DA (frame) e DB (mapa) e o registo por objeto."""

    def __init__(self, frame_dynamic: np.ndarray, map_dynamic: np.ndarray,
                 records: Optional[List[Dict[str, Any]]] = None):
        self.frame_dynamic = np.unique(np.asarray(frame_dynamic, dtype=np.int64))
        self.map_dynamic = np.unique(np.asarray(map_dynamic, dtype=np.int64))
        self.records = records or []

    @classmethod
    def empty(cls) -> 'DynamicVerdict':
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))

    @property
    def dynamic_clusters(self) -> int:
        return sum(1 for r in self.records if r['dynamic'])

    def summary(self) -> Dict[str, int]:
        return {
            'frame_clusters': len(self.records),
            'dynamic_clusters': self.dynamic_clusters,
            'frame_dynamic_points': len(self.frame_dynamic),
            'map_dynamic_points': len(self.map_dynamic),
        }

    def __repr__(self):
        return (f"DynamicVerdict(DA={len(self.frame_dynamic)}, DB={len(self.map_dynamic)}, "
                f"dynamic_clusters={self.dynamic_clusters})")


def classify_dynamic(frame_clusters: Sequence[ObjectCluster], map_clusters: Sequence[ObjectCluster],
                     coarse_pose: Pose, displacement_threshold: float = 2.0,
                     match_radius: float = 4.0) -> DynamicVerdict:
    """
    Classifica cada objeto do frame como estático ou dinâmico.

    O centróide do objeto é levado ao mundo pela pose da primeira passagem e
    emparelhado com o centróide mais próximo de um objeto do mapa com o mesmo
    rótulo dominante, até match_radius. Sem par, o deslocamento é infinito.
    O objeto é dinâmico se o deslocamento exceder displacement_threshold; os
    objetos do mapa sem par não são tocados.

    Args:
        frame_clusters: Objetos do frame (referencial do ego)
        map_clusters: Objetos do mapa (referencial do mundo)
        coarse_pose: Resultado da primeira passagem GICP
        displacement_threshold: Limiar de deslocamento (metros)
        match_radius: Distância máxima de emparelhamento (metros)

    Returns:
        DynamicVerdict com DA, DB e o registo de cada objeto do frame
    """
    frame_dynamic: List[np.ndarray] = []
    map_dynamic: List[np.ndarray] = []
    records = []

    map_centroids = np.array([c.centroid for c in map_clusters]).reshape(-1, 3)
    map_labels = np.array([c.dominant_label for c in map_clusters], dtype=np.int64)

    for i, cluster in enumerate(frame_clusters):
        world_centroid = coarse_pose.apply(cluster.centroid)
        candidates = np.flatnonzero(map_labels == cluster.dominant_label)
        matched, displacement = None, np.inf
        if len(candidates):
            dists = np.linalg.norm(map_centroids[candidates] - world_centroid, axis=1)
            best = int(np.argmin(dists))
            if dists[best] <= match_radius:
                matched, displacement = int(candidates[best]), float(dists[best])

        dynamic = displacement > displacement_threshold
        if dynamic:
            frame_dynamic.append(cluster.point_ids)
            if matched is not None:
                map_dynamic.append(map_clusters[matched].point_ids)
        records.append({
            'frame_cluster': i,
            'map_cluster': matched,
            'label': cluster.dominant_label,
            'size': len(cluster),
            'displacement': displacement,
            'dynamic': bool(dynamic),
        })

    empty = np.empty(0, dtype=np.int64)
    verdict = DynamicVerdict(np.concatenate(frame_dynamic) if frame_dynamic else empty,
                             np.concatenate(map_dynamic) if map_dynamic else empty,
                             records)
    logger.debug("[DINÂMICO] %s", verdict)
    return verdict


def dynamic_predicate(verdict: DynamicVerdict) -> Predicate:
    """P_D(a_i, b_i) = (a_i ∉ DA) e (b_i ∉ DB)."""
    frame_dynamic = verdict.frame_dynamic
    map_dynamic = verdict.map_dynamic

    def predicate(pairs) -> np.ndarray:
        return (~np.isin(pairs.source_ids, frame_dynamic)) & (~np.isin(pairs.target_ids, map_dynamic))
    return predicate


class DynamicObjectFilter(BaseFilter):
    """Constrói P_D a partir da pose da primeira passagem."""

    def __init__(self, displacement_threshold: float = 2.0, match_radius: float = 4.0,
                 cluster_radius: float = 0.9, min_cluster_size: int = 5):
        super().__init__(name="Dynamic Object Filter", symbol="P_D")
        self.displacement_threshold = displacement_threshold
        self.match_radius = match_radius
        self.cluster_radius = cluster_radius
        self.min_cluster_size = min_cluster_size
        self.last_verdict = DynamicVerdict.empty()

    def classify(self, context: FilterContext) -> DynamicVerdict:
        if context.coarse_pose is None:
            raise ValueError("O filtro dinâmico precisa da pose da primeira passagem")
        frame, snapshot, taxonomy = context.frame, context.snapshot, context.taxonomy

        frame_ids = extract_movable(frame, taxonomy)
        map_ids = extract_movable(snapshot.labels, taxonomy)
        frame_clusters = cluster_points(frame.positions[frame_ids], self.cluster_radius, self.min_cluster_size,
                                        frame.labels[frame_ids], frame_ids, source='frame')
        map_clusters = cluster_points(snapshot.positions[map_ids], self.cluster_radius, self.min_cluster_size,
                                      snapshot.labels[map_ids], map_ids, source='map')
        self.last_verdict = classify_dynamic(frame_clusters, map_clusters, context.coarse_pose,
                                             self.displacement_threshold, self.match_radius)
        return self.last_verdict

    def predicate(self, context: FilterContext) -> Predicate:
        return dynamic_predicate(self.classify(context))

    def summary(self):
        out = super().summary()
        out.update({'displacement_threshold': self.displacement_threshold, 'match_radius': self.match_radius})
        return out
