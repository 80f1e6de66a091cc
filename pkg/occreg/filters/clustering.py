"""
Agrupamento euclidiano (single-linkage) de pontos de objetos movíveis.
"""
from typing import List, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..geometry.spatial_index import SpatialIndex


class ObjectCluster:
    """Um objeto: conjunto de pontos ligados, com centróide e rótulo dominante."""

    SOURCES = ('frame', 'map')

    def __init__(self, point_ids: np.ndarray, centroid: np.ndarray, dominant_label: int, source: str = 'frame'):
        if source not in self.SOURCES:
            raise ValueError(f"Origem de cluster inválida: {source}")
        self.point_ids = np.asarray(point_ids, dtype=np.int64)
        self.centroid = np.asarray(centroid, dtype=np.float64)
        self.dominant_label = int(dominant_label)
        self.source = source

    def __len__(self):
        return len(self.point_ids)

    def to_dict(self):
        return {
            'size': len(self),
            'centroid': self.centroid.tolist(),
            'dominant_label': self.dominant_label,
            'source': self.source,
        }

    def __repr__(self):
        c = self.centroid
        return (f"ObjectCluster({self.source}, size={len(self)}, label={self.dominant_label}, "
                f"centroid=({c[0]:.2f}, {c[1]:.2f}, {c[2]:.2f}))")


def connected_labels(points: np.ndarray, radius: float) -> np.ndarray:
    """Componente conexa de cada ponto; dois pontos ligam-se se distância <= radius."""
    n = len(points)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    pairs = SpatialIndex(points).within_radius(radius) if n > 1 else np.empty((0, 2), dtype=np.int64)
    graph = coo_matrix((np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return labels.astype(np.int64)


def cluster_points(points: np.ndarray, radius: float = 0.9, min_cluster_size: int = 5,
                   labels: Optional[np.ndarray] = None, point_ids: Optional[np.ndarray] = None,
                   source: str = 'frame') -> List[ObjectCluster]:
    """
    Componentes conexas com pelo menos `min_cluster_size` pontos.

    Args:
        points: Posições (N, 3)
        radius: Distância máxima de ligação (metros)
        min_cluster_size: Componentes menores são descartadas
        labels: Rótulos (N,) para o rótulo dominante; 0 se omitidos
        point_ids: Identificadores a guardar em cada cluster (por omissão 0..N-1)
        source: 'frame' ou 'map'

    Returns:
        Clusters ordenados pelo menor identificador de ponto
    """
    if radius <= 0:
        raise ValueError(f"radius tem de ser positivo: {radius}")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    ids = np.arange(len(points)) if point_ids is None else np.asarray(point_ids, dtype=np.int64)
    component = connected_labels(points, radius)

    clusters = []
    # connected_components numera as componentes pela ordem do primeiro ponto
    for comp in range(int(component.max()) + 1 if len(component) else 0):
        members = np.flatnonzero(component == comp)
        if len(members) < min_cluster_size:
            continue
        if labels is None:
            dominant = 0
        else:
            values, counts = np.unique(np.asarray(labels)[members], return_counts=True)
            dominant = values[np.argmax(counts)]  # empate: menor id
        clusters.append(ObjectCluster(ids[members], points[members].mean(axis=0), dominant, source))
    return clusters
