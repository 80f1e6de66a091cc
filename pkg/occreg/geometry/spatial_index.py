"""
Índice espacial para vizinhos mais próximos (KD-tree do scipy).
"""
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from ..utils.config import get_workers


class SpatialIndex:
    """KD-tree só de leitura; consultas concorrentes são seguras."""

    def __init__(self, points: np.ndarray):
        """
        Args:
            points: Pontos (N, 3), N >= 1
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(points) == 0:
            raise ValueError("Não é possível construir um índice sobre 0 pontos")
        self.points = points
        self._tree = cKDTree(points)

    def __len__(self):
        return len(self.points)

    def nearest_many(self, queries: np.ndarray, max_dist: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Vizinho mais próximo de cada consulta dentro de max_dist (inclusivo).

        Returns:
            (ids (M,) com -1 onde não há vizinho, distâncias (M,) com inf)
        """
        queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        if len(queries) == 0:
            return np.empty(0, dtype=np.int64), np.empty(0)
        # a margem garante que o limite do cKDTree não exclui d == max_dist
        dists, ids = self._tree.query(
            queries, k=1,
            distance_upper_bound=max_dist * (1.0 + 1e-12) + 1e-12,
            workers=get_workers(),
        )
        ids = np.asarray(ids, dtype=np.int64)
        dists = np.asarray(dists, dtype=np.float64)
        miss = ~(dists <= max_dist)
        ids[miss] = -1
        dists[miss] = np.inf
        return ids, dists

    def nearest(self, query: np.ndarray, max_dist: float) -> Optional[Tuple[int, float]]:
        ids, dists = self.nearest_many(np.asarray(query, dtype=np.float64), max_dist)
        if ids[0] < 0:
            return None
        return int(ids[0]), float(dists[0])

    def knn(self, queries: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """k vizinhos de cada consulta (o próprio ponto incluído, se pertencer ao índice)."""
        k = min(k, len(self.points))
        dists, ids = self._tree.query(np.asarray(queries, dtype=np.float64).reshape(-1, 3),
                                      k=k, workers=get_workers())
        return np.asarray(dists).reshape(-1, k), np.asarray(ids).reshape(-1, k)

    def within_radius(self, radius: float):
        """Pares (i, j), i < j, a distância <= radius."""
        return self._tree.query_pairs(radius, output_type='ndarray')


def build_index(points: np.ndarray) -> SpatialIndex:
    return SpatialIndex(points)


def nearest(index: SpatialIndex, query: np.ndarray, max_dist: float) -> Optional[Tuple[int, float]]:
    return index.nearest(query, max_dist)
