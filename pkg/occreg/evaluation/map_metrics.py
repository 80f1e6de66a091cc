"""
Qualidade do mapa reconstruído face à referência (só geometria; rótulos ignorados).
"""
from typing import Any, Dict

import numpy as np
from scipy.spatial import cKDTree

from ..utils.config import get_workers
from ..utils.errors import EvaluationError

DEFAULT_THRESHOLD = 0.4  # metros, a aresta do voxel


class MapMetrics:
    """Exatidão (RMSE, m), precisão e taxa de completude ao limiar dado."""

    def __init__(self, accuracy: float, precision: float, completion_ratio: float,
                 threshold: float = DEFAULT_THRESHOLD, reconstructed_points: int = 0,
                 ground_truth_points: int = 0):
        self.accuracy = accuracy
        self.precision = precision
        self.completion_ratio = completion_ratio
        self.threshold = threshold
        self.reconstructed_points = reconstructed_points
        self.ground_truth_points = ground_truth_points

    def to_dict(self) -> Dict[str, Any]:
        return {
            'accuracy_m': self.accuracy,
            'precision': self.precision,
            'completion_ratio': self.completion_ratio,
            'threshold_m': self.threshold,
            'reconstructed_points': self.reconstructed_points,
            'ground_truth_points': self.ground_truth_points,
        }

    def __repr__(self):
        return (f"MapMetrics(accuracy={self.accuracy:.4f} m, precision={self.precision:.4f}, "
                f"completion={self.completion_ratio:.4f} @ {self.threshold} m)")


def nearest_distances(queries: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Distância de cada ponto de `queries` ao ponto mais próximo de `reference`."""
    distances, _ = cKDTree(reference).query(queries, k=1, workers=get_workers())
    return distances


def map_metrics(reconstructed: np.ndarray, ground_truth: np.ndarray,
                threshold: float = DEFAULT_THRESHOLD) -> MapMetrics:
    """
    Args:
        reconstructed: Pontos do mapa reconstruído (N, 3)
        ground_truth: Pontos do mapa de referência (M, 3)
        threshold: Distância para um ponto contar como correto / reconstruído

    Raises:
        EvaluationError: conjunto vazio ou limiar não positivo
    """
    reconstructed = np.asarray(reconstructed, dtype=np.float64).reshape(-1, 3)
    ground_truth = np.asarray(ground_truth, dtype=np.float64).reshape(-1, 3)
    if len(reconstructed) == 0 or len(ground_truth) == 0:
        raise EvaluationError("map_metrics precisa de dois conjuntos não vazios")
    if not threshold > 0:
        raise EvaluationError(f"Limiar tem de ser positivo: {threshold}")

    to_gt = nearest_distances(reconstructed, ground_truth)
    to_rec = nearest_distances(ground_truth, reconstructed)
    return MapMetrics(
        accuracy=float(np.sqrt(np.mean(to_gt ** 2))),
        precision=float(np.mean(to_gt < threshold)),
        completion_ratio=float(np.mean(to_rec < threshold)),
        threshold=threshold,
        reconstructed_points=len(reconstructed),
        ground_truth_points=len(ground_truth),
    )
