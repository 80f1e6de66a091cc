"""
Covariâncias por ponto para o GICP plano-a-plano.
"""
import logging
from typing import Union

import numpy as np

from ..geometry.point_cloud import SemanticPointCloud
from ..geometry.spatial_index import SpatialIndex
from ..utils.errors import RegistrationError

logger = logging.getLogger(__name__)

# Abaixo deste número de pontos a vizinhança não define um plano
MIN_POINTS = 4


def estimate_covariances(cloud: Union[SemanticPointCloud, np.ndarray], k: int = 20,
                         epsilon_reg: float = 1e-3) -> np.ndarray:
    """
    Estima a covariância de cada ponto a partir dos k vizinhos mais próximos.

    Os valores próprios da covariância amostral são substituídos por
    (epsilon_reg, 1, 1), por ordem crescente: a direção de menor variância
    (a normal da superfície local) fica com peso forte, as restantes fracas.

    Args:
        cloud: Nuvem semântica ou posições (N, 3)
        k: Número de vizinhos (o próprio ponto incluído)
        epsilon_reg: Valor próprio atribuído à normal

    Returns:
        Array (N, 3, 3) de matrizes simétricas definidas positivas

    Raises:
        RegistrationError: nuvem vazia
    """
    points = cloud.positions if isinstance(cloud, SemanticPointCloud) else np.asarray(cloud, dtype=np.float64)
    points = points.reshape(-1, 3)
    n = len(points)
    if n == 0:
        raise RegistrationError("Não é possível estimar covariâncias de uma nuvem vazia")
    if k < MIN_POINTS:
        raise ValueError(f"k tem de ser >= {MIN_POINTS}, recebido {k}")
    if n < MIN_POINTS:
        return np.tile(np.eye(3), (n, 1, 1))
    return neighborhood_covariances(points, np.arange(n), SpatialIndex(points), k, epsilon_reg)


def neighborhood_covariances(points: np.ndarray, rows: np.ndarray, index: SpatialIndex, k: int = 20,
                             epsilon_reg: float = 1e-3) -> np.ndarray:
    """
    Covariâncias regularizadas apenas das linhas `rows` de `points`.

    `index` tem de estar construído sobre `points`; os vizinhos são
    procurados na nuvem inteira.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if len(rows) == 0:
        return np.empty((0, 3, 3))
    _, ids = index.knn(points[rows], k)
    neighbors = points[ids]                                   # (M, k, 3)
    centered = neighbors - neighbors.mean(axis=1, keepdims=True)
    sample = np.einsum('nki,nkj->nij', centered, centered) / ids.shape[1]

    _, vectors = np.linalg.eigh(sample)                       # valores próprios crescentes
    regularized = np.array([epsilon_reg, 1.0, 1.0])
    covs = np.einsum('nij,j,nkj->nik', vectors, regularized, vectors)
    # simetria exata apesar do arredondamento
    return 0.5 * (covs + np.transpose(covs, (0, 2, 1)))
