"""
Alinhamento GICP plano-a-plano com predicados sobre as correspondências.

Custo por par (d = b - T a):
    F(T) = dᵀ (C_B + R C_A Rᵀ)⁻¹ d

A otimização é Gauss-Newton com amortecimento de Levenberg sobre um twist
aplicado à esquerda da pose atual, T' = exp(ξ) T.
"""
import logging
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..geometry.point_cloud import SemanticPointCloud
from ..geometry.pose import Pose, pose_exp
from ..geometry.spatial_index import SpatialIndex
from ..utils.config import GicpConfig
from ..utils.errors import NonFiniteCostError, TooFewCorrespondencesError
from .correspondences import CorrespondenceSet, find_correspondences
from .covariance import estimate_covariances

logger = logging.getLogger(__name__)

Predicate = Callable[[CorrespondenceSet], np.ndarray]

MIN_CORRESPONDENCES = 10
MAX_DAMPING_RETRIES = 5
DAMPING_FACTOR = 10.0


class GicpTarget:
    """Pontos do mapa (B) com covariâncias e índice espacial, prontos para registo."""

    def __init__(self, positions: np.ndarray, labels: Optional[np.ndarray] = None,
                 covariances: Optional[np.ndarray] = None, k: int = 20, epsilon_reg: float = 1e-3):
        self.positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        self.labels = None if labels is None else np.asarray(labels, dtype=np.uint8)
        self.covariances = (estimate_covariances(self.positions, k, epsilon_reg)
                            if covariances is None else np.asarray(covariances, dtype=np.float64))
        self.index = SpatialIndex(self.positions)

    @classmethod
    def from_cloud(cls, cloud: SemanticPointCloud, config: Optional[GicpConfig] = None) -> 'GicpTarget':
        config = config or GicpConfig()
        return cls(cloud.positions, cloud.labels, k=config.k_neighbors, epsilon_reg=config.epsilon_reg)

    def __len__(self):
        return len(self.positions)


class GicpResult:
    """Resultado de um alinhamento (T⋆ e diagnóstico)."""

    def __init__(self, pose: Pose, cost: float, iterations: int,
                 correspondence_counts: List[int], converged: bool,
                 cost_history: List[Tuple[float, float]]):
        self.pose = pose
        self.cost = cost
        self.iterations = iterations
        self.correspondence_counts = correspondence_counts
        self.converged = converged
        # (custo antes, custo depois) de cada passo aceite, sobre o mesmo conjunto de pares
        self.cost_history = cost_history

    def to_dict(self):
        return {
            'pose': self.pose.to_dict(),
            'cost': self.cost,
            'iterations': self.iterations,
            'correspondence_counts': list(self.correspondence_counts),
            'converged': self.converged,
        }

    def __repr__(self):
        return (f"GicpResult(cost={self.cost:.6g}, iterations={self.iterations}, "
                f"converged={self.converged}, pose={self.pose})")


# ===================== CUSTO =====================

def _rotated_covariances(rotation: np.ndarray, covs: np.ndarray) -> np.ndarray:
    return rotation @ covs @ rotation.T


def _inverse_sym3(m: np.ndarray) -> np.ndarray:
    """Inversa de matrizes 3x3 simétricas definidas positivas (N, 3, 3), pela adjunta."""
    a, b, c = m[:, 0, 0], m[:, 0, 1], m[:, 0, 2]
    d, e, f = m[:, 1, 1], m[:, 1, 2], m[:, 2, 2]
    c00 = d * f - e * e
    c01 = c * e - b * f
    c02 = b * e - c * d
    c11 = a * f - c * c
    c12 = b * c - a * e
    c22 = a * d - b * b
    det = a * c00 + b * c01 + c * c02
    adj = np.stack([c00, c01, c02, c01, c11, c12, c02, c12, c22], axis=1).reshape(-1, 3, 3)
    return adj / det[:, None, None]


def _information(rotation: np.ndarray, cov_a: np.ndarray, cov_b: np.ndarray):
    """(C_B + R C_A Rᵀ)⁻¹ de cada par e R C_A Rᵀ."""
    rotated = _rotated_covariances(rotation, cov_a)
    return _inverse_sym3(cov_b + rotated), rotated


def pair_costs(a: np.ndarray, b: np.ndarray, cov_a: np.ndarray, cov_b: np.ndarray, pose: Pose) -> np.ndarray:
    """Custo de Mahalanobis F_i(T) de cada par; arrays (N, 3) e (N, 3, 3)."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 3)
    d = b - pose.apply(a)
    info, _ = _information(pose.rotation_matrix, np.asarray(cov_a, dtype=np.float64).reshape(-1, 3, 3),
                           np.asarray(cov_b, dtype=np.float64).reshape(-1, 3, 3))
    u = np.einsum('nij,nj->ni', info, d)
    return np.einsum('ni,ni->n', d, u)


def pair_cost(a: np.ndarray, b: np.ndarray, cov_a: np.ndarray, cov_b: np.ndarray, pose: Pose) -> float:
    """
    Custo de um único par (a, b) sob a pose T.

    Args:
        a: Ponto do frame (3,)
        b: Ponto do mapa correspondente (3,)
        cov_a: Covariância de a (3, 3)
        cov_b: Covariância de b (3, 3)
        pose: Transformação T

    Returns:
        F = dᵀ (C_B + R C_A Rᵀ)⁻¹ d, com d = b - T a
    """
    return float(pair_costs(a, b, cov_a, cov_b, pose)[0])


def objective(a: np.ndarray, b: np.ndarray, cov_a: np.ndarray, cov_b: np.ndarray, pose: Pose) -> float:
    """Σ F_i(T) sobre um conjunto fixo de pares."""
    return float(np.sum(pair_costs(a, b, cov_a, cov_b, pose)))


def _linearize(a: np.ndarray, b: np.ndarray, cov_a: np.ndarray, cov_b: np.ndarray,
               pose: Pose, with_hessian: bool = True):
    """
    Custo, gradiente exato e Hessiana de Gauss-Newton em ξ = 0.

    O gradiente inclui a dependência de (C_B + R C_A Rᵀ) na rotação;
    a Hessiana usa apenas o jacobiano do resíduo, J = [-I, [p]x].
    """
    p = pose.apply(a)
    d = b - p
    info, rotated = _information(pose.rotation_matrix, cov_a, cov_b)
    u = np.einsum('nij,nj->ni', info, d)
    cost = float(np.sum(np.einsum('ni,ni->n', d, u)))

    grad = np.empty(6)
    grad[:3] = -2.0 * np.sum(u, axis=0)
    s_u = np.einsum('nij,nj->ni', rotated, u)
    grad[3:] = 2.0 * np.sum(np.cross(u, p) + np.cross(u, s_u), axis=0)
    if not with_hessian:
        return cost, grad, None

    # ∂d/∂φ = [p]x
    skew = np.zeros((len(p), 3, 3))
    skew[:, 0, 1], skew[:, 0, 2] = -p[:, 2], p[:, 1]
    skew[:, 1, 0], skew[:, 1, 2] = p[:, 2], -p[:, 0]
    skew[:, 2, 0], skew[:, 2, 1] = -p[:, 1], p[:, 0]
    info_skew = info @ skew
    hessian = np.empty((6, 6))
    hessian[:3, :3] = np.sum(info, axis=0)
    hessian[:3, 3:] = -np.sum(info_skew, axis=0)
    hessian[3:, :3] = hessian[:3, 3:].T
    hessian[3:, 3:] = np.einsum('nki,nkj->ij', skew, info_skew)
    return cost, grad, 2.0 * hessian


def objective_gradient(a: np.ndarray, b: np.ndarray, cov_a: np.ndarray, cov_b: np.ndarray,
                       pose: Pose) -> Tuple[float, np.ndarray]:
    """
    Custo total e gradiente em relação ao twist ξ de T' = exp(ξ) T, em ξ = 0.

    Returns:
        (custo, gradiente (6,) com translação primeiro)
    """
    cost, grad, _ = _linearize(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64),
                               np.asarray(cov_a), np.asarray(cov_b), pose, with_hessian=False)
    return cost, grad


# ===================== ALINHAMENTO =====================

def apply_predicates(pairs: CorrespondenceSet, predicates: Sequence[Predicate]) -> CorrespondenceSet:
    """Remove os pares que falham algum predicado (avaliados por ordem)."""
    mask = np.ones(len(pairs), dtype=bool)
    for predicate in predicates:
        mask &= np.asarray(predicate(pairs), dtype=bool)
    return pairs.subset(mask)


def gicp_align(
    source: Union[SemanticPointCloud, np.ndarray],
    target: GicpTarget,
    init: Pose,
    config: Optional[GicpConfig] = None,
    predicates: Sequence[Predicate] = (),
    min_correspondences: int = MIN_CORRESPONDENCES,
    source_covariances: Optional[np.ndarray] = None,
) -> GicpResult:
    """
    Alinha a nuvem do frame ao mapa, a partir de `init`.

    Em cada iteração: procura de vizinhos à pose atual, filtragem pelos
    predicados, passo de Gauss-Newton amortecido. Um passo só é aceite se não
    aumentar o custo sobre os mesmos pares; caso contrário o amortecimento é
    multiplicado por 10 (até 5 vezes).

    Args:
        source: Nuvem do frame (A), no seu próprio referencial
        target: Pontos do mapa (B) com covariâncias
        init: Pose inicial
        config: Parâmetros da passagem
        predicates: Predicados sobre as correspondências
        min_correspondences: Mínimo de pares sobreviventes
        source_covariances: Covariâncias de A já calculadas (opcional)

    Returns:
        GicpResult com a pose otimizada

    Raises:
        TooFewCorrespondencesError: menos de `min_correspondences` pares (ou pontos)
        NonFiniteCostError: custo não finito
    """
    config = config or GicpConfig()
    points = source.positions if isinstance(source, SemanticPointCloud) else np.asarray(source, dtype=np.float64)
    points = points.reshape(-1, 3)
    if len(points) < min_correspondences or len(target) < min_correspondences:
        raise TooFewCorrespondencesError(min(len(points), len(target)), min_correspondences)
    if source_covariances is None:
        source_covariances = estimate_covariances(points, config.k_neighbors, config.epsilon_reg)

    pose = init
    damping = config.lambda0
    cost = float('nan')
    counts: List[int] = []
    history: List[Tuple[float, float]] = []
    converged = False
    iteration = 0

    for iteration in range(1, config.max_iterations + 1):
        pairs = find_correspondences(points, pose, target.index, config.max_corr_dist)
        pairs = apply_predicates(pairs, predicates)
        counts.append(len(pairs))
        if len(pairs) < min_correspondences:
            raise TooFewCorrespondencesError(len(pairs), min_correspondences)

        a = points[pairs.source_ids]
        b = target.positions[pairs.target_ids]
        cov_a = source_covariances[pairs.source_ids]
        cov_b = target.covariances[pairs.target_ids]

        cost, grad, hessian = _linearize(a, b, cov_a, cov_b, pose)
        if not np.isfinite(cost) or not np.all(np.isfinite(grad)):
            raise NonFiniteCostError(f"Custo não finito na iteração {iteration}")

        step, candidate, new_cost = None, None, None
        for _ in range(MAX_DAMPING_RETRIES + 1):
            try:
                step = np.linalg.solve(hessian + damping * np.eye(6), -grad)
            except np.linalg.LinAlgError:
                damping *= DAMPING_FACTOR
                continue
            candidate = pose_exp(step).compose(pose)
            new_cost = objective(a, b, cov_a, cov_b, candidate)
            if np.isfinite(new_cost) and new_cost <= cost:
                break
            damping *= DAMPING_FACTOR
            new_cost = None

        if new_cost is None:
            # nenhum passo reduz o custo: mínimo local à resolução do amortecimento
            logger.debug("[GICP] Iteração %d sem passo aceite (lambda=%.3g)", iteration, damping)
            converged = True
            break

        history.append((cost, new_cost))
        pose, cost = candidate, new_cost
        damping = damping / DAMPING_FACTOR
        if (np.linalg.norm(step[:3]) < config.translation_eps
                and np.linalg.norm(step[3:]) < config.rotation_eps):
            converged = True
            break

    logger.debug("[GICP] %d iterações, custo %.6g, pares %s, convergiu=%s",
                 iteration, cost, counts[-1] if counts else 0, converged)
    return GicpResult(pose, cost, iteration, counts, converged, history)
