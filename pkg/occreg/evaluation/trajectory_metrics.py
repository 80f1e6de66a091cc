"""
Métricas de trajetória: APE (erro absoluto de posição), RMSE e taxa de sucesso.

Uma execução conta como sucesso quando o RMSE do APE é estritamente inferior
a 5 m.
"""
import logging
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..geometry.pose import Pose
from ..utils.errors import EvaluationError

logger = logging.getLogger(__name__)

ALIGNMENTS = ('none', 'first', 'umeyama')
SUCCESS_THRESHOLD = 5.0  # metros

Trajectory = Sequence[Tuple[int, Pose]]


def align_umeyama(model: np.ndarray, data: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Transformação rígida (sem escala) de mínimos quadrados: model ≈ R·data + t.

    Args:
        model: Pontos de referência (N, 3)
        data: Pontos a alinhar (N, 3)

    Returns:
        (R (3, 3), t (3,))
    """
    mu_m = model.mean(axis=0)
    mu_d = data.mean(axis=0)
    correlation = (model - mu_m).T @ (data - mu_d) / len(model)
    U, _, Vt = np.linalg.svd(correlation)
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[2, 2] = -1.0
    R = U @ S @ Vt
    return R, mu_m - R @ mu_d


class ApeReport:
    """APE por frame, RMSE e classificação de sucesso."""

    def __init__(self, frame_indices: np.ndarray, errors: np.ndarray, rotation_errors: np.ndarray,
                 alignment: str, unmatched_estimate: int = 0, unmatched_ground_truth: int = 0):
        self.frame_indices = np.asarray(frame_indices, dtype=np.int64)
        self.errors = np.asarray(errors, dtype=np.float64)
        self.rotation_errors = np.asarray(rotation_errors, dtype=np.float64)
        self.alignment = alignment
        self.unmatched_estimate = unmatched_estimate
        self.unmatched_ground_truth = unmatched_ground_truth
        self.rmse = float(np.sqrt(np.mean(self.errors ** 2)))
        self.rotation_rmse = float(np.sqrt(np.mean(self.rotation_errors ** 2)))

    @property
    def success(self) -> bool:
        return self.rmse < SUCCESS_THRESHOLD

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alignment': self.alignment,
            'frames': len(self.errors),
            'unmatched_estimate': self.unmatched_estimate,
            'unmatched_ground_truth': self.unmatched_ground_truth,
            'ape_rmse_m': self.rmse,
            'ape_mean_m': float(np.mean(self.errors)),
            'ape_max_m': float(np.max(self.errors)),
            'rotation_rmse_deg': self.rotation_rmse,
            'success': self.success,
        }

    def __repr__(self):
        return (f"ApeReport(rmse={self.rmse:.4f} m, frames={len(self.errors)}, "
                f"alignment={self.alignment}, success={self.success})")


def _match(estimate: Trajectory, ground_truth: Trajectory):
    est = {int(i): p for i, p in estimate}
    gt = {int(i): p for i, p in ground_truth}
    common = sorted(set(est) & set(gt))
    if not common:
        raise EvaluationError("Sem índices de frame comuns entre estimativa e referência")
    unmatched_est = len(est) - len(common)
    unmatched_gt = len(gt) - len(common)
    if unmatched_est or unmatched_gt:
        logger.warning("[AVALIAÇÃO] %d frames só na estimativa, %d só na referência",
                       unmatched_est, unmatched_gt)
    return common, [est[i] for i in common], [gt[i] for i in common], unmatched_est, unmatched_gt


def ape(estimate: Trajectory, ground_truth: Trajectory, alignment: str = 'umeyama') -> ApeReport:
    """
    APE de translação sobre a interseção dos índices de frame.

    Args:
        estimate: Trajetória estimada [(índice, Pose)]
        ground_truth: Trajetória de referência
        alignment: 'none', 'first' (ancora a primeira pose) ou 'umeyama'
            (rígido, sem escala)

    Raises:
        EvaluationError: interseção vazia ou alinhamento desconhecido
    """
    if alignment not in ALIGNMENTS:
        raise EvaluationError(f"Alinhamento desconhecido '{alignment}'; use {'|'.join(ALIGNMENTS)}")
    indices, est_poses, gt_poses, unmatched_est, unmatched_gt = _match(estimate, ground_truth)

    if alignment == 'first':
        anchor = gt_poses[0].compose(est_poses[0].inverse())
    elif alignment == 'umeyama':
        est_t = np.array([p.translation for p in est_poses])
        gt_t = np.array([p.translation for p in gt_poses])
        if len(indices) < 3:
            # com menos de 3 posições a rotação fica indeterminada
            anchor = Pose(translation=gt_t.mean(axis=0) - est_t.mean(axis=0))
        else:
            R, t = align_umeyama(gt_t, est_t)
            anchor = Pose.from_rotation_matrix(R, t)
    else:
        anchor = Pose.identity()

    aligned = [anchor.compose(p) for p in est_poses]
    errors = np.array([np.linalg.norm(a.translation - g.translation) for a, g in zip(aligned, gt_poses)])
    rotation_errors = np.degrees([g.inverse().compose(a).rotation_angle() for a, g in zip(aligned, gt_poses)])
    report = ApeReport(indices, errors, rotation_errors, alignment, unmatched_est, unmatched_gt)
    logger.debug("[AVALIAÇÃO] %s", report)
    return report


def success_ratio(reports: List[ApeReport]) -> float:
    """Fração das execuções com RMSE do APE < 5 m."""
    if not reports:
        raise EvaluationError("Lista de relatórios vazia")
    return sum(1 for r in reports if r.success) / len(reports)
