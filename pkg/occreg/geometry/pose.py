"""
Poses rígidas SE(3) com rotação em quaternião unitário.

As atualizações do otimizador usam um twist de 6 componentes
(translação primeiro, depois rotação) e o mapa exponencial.
"""
from typing import Iterable, Optional

import numpy as np
from scipy.spatial.transform import Rotation

from ..utils.errors import DegeneratePoseError

# Abaixo deste ângulo as séries de Taylor substituem as fórmulas fechadas
_SMALL_ANGLE = 1e-6
# Margem para considerar o log degenerado junto de pi
_PI_MARGIN = 1e-6


def _quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Produto de Hamilton de dois quaterniões (w, x, y, z)."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def skew(v: np.ndarray) -> np.ndarray:
    """Matriz anti-simétrica [v]x tal que skew(v) @ w = v x w."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


class Pose:
    """
    Transformação rígida T = (R, t), imutável.

    A rotação é guardada como quaternião unitário (w, x, y, z) com w >= 0;
    a translação em metros.
    """

    __slots__ = ('_quat', '_translation', '_matrix')

    def __init__(self, rotation: Optional[Iterable[float]] = None,
                 translation: Optional[Iterable[float]] = None):
        """
        Args:
            rotation: Quaternião (w, x, y, z); normalizado à entrada
            translation: Vetor de translação em metros
        """
        quat = np.array([1.0, 0.0, 0.0, 0.0]) if rotation is None else np.asarray(rotation, dtype=np.float64)
        norm = np.linalg.norm(quat)
        if quat.shape != (4,) or not np.isfinite(norm) or norm == 0.0:
            raise ValueError(f"Quaternião inválido: {rotation}")
        quat = quat / norm
        if quat[0] < 0.0:
            quat = -quat

        trans = np.zeros(3) if translation is None else np.asarray(translation, dtype=np.float64)
        if trans.shape != (3,):
            raise ValueError(f"Translação inválida: {translation}")

        quat.setflags(write=False)
        trans = trans.copy()
        trans.setflags(write=False)
        self._quat = quat
        self._translation = trans
        self._matrix = None

    # ------------------------------------------------------------------ #
    @classmethod
    def identity(cls) -> 'Pose':
        return cls()

    @classmethod
    def from_rotation_matrix(cls, rotation: np.ndarray, translation: Iterable[float] = (0.0, 0.0, 0.0)) -> 'Pose':
        x, y, z, w = Rotation.from_matrix(np.asarray(rotation, dtype=np.float64)).as_quat()
        return cls((w, x, y, z), translation)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> 'Pose':
        """Constrói a partir de uma matriz homogénea 4x4."""
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls.from_rotation_matrix(matrix[:3, :3], matrix[:3, 3])

    @classmethod
    def from_rotvec(cls, rotvec: Iterable[float], translation: Iterable[float] = (0.0, 0.0, 0.0)) -> 'Pose':
        x, y, z, w = Rotation.from_rotvec(np.asarray(rotvec, dtype=np.float64)).as_quat()
        return cls((w, x, y, z), translation)

    @classmethod
    def from_yaw(cls, yaw: float, translation: Iterable[float] = (0.0, 0.0, 0.0)) -> 'Pose':
        """Rotação em torno de z (radianos) seguida de translação."""
        half = 0.5 * yaw
        return cls((np.cos(half), 0.0, 0.0, np.sin(half)), translation)

    # ------------------------------------------------------------------ #
    @property
    def quaternion(self) -> np.ndarray:
        return self._quat

    @property
    def translation(self) -> np.ndarray:
        return self._translation

    @property
    def rotation_matrix(self) -> np.ndarray:
        if self._matrix is None:
            w, x, y, z = self._quat
            matrix = Rotation.from_quat([x, y, z, w]).as_matrix()
            matrix.setflags(write=False)
            self._matrix = matrix
        return self._matrix

    def as_matrix(self) -> np.ndarray:
        """Matriz homogénea 4x4."""
        out = np.eye(4)
        out[:3, :3] = self.rotation_matrix
        out[:3, 3] = self._translation
        return out

    def rotation_angle(self) -> float:
        """Ângulo de rotação em radianos, em [0, pi]."""
        return float(2.0 * np.arctan2(np.linalg.norm(self._quat[1:]), self._quat[0]))

    def yaw(self) -> float:
        w, x, y, z = self._quat
        return float(np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z)))

    # ------------------------------------------------------------------ #
    def compose(self, other: 'Pose') -> 'Pose':
        """self ∘ other: aplica primeiro `other`, depois `self`."""
        quat = _quat_multiply(self._quat, other._quat)
        trans = self.rotation_matrix @ other._translation + self._translation
        return Pose(quat, trans)

    def inverse(self) -> 'Pose':
        w, x, y, z = self._quat
        inv = Pose((w, -x, -y, -z))
        return Pose(inv._quat, -(inv.rotation_matrix @ self._translation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """R·x + t para um ponto (3,) ou um conjunto (N, 3)."""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation_matrix.T + self._translation

    def allclose(self, other: 'Pose', atol: float = 1e-9) -> bool:
        return (np.allclose(self._quat, other._quat, atol=atol)
                and np.allclose(self._translation, other._translation, atol=atol))

    def to_dict(self):
        return {
            'rotation': self._quat.tolist(),
            'translation': self._translation.tolist(),
        }

    def __mul__(self, other: 'Pose') -> 'Pose':
        return self.compose(other)

    def __repr__(self):
        t = self._translation
        return (f"Pose(t=({t[0]:.4f}, {t[1]:.4f}, {t[2]:.4f}), "
                f"angle={np.degrees(self.rotation_angle()):.3f}°)")


# ===================== API FUNCIONAL =====================

def pose_compose(p: Pose, q: Pose) -> Pose:
    """Transformação que aplica q e depois p."""
    return p.compose(q)


def pose_apply(p: Pose, x: np.ndarray) -> np.ndarray:
    return p.apply(x)


def pose_exp(twist: Iterable[float]) -> Pose:
    """
    Mapa exponencial de se(3).

    Args:
        twist: (vx, vy, vz, wx, wy, wz), translação primeiro

    Returns:
        Pose correspondente
    """
    twist = np.asarray(twist, dtype=np.float64)
    rho, phi = twist[:3], twist[3:]
    theta = np.linalg.norm(phi)
    W = skew(phi)
    if theta < _SMALL_ANGLE:
        V = np.eye(3) + 0.5 * W + (1.0 / 6.0) * (W @ W)
    else:
        V = (np.eye(3)
             + ((1.0 - np.cos(theta)) / theta ** 2) * W
             + ((theta - np.sin(theta)) / theta ** 3) * (W @ W))
    return Pose.from_rotvec(phi, V @ rho)


def pose_log(p: Pose) -> np.ndarray:
    """
    Logaritmo de SE(3), inverso de pose_exp.

    Raises:
        DegeneratePoseError: ângulo de rotação junto de pi
    """
    theta = p.rotation_angle()
    if theta > np.pi - _PI_MARGIN:
        raise DegeneratePoseError(f"Log indefinido para ângulo {theta:.9f} rad (≈ pi)")

    w, x, y, z = p.quaternion
    phi = Rotation.from_quat([x, y, z, w]).as_rotvec()
    W = skew(phi)
    if theta < _SMALL_ANGLE:
        coeff = 1.0 / 12.0
    else:
        coeff = (1.0 - (theta * np.sin(theta)) / (2.0 * (1.0 - np.cos(theta)))) / theta ** 2
    V_inv = np.eye(3) - 0.5 * W + coeff * (W @ W)
    return np.concatenate([V_inv @ p.translation, phi])
