"""
Mundo sintético paramétrico e renderização de frames de ocupação.

Um voxel da janela do ego fica ocupado quando o seu centro cai dentro de uma
primitiva (ocupação amodal, sem oclusões). Quando várias primitivas contêm o
mesmo centro, ganha a de superfície mais próxima; empates seguem a ordem de
inserção no mundo.
"""
import logging
from typing import Iterable, List, Optional, Sequence

import numpy as np

from ..geometry.point_cloud import SemanticPointCloud
from ..geometry.pose import Pose
from ..geometry.voxel_grid import VoxelGridSpec
from ..utils.taxonomy import LabelTaxonomy

logger = logging.getLogger(__name__)

KINDS = ('box', 'plane', 'column')

# tolerância nas fronteiras das primitivas (metros)
_INSIDE_EPS = 1e-9


class Primitive:
    """
    Primitiva geométrica com rótulo (ou faixas de rótulos) e velocidade.

    - box: paralelepípedo com rotação `yaw` em torno de z; meias-arestas
      (ex, ey, ez), que podem ser infinitas
    - plane: box com ex = ey = inf (só ez conta)
    - column: cilindro vertical de raio ex e meia-altura ez
    """

    def __init__(self, kind: str, labels: Iterable[int], center: Iterable[float],
                 half_extents: Iterable[float], yaw: float = 0.0,
                 velocity: Iterable[float] = (0.0, 0.0, 0.0), stripe_width: float = 0.0):
        """
        Args:
            kind: 'box', 'plane' ou 'column'
            labels: Rótulo, ou lista de rótulos alternados em faixas ao longo de x local
            center: Centro em metros no instante 0
            half_extents: Meias-arestas (ex, ey, ez) em metros
            yaw: Rotação em torno de z (radianos)
            velocity: Velocidade em metros por frame
            stripe_width: Largura das faixas de rótulo (0 = rótulo único)
        """
        if kind not in KINDS:
            raise ValueError(f"Tipo de primitiva desconhecido: '{kind}'")
        labels = tuple(int(v) for v in (labels if isinstance(labels, Iterable) else [labels]))
        if not labels:
            raise ValueError("Primitiva sem rótulo")
        center = np.asarray(center, dtype=np.float64)
        half = np.asarray(half_extents, dtype=np.float64)
        velocity = np.asarray(velocity, dtype=np.float64)
        if kind == 'plane':
            half = np.array([np.inf, np.inf, half[2]])
        if center.shape != (3,) or half.shape != (3,) or velocity.shape != (3,):
            raise ValueError("center, half_extents e velocity têm de ter 3 componentes")
        if not (np.all(np.isfinite(center)) and np.all(np.isfinite(velocity)) and np.isfinite(yaw)):
            raise ValueError("Primitiva com centro, velocidade ou yaw não finitos")
        if np.any(np.isnan(half)) or np.any(half <= 0):
            raise ValueError(f"Meias-arestas têm de ser positivas: {half}")
        if kind == 'column' and not np.isfinite(half[0]):
            raise ValueError("Coluna com raio infinito")
        if stripe_width < 0 or (len(labels) > 1 and not stripe_width > 0):
            raise ValueError("Faixas de rótulos precisam de stripe_width > 0")

        self.kind = kind
        self.labels = labels
        self.center = center
        self.half_extents = half
        self.yaw = float(yaw)
        self.velocity = velocity
        self.stripe_width = float(stripe_width)

    @property
    def label(self) -> int:
        return self.labels[0]

    @property
    def is_moving(self) -> bool:
        return bool(np.any(self.velocity != 0.0))

    def center_at(self, time: float) -> np.ndarray:
        return self.center + self.velocity * time

    def _local(self, points: np.ndarray, time: float) -> np.ndarray:
        offset = points - self.center_at(time)
        if self.yaw == 0.0:
            return offset
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        x = c * offset[:, 0] + s * offset[:, 1]
        y = -s * offset[:, 0] + c * offset[:, 1]
        return np.stack([x, y, offset[:, 2]], axis=1)

    def depth(self, points: np.ndarray, time: float = 0.0) -> np.ndarray:
        """
        Distância de cada ponto à superfície, medida por dentro.

        Returns:
            (N,) com a profundidade para pontos interiores e NaN para exteriores
        """
        local = self._local(points, time)
        hx, hy, hz = self.half_extents
        if self.kind == 'column':
            depths = np.stack([hx - np.hypot(local[:, 0], local[:, 1]), hz - np.abs(local[:, 2])], axis=1)
        else:
            depths = self.half_extents - np.abs(local)
        depth = depths.min(axis=1)
        return np.where(depth >= -_INSIDE_EPS, depth, np.nan)

    def labels_at(self, points: np.ndarray, time: float = 0.0) -> np.ndarray:
        """Rótulo de cada ponto (com faixas ao longo de x local)."""
        if len(self.labels) == 1:
            return np.full(len(points), self.label, dtype=np.uint8)
        local = self._local(points, time)
        stripe = np.floor(local[:, 0] / self.stripe_width + _INSIDE_EPS).astype(np.int64)
        return np.asarray(self.labels, dtype=np.uint8)[np.mod(stripe, len(self.labels))]

    def bounding_radius(self) -> float:
        """Raio horizontal que contém a primitiva (inf se ilimitada)."""
        hx, hy, _ = self.half_extents
        return float(hx if self.kind == 'column' else np.hypot(hx, hy))

    def to_row(self) -> dict:
        cx, cy, cz = self.center
        ex, ey, ez = self.half_extents
        vx, vy, vz = self.velocity
        return {
            'kind': self.kind, 'label': ','.join(str(v) for v in self.labels),
            'x': cx, 'y': cy, 'z': cz, 'yaw': self.yaw, 'ex': ex, 'ey': ey, 'ez': ez,
            'vx': vx, 'vy': vy, 'vz': vz, 'stripe': self.stripe_width,
        }

    def __repr__(self):
        return (f"Primitive({self.kind}, labels={self.labels}, center={tuple(self.center)}, "
                f"half={tuple(self.half_extents)}, v={tuple(self.velocity)})")


class WorldModel:
    """Cena estática mais atores (caixas de classes movíveis, paradas ou em movimento)."""

    def __init__(self, primitives: Optional[Sequence[Primitive]] = None,
                 actors: Optional[Sequence[Primitive]] = None, name: str = 'custom'):
        self.name = name
        self.primitives: List[Primitive] = list(primitives or [])
        self.actors: List[Primitive] = list(actors or [])

    # ===================== CONSTRUÇÃO =====================

    def add(self, primitive: Primitive) -> 'WorldModel':
        self.primitives.append(primitive)
        return self

    def add_actor(self, actor: Primitive) -> 'WorldModel':
        if actor.kind != 'box':
            raise ValueError("Os atores são caixas")
        self.actors.append(actor)
        return self

    def add_box(self, label: int, center, half_extents, yaw: float = 0.0) -> 'WorldModel':
        return self.add(Primitive('box', [label], center, half_extents, yaw))

    def add_plane(self, label, z: float = 0.0, half_thickness: float = 0.2,
                  stripe_width: float = 0.0) -> 'WorldModel':
        labels = label if isinstance(label, (list, tuple)) else [label]
        return self.add(Primitive('plane', labels, (0.0, 0.0, z), (np.inf, np.inf, half_thickness),
                                  stripe_width=stripe_width))

    def add_column(self, label: int, x: float, y: float, radius: float, z_min: float, z_max: float) -> 'WorldModel':
        half = 0.5 * (z_max - z_min)
        return self.add(Primitive('column', [label], (x, y, z_min + half), (radius, radius, half)))

    # ===================== CONSULTAS =====================

    @property
    def all_primitives(self) -> List[Primitive]:
        return self.primitives + self.actors

    def is_empty(self) -> bool:
        return not self.primitives and not self.actors

    def validate(self, taxonomy: LabelTaxonomy) -> Optional[str]:
        """
        Verifica rótulos contra a taxonomia.

        Returns:
            None se válido; caso contrário a descrição do problema
        """
        for prim in self.all_primitives:
            if not np.all(taxonomy.is_valid(np.asarray(prim.labels))):
                return f"rótulo fora da taxonomia em {prim}"
        for actor in self.actors:
            if not np.all(taxonomy.is_movable(np.asarray(actor.labels))):
                return f"ator com rótulo não movível: {actor}"
        return None

    def primitives_near(self, center: np.ndarray, reach: float, time: float = 0.0) -> List[Primitive]:
        """Primitivas cuja projeção horizontal pode intersetar o disco (center, reach)."""
        center = np.asarray(center, dtype=np.float64)[:2]
        return [p for p in self.all_primitives
                if np.linalg.norm(p.center_at(time)[:2] - center) <= p.bounding_radius() + reach]

    def label_points(self, points: np.ndarray, time: float = 0.0,
                     primitives: Optional[Sequence[Primitive]] = None) -> np.ndarray:
        """
        Rótulo de cada ponto do mundo no instante `time`.

        Returns:
            (N,) int16 com o rótulo, ou -1 para pontos livres
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        out = np.full(len(points), -1, dtype=np.int16)
        best = np.full(len(points), np.inf)
        for prim in (self.all_primitives if primitives is None else primitives):
            candidates = np.arange(len(points))
            radius = prim.bounding_radius()
            if np.isfinite(radius):
                offset = points[:, :2] - prim.center_at(time)[:2]
                candidates = np.flatnonzero(np.einsum('ij,ij->i', offset, offset) <= (radius + 1e-6) ** 2)
                if len(candidates) == 0:
                    continue
            depth = prim.depth(points[candidates], time)
            # `<` estrito: em empate fica a primitiva inserida primeiro
            wins = depth < best[candidates]
            if not np.any(wins):
                continue
            ids = candidates[wins]
            best[ids] = depth[wins]
            out[ids] = prim.labels_at(points[ids], time)
        return out

    def __repr__(self):
        return f"WorldModel({self.name}, primitives={len(self.primitives)}, actors={len(self.actors)})"


def render_frame(world: WorldModel, ego_pose: Pose, spec: VoxelGridSpec, actor_time: int,
                 taxonomy_id: str = 'occ3d-nuscenes') -> SemanticPointCloud:
    """
    Ocupação semântica da janela do ego.

    Args:
        world: Mundo sintético
        ego_pose: Pose ego -> mundo
        spec: Grelha da janela do ego
        actor_time: Instante dos atores (índice do frame)

    Returns:
        Nuvem com os centros dos voxels ocupados, no referencial do ego
    """
    if world.is_empty():
        return SemanticPointCloud.empty(actor_time, taxonomy_id)
    centers = spec.all_centers()
    world_centers = ego_pose.apply(centers)
    # raio horizontal da janela, no referencial do mundo
    reach = float(np.max(np.linalg.norm(world_centers[:, :2] - ego_pose.translation[:2], axis=1)))
    nearby = world.primitives_near(ego_pose.translation, reach, actor_time)
    labels = world.label_points(world_centers, actor_time, nearby)
    occupied = labels >= 0
    cloud = SemanticPointCloud(centers[occupied], labels[occupied].astype(np.uint8), actor_time, taxonomy_id)
    logger.debug("[SINTÉTICO] Frame %d: %d voxels ocupados", actor_time, len(cloud))
    return cloud
