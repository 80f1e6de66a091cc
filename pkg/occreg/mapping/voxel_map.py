"""
Mapa semântico global com estatísticas de persistência por voxel.

Cada voxel guarda t0 (primeiro frame em que foi ocupado) e f (número de
frames em que foi ocupado). O p-Index f / (t - t0 + 1) mede a persistência:
voxels transitórios, tipicamente erros de previsão da rede, ficam com
p-Index baixo e são excluídos do registo e do downsampling.
"""
import logging
from pathlib import Path
from typing import Dict, Iterator, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..geometry.point_cloud import SemanticPointCloud
from ..geometry.pose import Pose
from ..geometry.spatial_index import SpatialIndex
from ..geometry.voxel_grid import world_voxel_keys
from ..registration.covariance import MIN_POINTS, estimate_covariances, neighborhood_covariances
from ..utils.occ_io import export_map

logger = logging.getLogger(__name__)

# 21 bits por eixo: chaves em [-2^20, 2^20)
_KEY_BITS = 21
_KEY_OFFSET = 1 << (_KEY_BITS - 1)
_INITIAL_CAPACITY = 1024
# deslocamento (em arestas de voxel) que obriga a recalcular a covariância em cache
_COV_DRIFT = 0.25


def pack_keys(keys: np.ndarray) -> np.ndarray:
    """Codifica chaves (N, 3) com sinal num único int64."""
    keys = np.asarray(keys, dtype=np.int64).reshape(-1, 3) + _KEY_OFFSET
    if len(keys) and (keys.min() < 0 or keys.max() >= (1 << _KEY_BITS)):
        raise ValueError("Chave de voxel fora do alcance suportado")
    return (keys[:, 0] << (2 * _KEY_BITS)) | (keys[:, 1] << _KEY_BITS) | keys[:, 2]


def p_index_values(f: np.ndarray, t0: np.ndarray, t: int) -> np.ndarray:
    """p-Index vetorizado: f / (t - t0 + 1)."""
    return np.asarray(f, dtype=np.float64) / (t - np.asarray(t0, dtype=np.float64) + 1.0)


class MapVoxel:
    """Cópia dos dados de um voxel do mapa."""

    __slots__ = ('key', 'position', 'label', 't0', 'f')

    def __init__(self, key: Tuple[int, int, int], position: np.ndarray, label: int, t0: int, f: int):
        self.key = tuple(int(k) for k in key)
        self.position = np.asarray(position, dtype=np.float64)
        self.label = int(label)
        self.t0 = int(t0)
        self.f = int(f)

    def p_index(self, t: int) -> float:
        return p_index(self, t)

    def to_dict(self):
        return {'key': list(self.key), 'position': self.position.tolist(),
                'label': self.label, 't0': self.t0, 'f': self.f}

    def __repr__(self):
        return f"MapVoxel(key={self.key}, label={self.label}, t0={self.t0}, f={self.f})"


def p_index(voxel: MapVoxel, t: int) -> float:
    """
    Persistência do voxel no instante t.

    O denominador (t - t0 + 1) evita 0/0 em t = t0: um voxel novo vale 1.0.

    Raises:
        ValueError: t < t0
    """
    if t < voxel.t0:
        raise ValueError(f"p-Index pedido em t={t} < t0={voxel.t0}")
    return voxel.f / (t - voxel.t0 + 1.0)


class MergeReport:
    """Resumo de uma fusão de frame."""

    def __init__(self, frame_index: int, observed: int, inserted: int, updated: int, relabeled: int, total: int):
        self.frame_index = frame_index
        self.observed = observed
        self.inserted = inserted
        self.updated = updated
        self.relabeled = relabeled
        self.total = total

    def to_dict(self):
        return {'frame_index': self.frame_index, 'observed': self.observed, 'inserted': self.inserted,
                'updated': self.updated, 'relabeled': self.relabeled, 'total': self.total}

    def __repr__(self):
        return (f"MergeReport(t={self.frame_index}, +{self.inserted} novos, "
                f"{self.updated} atualizados, total={self.total})")


class MapSnapshot:
    """
    Cópia imutável de parte do mapa, entregue ao registo.

    `p_index` é avaliado no instante `t` da extração; `rows` são as linhas
    de origem no mapa, válidas até à fusão seguinte.
    """

    def __init__(self, positions: np.ndarray, labels: np.ndarray, keys: np.ndarray,
                 p_index: np.ndarray, t: int, rows: Optional[np.ndarray] = None):
        self.positions = np.array(positions, dtype=np.float64).reshape(-1, 3)
        self.labels = np.array(labels, dtype=np.uint8)
        self.keys = np.array(keys, dtype=np.int64).reshape(-1, 3)
        self.p_index = np.array(p_index, dtype=np.float64)
        self.t = int(t)
        self.rows = (np.arange(len(self.labels), dtype=np.int64) if rows is None
                     else np.array(rows, dtype=np.int64))
        for array in (self.positions, self.labels, self.keys, self.p_index, self.rows):
            array.setflags(write=False)

    def __len__(self):
        return len(self.labels)

    def subset(self, mask: np.ndarray) -> 'MapSnapshot':
        return MapSnapshot(self.positions[mask], self.labels[mask], self.keys[mask], self.p_index[mask],
                           self.t, self.rows[mask])

    def __repr__(self):
        return f"MapSnapshot(t={self.t}, points={len(self)})"


class CovarianceCache:
    """
    Covariâncias GICP dos voxels do mapa, mantidas entre frames.

    Em cada atualização só são recalculadas as linhas novas, as que se
    deslocaram mais de _COV_DRIFT arestas desde o último cálculo e os k
    vizinhos de umas e outras. As vizinhanças são procuradas no mapa inteiro.
    """

    def __init__(self, k: int, epsilon_reg: float, voxel_size: float):
        self.k = int(k)
        self.epsilon_reg = float(epsilon_reg)
        self.tolerance = _COV_DRIFT * float(voxel_size)
        self.covariances = np.empty((0, 3, 3))
        self.anchors = np.empty((0, 3))
        self.refreshed = 0

    def refresh(self, positions: np.ndarray) -> np.ndarray:
        """Atualiza e devolve as covariâncias (N, 3, 3) das posições atuais."""
        n = len(positions)
        known = min(len(self.anchors), n)
        drift = np.linalg.norm(positions[:known] - self.anchors[:known], axis=1)
        stale = np.concatenate([np.flatnonzero(drift > self.tolerance), np.arange(known, n)])
        if len(stale) == 0 and known == len(self.anchors):
            self.refreshed = 0
            return self.covariances

        covariances = np.empty((n, 3, 3))
        covariances[:known] = self.covariances[:known]
        if n < MIN_POINTS:
            stale = np.arange(n)
            covariances = estimate_covariances(positions, self.k, self.epsilon_reg) if n else covariances
        elif len(stale):
            index = SpatialIndex(positions)
            _, ids = index.knn(positions[stale], self.k)
            stale = np.union1d(stale, ids.ravel())
            covariances[stale] = neighborhood_covariances(positions, stale, index, self.k, self.epsilon_reg)
        anchors = np.empty((n, 3))
        anchors[:known] = self.anchors[:known]
        anchors[stale] = positions[stale]
        self.covariances, self.anchors = covariances, anchors
        self.refreshed = len(stale)
        return covariances

    def to_arrays(self, prefix: str) -> Dict[str, np.ndarray]:
        return {f'{prefix}params': np.array([self.k, self.epsilon_reg, self.tolerance]),
                f'{prefix}covariances': self.covariances.copy(),
                f'{prefix}anchors': self.anchors.copy()}

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray], prefix: str, voxel_size: float) -> 'CovarianceCache':
        k, epsilon_reg, _ = arrays[f'{prefix}params']
        cache = cls(int(k), float(epsilon_reg), voxel_size)
        cache.covariances = np.array(arrays[f'{prefix}covariances'], dtype=np.float64).reshape(-1, 3, 3)
        cache.anchors = np.array(arrays[f'{prefix}anchors'], dtype=np.float64).reshape(-1, 3)
        return cache

    def __repr__(self):
        return f"CovarianceCache(k={self.k}, rows={len(self.anchors)}, refreshed={self.refreshed})"


class GlobalMap:
    """
    Mapa global indexado por chaves inteiras da grelha do mundo.

    Escritor único; as leituras (extract_persistent, local_crop, snapshot)
    devolvem cópias.
    """

    def __init__(self, voxel_size: float = 0.4, num_labels: int = 17):
        """
        Args:
            voxel_size: Aresta dos voxels do mapa (metros)
            num_labels: Número de rótulos possíveis (tamanho da tabela de votos)
        """
        if not voxel_size > 0:
            raise ValueError(f"voxel_size tem de ser positivo: {voxel_size}")
        self.voxel_size = float(voxel_size)
        self.num_labels = int(num_labels)
        self.t = -1
        self._size = 0
        self._allocate(_INITIAL_CAPACITY)
        self._lookup: Optional[pd.Index] = None
        self._cov_caches: Dict[Tuple[int, float], CovarianceCache] = {}

    # ------------------------------------------------------------------ #
    def _allocate(self, capacity: int):
        self._keys = np.zeros((capacity, 3), dtype=np.int64)
        self._positions = np.zeros((capacity, 3))
        self._labels = np.zeros(capacity, dtype=np.uint8)
        self._t0 = np.zeros(capacity, dtype=np.int64)
        self._f = np.zeros(capacity, dtype=np.int64)
        self._weights = np.zeros(capacity)
        self._votes = np.zeros((capacity, self.num_labels), dtype=np.int32)

    def _reserve(self, needed: int):
        capacity = len(self._labels)
        if needed <= capacity:
            return
        while capacity < needed:
            capacity *= 2
        old = (self._keys, self._positions, self._labels, self._t0, self._f, self._weights, self._votes)
        self._allocate(capacity)
        n = self._size
        for new, previous in zip((self._keys, self._positions, self._labels, self._t0,
                                  self._f, self._weights, self._votes), old):
            new[:n] = previous[:n]

    def _index(self) -> pd.Index:
        if self._lookup is None:
            self._lookup = pd.Index(pack_keys(self._keys[:self._size]))
        return self._lookup

    def _find(self, keys: np.ndarray) -> np.ndarray:
        """Posição interna de cada chave, -1 se ausente."""
        if self._size == 0:
            return np.full(len(keys), -1, dtype=np.int64)
        return np.asarray(self._index().get_indexer(pack_keys(keys)), dtype=np.int64)

    # ------------------------------------------------------------------ #
    def __len__(self):
        return self._size

    def is_empty(self) -> bool:
        return self._size == 0

    @property
    def keys(self) -> np.ndarray:
        return self._keys[:self._size].copy()

    @property
    def positions(self) -> np.ndarray:
        return self._positions[:self._size].copy()

    @property
    def labels(self) -> np.ndarray:
        return self._labels[:self._size].copy()

    @property
    def t0(self) -> np.ndarray:
        return self._t0[:self._size].copy()

    @property
    def f(self) -> np.ndarray:
        return self._f[:self._size].copy()

    def voxel(self, key) -> Optional[MapVoxel]:
        row = self._find(np.asarray(key, dtype=np.int64).reshape(1, 3))[0]
        if row < 0:
            return None
        return MapVoxel(self._keys[row], self._positions[row], self._labels[row], self._t0[row], self._f[row])

    def voxels(self) -> Iterator[MapVoxel]:
        for row in range(self._size):
            yield MapVoxel(self._keys[row], self._positions[row], self._labels[row], self._t0[row], self._f[row])

    def covariances(self, k: int = 20, epsilon_reg: float = 1e-3) -> np.ndarray:
        """
        Covariâncias GICP de todos os voxels (N, 3, 3), por linha interna.

        Mantidas em cache por (k, epsilon_reg) entre fusões; o downsampling
        descarta a cache.
        """
        key = (int(k), float(epsilon_reg))
        cache = self._cov_caches.get(key)
        if cache is None:
            cache = self._cov_caches[key] = CovarianceCache(k, epsilon_reg, self.voxel_size)
        covariances = cache.refresh(self._positions[:self._size])
        logger.debug("[MAPA] %s", cache)
        return covariances

    def covariance_cache(self, k: int = 20, epsilon_reg: float = 1e-3) -> Optional[CovarianceCache]:
        return self._cov_caches.get((int(k), float(epsilon_reg)))

    def p_index(self, t: Optional[int] = None) -> np.ndarray:
        """p-Index de todos os voxels em t (por omissão o último frame fundido)."""
        t = self.t if t is None else t
        if self._size and t < self._t0[:self._size].max():
            raise ValueError(f"p-Index pedido em t={t}, anterior ao t0 de algum voxel")
        return p_index_values(self._f[:self._size], self._t0[:self._size], t)

    # ===================== FUSÃO =====================

    def merge_frame(self, cloud: SemanticPointCloud, pose: Pose, t: int) -> MergeReport:
        """
        Funde um frame no mapa, na pose refinada do frame t.

        Pontos do mesmo frame que caem no mesmo voxel do mundo contam como uma
        única observação (posição média, rótulo do primeiro). A posição de um
        voxel existente é uma média pesada pelo p-Index de cada observação; o
        rótulo é o mais votado, com empates a favor do rótulo atual.
        """
        if self._size and t <= self.t:
            raise ValueError(f"Frames têm de ser fundidos por ordem: t={t} após t={self.t}")
        labels = np.asarray(cloud.labels, dtype=np.int64)
        if len(labels) and labels.max() >= self.num_labels:
            raise ValueError(f"Rótulo {labels.max()} fora da tabela de {self.num_labels} rótulos")

        world = pose.apply(cloud.positions) if len(cloud) else np.empty((0, 3))
        keys = world_voxel_keys(world, self.voxel_size)
        codes = pack_keys(keys)
        unique_codes, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        m = len(unique_codes)
        counts = np.bincount(inverse, minlength=m).astype(np.float64)
        obs_pos = np.stack([np.bincount(inverse, weights=world[:, axis], minlength=m) for axis in range(3)],
                           axis=1) / counts[:, None] if m else np.empty((0, 3))
        obs_keys = keys[first]
        obs_labels = labels[first]

        rows = self._find(obs_keys)
        known = rows >= 0
        new = ~known

        # voxels existentes
        upd = rows[known]
        relabeled = 0
        if len(upd):
            self._f[upd] += 1
            weight = p_index_values(self._f[upd], self._t0[upd], t)
            total = self._weights[upd] + weight
            self._positions[upd] = (self._positions[upd] * self._weights[upd, None]
                                    + obs_pos[known] * weight[:, None]) / total[:, None]
            self._weights[upd] = total
            self._votes[upd, obs_labels[known]] += 1
            votes = self._votes[upd]
            incumbent = self._labels[upd].astype(np.int64)
            best = votes.max(axis=1)
            keep = votes[np.arange(len(upd)), incumbent] == best
            winner = np.where(keep, incumbent, votes.argmax(axis=1))
            relabeled = int(np.sum(winner != incumbent))
            self._labels[upd] = winner

        # voxels novos
        n_new = int(np.sum(new))
        if n_new:
            self._reserve(self._size + n_new)
            sl = slice(self._size, self._size + n_new)
            self._keys[sl] = obs_keys[new]
            self._positions[sl] = obs_pos[new]
            self._labels[sl] = obs_labels[new]
            self._t0[sl] = t
            self._f[sl] = 1
            self._weights[sl] = 1.0
            self._votes[sl] = 0
            self._votes[np.arange(sl.start, sl.stop), obs_labels[new]] = 1
            self._size += n_new
            self._lookup = None

        self.t = t
        report = MergeReport(t, m, n_new, int(np.sum(known)), relabeled, self._size)
        logger.debug("[MAPA] %s", report)
        return report

    # ===================== LEITURAS =====================

    def persistent_mask(self, t: Optional[int] = None, threshold: float = 0.5) -> np.ndarray:
        return self.p_index(t) > threshold

    def extract_persistent(self, t: Optional[int] = None, threshold: float = 0.5) -> SemanticPointCloud:
        """Voxels com p-Index(t) > threshold, como nuvem (posição, rótulo)."""
        mask = self.persistent_mask(t, threshold)
        t = self.t if t is None else t
        return SemanticPointCloud(self._positions[:self._size][mask], self._labels[:self._size][mask], max(t, 0))

    def snapshot(self, center: Optional[np.ndarray] = None, radius: Optional[float] = None,
                 t: Optional[int] = None, threshold: Optional[float] = None) -> MapSnapshot:
        """
        Cópia dos voxels dentro do cubo de meia-aresta `radius` em torno de
        `center`; com `threshold`, apenas os persistentes.
        """
        t = self.t if t is None else t
        n = self._size
        values = self.p_index(t) if n else np.empty(0)
        mask = np.ones(n, dtype=bool)
        if threshold is not None:
            mask &= values > threshold
        if center is not None and radius is not None:
            mask &= self.crop_mask(center, radius)
        return MapSnapshot(self._positions[:n][mask], self._labels[:n][mask], self._keys[:n][mask],
                           values[mask], t, np.flatnonzero(mask))

    def crop_mask(self, center: np.ndarray, radius: float) -> np.ndarray:
        if not radius > 0:
            raise ValueError(f"radius tem de ser positivo: {radius}")
        offset = np.abs(self._positions[:self._size] - np.asarray(center, dtype=np.float64))
        return np.all(offset <= radius, axis=1)

    def persistent_at(self, points: np.ndarray, t: Optional[int] = None, threshold: float = 0.5) -> np.ndarray:
        """Para cada ponto: o seu voxel existe e tem p-Index(t) > threshold."""
        rows = self._find(world_voxel_keys(points, self.voxel_size))
        out = np.zeros(len(rows), dtype=bool)
        hit = rows >= 0
        out[hit] = self.p_index(t)[rows[hit]] > threshold
        return out

    def local_crop(self, center: np.ndarray, radius: float) -> MapSnapshot:
        """Voxels cuja posição está no cubo de meia-aresta `radius` em torno de `center`."""
        return self.snapshot(center, radius)

    # ===================== DOWNSAMPLING =====================

    def downsample_persistent(self, t: Optional[int] = None, threshold: float = 0.5) -> Dict[str, int]:
        """
        Funde os voxels persistentes por células de aresta 2·voxel_size.

        Por célula: posição média pesada pelo p-Index, rótulo com maior soma de
        p-Index, t0 mínimo e f máximo. Voxels transitórios são removidos.
        """
        t = self.t if t is None else t
        n = self._size
        before = n
        if n == 0:
            return {'before': 0, 'after': 0, 'removed_transient': 0}

        weights = self.p_index(t)
        keep = weights > threshold
        removed = int(np.sum(~keep))
        positions = self._positions[:n][keep]
        weights = weights[keep]
        coarse = world_voxel_keys(positions, 2.0 * self.voxel_size)
        _, group = np.unique(pack_keys(coarse), return_inverse=True)
        group = group.reshape(-1)
        g = int(group.max()) + 1 if len(group) else 0

        wsum = np.bincount(group, weights=weights, minlength=g)
        merged_pos = np.stack([np.bincount(group, weights=weights * positions[:, axis], minlength=g)
                               for axis in range(3)], axis=1) / wsum[:, None] if g else np.empty((0, 3))
        label_mass = np.zeros((g, self.num_labels))
        np.add.at(label_mass, (group, self._labels[:n][keep].astype(np.int64)), weights)

        frame = pd.DataFrame({'group': group, 't0': self._t0[:n][keep], 'f': self._f[:n][keep],
                              'w': self._weights[:n][keep]})
        agg = frame.groupby('group').agg(t0=('t0', 'min'), f=('f', 'max'), w=('w', 'sum'))
        votes = np.zeros((g, self.num_labels), dtype=np.int32)
        np.add.at(votes, group, self._votes[:n][keep])

        self._size = 0
        self._reserve(g)
        self._keys[:g] = world_voxel_keys(merged_pos, self.voxel_size)
        self._positions[:g] = merged_pos
        self._labels[:g] = label_mass.argmax(axis=1)
        self._t0[:g] = agg['t0'].to_numpy()
        self._f[:g] = agg['f'].to_numpy()
        self._weights[:g] = agg['w'].to_numpy()
        self._votes[:g] = votes
        self._size = g
        self._lookup = None
        self._cov_caches.clear()

        logger.info("[MAPA] Downsampling em t=%d: %d -> %d voxels (%d transitórios removidos)",
                    t, before, g, removed)
        return {'before': before, 'after': g, 'removed_transient': removed}

    # ===================== PERSISTÊNCIA =====================

    def export(self, path: Union[str, Path]):
        """Exporta o mapa como frame .socc (frame_index = último t) em coordenadas do mundo."""
        export_map(path, self._positions[:self._size], self._labels[:self._size],
                   self.voxel_size, max(self.t, 0))

    def to_arrays(self, prefix: str = 'map_') -> Dict[str, np.ndarray]:
        n = self._size
        arrays = {
            f'{prefix}keys': self._keys[:n].copy(),
            f'{prefix}positions': self._positions[:n].copy(),
            f'{prefix}labels': self._labels[:n].copy(),
            f'{prefix}t0': self._t0[:n].copy(),
            f'{prefix}f': self._f[:n].copy(),
            f'{prefix}weights': self._weights[:n].copy(),
            f'{prefix}votes': self._votes[:n].copy(),
            f'{prefix}meta': np.array([self.voxel_size, self.num_labels, self.t], dtype=np.float64),
        }
        for i, cache in enumerate(self._cov_caches.values()):
            arrays.update(cache.to_arrays(f'{prefix}cov{i}_'))
        return arrays

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray], prefix: str = 'map_') -> 'GlobalMap':
        voxel_size, num_labels, t = arrays[f'{prefix}meta']
        gmap = cls(float(voxel_size), int(num_labels))
        n = len(arrays[f'{prefix}labels'])
        gmap._reserve(max(n, 1))
        gmap._keys[:n] = arrays[f'{prefix}keys']
        gmap._positions[:n] = arrays[f'{prefix}positions']
        gmap._labels[:n] = arrays[f'{prefix}labels']
        gmap._t0[:n] = arrays[f'{prefix}t0']
        gmap._f[:n] = arrays[f'{prefix}f']
        gmap._weights[:n] = arrays[f'{prefix}weights']
        gmap._votes[:n] = arrays[f'{prefix}votes']
        gmap._size = n
        gmap.t = int(t)
        i = 0
        while f'{prefix}cov{i}_params' in arrays:
            cache = CovarianceCache.from_arrays(arrays, f'{prefix}cov{i}_', gmap.voxel_size)
            gmap._cov_caches[(cache.k, cache.epsilon_reg)] = cache
            i += 1
        return gmap

    def __repr__(self):
        return f"GlobalMap(voxels={self._size}, voxel_size={self.voxel_size}, t={self.t})"


# ===================== API FUNCIONAL =====================

def merge_frame(gmap: GlobalMap, cloud: SemanticPointCloud, pose: Pose, t: int) -> MergeReport:
    return gmap.merge_frame(cloud, pose, t)


def extract_persistent(gmap: GlobalMap, t: int, threshold: float = 0.5) -> SemanticPointCloud:
    return gmap.extract_persistent(t, threshold)


def downsample_persistent(gmap: GlobalMap, t: int, threshold: float = 0.5) -> GlobalMap:
    gmap.downsample_persistent(t, threshold)
    return gmap


def local_crop(gmap: GlobalMap, center: np.ndarray, radius: float) -> MapSnapshot:
    return gmap.local_crop(center, radius)
