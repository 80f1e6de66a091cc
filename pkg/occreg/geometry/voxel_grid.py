"""
Geometria da grelha de voxels e conversões ponto <-> voxel.

Intervalos semiabertos: o eixo i cobre [min_bound, min_bound + dims·voxel_size).
"""
from typing import Iterable, Optional, Tuple

import numpy as np

from ..utils.errors import VoxelRangeError

# Tolerância (em unidades de voxel) contra erros de arredondamento no floor,
# p.ex. (0.2 + 1.0) / 0.4 = 2.9999999999999996
_FLOOR_EPS = 1e-9


def world_voxel_keys(points: np.ndarray, voxel_size: float) -> np.ndarray:
    """Chaves inteiras da grelha global (origem em 0, extensão ilimitada)."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return np.floor(points / voxel_size + _FLOOR_EPS).astype(np.int64)


class VoxelGridSpec:
    """Especificação de uma grelha de ocupação local (janela do ego)."""

    __slots__ = ('voxel_size', 'min_bound', 'dims')

    def __init__(self, voxel_size: float = 0.4,
                 min_bound: Iterable[float] = (-40.0, -40.0, -1.0),
                 dims: Iterable[int] = (200, 200, 16)):
        """
        Args:
            voxel_size: Aresta do voxel em metros
            min_bound: Canto inferior da grelha em metros
            dims: Número de voxels por eixo
        """
        min_bound = np.asarray(min_bound, dtype=np.float64)
        dims = np.asarray(dims, dtype=np.int64)
        if not voxel_size > 0:
            raise ValueError(f"voxel_size tem de ser positivo: {voxel_size}")
        if min_bound.shape != (3,) or dims.shape != (3,) or np.any(dims < 1):
            raise ValueError(f"Grelha inválida: min_bound={min_bound}, dims={dims}")
        min_bound.setflags(write=False)
        dims.setflags(write=False)
        self.voxel_size = float(voxel_size)
        self.min_bound = min_bound
        self.dims = dims

    @classmethod
    def default(cls) -> 'VoxelGridSpec':
        """Grelha 200x200x16 de 0.4 m, X/Y em [-40, 40] m, Z em [-1.0, 5.4] m."""
        return cls()

    @property
    def max_bound(self) -> np.ndarray:
        return self.min_bound + self.dims * self.voxel_size

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.dims))

    # ------------------------------------------------------------------ #
    def voxels_of(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Versão vetorizada de voxel_of.

        Returns:
            (índices (N, 3) int64, máscara (N,) de pontos dentro da grelha)
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        idx = np.floor((points - self.min_bound) / self.voxel_size + _FLOOR_EPS).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < self.dims), axis=1)
        return idx, inside

    def voxel_of(self, point: Iterable[float]) -> Optional[Tuple[int, int, int]]:
        """Índice do voxel que contém `point`, ou None fora da grelha (nunca satura)."""
        idx, inside = self.voxels_of(np.asarray(point, dtype=np.float64))
        if not inside[0]:
            return None
        return tuple(int(v) for v in idx[0])

    def contains_index(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx).reshape(-1, 3)
        return np.all((idx >= 0) & (idx < self.dims), axis=1)

    def voxel_centers(self, idx: np.ndarray) -> np.ndarray:
        """Centros (N, 3) de índices (N, 3); rejeita índices fora da grelha."""
        idx = np.asarray(idx, dtype=np.int64).reshape(-1, 3)
        if not np.all(self.contains_index(idx)):
            raise VoxelRangeError(f"Índice fora da grelha {tuple(self.dims)}")
        return self.min_bound + (idx + 0.5) * self.voxel_size

    def voxel_center(self, idx: Iterable[int]) -> np.ndarray:
        return self.voxel_centers(np.asarray(list(idx)))[0]

    def all_centers(self) -> np.ndarray:
        """Centros de todas as células, ordem (i, j, k) com k a variar mais depressa."""
        grids = np.meshgrid(*(np.arange(n) for n in self.dims), indexing='ij')
        idx = np.stack([g.ravel() for g in grids], axis=1)
        return self.min_bound + (idx + 0.5) * self.voxel_size

    # ------------------------------------------------------------------ #
    def to_dict(self):
        return {
            'voxel_size': self.voxel_size,
            'min_bound': self.min_bound.tolist(),
            'dims': self.dims.tolist(),
        }

    def __eq__(self, other):
        if not isinstance(other, VoxelGridSpec):
            return NotImplemented
        return (self.voxel_size == other.voxel_size
                and np.array_equal(self.min_bound, other.min_bound)
                and np.array_equal(self.dims, other.dims))

    def __hash__(self):
        return hash((self.voxel_size, tuple(self.min_bound), tuple(self.dims)))

    def __repr__(self):
        return (f"VoxelGridSpec(voxel_size={self.voxel_size}, "
                f"min_bound={tuple(self.min_bound)}, dims={tuple(self.dims)})")


def voxel_of(spec: VoxelGridSpec, x: Iterable[float]) -> Optional[Tuple[int, int, int]]:
    return spec.voxel_of(x)


def voxel_center(spec: VoxelGridSpec, idx: Iterable[int]) -> np.ndarray:
    return spec.voxel_center(idx)
