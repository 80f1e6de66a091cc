"""
Ruído de inferência simulado: perda de voxels, troca de rótulos e voxels espúrios.

O gerador aleatório de cada frame é semeado com (seed, frame_index), por isso
o resultado não depende da ordem em que os frames são gerados.
"""
from typing import Any, Dict, Optional

import numpy as np

from ..geometry.point_cloud import SemanticPointCloud
from ..geometry.voxel_grid import VoxelGridSpec


class NoiseModel:
    """Taxas de ruído aplicadas por ponto e por frame."""

    def __init__(self, label_flip_rate: float = 0.0, dropout_rate: float = 0.0,
                 spurious_rate: float = 0.0, seed: int = 0,
                 range_dropout_start: float = np.inf, range_dropout_rate: float = 0.0):
        """
        Args:
            label_flip_rate: Probabilidade de trocar o rótulo de um ponto
            dropout_rate: Probabilidade de perder um ponto
            spurious_rate: Número esperado de voxels espúrios por frame (Poisson)
            seed: Semente de 64 bits
            range_dropout_start: Distância (m) a partir da qual há perda extra
            range_dropout_rate: Probabilidade extra de perda por metro além do início
        """
        self.label_flip_rate = float(label_flip_rate)
        self.dropout_rate = float(dropout_rate)
        self.spurious_rate = float(spurious_rate)
        self.seed = int(seed)
        self.range_dropout_start = float(range_dropout_start)
        self.range_dropout_rate = float(range_dropout_rate)
        self.validate()

    def validate(self):
        for name in ('label_flip_rate', 'dropout_rate'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} tem de estar em [0, 1]: {value}")
        if self.spurious_rate < 0 or self.range_dropout_rate < 0:
            raise ValueError("spurious_rate e range_dropout_rate não podem ser negativos")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed fora de 64 bits: {self.seed}")
        if not self.range_dropout_start >= 0:
            raise ValueError("range_dropout_start não pode ser negativo")

    @classmethod
    def off(cls, seed: int = 0) -> 'NoiseModel':
        return cls(seed=seed)

    def is_off(self) -> bool:
        return (self.label_flip_rate == 0.0 and self.dropout_rate == 0.0 and self.spurious_rate == 0.0
                and (self.range_dropout_rate == 0.0 or not np.isfinite(self.range_dropout_start)))

    def rng(self, frame_index: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, int(frame_index)])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'label_flip_rate': self.label_flip_rate,
            'dropout_rate': self.dropout_rate,
            'spurious_rate': self.spurious_rate,
            'seed': self.seed,
            'range_dropout_start': self.range_dropout_start,
            'range_dropout_rate': self.range_dropout_rate,
        }

    def __repr__(self):
        return f"NoiseModel({self.to_dict()})"


def apply_noise(cloud: SemanticPointCloud, noise: NoiseModel, spec: VoxelGridSpec,
                label_ids: Optional[np.ndarray] = None) -> SemanticPointCloud:
    """
    Aplica o ruído a um frame.

    Por ponto, de forma independente: perda com dropout_rate (mais a perda
    por distância); senão troca para outro rótulo uniforme com
    label_flip_rate. Depois acrescenta Poisson(spurious_rate) voxels em
    células livres uniformes da janela, com rótulos uniformes.

    Args:
        cloud: Frame sem ruído
        noise: Modelo de ruído
        spec: Grelha da janela (para escolher células livres)
        label_ids: Rótulos possíveis; por omissão 0..16
    """
    if noise.is_off():
        return cloud
    if label_ids is None:
        label_ids = np.arange(17)
    label_ids = np.unique(np.asarray(label_ids, dtype=np.uint8))
    rng = noise.rng(cloud.frame_index)
    n = len(cloud)

    u_drop = rng.random(n)
    u_flip = rng.random(n)
    pick = rng.integers(0, max(len(label_ids) - 1, 1), size=n)

    drop_prob = np.full(n, noise.dropout_rate)
    if noise.range_dropout_rate > 0 and np.isfinite(noise.range_dropout_start):
        distance = np.linalg.norm(cloud.positions[:, :2], axis=1)
        extra = noise.range_dropout_rate * np.maximum(distance - noise.range_dropout_start, 0.0)
        drop_prob = np.clip(drop_prob + extra, 0.0, 1.0)
    keep = u_drop >= drop_prob

    labels = cloud.labels.copy()
    flip = keep & (u_flip < noise.label_flip_rate) & (len(label_ids) > 1)
    if np.any(flip):
        # escolhe entre os rótulos diferentes do atual (label_ids ordenados e sem repetições)
        current = np.searchsorted(label_ids, labels[flip])
        present = label_ids[np.minimum(current, len(label_ids) - 1)] == labels[flip]
        shifted = pick[flip] + (present & (pick[flip] >= current))
        labels[flip] = label_ids[shifted]

    positions = cloud.positions[keep]
    labels = labels[keep]

    count = int(rng.poisson(noise.spurious_rate)) if noise.spurious_rate > 0 else 0
    if count:
        # as células livres são as do frame já com perdas
        idx, _ = spec.voxels_of(positions)
        flat = np.unique(np.ravel_multi_index(idx.T, spec.dims)) if len(idx) else np.empty(0, dtype=np.int64)
        count = min(count, spec.num_cells - len(flat))
        chosen = np.empty(0, dtype=np.int64)
        while len(chosen) < count:
            draw = rng.integers(0, spec.num_cells, size=2 * count + 16)
            draw = draw[~np.isin(draw, flat) & ~np.isin(draw, chosen)]
            _, first = np.unique(draw, return_index=True)
            chosen = np.concatenate([chosen, draw[np.sort(first)]])[:count]
        cells = np.stack(np.unravel_index(chosen, spec.dims), axis=1)
        spurious_labels = label_ids[rng.integers(0, len(label_ids), size=count)]
        positions = np.concatenate([positions, spec.voxel_centers(cells)])
        labels = np.concatenate([labels, spurious_labels])

    return SemanticPointCloud(positions, labels, cloud.frame_index, cloud.taxonomy_id)
