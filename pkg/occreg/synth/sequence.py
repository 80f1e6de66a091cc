"""
Geração de sequências sintéticas: um frame por pose (render + ruído) e a
trajetória de referência.
"""
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..geometry.point_cloud import SemanticPointCloud
from ..geometry.pose import Pose
from ..geometry.voxel_grid import VoxelGridSpec, world_voxel_keys
from ..mapping.voxel_map import GlobalMap
from ..utils.errors import PresetError
from ..utils.occ_io import frame_filename, write_frame, write_trajectory
from ..utils.taxonomy import LabelTaxonomy, default_taxonomy
from .noise import NoiseModel, apply_noise
from .world import WorldModel, render_frame

logger = logging.getLogger(__name__)

GT_TRAJECTORY = 'gt.traj'
GT_MAP = 'gt_map.socc'


class SyntheticSequence:
    """Frames gerados e poses de referência (ego -> mundo)."""

    def __init__(self, frames: List[SemanticPointCloud], trajectory: List[Tuple[int, Pose]],
                 spec: VoxelGridSpec, world: WorldModel,
                 clean_frames: Optional[List[SemanticPointCloud]] = None):
        self.frames = frames
        self.clean_frames = clean_frames if clean_frames is not None else frames
        self.trajectory = trajectory
        self.spec = spec
        self.world = world

    def __len__(self):
        return len(self.frames)

    def __repr__(self):
        return f"SyntheticSequence(world={self.world.name}, frames={len(self.frames)})"


def generate_sequence(world: WorldModel, trajectory: Sequence[Pose], spec: Optional[VoxelGridSpec] = None,
                      noise: Optional[NoiseModel] = None, out_dir: Optional[Union[str, Path]] = None,
                      taxonomy: Optional[LabelTaxonomy] = None, start_index: int = 0) -> SyntheticSequence:
    """
    Renderiza um frame por pose e aplica o ruído.

    Args:
        world: Mundo sintético
        trajectory: Poses do ego (ego -> mundo), uma por frame
        spec: Grelha da janela (200x200x16 por omissão)
        noise: Modelo de ruído (desligado por omissão)
        out_dir: Se dado, escreve frame_%06d.socc, gt.traj e gt_map.socc
        taxonomy: Taxonomia (rótulos dos voxels espúrios e validação)
        start_index: Índice do primeiro frame

    Raises:
        PresetError: menos de 2 poses ou rótulos inválidos no mundo
    """
    if len(trajectory) < 2:
        raise PresetError(f"Uma sequência precisa de pelo menos 2 poses, recebidas {len(trajectory)}")
    spec = spec or VoxelGridSpec.default()
    noise = noise or NoiseModel.off()
    taxonomy = taxonomy or default_taxonomy()
    problem = world.validate(taxonomy)
    if problem:
        raise PresetError(f"Mundo '{world.name}' inválido: {problem}")

    frames, clean_frames, poses = [], [], []
    for offset, pose in enumerate(trajectory):
        index = start_index + offset
        clean = render_frame(world, pose, spec, index, taxonomy.taxonomy_id)
        clean_frames.append(clean)
        frames.append(apply_noise(clean, noise, spec, taxonomy.label_ids))
        poses.append((index, pose))

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for cloud in frames:
            write_frame(out_dir / frame_filename(cloud.frame_index), cloud, spec)
        write_trajectory(out_dir / GT_TRAJECTORY, poses)
        reference = SyntheticSequence(frames, poses, spec, world, clean_frames)
        ground_truth_map(reference, taxonomy).export(out_dir / GT_MAP)
        logger.info("[SINTÉTICO] %d frames de '%s' escritos em %s", len(frames), world.name, out_dir)

    sizes = np.array([len(f) for f in frames])
    logger.info("[SINTÉTICO] '%s': %d frames, %.0f voxels ocupados em média",
                world.name, len(frames), sizes.mean())
    return SyntheticSequence(frames, poses, spec, world, clean_frames)


def ground_truth_map_conflicts(sequence: SyntheticSequence, voxel_size: Optional[float] = None,
                               taxonomy: Optional[LabelTaxonomy] = None) -> int:
    """
    Número de voxels estáticos do mundo com rótulos divergentes entre frames,
    quando os frames são colocados nas poses de referência.
    """
    taxonomy = taxonomy or default_taxonomy()
    voxel_size = voxel_size or sequence.spec.voxel_size
    keys, labels = [], []
    for cloud, (_, pose) in zip(sequence.clean_frames, sequence.trajectory):
        static = ~taxonomy.is_movable(cloud.labels)
        world_points = pose.apply(cloud.positions[static])
        keys.append(world_voxel_keys(world_points, voxel_size))
        labels.append(cloud.labels[static])
    if not keys:
        return 0
    stacked = np.unique(np.column_stack([np.concatenate(keys), np.concatenate(labels)]), axis=0)
    _, counts = np.unique(stacked[:, :3], axis=0, return_counts=True)
    return int(np.sum(counts > 1))


def ground_truth_map(sequence: SyntheticSequence, taxonomy: Optional[LabelTaxonomy] = None) -> GlobalMap:
    """Mapa de referência: frames sem ruído, só classes estáticas, nas poses de referência."""
    taxonomy = taxonomy or default_taxonomy()
    gmap = GlobalMap(sequence.spec.voxel_size, taxonomy.num_slots)
    for cloud, (index, pose) in zip(sequence.clean_frames, sequence.trajectory):
        gmap.merge_frame(cloud.subset(~taxonomy.is_movable(cloud.labels)), pose, index)
    return gmap
