"""Gerador de cenas e sequências sintéticas."""
from .noise import NoiseModel, apply_noise
from .presets import PRESETS, Preset, accelerating_trajectory, curved_trajectory, get_preset, straight_trajectory
from .scene_file import read_scene, write_scene
from .sequence import (GT_MAP, GT_TRAJECTORY, SyntheticSequence, generate_sequence, ground_truth_map,
                       ground_truth_map_conflicts)
from .world import Primitive, WorldModel, render_frame

__all__ = [
    'NoiseModel', 'apply_noise',
    'PRESETS', 'Preset', 'accelerating_trajectory', 'curved_trajectory', 'get_preset', 'straight_trajectory',
    'read_scene', 'write_scene',
    'GT_MAP', 'GT_TRAJECTORY', 'SyntheticSequence', 'generate_sequence', 'ground_truth_map',
    'ground_truth_map_conflicts',
    'Primitive', 'WorldModel', 'render_frame',
]
