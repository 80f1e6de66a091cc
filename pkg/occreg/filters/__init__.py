"""Filtros de correspondências: semântico, dinâmico, por rótulo e de persistência."""
from .base_filter import BaseFilter, FilterContext, all_of
from .clustering import ObjectCluster, cluster_points
from .dynamic_filter import (DynamicObjectFilter, DynamicVerdict, classify_dynamic,
                             dynamic_predicate, extract_movable)
from .label_filter import LabelBasedObjectFilter, label_based_filter
from .semantic_filter import SemanticLabelFilter, label_match_predicate, semantic_label_predicate
from .voxel_pfilter import VoxelPFilter, persistence_predicate, snapshot_persistence_predicate

__all__ = [
    'BaseFilter', 'FilterContext', 'all_of',
    'ObjectCluster', 'cluster_points',
    'DynamicObjectFilter', 'DynamicVerdict', 'classify_dynamic', 'dynamic_predicate', 'extract_movable',
    'LabelBasedObjectFilter', 'label_based_filter',
    'SemanticLabelFilter', 'label_match_predicate', 'semantic_label_predicate',
    'VoxelPFilter', 'persistence_predicate', 'snapshot_persistence_predicate',
]
