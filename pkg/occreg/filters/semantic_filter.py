"""
Filtro de rótulos semânticos (P_S): elimina pares com rótulos diferentes.

Sem este filtro, superfícies geometricamente degeneradas (uma estrada longa
e plana) deixam o alinhamento "escorregar" ao longo da superfície.
"""
import numpy as np

from .base_filter import BaseFilter, FilterContext, Predicate


def semantic_label_predicate(a_label, b_label):
    """[SL_a = SL_b]; aceita escalares ou arrays."""
    return np.equal(a_label, b_label)


def label_match_predicate(source_labels: np.ndarray, target_labels: np.ndarray) -> Predicate:
    """Predicado sobre pares a partir dos rótulos do frame e do mapa."""
    source_labels = np.asarray(source_labels)
    target_labels = np.asarray(target_labels)

    def predicate(pairs) -> np.ndarray:
        return semantic_label_predicate(source_labels[pairs.source_ids], target_labels[pairs.target_ids])
    return predicate


class SemanticLabelFilter(BaseFilter):
    """P_S(a_i, b_i) = [SL_a = SL_b]."""

    def __init__(self):
        super().__init__(name="Semantic Label Filter", symbol="P_S")

    def predicate(self, context: FilterContext) -> Predicate:
        return label_match_predicate(context.frame.labels, context.snapshot.labels)
