"""
Classe base abstrata para os filtros de correspondências.

Cada filtro produz um predicado sobre pares (a_i, b_i); o custo do GICP
soma apenas os pares para os quais todos os predicados ativos são verdadeiros.
"""
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..geometry.point_cloud import SemanticPointCloud
from ..geometry.pose import Pose
from ..mapping.voxel_map import MapSnapshot
from ..registration.correspondences import CorrespondenceSet
from ..registration.gicp import Predicate
from ..utils.taxonomy import LabelTaxonomy


class FilterContext:
    """Dados de um frame disponíveis aos filtros."""

    def __init__(self, frame: SemanticPointCloud, snapshot: MapSnapshot, taxonomy: LabelTaxonomy,
                 coarse_pose: Optional[Pose] = None):
        """
        Args:
            frame: Nuvem do frame (referencial do ego)
            snapshot: Pontos do mapa usados como alvo do registo
            taxonomy: Taxonomia de rótulos
            coarse_pose: Resultado da primeira passagem GICP, quando já existe
        """
        self.frame = frame
        self.snapshot = snapshot
        self.taxonomy = taxonomy
        self.coarse_pose = coarse_pose


class BaseFilter(ABC):
    """Classe base abstrata para filtros de correspondências."""

    def __init__(self, name: str, symbol: str):
        """
        Args:
            name: Nome legível do filtro
            symbol: Símbolo curto (P_S, P_D, P_V, ...)
        """
        self.name = name
        self.symbol = symbol
        self.enabled = True

    def prepare(self, frame: SemanticPointCloud, snapshot: MapSnapshot,
                taxonomy: LabelTaxonomy) -> Tuple[SemanticPointCloud, MapSnapshot]:
        """Transforma as nuvens antes do registo; por omissão não faz nada."""
        return frame, snapshot

    @abstractmethod
    def predicate(self, context: FilterContext) -> Optional[Predicate]:
        """
        Constrói o predicado para o frame atual.

        Returns:
            Função CorrespondenceSet -> máscara booleana, ou None se o filtro
            não atua sobre pares
        """

    def enable(self):
        """Ativa o filtro."""
        self.enabled = True

    def disable(self):
        """Desativa o filtro."""
        self.enabled = False

    def summary(self) -> Dict[str, Any]:
        return {'name': self.name, 'symbol': self.symbol, 'enabled': self.enabled}

    def __repr__(self):
        return f"{self.__class__.__name__}(symbol={self.symbol}, enabled={self.enabled})"


def all_of(*predicates: Predicate) -> Predicate:
    """Conjunção de predicados, avaliados pela ordem dada."""
    def combined(pairs: CorrespondenceSet) -> np.ndarray:
        mask = np.ones(len(pairs), dtype=bool)
        for predicate in predicates:
            mask &= np.asarray(predicate(pairs), dtype=bool)
        return mask
    return combined
