"""
Taxonomia de classes semânticas (rótulos SL e conjunto de classes movíveis).

Ficheiro plano, uma classe por linha: `label_id nome movível(0/1)`.
"""
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from .errors import TaxonomyError

DATA_DIR = Path(__file__).resolve().parent.parent / 'data'
DEFAULT_TAXONOMY_PATH = DATA_DIR / 'occ3d_nuscenes.txt'


class LabelTaxonomy:
    """Conjunto de rótulos com a marcação de classes potencialmente dinâmicas."""

    def __init__(self, taxonomy_id: str, entries: List[tuple]):
        """
        Args:
            taxonomy_id: Identificador (gravado nas nuvens de pontos)
            entries: Lista de (label_id, nome, movível)
        """
        ids = [int(e[0]) for e in entries]
        if not entries:
            raise TaxonomyError("Taxonomia vazia")
        if len(set(ids)) != len(ids):
            raise TaxonomyError(f"IDs de rótulo repetidos em '{taxonomy_id}'")
        if any(i < 0 or i > 255 for i in ids):
            raise TaxonomyError("IDs de rótulo têm de caber num u8")
        if all(bool(e[2]) for e in entries):
            raise TaxonomyError("A taxonomia precisa de pelo menos uma classe não movível")

        self.taxonomy_id = taxonomy_id
        self.entries = [(int(i), str(n), bool(m)) for i, n, m in entries]
        self._names: Dict[int, str] = {i: n for i, n, _ in self.entries}
        self._ids: Dict[str, int] = {n: i for i, n, _ in self.entries}

        # tabelas de consulta indexadas pelo rótulo u8
        self._movable_lut = np.zeros(256, dtype=bool)
        self._valid_lut = np.zeros(256, dtype=bool)
        for label_id, _, movable in self.entries:
            self._valid_lut[label_id] = True
            self._movable_lut[label_id] = movable

    # ------------------------------------------------------------------ #
    @property
    def label_ids(self) -> np.ndarray:
        return np.array(sorted(self._names), dtype=np.uint8)

    @property
    def movable_ids(self) -> np.ndarray:
        return np.array([i for i, _, m in self.entries if m], dtype=np.uint8)

    @property
    def num_slots(self) -> int:
        """Dimensão necessária para contar votos indexados pelo rótulo."""
        return max(self._names) + 1

    def is_movable(self, labels: np.ndarray) -> np.ndarray:
        return self._movable_lut[np.asarray(labels, dtype=np.uint8)]

    def is_valid(self, labels: np.ndarray) -> np.ndarray:
        return self._valid_lut[np.asarray(labels, dtype=np.uint8)]

    def name_of(self, label_id: int) -> str:
        return self._names[int(label_id)]

    def id_of(self, name: str) -> int:
        try:
            return self._ids[name]
        except KeyError:
            raise TaxonomyError(f"Classe desconhecida '{name}' na taxonomia '{self.taxonomy_id}'")

    def to_dict(self):
        return {'id': self.taxonomy_id, 'entries': [list(e) for e in self.entries]}

    def __repr__(self):
        return (f"LabelTaxonomy(id={self.taxonomy_id}, labels={len(self.entries)}, "
                f"movable={len(self.movable_ids)})")


def load_taxonomy(path: Union[str, Path], taxonomy_id: Optional[str] = None) -> LabelTaxonomy:
    """
    Lê uma taxonomia do ficheiro `label_id nome movível`.

    Args:
        path: Caminho do ficheiro
        taxonomy_id: Identificador; por omissão o nome do ficheiro sem extensão
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, sep=r'\s+', comment='#', header=None,
                         names=['label_id', 'name', 'movable'], dtype=str)
    except FileNotFoundError:
        raise TaxonomyError(f"Ficheiro de taxonomia não encontrado: {path}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise TaxonomyError(f"Taxonomia malformada em {path}: {e}")

    if df.isna().any().any():
        raise TaxonomyError(f"Linhas incompletas na taxonomia {path}")
    entries = []
    for row in df.itertuples(index=False):
        if row.movable not in ('0', '1') or not row.label_id.isdigit():
            raise TaxonomyError(f"Linha inválida na taxonomia {path}: {tuple(row)}")
        entries.append((int(row.label_id), row.name, row.movable == '1'))

    # o identificador usa hífens: occ3d_nuscenes -> occ3d-nuscenes
    return LabelTaxonomy(taxonomy_id or path.stem.replace('_', '-'), entries)


def default_taxonomy() -> LabelTaxonomy:
    """Taxonomia Occ3D-nuScenes distribuída com o pacote."""
    return load_taxonomy(DEFAULT_TAXONOMY_PATH)
