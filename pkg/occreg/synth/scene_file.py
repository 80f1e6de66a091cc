"""
Ficheiro de cena: uma primitiva por linha, colunas separadas por espaços.

    kind label x y z yaw ex ey ez vx vy vz [stripe]

`kind` é box, plane, column ou actor (caixa de classe movível); `label` pode
ser uma lista separada por vírgulas quando `stripe` > 0. Extensões aceitam
`inf`. Linhas começadas por # são comentários.
"""
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from ..utils.errors import SceneFileError
from .world import Primitive, WorldModel

COLUMNS = ['kind', 'label', 'x', 'y', 'z', 'yaw', 'ex', 'ey', 'ez', 'vx', 'vy', 'vz', 'stripe']
NUMERIC = COLUMNS[2:]


def read_scene(path: Union[str, Path]) -> WorldModel:
    """
    Lê um ficheiro de cena.

    Raises:
        SceneFileError: ficheiro inexistente, colunas em falta ou valores inválidos
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, sep=r'\s+', comment='#', header=None, names=COLUMNS, dtype=str)
    except FileNotFoundError:
        raise SceneFileError(f"Ficheiro de cena não encontrado: {path}")
    except pd.errors.EmptyDataError:
        raise SceneFileError(f"Ficheiro de cena vazio: {path}")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise SceneFileError(f"Cena malformada em {path}: {e}")

    df['stripe'] = df['stripe'].fillna('0')
    if df[COLUMNS[:-1]].isna().any().any():
        raise SceneFileError(f"Linhas com colunas em falta em {path}")
    try:
        values = df[NUMERIC].astype(np.float64)
    except ValueError as e:
        raise SceneFileError(f"Valor não numérico em {path}: {e}")

    world = WorldModel(name=path.stem)
    for row_no, (row, numbers) in enumerate(zip(df.itertuples(index=False), values.itertuples(index=False)), 1):
        try:
            labels = [int(v) for v in row.label.split(',')]
            kind = 'box' if row.kind == 'actor' else row.kind
            primitive = Primitive(kind, labels, (numbers.x, numbers.y, numbers.z),
                                  (numbers.ex, numbers.ey, numbers.ez), numbers.yaw,
                                  (numbers.vx, numbers.vy, numbers.vz), numbers.stripe)
        except ValueError as e:
            raise SceneFileError(f"{path}: primitiva {row_no} inválida: {e}")
        if row.kind == 'actor':
            world.add_actor(primitive)
        elif primitive.is_moving:
            raise SceneFileError(f"{path}: primitiva {row_no} estática com velocidade (use 'actor')")
        else:
            world.add(primitive)
    return world


def write_scene(world: WorldModel, path: Union[str, Path]):
    """Escreve o mundo no formato lido por read_scene."""
    rows = [prim.to_row() for prim in world.primitives]
    for actor in world.actors:
        row = actor.to_row()
        row['kind'] = 'actor'
        rows.append(row)
    df = pd.DataFrame(rows, columns=COLUMNS)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(f"# cena {world.name}: {' '.join(COLUMNS)}\n")
        df.to_csv(handle, sep=' ', header=False, index=False, float_format='%.9g')
