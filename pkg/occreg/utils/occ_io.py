"""
Formatos de ficheiro: frames de ocupação (.socc), trajetórias (.traj) e
carregamento de sequências.

Formato .socc (little-endian, bit-exato):
    cabeçalho de 60 bytes: magic "SOCC", version u32, voxel_size f64,
    min_bound 3×f64, dims 3×u32, frame_index u32, count u32;
    seguido de `count` registos de 7 bytes (i u16, j u16, k u16, label u8).
"""
import logging
import re
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..geometry.point_cloud import SemanticPointCloud
from ..geometry.pose import Pose
from ..geometry.voxel_grid import VoxelGridSpec, world_voxel_keys
from .errors import (BadMagicError, FrameFormatError, IndexRecordError, SequenceError,
                     TrajectoryFormatError, TruncatedFileError, VersionMismatchError)

logger = logging.getLogger(__name__)

MAGIC = b'SOCC'
FORMAT_VERSION = 1
MAX_DIM = 65535
FRAME_PATTERN = re.compile(r'^frame_(\d{6})\.socc$')
QUAT_NORM_TOL = 1e-6

HEADER_DTYPE = np.dtype([
    ('magic', 'S4'),
    ('version', '<u4'),
    ('voxel_size', '<f8'),
    ('min_bound', '<f8', (3,)),
    ('dims', '<u4', (3,)),
    ('frame_index', '<u4'),
    ('count', '<u4'),
])
RECORD_DTYPE = np.dtype([('i', '<u2'), ('j', '<u2'), ('k', '<u2'), ('label', 'u1')])
HEADER_BYTES = HEADER_DTYPE.itemsize  # 60
RECORD_BYTES = RECORD_DTYPE.itemsize  # 7

PathLike = Union[str, Path]


def frame_filename(frame_index: int) -> str:
    return f"frame_{frame_index:06d}.socc"


# ===================== FRAMES =====================

def encode_frame(cloud: SemanticPointCloud, spec: VoxelGridSpec) -> bytes:
    """Serializa uma nuvem (pontos nos centros dos voxels) no formato .socc."""
    if np.any(spec.dims > MAX_DIM):
        raise FrameFormatError(f"dims {tuple(spec.dims)} excedem {MAX_DIM} por eixo")
    problem = cloud.validate(spec)
    if problem:
        raise IndexRecordError(f"Nuvem inválida para a grelha: {problem}")

    idx, _ = cloud.voxel_indices(spec)
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header['magic'] = MAGIC
    header['version'] = FORMAT_VERSION
    header['voxel_size'] = spec.voxel_size
    header['min_bound'] = spec.min_bound
    header['dims'] = spec.dims
    header['frame_index'] = cloud.frame_index
    header['count'] = len(cloud)

    records = np.zeros(len(cloud), dtype=RECORD_DTYPE)
    records['i'], records['j'], records['k'] = idx[:, 0], idx[:, 1], idx[:, 2]
    records['label'] = cloud.labels
    return header.tobytes() + records.tobytes()


def decode_frame(data: bytes, taxonomy_id: str = 'occ3d-nuscenes') -> Tuple[SemanticPointCloud, VoxelGridSpec]:
    """
    Inverso de encode_frame.

    Raises:
        BadMagicError, VersionMismatchError, TruncatedFileError, IndexRecordError,
        FrameFormatError
    """
    if len(data) >= 4 and data[:4] != MAGIC:
        raise BadMagicError(f"Magic inválido: {data[:4]!r}")
    if len(data) < HEADER_BYTES:
        raise TruncatedFileError(f"Cabeçalho truncado ({len(data)} de {HEADER_BYTES} bytes)")

    header = np.frombuffer(data, dtype=HEADER_DTYPE, count=1)[0]
    if int(header['version']) != FORMAT_VERSION:
        raise VersionMismatchError(f"Versão {int(header['version'])} não suportada (esperada {FORMAT_VERSION})")

    voxel_size = float(header['voxel_size'])
    min_bound = np.array(header['min_bound'], dtype=np.float64)
    dims = np.array(header['dims'], dtype=np.int64)
    count = int(header['count'])
    if not (np.isfinite(voxel_size) and voxel_size > 0) or not np.all(np.isfinite(min_bound)):
        raise FrameFormatError("voxel_size ou min_bound inválidos no cabeçalho")
    if np.any(dims < 1) or np.any(dims > MAX_DIM):
        raise FrameFormatError(f"dims inválidas no cabeçalho: {tuple(dims)}")
    if count > int(np.prod(dims)):
        raise FrameFormatError(f"count {count} excede o número de células da grelha")

    expected = HEADER_BYTES + count * RECORD_BYTES
    if len(data) < expected:
        raise TruncatedFileError(f"Esperados {expected} bytes, ficheiro tem {len(data)}")
    if len(data) > expected:
        raise FrameFormatError(f"{len(data) - expected} bytes em excesso no fim do ficheiro")

    spec = VoxelGridSpec(voxel_size, min_bound, dims)
    records = np.frombuffer(data, dtype=RECORD_DTYPE, count=count, offset=HEADER_BYTES)
    idx = np.stack([records['i'], records['j'], records['k']], axis=1).astype(np.int64)
    if count:
        if not np.all(spec.contains_index(idx)):
            raise IndexRecordError("Registo com índice de voxel fora da grelha")
        if len(np.unique(idx, axis=0)) != count:
            raise IndexRecordError("Registos duplicados para o mesmo voxel")

    cloud = SemanticPointCloud.from_voxels(spec, idx, records['label'].copy(),
                                           int(header['frame_index']), taxonomy_id)
    return cloud, spec


def write_frame(path: PathLike, cloud: SemanticPointCloud, spec: VoxelGridSpec):
    Path(path).write_bytes(encode_frame(cloud, spec))


def read_frame(path: PathLike, taxonomy_id: str = 'occ3d-nuscenes') -> Tuple[SemanticPointCloud, VoxelGridSpec]:
    return decode_frame(Path(path).read_bytes(), taxonomy_id)


def export_map(path: PathLike, positions: np.ndarray, labels: np.ndarray,
               voxel_size: float, frame_index: int):
    """
    Exporta pontos de um mapa global como frame .socc em coordenadas do mundo.

    A grelha do ficheiro é a caixa envolvente (na grelha global) dos voxels
    exportados; cada ponto é quantizado para o centro do seu voxel global.
    """
    keys = world_voxel_keys(positions, voxel_size)
    if len(keys):
        lo = keys.min(axis=0)
        dims = keys.max(axis=0) - lo + 1
    else:
        lo = np.zeros(3, dtype=np.int64)
        dims = np.ones(3, dtype=np.int64)
    spec = VoxelGridSpec(voxel_size, lo * voxel_size, dims)
    cloud = SemanticPointCloud.from_voxels(spec, keys - lo, labels, frame_index)
    write_frame(path, cloud, spec)
    logger.info("[MAPA] %d voxels exportados para %s", len(keys), path)


# ===================== TRAJETÓRIAS =====================

def _fmt(value: float) -> str:
    # + 0.0 elimina o "-0"
    return f"{value + 0.0:.9g}"


def write_trajectory(path: PathLike, poses: Sequence[Tuple[int, Pose]]):
    """Uma linha por pose: `index tx ty tz qx qy qz qw`, 9 algarismos significativos."""
    lines = []
    previous = None
    for index, pose in poses:
        if previous is not None and index <= previous:
            raise TrajectoryFormatError(f"Índices não estritamente crescentes: {previous} -> {index}")
        previous = index
        w, x, y, z = pose.quaternion
        tx, ty, tz = pose.translation
        lines.append(" ".join([str(int(index))] + [_fmt(v) for v in (tx, ty, tz, x, y, z, w)]))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding='utf-8')


def read_trajectory(path: PathLike) -> List[Tuple[int, Pose]]:
    """
    Lê uma trajetória .traj (linhas vazias e comentários # são ignorados).

    Raises:
        TrajectoryFormatError: ficheiro ilegível ou não UTF-8, linha malformada,
            índices não monótonos ou quaternião com norma afastada de 1
            (tolerância 1e-6)
    """
    poses: List[Tuple[int, Pose]] = []
    try:
        text = Path(path).read_text(encoding='utf-8')
    except UnicodeDecodeError as e:
        raise TrajectoryFormatError(f"{path}: conteúdo não é UTF-8 válido (byte {e.start})") from e
    except OSError as e:
        raise TrajectoryFormatError(f"{path}: não foi possível ler ({e.strerror or e})") from e
    for line_no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        fields = stripped.split()
        if len(fields) != 8:
            raise TrajectoryFormatError(f"{path}:{line_no}: esperados 8 campos, encontrados {len(fields)}")
        try:
            index = int(fields[0])
            values = np.array([float(v) for v in fields[1:]])
        except ValueError:
            raise TrajectoryFormatError(f"{path}:{line_no}: valor não numérico")
        if index < 0 or not np.all(np.isfinite(values)):
            raise TrajectoryFormatError(f"{path}:{line_no}: índice negativo ou valor não finito")
        if poses and index <= poses[-1][0]:
            raise TrajectoryFormatError(f"{path}:{line_no}: índice {index} não é crescente")
        tx, ty, tz, qx, qy, qz, qw = values
        norm = np.sqrt(qx * qx + qy * qy + qz * qz + qw * qw)
        if abs(norm - 1.0) > QUAT_NORM_TOL:
            raise TrajectoryFormatError(f"{path}:{line_no}: quaternião com norma {norm:.6f}")
        poses.append((index, Pose((qw, qx, qy, qz), (tx, ty, tz))))
    return poses


# ===================== SEQUÊNCIAS =====================

class SequenceInfo:
    """Resultado do carregamento de uma sequência."""

    def __init__(self, frames: List[SemanticPointCloud], spec: VoxelGridSpec, gaps: List[int]):
        self.frames = frames
        self.spec = spec
        self.gaps = gaps

    def __len__(self):
        return len(self.frames)

    def __repr__(self):
        return f"SequenceInfo(frames={len(self.frames)}, gaps={self.gaps}, spec={self.spec})"


def list_sequence(directory: PathLike) -> List[Tuple[int, Path]]:
    """Ficheiros `frame_%06d.socc` do diretório, ordenados pelo índice do nome."""
    directory = Path(directory)
    if not directory.is_dir():
        raise SequenceError(f"Diretório não encontrado: {directory}")
    found = []
    for entry in directory.iterdir():
        match = FRAME_PATTERN.match(entry.name)
        if match and entry.is_file():
            found.append((int(match.group(1)), entry))
    if not found:
        raise SequenceError(f"Nenhum frame .socc em {directory}")
    return sorted(found)


def iter_sequence(directory: PathLike, taxonomy_id: str = 'occ3d-nuscenes',
                  expected_spec: Optional[VoxelGridSpec] = None) -> Iterator[Tuple[SemanticPointCloud, VoxelGridSpec]]:
    """
    Lê os frames um a um (útil com um produtor em paralelo).

    Raises:
        SequenceError: diretório vazio ou grelha inconsistente entre frames
    """
    spec = expected_spec
    for name_index, path in list_sequence(directory):
        cloud, frame_spec = read_frame(path, taxonomy_id)
        if cloud.frame_index != name_index:
            raise SequenceError(f"{path.name}: frame_index {cloud.frame_index} não corresponde ao nome")
        if spec is None:
            spec = frame_spec
        elif frame_spec != spec:
            raise SequenceError(f"{path.name}: grelha {frame_spec} difere de {spec}")
        yield cloud, frame_spec


def find_gaps(indices: Sequence[int]) -> List[int]:
    if not indices:
        return []
    present = set(indices)
    return [i for i in range(min(indices), max(indices) + 1) if i not in present]


def load_sequence(directory: PathLike, taxonomy_id: str = 'occ3d-nuscenes') -> SequenceInfo:
    """Carrega todos os frames, ordenados por frame_index; lacunas são reportadas."""
    frames = []
    spec = None
    for cloud, spec in iter_sequence(directory, taxonomy_id):
        frames.append(cloud)
    gaps = find_gaps([f.frame_index for f in frames])
    if gaps:
        logger.warning("[SEQUÊNCIA] Lacunas nos índices: %s", gaps)
    logger.info("[SEQUÊNCIA] %d frames carregados de %s", len(frames), directory)
    return SequenceInfo(frames, spec, gaps)
