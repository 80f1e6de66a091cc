"""
Configuração: variáveis de ambiente (.env) e ficheiros `key = value`.

Os valores por omissão reproduzem a configuração experimental de referência:
voxels de 0.4 m, limiar de deslocamento de 2 m e limiar de p-Index de 0.5.
"""
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import dotenv_values, load_dotenv

from .errors import ConfigError

logger = logging.getLogger(__name__)

# Carregar variáveis de ambiente do ficheiro .env (se existir)
load_dotenv()

THREADS_ENV = 'OCCREG_THREADS'


def get_workers() -> int:
    """
    Número de threads para as consultas ao KD-tree.

    OCCREG_THREADS limita o paralelismo interno; sem valor usa todos os
    núcleos (-1, convenção do scipy).
    """
    raw = os.getenv(THREADS_ENV)
    if not raw:
        return -1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} tem de ser inteiro, recebido '{raw}'")
    if value == 0 or value < -1:
        raise ConfigError(f"{THREADS_ENV} inválido: {value}")
    return value


class GicpConfig:
    """Parâmetros de uma passagem GICP."""

    FIELDS = ('max_corr_dist', 'max_iterations', 'translation_eps', 'rotation_eps',
              'k_neighbors', 'epsilon_reg', 'lambda0')

    def __init__(
        self,
        max_corr_dist: float = 1.0,   # metros, 2.5 voxels
        max_iterations: int = 30,
        translation_eps: float = 1e-4,  # metros
        rotation_eps: float = 1e-4,     # radianos
        k_neighbors: int = 20,
        epsilon_reg: float = 1e-3,
        lambda0: float = 1e-4,
    ):
        self.max_corr_dist = float(max_corr_dist)
        self.max_iterations = int(max_iterations)
        self.translation_eps = float(translation_eps)
        self.rotation_eps = float(rotation_eps)
        self.k_neighbors = int(k_neighbors)
        self.epsilon_reg = float(epsilon_reg)
        self.lambda0 = float(lambda0)
        self.validate()

    def validate(self):
        for name in self.FIELDS:
            if not getattr(self, name) > 0:
                raise ConfigError(f"GicpConfig.{name} tem de ser positivo: {getattr(self, name)}")

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.FIELDS}

    def copy(self, **overrides) -> 'GicpConfig':
        values = self.to_dict()
        values.update(overrides)
        return GicpConfig(**values)

    def __repr__(self):
        return f"GicpConfig({self.to_dict()})"


class OdometryConfig:
    """Configuração completa do pipeline de odometria."""

    MOTION_MODELS = ('constant-velocity', 'identity')
    OBJECT_FILTERS = ('dynamic', 'label', 'none')

    def __init__(
        self,
        coarse: Optional[GicpConfig] = None,
        refine: Optional[GicpConfig] = None,
        displacement_threshold: float = 2.0,  # metros
        pindex_threshold: float = 0.5,
        crop_radius: float = 60.0,            # metros
        downsample_period: int = 5,           # frames
        motion_model: str = 'constant-velocity',
        semantic_filter: bool = True,
        object_filter: str = 'dynamic',
        pfilter: bool = True,
        coarse_semantic: bool = False,
        cluster_radius: float = 0.9,          # metros, > diagonal de um voxel
        min_cluster_size: int = 5,
        match_radius: float = 4.0,            # metros
        min_correspondences: int = 10,
    ):
        self.coarse = coarse or GicpConfig()
        self.refine = refine or GicpConfig()
        self.displacement_threshold = float(displacement_threshold)
        self.pindex_threshold = float(pindex_threshold)
        self.crop_radius = float(crop_radius)
        self.downsample_period = int(downsample_period)
        self.motion_model = motion_model
        self.semantic_filter = bool(semantic_filter)
        self.object_filter = object_filter
        self.pfilter = bool(pfilter)
        self.coarse_semantic = bool(coarse_semantic)
        self.cluster_radius = float(cluster_radius)
        self.min_cluster_size = int(min_cluster_size)
        self.match_radius = float(match_radius)
        self.min_correspondences = int(min_correspondences)
        self.validate()

    def validate(self):
        if not self.displacement_threshold > 0:
            raise ConfigError("displacement_threshold tem de ser positivo")
        if self.pindex_threshold < 0:
            raise ConfigError("pindex_threshold não pode ser negativo")
        for name in ('crop_radius', 'cluster_radius', 'match_radius'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} tem de ser positivo")
        if self.downsample_period < 1 or self.min_cluster_size < 1 or self.min_correspondences < 1:
            raise ConfigError("downsample_period, min_cluster_size e min_correspondences têm de ser >= 1")
        if self.motion_model not in self.MOTION_MODELS:
            raise ConfigError(f"motion_model desconhecido: {self.motion_model}")
        if self.object_filter not in self.OBJECT_FILTERS:
            raise ConfigError(f"object_filter desconhecido: {self.object_filter}")

    # ------------------------------------------------------------------ #
    def to_dict(self) -> Dict[str, Any]:
        """Dicionário plano; as passagens GICP usam prefixos `coarse.` / `refine.`."""
        out: Dict[str, Any] = {}
        for prefix, gicp in (('coarse', self.coarse), ('refine', self.refine)):
            for key, value in gicp.to_dict().items():
                out[f'{prefix}.{key}'] = value
        for key in ('displacement_threshold', 'pindex_threshold', 'crop_radius',
                    'downsample_period', 'motion_model', 'semantic_filter',
                    'object_filter', 'pfilter', 'coarse_semantic', 'cluster_radius',
                    'min_cluster_size', 'match_radius', 'min_correspondences'):
            out[key] = getattr(self, key)
        return out

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'OdometryConfig':
        """Constrói a partir de um dicionário plano (valores podem ser texto)."""
        defaults = cls().to_dict()
        merged = dict(defaults)
        for key, raw in values.items():
            if key not in defaults:
                raise ConfigError(f"Chave de configuração desconhecida: '{key}'")
            merged[key] = _coerce(key, raw, defaults[key])

        gicp = {'coarse': {}, 'refine': {}}
        kwargs = {}
        for key, value in merged.items():
            if '.' in key:
                prefix, name = key.split('.', 1)
                gicp[prefix][name] = value
            else:
                kwargs[key] = value
        try:
            return cls(coarse=GicpConfig(**gicp['coarse']), refine=GicpConfig(**gicp['refine']), **kwargs)
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e))

    def with_overrides(self, **overrides) -> 'OdometryConfig':
        values = self.to_dict()
        values.update(overrides)
        return OdometryConfig.from_dict(values)

    def __repr__(self):
        return f"OdometryConfig({self.to_dict()})"


def _coerce(key: str, raw: Any, default: Any) -> Any:
    """Converte um valor lido do ficheiro para o tipo do valor por omissão."""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in ('1', 'true', 'yes', 'on'):
                return True
            if lowered in ('0', 'false', 'no', 'off'):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"Valor inválido para '{key}': '{raw}'")
    return text


def load_config_file(path: Union[str, Path]) -> OdometryConfig:
    """
    Lê um ficheiro plano `key = value` (comentários com #).

    Raises:
        ConfigError: ficheiro inexistente, chave desconhecida ou valor inválido
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Ficheiro de configuração não encontrado: {path}")
    try:
        values = dotenv_values(path)
    except UnicodeDecodeError as e:
        raise ConfigError(f"Ficheiro de configuração não é UTF-8 válido: {path}") from e
    missing = [key for key, value in values.items() if value is None]
    if missing:
        raise ConfigError(f"Linhas sem valor em {path}: {missing}")
    logger.info("[CONFIG] %d chaves lidas de %s", len(values), path)
    return OdometryConfig.from_dict(values)


def write_config_file(config: OdometryConfig, path: Union[str, Path]):
    """Escreve todos os campos, no formato lido por load_config_file."""
    lines = [f"{key} = {str(value).lower() if isinstance(value, bool) else value}"
             for key, value in config.to_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding='utf-8')
