"""
Hierarquia de exceções do occreg.

Todos os erros previsíveis (ficheiros malformados, configuração inválida,
falhas de registo) derivam de OccRegError, para que a CLI os possa tratar
num único ponto.
"""


class OccRegError(Exception):
    """Erro base do pacote."""


# ===================== FICHEIROS .socc =====================

class FrameFormatError(OccRegError):
    """Ficheiro de frame .socc inválido."""


class BadMagicError(FrameFormatError):
    """Os primeiros 4 bytes não são 'SOCC'."""


class VersionMismatchError(FrameFormatError):
    """Versão do formato não suportada."""


class TruncatedFileError(FrameFormatError):
    """O ficheiro termina antes do esperado."""


class IndexRecordError(FrameFormatError):
    """Registo com índice de voxel fora da grelha (ou duplicado)."""


# ===================== OUTROS FORMATOS =====================

class TrajectoryFormatError(OccRegError):
    """Linha malformada, índices não monótonos ou quaternião não unitário."""


class SequenceError(OccRegError):
    """Diretório vazio ou grelhas inconsistentes entre frames."""


class TaxonomyError(OccRegError):
    """Taxonomia de classes inválida."""


class ConfigError(OccRegError):
    """Ficheiro ou valor de configuração inválido."""


class SceneFileError(OccRegError):
    """Ficheiro de cena sintética inválido."""


class PresetError(OccRegError):
    """Preset de cena desconhecido ou parâmetros inválidos."""


# ===================== GEOMETRIA / REGISTO =====================

class DegeneratePoseError(OccRegError):
    """Logaritmo de uma rotação com ângulo próximo de pi."""


class VoxelRangeError(OccRegError):
    """Índice de voxel fora das dimensões da grelha."""


class RegistrationError(OccRegError):
    """Falha do alinhamento GICP."""


class TooFewCorrespondencesError(RegistrationError):
    """Correspondências sobreviventes abaixo do mínimo."""

    def __init__(self, count: int, minimum: int):
        super().__init__(
            f"Apenas {count} correspondências sobreviveram aos filtros (mínimo {minimum})"
        )
        self.count = count
        self.minimum = minimum


class NonFiniteCostError(RegistrationError):
    """Custo não finito (covariâncias degeneradas ou NaN na entrada)."""


class EvaluationError(OccRegError):
    """Interseção vazia ou conjuntos vazios na avaliação."""
