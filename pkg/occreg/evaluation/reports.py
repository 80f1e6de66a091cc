"""
Relatórios de avaliação: linhas `chave: valor` e CSV de APE por frame.
"""
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd

from .trajectory_metrics import ApeReport


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def format_report(values: Dict[str, Any], title: Optional[str] = None) -> str:
    """Relatório plano `chave: valor`, uma entrada por linha, pela ordem dada."""
    lines = [f"# {title}"] if title else []
    lines.extend(f"{key}: {_format_value(value)}" for key, value in values.items())
    return "\n".join(lines) + "\n"


def write_report(path: Union[str, Path], values: Dict[str, Any], title: Optional[str] = None):
    Path(path).write_text(format_report(values, title), encoding='utf-8')


def ape_frame(report: ApeReport) -> pd.DataFrame:
    """Tabela com o APE de cada frame."""
    return pd.DataFrame({
        'frame': report.frame_indices,
        'ape_m': report.errors,
        'rotation_error_deg': report.rotation_errors,
    })


def write_ape_csv(path: Union[str, Path], report: ApeReport):
    ape_frame(report).to_csv(path, index=False, float_format='%.9g')
