"""Avaliação: APE de trajetórias e métricas de mapa."""
from .map_metrics import DEFAULT_THRESHOLD, MapMetrics, map_metrics, nearest_distances
from .reports import ape_frame, format_report, write_ape_csv, write_report
from .trajectory_metrics import ALIGNMENTS, SUCCESS_THRESHOLD, ApeReport, align_umeyama, ape, success_ratio

__all__ = [
    'DEFAULT_THRESHOLD', 'MapMetrics', 'map_metrics', 'nearest_distances',
    'ape_frame', 'format_report', 'write_ape_csv', 'write_report',
    'ALIGNMENTS', 'SUCCESS_THRESHOLD', 'ApeReport', 'align_umeyama', 'ape', 'success_ratio',
]
