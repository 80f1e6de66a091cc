"""
Linha de comandos do occreg.

    occreg run IN_DIR OUT_DIR [--config FICHEIRO] [--no-dynamic-filter] ...
    occreg synth PRESET OUT_DIR --frames N --seed S [--flip ...]
    occreg eval-traj --est A.traj --gt B.traj [--alignment umeyama]
    occreg eval-map --map map.socc --gt-map gt_map.socc [--threshold 0.4]
    occreg info

Códigos de saída: 0 sucesso, 1 erro fatal, 2 execução com frames falhados
(o argparse usa também 2 para erros de utilização).
"""
import argparse
import itertools
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import __version__
from .evaluation.map_metrics import DEFAULT_THRESHOLD, map_metrics
from .evaluation.reports import format_report, write_ape_csv, write_report
from .evaluation.trajectory_metrics import ALIGNMENTS, ape, success_ratio
from .geometry.voxel_grid import VoxelGridSpec
from .orchestrator.odometry import STAGES, OdometryPipeline
from .synth.noise import NoiseModel
from .synth.presets import PRESETS, get_preset
from .synth.scene_file import read_scene
from .synth.sequence import generate_sequence
from .utils.config import THREADS_ENV, OdometryConfig, load_config_file, write_config_file
from .utils.errors import ConfigError, OccRegError
from .utils.occ_io import FORMAT_VERSION, iter_sequence, read_frame, read_trajectory, write_trajectory
from .utils.taxonomy import DEFAULT_TAXONOMY_PATH, default_taxonomy, load_taxonomy

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_FAILED_FRAMES = 2

TRAJECTORY_FILE = 'trajectory.traj'
MAP_FILE = 'map.socc'
METRICS_FILE = 'metrics.csv'
TIMINGS_FILE = 'timings.csv'
MANIFEST_FILE = 'manifest.txt'
CONFIG_FILE = 'config.conf'


def print_separator(char="=", length=72):
    """Imprime separador visual."""
    print(char * length)


def print_header(text):
    """Imprime cabeçalho formatado."""
    print_separator()
    print(f"  {text}")
    print_separator()


class RunManifest:
    """Tudo o que é preciso para reproduzir uma execução."""

    def __init__(self, command: str, config: Dict[str, Any], inputs: Dict[str, str],
                 seed: Optional[int] = None, stage_totals_ms: Optional[Dict[str, float]] = None):
        self.command = command
        self.config = config
        self.inputs = inputs
        self.seed = seed
        self.version = __version__
        self.stage_totals_ms = stage_totals_ms or {}

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {'tool': 'occreg', 'version': self.version, 'command': self.command,
                               'seed': 'none' if self.seed is None else self.seed}
        out.update({f'input.{k}': v for k, v in self.inputs.items()})
        out.update({f'config.{k}': v for k, v in self.config.items()})
        out.update({f'time_ms.{k}': round(v, 3) for k, v in self.stage_totals_ms.items()})
        return out

    def write(self, path: Path):
        write_report(path, self.to_dict(), title="occreg run manifest")


# ===================== CONFIGURAÇÃO =====================

def build_config(args: argparse.Namespace) -> OdometryConfig:
    """Ficheiro de configuração (se dado) com as flags por cima."""
    config = load_config_file(args.config) if args.config else OdometryConfig()
    overrides: Dict[str, Any] = {}
    if args.object_filter:
        overrides['object_filter'] = args.object_filter
    elif args.no_dynamic_filter:
        overrides['object_filter'] = 'none'
    if args.no_semantic_filter:
        overrides['semantic_filter'] = False
    if args.no_pfilter:
        overrides['pfilter'] = False
    if args.coarse_semantic:
        overrides['coarse_semantic'] = True
    for key in ('displacement_threshold', 'pindex_threshold', 'crop_radius', 'motion_model'):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    return config.with_overrides(**overrides) if overrides else config


def configure_logging(args: argparse.Namespace):
    level = logging.INFO
    if getattr(args, 'verbose', False):
        level = logging.DEBUG
    elif getattr(args, 'quiet', False):
        level = logging.WARNING
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s', force=True)


# ===================== COMANDOS =====================

def cmd_run(args: argparse.Namespace) -> int:
    """Odometria sobre uma sequência .socc; escreve trajetória, mapa, métricas e manifesto."""
    config = build_config(args)
    taxonomy = load_taxonomy(args.taxonomy) if args.taxonomy else default_taxonomy()
    out_dir = Path(args.out_dir)

    frames = iter_sequence(args.in_dir, taxonomy.taxonomy_id)
    first, spec = next(frames)
    pipeline = OdometryPipeline(config, taxonomy, spec.voxel_size)
    print_header(f"occreg run: {args.in_dir}")
    for flt in pipeline.get_filter_summary()['filters']:
        print(f"   • {flt['name']} ({flt['symbol']})")

    clouds = itertools.chain([first], (cloud for cloud, _ in frames))
    run = pipeline.run_sequence(clouds, prefetch_size=args.prefetch)

    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory(out_dir / TRAJECTORY_FILE, run.trajectory)
    run.map.export(out_dir / MAP_FILE)
    run.metrics_frame().to_csv(out_dir / METRICS_FILE, index=False)
    run.timings_frame().to_csv(out_dir / TIMINGS_FILE, index=False, float_format='%.3f')
    write_config_file(config, out_dir / CONFIG_FILE)
    if args.save_state:
        run.state.save(args.save_state)

    totals = run.stage_totals()
    RunManifest('run', config.to_dict(),
                {'sequence': str(Path(args.in_dir).resolve()),
                 'taxonomy': str(args.taxonomy or DEFAULT_TAXONOMY_PATH),
                 'voxel_size': spec.voxel_size},
                stage_totals_ms=totals).write(out_dir / MANIFEST_FILE)

    frames_done = len(run.results)
    print(f"\nFrames: {frames_done}  falhados: {len(run.failed_frames)}  "
          f"voxels no mapa: {len(run.map)}")
    print(f"Tempo médio por frame: {totals['total'] / max(frames_done, 1):.1f} ms")
    print(f"Resultados em {out_dir}")
    if run.failed_frames:
        print(f"Frames falhados: {run.failed_frames}")
        return EXIT_FAILED_FRAMES
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    """Gera uma sequência sintética com trajetória e mapa de referência."""
    preset = get_preset(args.preset)
    if args.frames < 2:
        raise ConfigError(f"--frames tem de ser >= 2, recebido {args.frames}")
    world = read_scene(args.scene) if args.scene else preset.world(args.seed)
    spec = VoxelGridSpec(args.voxel_size, args.min_bound, args.dims)
    noise = NoiseModel(args.flip, args.dropout, args.spurious, args.seed,
                       args.range_dropout_start, args.range_dropout_rate)
    sequence = generate_sequence(world, preset.trajectory(args.frames), spec, noise, args.out_dir)
    RunManifest('synth', {'preset': preset.name, 'scene': args.scene or 'none', 'frames': args.frames,
                          **{f'noise.{k}': v for k, v in noise.to_dict().items()},
                          **{f'grid.{k}': v for k, v in spec.to_dict().items()}},
                {'out_dir': str(Path(args.out_dir).resolve())}, seed=args.seed
                ).write(Path(args.out_dir) / MANIFEST_FILE)
    print(f"{len(sequence)} frames de '{world.name}' escritos em {args.out_dir}")
    return EXIT_OK


def cmd_eval_traj(args: argparse.Namespace) -> int:
    """APE de uma ou mais trajetórias; imprime os relatórios e a taxa de sucesso."""
    if len(args.est) != len(args.gt):
        raise ConfigError(f"{len(args.est)} --est para {len(args.gt)} --gt")
    reports = []
    for est_path, gt_path in zip(args.est, args.gt):
        report = ape(read_trajectory(est_path), read_trajectory(gt_path), args.alignment)
        reports.append(report)
        values = {'estimate': est_path, 'ground_truth': gt_path}
        values.update(report.to_dict())
        print(format_report(values), end='')
        if args.csv:
            csv_path = Path(args.csv)
            if len(args.est) > 1:
                csv_path = csv_path.with_name(f"{csv_path.stem}_{len(reports) - 1}{csv_path.suffix}")
            write_ape_csv(csv_path, report)
    print(format_report({'runs': len(reports), 'success_ratio': success_ratio(reports)}), end='')
    return EXIT_OK


def cmd_eval_map(args: argparse.Namespace) -> int:
    """Exatidão, precisão e completude de um mapa exportado face à referência."""
    reconstructed, _ = read_frame(args.map)
    ground_truth, _ = read_frame(args.gt_map)
    metrics = map_metrics(reconstructed.positions, ground_truth.positions, args.threshold)
    values = {'map': args.map, 'ground_truth': args.gt_map}
    values.update(metrics.to_dict())
    print(format_report(values), end='')
    return EXIT_OK


def cmd_info(args: argparse.Namespace) -> int:
    """Versões, formatos, taxonomia, presets e configuração por omissão."""
    taxonomy = default_taxonomy()
    values = {
        'version': __version__,
        'socc_format_version': FORMAT_VERSION,
        'taxonomy': taxonomy.taxonomy_id,
        'labels': len(taxonomy.entries),
        'movable_labels': ','.join(str(v) for v in taxonomy.movable_ids),
        'presets': ','.join(PRESETS),
        'alignments': ','.join(ALIGNMENTS),
        'stages': ','.join(STAGES),
        THREADS_ENV: os.getenv(THREADS_ENV) or 'all',
    }
    values.update({f'default.{k}': v for k, v in OdometryConfig().to_dict().items()})
    print(format_report(values), end='')
    return EXIT_OK


# ===================== PARSER =====================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='occreg',
                                     description="Odometria sobre ocupação semântica 3D e mapa persistente")
    parser.add_argument('--version', action='version', version=f"occreg {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', '-v', action='store_true', help='Mensagens de depuração')
    verbosity.add_argument('--quiet', '-q', action='store_true', help='Só avisos e erros')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Odometria sobre uma sequência .socc')
    run.add_argument('in_dir', help='Diretório com frame_%%06d.socc')
    run.add_argument('out_dir', help='Diretório de resultados')
    run.add_argument('--config', help='Ficheiro key = value com a configuração')
    run.add_argument('--taxonomy', help='Ficheiro de taxonomia (Occ3D-nuScenes por omissão)')
    run.add_argument('--no-dynamic-filter', action='store_true', help='Desativa o Dynamic Object Filter')
    run.add_argument('--no-semantic-filter', action='store_true', help='Desativa o Semantic Label Filter')
    run.add_argument('--no-pfilter', action='store_true', help='Desativa o Voxel PFilter e o downsampling')
    run.add_argument('--object-filter', choices=OdometryConfig.OBJECT_FILTERS,
                     help='Filtro de objetos: dynamic, label (remove classes movíveis) ou none')
    run.add_argument('--coarse-semantic', action='store_true', help='Aplica P_S também na primeira passagem')
    run.add_argument('--displacement-threshold', type=float, help='Limiar de deslocamento (m)')
    run.add_argument('--pindex-threshold', type=float, help='Limiar de p-Index')
    run.add_argument('--crop-radius', type=float, help='Meia-aresta do recorte do mapa (m)')
    run.add_argument('--motion-model', choices=OdometryConfig.MOTION_MODELS, help='Modelo de movimento')
    run.add_argument('--prefetch', type=int, default=4, help='Frames lidos antecipadamente (0 = sem thread)')
    run.add_argument('--save-state', help='Guarda o estado final (.npz)')
    run.set_defaults(func=cmd_run)

    synth = sub.add_parser('synth', help='Gera uma sequência sintética')
    synth.add_argument('preset', help=f"Cena: {', '.join(PRESETS)}")
    synth.add_argument('out_dir', help='Diretório de saída')
    synth.add_argument('--frames', '-n', type=int, default=40, help='Número de frames')
    synth.add_argument('--seed', type=int, default=0, help='Semente (atores e ruído)')
    synth.add_argument('--scene', help='Ficheiro de cena (substitui o mundo do preset)')
    synth.add_argument('--flip', type=float, default=0.0, help='Taxa de troca de rótulos')
    synth.add_argument('--dropout', type=float, default=0.0, help='Taxa de perda de voxels')
    synth.add_argument('--spurious', type=float, default=0.0, help='Voxels espúrios esperados por frame')
    synth.add_argument('--range-dropout-start', type=float, default=float('inf'),
                       help='Distância (m) a partir da qual há perda extra')
    synth.add_argument('--range-dropout-rate', type=float, default=0.0, help='Perda extra por metro')
    synth.add_argument('--voxel-size', type=float, default=0.4, help='Aresta do voxel (m)')
    synth.add_argument('--min-bound', type=float, nargs=3, default=[-40.0, -40.0, -1.0],
                       metavar=('X', 'Y', 'Z'), help='Canto inferior da janela (m)')
    synth.add_argument('--dims', type=int, nargs=3, default=[200, 200, 16],
                       metavar=('NX', 'NY', 'NZ'), help='Voxels por eixo')
    synth.set_defaults(func=cmd_synth)

    eval_traj = sub.add_parser('eval-traj', help='APE de trajetórias')
    eval_traj.add_argument('--est', action='append', required=True, help='Trajetória estimada (repetível)')
    eval_traj.add_argument('--gt', action='append', required=True, help='Trajetória de referência (repetível)')
    eval_traj.add_argument('--alignment', choices=ALIGNMENTS, default='umeyama', help='Alinhamento')
    eval_traj.add_argument('--csv', help='CSV com o APE por frame')
    eval_traj.set_defaults(func=cmd_eval_traj)

    eval_map = sub.add_parser('eval-map', help='Métricas de mapa')
    eval_map.add_argument('--map', required=True, help='Mapa reconstruído (.socc)')
    eval_map.add_argument('--gt-map', required=True, help='Mapa de referência (.socc)')
    eval_map.add_argument('--threshold', type=float, default=DEFAULT_THRESHOLD, help='Limiar (m)')
    eval_map.set_defaults(func=cmd_eval_map)

    info = sub.add_parser('info', help='Versão, formatos e configuração por omissão')
    info.set_defaults(func=cmd_info)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args)
    try:
        return args.func(args)
    except (OccRegError, OSError, ValueError) as e:
        logger.error("[CLI] %s", e)
        print(f"Erro: {e}", file=sys.stderr)
        return EXIT_FATAL
