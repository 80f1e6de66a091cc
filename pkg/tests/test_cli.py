import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from occreg.cli import EXIT_FATAL, EXIT_OK, main
from occreg.geometry.point_cloud import SemanticPointCloud
from occreg.geometry.pose import Pose
from occreg.geometry.voxel_grid import VoxelGridSpec
from occreg.utils.occ_io import frame_filename, read_trajectory, write_frame

COMPACT = ['--min-bound', '-20', '-20', '-1', '--dims', '100', '100', '16']

# pontos da sala a 0.25 m caem exatamente nos centros desta grelha
ROOM_SPEC = VoxelGridSpec(0.25, (-5.625, -5.625, -0.125), (45, 45, 14))


def write_room_sequence(directory, room_cloud, n=3, step=0.25):
    # as paredes e a caixa repetem pontos nas arestas; um .socc tem um registo por voxel
    _, first = np.unique(room_cloud.positions, axis=0, return_index=True)
    room = room_cloud.subset(np.sort(first))
    directory.mkdir(parents=True, exist_ok=True)
    for k in range(n):
        ego = Pose(translation=(step * k, 0.0, 0.0))
        cloud = SemanticPointCloud(ego.inverse().apply(room.positions), room.labels, k)
        write_frame(directory / frame_filename(k), cloud, ROOM_SPEC)
    return directory


def report_values(text):
    values = {}
    for line in text.splitlines():
        if ': ' in line and not line.startswith('#'):
            key, value = line.split(': ', 1)
            values[key] = value
    return values


class TestInfo:
    def test_prints_defaults(self, capsys):
        assert main(['info']) == EXIT_OK
        values = report_values(capsys.readouterr().out)
        assert values['socc_format_version'] == '1'
        assert values['presets'] == 'urban-block,dynamic-traffic,slip-road,parked-bus'
        assert values['alignments'] == 'none,first,umeyama'
        assert 'default.displacement_threshold' in values


class TestSynth:
    def test_writes_sequence(self, tmp_path, capsys):
        out = tmp_path / 'seq'
        assert main(['synth', 'urban-block', str(out), '--frames', '3', '--seed', '1'] + COMPACT) == EXIT_OK
        for name in ('frame_000000.socc', 'frame_000002.socc', 'gt.traj', 'gt_map.socc', 'manifest.txt'):
            assert (out / name).exists()
        assert len(read_trajectory(out / 'gt.traj')) == 3
        manifest = report_values((out / 'manifest.txt').read_text(encoding='utf-8'))
        assert manifest['seed'] == '1'
        assert manifest['config.preset'] == 'urban-block'

    def test_too_few_frames(self, tmp_path):
        assert main(['synth', 'urban-block', str(tmp_path / 'seq'), '--frames', '0']) == EXIT_FATAL

    def test_unknown_preset(self, tmp_path):
        assert main(['synth', 'harbour', str(tmp_path / 'seq')]) == EXIT_FATAL


class TestRun:
    def test_writes_results(self, tmp_path, room_cloud, capsys):
        seq = write_room_sequence(tmp_path / 'seq', room_cloud)
        out = tmp_path / 'out'
        code = main(['run', str(seq), str(out), '--prefetch', '0', '--save-state', str(tmp_path / 'state.npz')])
        assert code == EXIT_OK
        for name in ('trajectory.traj', 'map.socc', 'metrics.csv', 'timings.csv', 'config.conf', 'manifest.txt'):
            assert (out / name).exists()
        assert (tmp_path / 'state.npz').exists()

        trajectory = read_trajectory(out / 'trajectory.traj')
        assert [i for i, _ in trajectory] == [0, 1, 2]
        for k, pose in trajectory:
            assert_allclose(pose.translation, [0.25 * k, 0.0, 0.0], atol=0.01)
        metrics = pd.read_csv(out / 'metrics.csv')
        assert list(metrics['failed']) == [0, 0, 0]
        manifest = report_values((out / 'manifest.txt').read_text(encoding='utf-8'))
        assert manifest['command'] == 'run'
        assert float(manifest['input.voxel_size']) == 0.25

    def test_flags_reach_config(self, tmp_path, room_cloud):
        seq = write_room_sequence(tmp_path / 'seq', room_cloud, n=2)
        out = tmp_path / 'out'
        assert main(['run', str(seq), str(out), '--prefetch', '0', '--no-dynamic-filter',
                     '--pindex-threshold', '0.3']) == EXIT_OK
        conf = (out / 'config.conf').read_text(encoding='utf-8')
        assert 'object_filter = none' in conf
        assert 'pindex_threshold = 0.3' in conf

    def test_empty_first_frame(self, tmp_path):
        seq = tmp_path / 'seq'
        seq.mkdir()
        write_frame(seq / frame_filename(0), SemanticPointCloud.empty(0), ROOM_SPEC)
        assert main(['run', str(seq), str(tmp_path / 'out'), '--prefetch', '0']) == EXIT_FATAL

    def test_missing_directory(self, tmp_path):
        assert main(['run', str(tmp_path / 'nada'), str(tmp_path / 'out')]) == EXIT_FATAL


class TestEvaluate:
    @pytest.fixture
    def sequence(self, tmp_path):
        out = tmp_path / 'seq'
        main(['synth', 'urban-block', str(out), '--frames', '3'] + COMPACT)
        return out

    def test_eval_traj_against_itself(self, sequence, tmp_path, capsys):
        gt = str(sequence / 'gt.traj')
        csv = tmp_path / 'ape.csv'
        assert main(['eval-traj', '--est', gt, '--gt', gt, '--csv', str(csv)]) == EXIT_OK
        values = report_values(capsys.readouterr().out)
        assert float(values['ape_rmse_m']) == pytest.approx(0.0, abs=1e-6)
        assert values['success_ratio'] == '1.000000'
        assert len(pd.read_csv(csv)) == 3

    def test_eval_traj_mismatched_lists(self, sequence):
        gt = str(sequence / 'gt.traj')
        assert main(['eval-traj', '--est', gt, '--est', gt, '--gt', gt]) == EXIT_FATAL

    def test_bad_alignment(self, sequence):
        gt = str(sequence / 'gt.traj')
        with pytest.raises(SystemExit) as info:
            main(['eval-traj', '--est', gt, '--gt', gt, '--alignment', 'sim3'])
        assert info.value.code == 2

    def test_eval_map_against_itself(self, sequence, capsys):
        gt_map = str(sequence / 'gt_map.socc')
        assert main(['eval-map', '--map', gt_map, '--gt-map', gt_map]) == EXIT_OK
        values = report_values(capsys.readouterr().out)
        assert float(values['accuracy_m']) == 0.0
        assert float(values['precision']) == 1.0
        assert float(values['completion_ratio']) == 1.0
