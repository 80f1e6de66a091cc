import pytest

from occreg.utils.config import (THREADS_ENV, GicpConfig, OdometryConfig, get_workers, load_config_file,
                                 write_config_file)
from occreg.utils.errors import ConfigError
from occreg.utils.taxonomy import DATA_DIR


class TestOdometryConfig:
    def test_defaults(self):
        config = OdometryConfig()
        assert config.displacement_threshold == 2.0
        assert config.pindex_threshold == 0.5
        assert config.object_filter == 'dynamic'
        assert config.coarse.max_corr_dist == 1.0

    def test_to_dict_prefixes(self):
        values = OdometryConfig().to_dict()
        assert values['coarse.max_iterations'] == 30
        assert values['refine.k_neighbors'] == 20
        assert 'pfilter' in values

    def test_from_dict_coerces_text(self):
        config = OdometryConfig.from_dict({'pfilter': 'false', 'refine.max_iterations': '12',
                                           'pindex_threshold': '0.25'})
        assert config.pfilter is False
        assert config.refine.max_iterations == 12
        assert config.pindex_threshold == 0.25

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            OdometryConfig.from_dict({'voxel_magic': 1})

    @pytest.mark.parametrize('key,value', [('pfilter', 'talvez'), ('downsample_period', '2.5'),
                                           ('object_filter', 'all'), ('displacement_threshold', '-1')])
    def test_invalid_values(self, key, value):
        with pytest.raises(ConfigError):
            OdometryConfig.from_dict({key: value})

    def test_infinite_threshold_allowed(self):
        assert OdometryConfig(displacement_threshold=float('inf')).displacement_threshold == float('inf')

    def test_with_overrides_keeps_other_fields(self):
        config = OdometryConfig(crop_radius=30.0).with_overrides(object_filter='label')
        assert config.object_filter == 'label'
        assert config.crop_radius == 30.0

    def test_gicp_copy(self):
        gicp = GicpConfig().copy(max_corr_dist=2.5)
        assert gicp.max_corr_dist == 2.5
        with pytest.raises(ConfigError):
            GicpConfig(max_iterations=0)


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        config = OdometryConfig(object_filter='none', coarse_semantic=True,
                                coarse=GicpConfig(max_corr_dist=1.5))
        write_config_file(config, tmp_path / 'a.conf')
        assert load_config_file(tmp_path / 'a.conf').to_dict() == config.to_dict()

    def test_shipped_defaults_match_code(self):
        assert load_config_file(DATA_DIR / 'default.conf').to_dict() == OdometryConfig().to_dict()

    def test_comments_ignored(self, tmp_path):
        path = tmp_path / 'b.conf'
        path.write_text("# teste\npindex_threshold = 0.7\n")
        assert load_config_file(path).pindex_threshold == 0.7

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config_file(tmp_path / 'nada.conf')

    def test_invalid_utf8(self, tmp_path):
        path = tmp_path / 'bin.conf'
        path.write_bytes(b'pindex_threshold = \xff\xfe\n')
        with pytest.raises(ConfigError):
            load_config_file(path)


class TestWorkers:
    def test_default_all_cores(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert get_workers() == -1

    def test_from_environment(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, '2')
        assert get_workers() == 2

    @pytest.mark.parametrize('raw', ['zero', '0', '-5'])
    def test_invalid(self, monkeypatch, raw):
        monkeypatch.setenv(THREADS_ENV, raw)
        with pytest.raises(ConfigError):
            get_workers()
