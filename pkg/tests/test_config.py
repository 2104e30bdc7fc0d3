# tests/test_config.py
"""
Tests for RunConfig and the YAML configuration loader.
"""

import pytest

from linear_response_pipeline import main
from src.config import settings
from src.config.settings import ConfigManager, RunConfig, initialize_config
from src.utils.errors import ConfigError


class TestRunConfig:
    """Tests for RunConfig"""

    def test_defaults(self):
        cfg = RunConfig()
        assert (cfg.n_steps, cfg.n_segments, cfg.window) == (20, 1000, 10)
        assert cfg.gamma == 0.1
        assert cfg.reps == 8
        assert cfg.unstable_dim is None
        assert len(cfg.gamma_list) == 16
        assert cfg.gamma_list[-1] == pytest.approx(0.30)
        assert cfg.validate() is cfg

    @pytest.mark.parametrize('overrides', [
        {'n_segments': 0},
        {'n_steps': 0},
        {'window': -1},
        {'reps': 0},
        {'unstable_dim': -1},
        {'gamma': float('nan')},
        {'discard_segments': 1000},
        {'a_list': [125, 0]},
        {'log_level': 'LOUD'},
        {'workers': 0},
    ])
    def test_invalid_values(self, overrides):
        with pytest.raises(ConfigError):
            RunConfig(**overrides).validate()

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigError, match='segmentz'):
            RunConfig.from_dict({'segmentz': 10})

    def test_with_overrides_keeps_none(self):
        cfg = RunConfig(gamma=0.2).with_overrides(gamma=None, n_segments=50)
        assert cfg.gamma == 0.2
        assert cfg.n_segments == 50

    def test_with_overrides_validates(self):
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(n_segments=0)
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(bogus=1)

    def test_resolve_workers(self, monkeypatch):
        """Test the order: explicit value, then FLR_WORKERS, then the CPU count"""
        monkeypatch.setenv('FLR_WORKERS', '3')
        assert RunConfig(workers=5).resolve_workers() == 5
        assert RunConfig().resolve_workers() == 3

        monkeypatch.setenv('FLR_WORKERS', 'many')
        with pytest.raises(ConfigError):
            RunConfig().resolve_workers()

        monkeypatch.delenv('FLR_WORKERS')
        assert RunConfig().resolve_workers() >= 1

    def test_to_dict_round_trip(self):
        cfg = RunConfig(map_name='expanding_circle', w_list=[1, 2])
        assert RunConfig.from_dict(cfg.to_dict()) == cfg


class TestConfigManager:
    """Tests for ConfigManager"""

    def test_explicit_file(self, tmp_path):
        path = tmp_path / 'run.yml'
        path.write_text("map_name: expanding_circle\ngamma: 0.3\nn_segments: 200\n")
        manager = ConfigManager(str(path))
        assert manager.run_config.map_name == 'expanding_circle'
        assert manager.run_config.gamma == 0.3
        assert manager.run_config.n_steps == 20

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ConfigManager(str(tmp_path / 'absent.yml'))

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / 'empty.yml'
        path.write_text("")
        assert ConfigManager(str(path)).run_config == RunConfig()

    @pytest.mark.parametrize('text', ["- 1\n- 2\n", "gamma: [unclosed\n", "unknown_key: 1\n", "n_steps: 0\n"])
    def test_bad_files(self, tmp_path, text):
        path = tmp_path / 'bad.yml'
        path.write_text(text)
        with pytest.raises(ConfigError):
            ConfigManager(str(path))

    def test_packaged_defaults_match_dataclass(self, tmp_path, monkeypatch):
        """Test that the shipped defaults.yml agrees with the RunConfig defaults"""
        monkeypatch.chdir(tmp_path)
        monkeypatch.setenv('HOME', str(tmp_path))
        manager = ConfigManager()
        assert manager.config_file.name == 'defaults.yml'
        assert manager.run_config == RunConfig()

    def test_reload(self, tmp_path):
        path = tmp_path / 'run.yml'
        path.write_text("gamma: 0.2\n")
        manager = initialize_config(str(path))
        assert settings.get_config() is manager
        path.write_text("gamma: 0.25\n")
        manager.reload_config()
        assert manager.run_config.gamma == 0.25


class TestValueTypes:
    """Tests for converting YAML values to the declared field types"""

    def test_exponent_without_dot_is_a_number(self, tmp_path):
        """Test that `gamma: 1e-1`, which YAML reads as a string, loads as 0.1"""
        path = tmp_path / 'run.yml'
        path.write_text("gamma: 1e-1\n")
        cfg = ConfigManager(str(path)).run_config
        assert cfg.gamma == 0.1
        assert isinstance(cfg.gamma, float)

    def test_quoted_integer(self, tmp_path):
        path = tmp_path / 'run.yml'
        path.write_text('n_steps: "20"\nspinup: 1e3\n')
        cfg = ConfigManager(str(path)).run_config
        assert cfg.n_steps == 20 and isinstance(cfg.n_steps, int)
        assert cfg.spinup == 1000 and isinstance(cfg.spinup, int)

    def test_lists_are_converted(self):
        cfg = RunConfig.from_dict({'gamma_list': [0, '5e-2', 0.1], 'a_list': ['125', 250],
                                   'oracle_gamma_grid': None, 'store_trajectory': 'yes'})
        assert cfg.gamma_list == [0.0, 0.05, 0.1]
        assert all(isinstance(g, float) for g in cfg.gamma_list)
        assert cfg.a_list == [125, 250]
        assert cfg.store_trajectory is True

    @pytest.mark.parametrize('data', [
        {'n_steps': 'twenty'},
        {'n_steps': 20.5},
        {'n_steps': True},
        {'gamma': 'abc'},
        {'gamma': [0.1]},
        {'a_list': 125},
        {'w_list': [2, 'five']},
        {'store_trajectory': 'maybe'},
        {'map_name': 7},
        {'spinup': None},
    ])
    def test_wrong_types(self, data):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(data)

    def test_wrong_type_is_a_configuration_error_on_the_command_line(self, tmp_path, capsys):
        """Test that a badly typed file exits with the configuration error code"""
        path = tmp_path / 'run.yml'
        path.write_text("gamma: abc\nlog_to_file: false\n")
        assert main(['run', '--config', str(path)]) == 2
        assert 'gamma' in capsys.readouterr().err
