# tests/test_studies.py
"""
Tests for the A and W scaling studies and the γ sweep.
"""

import math

import pytest

from src.config.settings import RunConfig
from src.experiments.studies import GAMMA_SWEEP_COLUMNS, gamma_sweep, scaling_a, scaling_w
from src.utils.errors import ConfigError
from src.utils.output import read_csv_rows


class TestScalingStudies:
    """Tests for scaling_a and scaling_w"""

    def test_identical_seeds_have_no_spread(self, solenoid, small_config):
        result = scaling_a(solenoid, solenoid.observable(), small_config, a_list=[20, 30], seeds=[4, 4, 4, 4])
        assert result.header == ['A', 'mean', 'std']
        assert result.column('A') == [20, 30]
        assert result.column('std') == [0.0, 0.0]
        assert 'loglog_slope' not in result.summary

    def test_single_value_has_no_slope(self, affine, affine_config):
        result = scaling_w(affine, affine.observable(), affine_config, w_list=[10], reps=4)
        assert len(result.rows) == 1
        assert result.column('mean')[0] == pytest.approx(2.0, abs=1e-6)
        assert not any(line.startswith('loglog_slope') for line in result.trailer)

    def test_needs_enough_replicas(self, affine, affine_config):
        with pytest.raises(ConfigError):
            scaling_a(affine, affine.observable(), affine_config, a_list=[50], reps=3)
        with pytest.raises(ConfigError):
            scaling_a(affine, affine.observable(), affine_config, a_list=[], reps=4)

    def test_csv_output(self, affine, affine_config, tmp_path):
        result = scaling_a(affine, affine.observable(), affine_config, a_list=[20, 40], reps=4)
        path = tmp_path / 'scaling.csv'
        result.write(path, affine_config.to_dict())
        rows = read_csv_rows(path)
        assert [int(row['A']) for row in rows] == [20, 40]


class TestGammaSweep:
    """Tests for gamma_sweep"""

    def test_contracting_affine(self, affine, affine_config):
        result = gamma_sweep(affine, affine.observable(), affine_config, gamma_list=[0.0, 0.1, 0.3], workers=2)
        assert result.header == GAMMA_SWEEP_COLUMNS
        assert result.column('gamma') == [0.0, 0.1, 0.3]
        assert result.column('flr_derivative') == pytest.approx([2.0] * 3, abs=1e-6)
        assert result.column('mean_phi') == pytest.approx([0.0, 0.2, 0.6], abs=1e-10)
        assert result.summary['fd_slope'] == pytest.approx(2.0, abs=1e-8)
        assert result.column('fd_fit') == pytest.approx([0.0, 0.2, 0.6], abs=1e-8)

    def test_tangent_segments(self, affine, affine_config):
        """Test that each tangent segment spans half the smallest grid spacing on each side"""
        result = gamma_sweep(affine, affine.observable(), affine_config, gamma_list=[0.0, 0.1, 0.3], workers=1)
        row = dict(zip(result.header, result.rows[1]))
        assert row['tangent_gamma_lo'] == pytest.approx(0.05)
        assert row['tangent_gamma_hi'] == pytest.approx(0.15)
        assert row['tangent_phi_lo'] == pytest.approx(0.1, abs=1e-6)
        assert row['tangent_phi_hi'] == pytest.approx(0.3, abs=1e-6)

    def test_failed_cell_is_reported(self, affine, affine_config):
        """Test that a failing γ leaves NaN in its row and a trailer line"""
        cfg = affine_config.with_overrides(unstable_dim=1)
        result = gamma_sweep(affine, affine.observable(), cfg, gamma_list=[0.0, 0.1], workers=1)
        assert all(math.isnan(d) for d in result.column('flr_derivative'))
        assert sum('failed' in line for line in result.trailer) == 2

    def test_needs_two_values(self, affine, affine_config):
        with pytest.raises(ConfigError):
            gamma_sweep(affine, affine.observable(), affine_config, gamma_list=[0.1])


@pytest.mark.slow
class TestScalingLaws:
    """Statistical scaling of the replica spread on the solenoid"""

    def test_std_decays_with_segment_count(self, solenoid):
        cfg = RunConfig(log_to_file=False)
        result = scaling_a(solenoid, solenoid.observable(), cfg)
        assert -0.7 <= result.summary['loglog_slope'] <= -0.3

    def test_std_grows_with_window(self, solenoid):
        cfg = RunConfig(log_to_file=False)
        result = scaling_w(solenoid, solenoid.observable(), cfg)
        assert 0.3 <= result.summary['loglog_slope'] <= 0.7
        std_at_10 = dict(zip(result.column('W'), result.column('std')))[10]
        assert 0.016 / 3 <= std_at_10 <= 0.016 * 3
