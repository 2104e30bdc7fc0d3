# tests/test_orbit.py
"""
Tests for trajectory generation and the windowed observable sums.
"""

import math

import pytest

import numpy as np

from src.sensitivity.orbit import (
    OrbitConfig,
    block_sum_spread,
    dump_states,
    generate_orbit,
    load_states,
    windowed_sums,
)
from src.utils.errors import BlowUpError, ConfigError


@pytest.fixture
def orbit_config():
    return OrbitConfig(n_steps=10, n_segments=20, window=4, spinup=50, seed=5, gamma=0.1)


class TestOrbitConfig:
    """Tests for the trajectory layout"""

    @pytest.mark.parametrize('field_name, value', [
        ('n_steps', 0), ('n_segments', 0), ('window', -1), ('spinup', -1), ('warmup', -2),
    ])
    def test_invalid_layout(self, field_name, value):
        config = OrbitConfig(**{field_name: value})
        with pytest.raises(ConfigError):
            config.validate()

    def test_lead_covers_window_and_warmup(self):
        assert OrbitConfig(window=10, warmup=0).lead == 10
        assert OrbitConfig(window=10, warmup=100).lead == 100

    def test_total_steps(self):
        """Test spin-up + lead + A·N + W"""
        config = OrbitConfig(n_steps=20, n_segments=1000, window=10, spinup=1000)
        assert config.total_steps == 1000 + 10 + 20000 + 10


class TestGenerateOrbit:
    """Tests for generate_orbit"""

    def test_layout(self, solenoid, orbit_config):
        """Test stored rows and index accessors"""
        orbit = generate_orbit(solenoid, solenoid.observable(), orbit_config)
        assert orbit.lead == 4
        assert orbit.states.shape == (4 + 200 + 4 + 1, 3)
        assert len(orbit.psi) == 201
        np.testing.assert_array_equal(orbit.state(0), orbit.states[4])
        np.testing.assert_array_equal(orbit.state(1), solenoid.step(orbit.state(0), 0.1))
        np.testing.assert_array_equal(orbit.forcing(1), solenoid.param_vector(orbit.state(0), 0.1))
        assert orbit.segment_states(2).shape == (11, 3)
        np.testing.assert_array_equal(orbit.segment_states(2)[0], orbit.state(20))

    def test_psi_is_windowed_centered_sum(self, solenoid, orbit_config):
        """Test ψ_n = Σ_{m=n-W}^{n+W} (Φ_m − mean) against direct sums"""
        orbit = generate_orbit(solenoid, solenoid.observable(), orbit_config)
        phi = np.array([orbit.state(n)[0] for n in range(-4, 205)])
        mean = np.mean(phi[4:204])
        assert orbit.phi_mean == pytest.approx(mean, rel=1e-14)
        for n in (0, 7, 100, 200):
            direct = math.fsum(phi[n:n + 9] - mean)
            assert orbit.psi[n] == pytest.approx(direct, abs=1e-12)
        assert orbit.psi_check_max < 1e-12

    def test_psi_mean_is_small(self, solenoid):
        """Test |mean ψ| <= 3·std(ψ)/√(AN) on the core steps"""
        config = OrbitConfig(n_steps=10, n_segments=100, window=5, spinup=100, seed=3, gamma=0.1)
        orbit = generate_orbit(solenoid, solenoid.observable(), config)
        psi = orbit.psi[:-1]
        assert abs(np.mean(psi)) <= 3 * np.std(psi) / math.sqrt(orbit.core_steps)

    def test_zero_window(self, solenoid):
        """Test that W = 0 gives ψ_n = Φ_n − mean"""
        config = OrbitConfig(n_steps=5, n_segments=10, window=0, spinup=10, seed=1)
        orbit = generate_orbit(solenoid, solenoid.observable(), config)
        np.testing.assert_allclose(orbit.psi, orbit.phi[:51] - orbit.phi_mean, atol=1e-14)

    def test_determinism(self, solenoid, orbit_config):
        """Test that the seed fixes the trajectory"""
        first = generate_orbit(solenoid, solenoid.observable(), orbit_config)
        second = generate_orbit(solenoid, solenoid.observable(), orbit_config)
        np.testing.assert_array_equal(first.states, second.states)
        np.testing.assert_array_equal(first.psi, second.psi)

        orbit_config.seed = 6
        third = generate_orbit(solenoid, solenoid.observable(), orbit_config)
        assert not np.array_equal(first.states, third.states)

    def test_blow_up_reports_step(self, diverging):
        """Test that overflow raises with the stage and a step index"""
        config = OrbitConfig(n_steps=5, n_segments=4, window=1, spinup=100, seed=0)
        with pytest.raises(BlowUpError) as exc_info:
            generate_orbit(diverging, diverging.observable(), config)
        assert exc_info.value.stage == 'orbit'
        assert exc_info.value.step is not None

    def test_states_in_initial_box_after_wrap(self, solenoid, orbit_config):
        orbit = generate_orbit(solenoid, solenoid.observable(), orbit_config)
        assert np.all(orbit.states[:, 1:] >= 0.0)
        assert np.all(orbit.states[:, 1:] < 2 * np.pi)


class TestWindowedSums:
    """Tests for the running window"""

    def test_matches_direct_sums(self):
        values = np.random.default_rng(0).standard_normal(300)
        psi, worst = windowed_sums(values, offset=5, count=280, window=5, anchor_every=7)
        for n in (0, 1, 13, 280):
            assert psi[n] == pytest.approx(math.fsum(values[n:n + 11]), abs=1e-12)
        assert worst < 1e-12


class TestOrbitHelpers:
    """Tests for orbit dumps and the √N diagnostic"""

    def test_dump_and_load(self, solenoid, orbit_config, tmp_path):
        """Test that both dump formats read back the stored states"""
        orbit = generate_orbit(solenoid, solenoid.observable(), orbit_config)
        for name in ('orbit.csv', 'orbit.bin'):
            path = dump_states(orbit, tmp_path / name)
            np.testing.assert_array_equal(load_states(path, 3), orbit.states)

    def test_bin_layout_is_little_endian_rows(self, solenoid, orbit_config, tmp_path):
        orbit = generate_orbit(solenoid, solenoid.observable(), orbit_config)
        path = dump_states(orbit, tmp_path / 'orbit.bin')
        assert path.stat().st_size == orbit.states.size * 8
        raw = np.fromfile(path, dtype='<f8')
        np.testing.assert_array_equal(raw[:3], orbit.states[0])

    def test_block_sum_spread_of_white_noise(self):
        """Test that block sums of independent noise grow like √L"""
        values = np.random.default_rng(1).standard_normal(40000)
        spread = block_sum_spread(values, 0.0, [10, 100, 1000])
        for value in spread.values():
            assert 0.7 < value < 1.3

    def test_block_sum_spread_skips_long_blocks(self):
        assert block_sum_spread(np.ones(10), 1.0, [20]) == {}

    def test_solenoid_partial_sums_grow_like_sqrt_n(self, solenoid):
        """Test that block sums of Φ − ⟨Φ⟩ scaled by 1/√L stay bounded as L grows"""
        config = OrbitConfig(n_steps=20, n_segments=200, window=2, spinup=100, seed=7, gamma=0.1)
        orbit = generate_orbit(solenoid, solenoid.observable(), config)
        core = orbit.phi[orbit.lead:orbit.lead + orbit.core_steps]
        spread = block_sum_spread(core, orbit.phi_mean, [10, 40, 160])
        assert set(spread) == {10, 40, 160}
        assert max(spread.values()) / min(spread.values()) < 3.0
