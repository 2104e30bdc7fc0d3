# tests/test_numerics.py
"""
Tests for the shared numerical helpers and the output writers.
"""

import io
import json

import pytest

import numpy as np

from src.utils.numerics import (
    CompensatedSum,
    central_difference,
    loglog_slope,
    positive_qr,
    relative_discrepancy,
    trapezoid_sum,
)
from src.utils.output import config_hash, dumps_json, read_csv_rows, save_json, write_csv


class TestTrapezoidSum:
    """Tests for the end-point weighted sum"""

    def test_half_weights_at_ends(self):
        assert trapezoid_sum([1.0, 2.0, 3.0]) == 4.0

    def test_vector_values(self):
        total = trapezoid_sum([np.array([1.0, 0.0]), np.array([1.0, 1.0]), np.array([1.0, 2.0])])
        np.testing.assert_array_equal(total, [2.0, 2.0])

    def test_degenerate_lengths(self):
        assert trapezoid_sum([]) == 0.0
        assert trapezoid_sum([5.0]) == 5.0

    def test_compensation(self):
        """Test that a million small terms do not drift"""
        acc = CompensatedSum()
        for _ in range(10 ** 6):
            acc.add(0.1)
        assert acc.value == pytest.approx(1e5, rel=1e-15)
        assert acc.count == 10 ** 6


class TestPositiveQr:
    """Tests for the sign-fixed QR"""

    def test_reconstruction_and_signs(self):
        matrix = np.random.default_rng(0).standard_normal((5, 3))
        Q, R = positive_qr(matrix)
        np.testing.assert_allclose(Q @ R, matrix, atol=1e-12)
        np.testing.assert_allclose(Q.T @ Q, np.eye(3), atol=1e-12)
        assert np.all(np.diag(R) > 0)
        np.testing.assert_array_equal(np.tril(R, -1), 0.0)

    def test_negated_input_gives_same_r(self):
        matrix = np.random.default_rng(1).standard_normal((4, 2))
        _, R = positive_qr(matrix)
        _, R_neg = positive_qr(-matrix)
        np.testing.assert_allclose(R, R_neg, atol=1e-12)

    def test_empty(self):
        Q, R = positive_qr(np.zeros((3, 0)))
        assert Q.shape == (3, 0)
        assert R.shape == (0, 0)


class TestHelpers:
    """Tests for the small numerical helpers"""

    def test_central_difference_is_exact_on_quadratics(self):
        derivative = central_difference(lambda h: np.array([1.0 + 3.0 * h + h ** 2]), 0.1)
        assert derivative[0] == pytest.approx(3.0)

    def test_relative_discrepancy(self):
        assert relative_discrepancy([0.0], [0.0]) == 0.0
        assert relative_discrepancy([10.0, 0.0], [9.0, 0.0]) == pytest.approx(0.1)
        assert relative_discrepancy([1e-3], [2e-3]) == pytest.approx(1e-3)

    def test_loglog_slope(self):
        xs = [125, 250, 500, 1000]
        assert loglog_slope(xs, [x ** -0.5 for x in xs]) == pytest.approx(-0.5)


class TestOutput:
    """Tests for the JSON and CSV writers"""

    def test_config_hash_is_order_independent(self):
        first = config_hash({'gamma': 0.1, 'n_steps': 20})
        second = config_hash({'n_steps': 20, 'gamma': 0.1})
        assert first == second
        assert len(first) == 64
        assert config_hash({'gamma': 0.2, 'n_steps': 20}) != first

    def test_numpy_values_hash_like_builtins(self):
        assert config_hash({'a': np.float64(0.5), 'b': np.arange(2)}) == config_hash({'a': 0.5, 'b': [0, 1]})

    def test_csv_layout(self, tmp_path):
        """Test the hash line, CRLF line ends, the header and the trailer"""
        path = tmp_path / 'study.csv'
        stream = io.StringIO(newline='')
        text = write_csv(path, ['A', 'mean'], [[125, 0.5], [250, np.float64(0.25)]], {'gamma': 0.1},
                         trailer=['loglog_slope=-1.0'], stream=stream)
        lines = text.split('\r\n')
        assert lines[0] == f"# config_hash={config_hash({'gamma': 0.1})}"
        assert lines[1] == 'A,mean'
        assert lines[2] == '125,0.5'
        assert lines[3] == '250,0.25'
        assert lines[4] == '# loglog_slope=-1.0'
        assert stream.getvalue() == text
        with open(path, newline='') as f:
            assert f.read() == text

        rows = read_csv_rows(path)
        assert rows == [{'A': '125', 'mean': '0.5'}, {'A': '250', 'mean': '0.25'}]

    def test_csv_without_file(self):
        text = write_csv(None, ['x'], [], {})
        assert text.endswith('x\r\n')

    def test_save_json_creates_directories(self, tmp_path):
        path = save_json({'value': np.float64(2.0)}, tmp_path / 'nested' / 'out.json')
        assert path.read_text().strip().startswith('{')

    def test_non_finite_values_become_null(self, tmp_path):
        """Test that NaN and inf are written as null so the output stays valid JSON"""
        data = {'mean': float('nan'), 'values': np.array([1.0, np.inf]), 'std': np.float64('nan')}
        assert json.loads(dumps_json(data)) == {'mean': None, 'values': [1.0, None], 'std': None}
        path = save_json(data, tmp_path / 'out.json')
        assert json.loads(path.read_text())['mean'] is None
