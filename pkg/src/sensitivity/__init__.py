"""
Linear response machinery.

Usage:
    from src.sensitivity import compute_response

    report = compute_response(system, system.observable(), run_config)
"""

from .orbit import Orbit, OrbitConfig, generate_orbit
from .tangent import TangentSweep, SegmentRecord, run_tangent_sweep, lyapunov_exponents
from .shadow import ShadowingSolution, NilssProblem, solve_nilss, shadowing_contribution
from .curvature import CurvatureResult, second_order_pass, unstable_contribution
from .response import ResponseReport, ReplicateSummary, compute_response, replicate
from .oracle import FdOracleConfig, FdRegressionResult, fd_regression, analytic_derivative

__all__ = [
    'Orbit',
    'OrbitConfig',
    'generate_orbit',
    'TangentSweep',
    'SegmentRecord',
    'run_tangent_sweep',
    'lyapunov_exponents',
    'ShadowingSolution',
    'NilssProblem',
    'solve_nilss',
    'shadowing_contribution',
    'CurvatureResult',
    'second_order_pass',
    'unstable_contribution',
    'ResponseReport',
    'ReplicateSummary',
    'compute_response',
    'replicate',
    'FdOracleConfig',
    'FdRegressionResult',
    'fd_regression',
    'analytic_derivative',
]
