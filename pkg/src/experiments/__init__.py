"""
Study drivers reproducing the convergence and parameter-sweep experiments.
"""

from .studies import StudyResult, scaling_a, scaling_w, gamma_sweep

__all__ = ['StudyResult', 'scaling_a', 'scaling_w', 'gamma_sweep']
