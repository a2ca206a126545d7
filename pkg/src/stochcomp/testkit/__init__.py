"""Slow, independent reference implementations used by the test-suite.

Nothing here imports from the rest of the package.
"""

from .oracles import FiniteHmm, brute_force_loglik, death_process_moments, enumerate_one_step, forward_loglik

__all__ = ["FiniteHmm", "forward_loglik", "brute_force_loglik", "death_process_moments", "enumerate_one_step"]
