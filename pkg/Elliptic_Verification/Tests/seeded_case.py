"""
seeded_case.py - Shared fixed-seed base case for the verification tests
"""

import sys
import unittest
from pathlib import Path

import numpy as np

script_dir = Path(__file__).parent
parent_dir = script_dir.parent
sys.path.append(str(parent_dir))

from theta_core import EllipticContext

SEED = 3856349111


class SeededTestCase(unittest.TestCase):
    """
    Base class providing a numpy generator of fixed state for each test.
    If an inheriting class overrides setUp, call SeededTestCase.setUp via super.
    """

    def setUp(self):
        self.rng = np.random.default_rng(SEED)

    def generic(self, count=None, low=0.7, high=1.3):
        """Random complex values with moduli in [low, high] and uniform phases"""
        size = 1 if count is None else count
        values = [complex(v) for v in self.rng.uniform(low, high, size)
                  * np.exp(2j * np.pi * self.rng.uniform(0.0, 1.0, size))]
        return values[0] if count is None else values

    def context(self, p_zero=False, p_max=0.3):
        p = 0j if p_zero else complex(self.rng.uniform(0.05, p_max) * np.exp(2j * np.pi * self.rng.uniform()))
        return EllipticContext(p, self.generic(low=0.8, high=1.2))
