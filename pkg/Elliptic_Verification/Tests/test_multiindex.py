#!/usr/bin/env python3
"""
Unit tests for multi-index arithmetic, summation domains and the Weyl factor
"""

import math
import sys
import unittest
from pathlib import Path

script_dir = Path(__file__).parent
parent_dir = script_dir.parent
sys.path.append(str(parent_dir))
sys.path.append(str(script_dir))

from seeded_case import SeededTestCase
from etc_functions import relative_error
from exceptions import UsageError, DegenerateParameterError
from multiindex import (as_index, leq, add, subtract, weights, BoxDomain, SimplexDomain, iterate_box,
                        iterate_simplex, weyl_delta, shifted_point, delta_shift, delta_ratio, apply_delta_ratio)
from theta_core import EllipticTerm, theta_eval


class TestIndexArithmetic(unittest.TestCase):
    """Test cases for the componentwise operations"""

    def test_partial_order(self):
        """Test k <= n componentwise"""
        self.assertTrue(leq((0, 1), (1, 1)))
        self.assertFalse(leq((2, 0), (1, 1)))

    def test_add_subtract(self):
        """Test componentwise add and subtract"""
        self.assertEqual(add((1, 2), (3, 4)), (4, 6))
        self.assertEqual(subtract((3, 4), (1, 2)), (2, 2))

    def test_weights(self):
        """Test |k| and the second elementary symmetric function"""
        self.assertEqual(weights((1, 2, 3)), (6, 11))
        self.assertEqual(weights((4,)), (4, 0))

    def test_length_mismatch_is_rejected(self):
        """Test that mismatched lengths are rejected rather than truncated"""
        with self.assertRaises(UsageError):
            leq((0, 1), (1, 1, 1))
        with self.assertRaises(UsageError):
            add((1,), (1, 2))
        with self.assertRaises(UsageError):
            subtract((3, 4, 5), (1, 2))

    def test_empty_index(self):
        """Test that an empty multi-index is rejected"""
        with self.assertRaises(UsageError):
            as_index(())


class TestDomains(unittest.TestCase):
    """Test cases for box and simplex iteration"""

    def test_box_is_lexicographic(self):
        """Test the box order and size"""
        points = list(BoxDomain((1, 2)))
        self.assertEqual(points, [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)])
        self.assertEqual(len(BoxDomain((1, 2))), 6)
        self.assertEqual(list(iterate_box((1, 2))), points)

    def test_negative_box(self):
        """Test that a negative corner is rejected"""
        with self.assertRaises(UsageError):
            BoxDomain((1, -1))

    def test_simplex_size(self):
        """Test |{k >= 0 : |k| <= N}| = C(N + r, r)"""
        for dim in range(1, 4):
            for cap in range(5):
                points = list(SimplexDomain(dim, cap))
                self.assertEqual(len(points), math.comb(cap + dim, dim))
                self.assertEqual(len(SimplexDomain(dim, cap)), len(points))
                self.assertTrue(all(sum(k) <= cap for k in points))
                self.assertEqual(points, sorted(points))

    def test_half_simplex(self):
        """Test the 2|k| <= N domain"""
        points = list(iterate_simplex(2, 5, half_cap=True))
        self.assertEqual(len(points), math.comb(2 + 2, 2))
        self.assertTrue(all(2 * sum(k) <= 5 for k in points))

    def test_simplex_validation(self):
        """Test that dim < 1 is rejected"""
        with self.assertRaises(UsageError):
            SimplexDomain(0, 2)


class TestWeylFactor(SeededTestCase):
    """Test cases for Delta(x; p) and its shifted ratios"""

    def test_rank_one_is_trivial(self):
        """Test that Delta of a single point is one"""
        ctx = self.context()
        self.assertEqual(weyl_delta([self.generic()], ctx), 1 + 0j)

    def test_rank_two(self):
        """Test Delta(x1, x2) = x2 theta(x1 / x2)"""
        ctx = self.context()
        x = self.generic(2)
        expected = x[1] * theta_eval(x[0] / x[1], ctx)
        self.assertLess(relative_error(weyl_delta(x, ctx), expected), 1e-14)

    def test_zero_shift(self):
        """Test that the ratio at k = 0 is one"""
        ctx = self.context()
        x = self.generic(3)
        self.assertLess(abs(delta_ratio(x, ctx.q, 2, (0, 0, 0), ctx) - 1), 1e-14)

    def test_term_ratio_matches_direct_ratio(self):
        """Test apply_delta_ratio against Delta(x q^(mk)) / Delta(x)"""
        ctx = self.context()
        x = self.generic(3)
        for m in (1, 2, 3):
            k = (1, 0, 2)
            term = apply_delta_ratio(EllipticTerm(ctx), x, ctx.q, m, k)
            self.assertLess(relative_error(term.value, delta_ratio(x, ctx.q, m, k, ctx)), 1e-12)

    def test_adjacent_swap_negates(self):
        """Test that exchanging two adjacent entries of x negates Delta"""
        for p_zero in (False, True):
            ctx = self.context(p_zero=p_zero)
            x = self.generic(4)
            delta = weyl_delta(x, ctx)
            for s in range(3):
                swapped = list(x)
                swapped[s], swapped[s + 1] = swapped[s + 1], swapped[s]
                self.assertLess(relative_error(weyl_delta(swapped, ctx), -delta), 1e-12, f"swap at {s}")

    def test_vanishing_denominator_is_degenerate(self):
        """Test that a vanishing factor of Delta(x) raises DegenerateParameterError"""
        ctx = self.context()
        x_1 = self.generic()
        with self.assertRaises(DegenerateParameterError):
            delta_ratio([x_1, x_1, self.generic()], ctx.q, 2, (1, 0, 1), ctx)
        with self.assertRaises(DegenerateParameterError):
            apply_delta_ratio(EllipticTerm(ctx), [x_1, x_1], ctx.q, 1, (1, 0))

    def test_shifted_point(self):
        """Test x_i q^(m k_i)"""
        q = 0.9 + 0.1j
        self.assertEqual(shifted_point([1.0, 2.0], q, 2, (1, 0)), [q ** 2, 2.0])

    def test_length_mismatch(self):
        """Test that point and index lengths must agree"""
        with self.assertRaises(UsageError):
            delta_shift([1.0, 2.0], 0.5, 1, (1,), self.context())


if __name__ == '__main__':
    unittest.main()
