#!/usr/bin/env python3
"""
Unit tests for the Bailey pairs produced by the geometric inversions
"""

import sys
import unittest
from pathlib import Path

script_dir = Path(__file__).parent
parent_dir = script_dir.parent
sys.path.append(str(parent_dir))
sys.path.append(str(script_dir))

from seeded_case import SeededTestCase
from constants import PAIR_TOL, QUARTIC_FORMS_TOL
from etc_functions import relative_error, half_power
from exceptions import ConstraintViolationError, UsageError
from bailey_pairs import (DERIVATIONS, AR_QUADRATIC_2_PAIR, DR_CUBIC_PAIR, DR_QUARTIC_PAIR, NEW_AR_JACKSON_PAIR,
                          BaileyPairSpec, quartic_b_first, quartic_b_second,
                          pair_sequences, bailey_pair_sides, bailey_pair_residual, inverse_pair_residual,
                          quartic_b_forms_residual, pair_catalog_rows, check_pair)
from inversions import GEOM_AR_POS, GEOM_BCR

CORNERS = {1: [(0,), (1,), (2,), (4,)], 2: [(1, 0), (1, 1), (2, 1), (2, 2)]}


class TestBaileyPairs(SeededTestCase):
    """Test cases for sum_k F_nk a_k = b_n"""

    def spec(self, derivation, r, flip_root=False):
        _, _, names, _ = DERIVATIONS[derivation]
        params = {name: self.generic() for name in names}
        params['x'] = self.generic(r)
        return BaileyPairSpec(derivation, params, flip_root=flip_root)

    def test_catalog(self):
        """Test the six derivations"""
        rows = pair_catalog_rows()
        self.assertEqual(len(rows), 6)
        self.assertEqual({row['id'] for row in rows}, set(DERIVATIONS))

    def test_all_pairs(self):
        """Test every derivation for r = 1, 2 and |n| <= 4"""
        for derivation in DERIVATIONS:
            for r, corners in CORNERS.items():
                for n in corners:
                    ctx = self.context()
                    residual = bailey_pair_residual(self.spec(derivation, r), n, ctx)
                    self.assertLess(residual, PAIR_TOL, f"{derivation} r={r} n={n}")

    def test_inverse_relation(self):
        """Test sum_k G_nk b_k = a_n"""
        for derivation in DERIVATIONS:
            for n in [(2,), (1, 1)]:
                ctx = self.context()
                residual = inverse_pair_residual(self.spec(derivation, len(n)), n, ctx)
                self.assertLess(residual, PAIR_TOL, f"{derivation} n={n}")

    def test_quartic_other_root(self):
        """Test the quartic pair on the other branch of q^(1/2)"""
        for n in [(1,), (2,), (1, 1)]:
            ctx = self.context()
            residual = bailey_pair_residual(self.spec(DR_QUARTIC_PAIR, len(n), flip_root=True), n, ctx)
            self.assertLess(residual, PAIR_TOL)

    def test_quartic_b_forms_agree(self):
        """Test the two closed forms of the quartic b_k on both branches"""
        for flip_root in (False, True):
            for k in [(0,), (1,), (3,), (1, 0), (1, 2)]:
                ctx = self.context()
                residual = quartic_b_forms_residual(self.generic(len(k)), k, ctx, flip_root)
                self.assertLess(residual, QUARTIC_FORMS_TOL, f"k={k} flip={flip_root}")

    def test_quartic_b_forms_at_zero(self):
        """Test that both quartic b_k forms are 1 at k = 0"""
        for flip_root in (False, True):
            for r in (1, 2):
                ctx = self.context()
                root = half_power(ctx.q, 1, flip_root)
                x = self.generic(r)
                self.assertLess(abs(quartic_b_first(x, (0,) * r, ctx, root) - 1), 1e-14)
                self.assertLess(abs(quartic_b_second(x, (0,) * r, ctx, root) - 1), 1e-14)

    def test_quartic_b_forms_trigonometric_value(self):
        """Test both quartic b_k forms against the expanded value for r = 1, k = 1 at p = 0"""
        ctx = self.context(p_zero=True)
        q = ctx.q
        root = half_power(q, 1)
        x = self.generic()
        y = 1j * root / x
        z = q / y
        expected = (2 * (1 + q) * (1 + q * q) * (1 - x * x * q ** 4)
                    / ((1 - z * q) * (1 - z * q * q) * (1 - z * q ** 3) * (1 - y / q)))
        self.assertLess(relative_error(quartic_b_first([x], (1,), ctx, root), expected), 1e-12)
        self.assertLess(relative_error(quartic_b_second([x], (1,), ctx, root), expected), 1e-12)

    def test_cubic_pair_trigonometric(self):
        """Test the cubic pair at p = 0"""
        for n in [(1,), (3,), (1, 1), (2, 1)]:
            ctx = self.context(p_zero=True)
            residual = bailey_pair_residual(self.spec(DR_CUBIC_PAIR, len(n)), n, ctx)
            self.assertLess(residual, PAIR_TOL, f"n={n}")

    def test_zero_corner(self):
        """Test that a_0 = b_0"""
        ctx = self.context()
        spec = self.spec(NEW_AR_JACKSON_PAIR, 2)
        a_0, b_0 = pair_sequences(spec, (0, 0), ctx)
        self.assertLess(abs(a_0 - b_0), 1e-14)
        value, b_n, _ = bailey_pair_sides(spec, (0, 0), ctx)
        self.assertLess(abs(value - b_n), 1e-14)

    def test_check_pair(self):
        """Test the pass flag"""
        residual, passed = check_pair(self.spec(NEW_AR_JACKSON_PAIR, 1), (3,), self.context())
        self.assertTrue(passed)
        self.assertLess(residual, PAIR_TOL)

    def test_kernels(self):
        """Test the inversion kernel each derivation runs against"""
        ctx = self.context()
        self.assertEqual(self.spec(NEW_AR_JACKSON_PAIR, 1).kind(ctx.q).name, GEOM_AR_POS)
        quartic = self.spec(DR_QUARTIC_PAIR, 1).kind(ctx.q)
        self.assertEqual((quartic.name, quartic.m), (GEOM_BCR, 4))
        self.assertLess(abs(quartic.a ** 2 * ctx.q + 1), 1e-14)

    def test_second_quadratic_constraint(self):
        """Test that c is solved from a^2 bc = X^2 q and a wrong c is refused"""
        ctx = self.context()
        spec = self.spec(AR_QUADRATIC_2_PAIR, 2)
        params = spec.completed(ctx.q)
        x_product = params['x'][0] * params['x'][1]
        balance = params['a'] ** 2 * params['b'] * params['c'] / (x_product ** 2 * ctx.q)
        self.assertLess(abs(balance - 1), 1e-13)
        wrong = BaileyPairSpec(AR_QUADRATIC_2_PAIR, dict(spec.params, c=0.5))
        with self.assertRaises(ConstraintViolationError):
            wrong.completed(ctx.q)

    def test_validation(self):
        """Test unknown derivations and missing parameters"""
        with self.assertRaises(UsageError):
            BaileyPairSpec('dr-quintic-pair', {'x': [1.1]})
        with self.assertRaises(UsageError):
            BaileyPairSpec(NEW_AR_JACKSON_PAIR, {'a': 1.1, 'x': [1.2]})
        with self.assertRaises(UsageError):
            BaileyPairSpec(DR_QUARTIC_PAIR, {})

    def test_wrong_rank(self):
        """Test that n must match the length of x"""
        with self.assertRaises(UsageError):
            bailey_pair_sides(self.spec(NEW_AR_JACKSON_PAIR, 2), (1,), self.context())


if __name__ == '__main__':
    unittest.main()
