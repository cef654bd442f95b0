#!/usr/bin/env python3
"""
Unit tests for the identity catalog and its evaluators
"""

import sys
import unittest
from pathlib import Path

script_dir = Path(__file__).parent
parent_dir = script_dir.parent
sys.path.append(str(parent_dir))
sys.path.append(str(script_dir))

from seeded_case import SeededTestCase
from constants import IDENTITY_TOL, SIMPLEX_TOL, CONSTRAINT_TOL
from etc_functions import relative_error, half_power
from exceptions import ConstraintViolationError, UsageError
from summations import (IDENTITIES, SIMPLEX_PAIRS, BOX, AR_JACKSON, DR_QUARTIC, QUARTIC_R1, NEW_AR_JACKSON,
                        DR_QUADRATIC, DR_QUADRATIC_SIMPLEX_2,
                        NEW_AR_JACKSON_SIMPLEX, AR_QUADRATIC_2_SIMPLEX, IdentityInstance, get_identity,
                        catalog_rows, complete_params, summand, lhs, rhs, lhs_with_scale, verify,
                        quartic_r1_literal_summand, specialization_instances, simplex_specialization_residual)


class IdentityCase(SeededTestCase):
    """Draws generic parameters for a catalog identity"""

    def params_for(self, identity_id, r):
        spec = get_identity(identity_id)
        params = {name: self.generic() for name in spec.scalars if name != spec.free}
        for name, offset in spec.vectors.items():
            length = r + offset
            if isinstance(spec.free, tuple) and spec.free[0] == name:
                length -= 1
            params[name] = self.generic(length)
        return params

    def instance(self, identity_id, r, size, p_zero=False):
        ctx = self.context(p_zero=p_zero)
        params = self.params_for(identity_id, r)
        if get_identity(identity_id).domain == BOX:
            return complete_params(identity_id, params, ctx, r, n=size)
        return complete_params(identity_id, params, ctx, r, N=size)


class TestCatalog(unittest.TestCase):
    """Test cases for the catalog itself"""

    def test_sixteen_identities(self):
        """Test the catalog size and row layout"""
        rows = catalog_rows()
        self.assertEqual(len(rows), 16)
        self.assertEqual(len(IDENTITIES), 16)
        self.assertEqual({row['id'] for row in rows}, set(IDENTITIES))
        self.assertIn('constraint', rows[0])

    def test_unknown_identity(self):
        """Test that an unknown id is a usage error"""
        with self.assertRaises(UsageError):
            get_identity('ar-septic')

    def test_schema(self):
        """Test the printed parameter schema"""
        self.assertEqual(get_identity(NEW_AR_JACKSON_SIMPLEX).schema(), 'a, b, d, x[r], c[r+1]')


class TestIdentities(IdentityCase):
    """Test cases evaluating every identity on random instances"""

    BOX_SIZES = {1: [(0,), (1,), (2,), (3,)], 2: [(1, 0), (1, 1), (2, 1)], 3: [(1, 1, 1)]}
    SIMPLEX_SIZES = [0, 1, 2, 3, 4]

    def _check(self, identity_id, p_zero):
        spec = get_identity(identity_id)
        ranks = [1] if spec.fixed_r == 1 else [1, 2, 3]
        for r in ranks:
            sizes = self.BOX_SIZES[r] if spec.domain == BOX else self.SIMPLEX_SIZES[:5 - r]
            for size in sizes:
                for _ in range(2):
                    result = verify(self.instance(identity_id, r, size, p_zero), IDENTITY_TOL)
                    self.assertEqual(result['status'], 'pass',
                                     f"{identity_id} r={r} size={size} p_zero={p_zero}: {result}")

    def test_elliptic_case(self):
        """Test every identity at random |p| <= 0.3"""
        for identity_id in IDENTITIES:
            with self.subTest(identity=identity_id):
                self._check(identity_id, False)

    def test_trigonometric_case(self):
        """Test every identity at p = 0"""
        for identity_id in IDENTITIES:
            with self.subTest(identity=identity_id):
                self._check(identity_id, True)

    def test_empty_box_sum(self):
        """Test n = 0: the sum is its k = 0 term, which equals the right side"""
        inst = self.instance(AR_JACKSON, 2, (0, 0))
        self.assertLess(relative_error(lhs(inst), rhs(inst)), 1e-14)
        self.assertLess(abs(summand(inst, (0, 0)) - 1), 1e-14)

    def test_condition_reported(self):
        """Test that verify reports a condition number >= 1"""
        result = verify(self.instance(DR_QUARTIC, 2, (1, 1)))
        self.assertGreaterEqual(result['condition'], 1 - 1e-12)

    def test_permutation_covariance(self):
        """Test that permuting (x_i, n_i) pairs leaves the sum unchanged"""
        ctx = self.context()
        params = self.params_for(AR_JACKSON, 2)
        inst = complete_params(AR_JACKSON, params, ctx, 2, n=(2, 1))
        swapped = dict(params, x=list(reversed(params['x'])))
        other = complete_params(AR_JACKSON, swapped, ctx, 2, n=(1, 2))
        self.assertLess(relative_error(lhs(inst), lhs(other)), 1e-10)


class TestConstraints(IdentityCase):
    """Test cases for the balancing constraint solver"""

    def test_solved_parameter_satisfies_constraint(self):
        """Test a^2 q^(|n|+1) = bcde after solving for e"""
        inst = self.instance(AR_JACKSON, 2, (1, 2))
        q, size = inst.q, inst.size
        balance = inst['a'] ** 2 * q ** (size + 1) / (inst['b'] * inst['c'] * inst['d'] * inst['e'])
        self.assertLess(abs(balance - 1), CONSTRAINT_TOL)

    def test_violated_constraint(self):
        """Test that a supplied free parameter off the constraint is rejected"""
        params = self.params_for(AR_JACKSON, 1)
        params['e'] = 0.5
        with self.assertRaises(ConstraintViolationError):
            complete_params(AR_JACKSON, params, self.context(), 1, n=(1,))

    def test_supplied_consistent_parameter(self):
        """Test that a consistent free parameter is accepted unchanged"""
        ctx = self.context()
        params = self.params_for(AR_JACKSON, 1)
        solved = complete_params(AR_JACKSON, params, ctx, 1, n=(2,))
        again = complete_params(AR_JACKSON, dict(params, e=solved['e']), ctx, 1, n=(2,))
        self.assertEqual(again['e'], solved['e'])

    def test_last_vector_entry_is_solved(self):
        """Test the b_(r+2) slot of the second quadratic simplex identity"""
        inst = self.instance(AR_QUADRATIC_2_SIMPLEX, 2, 3)
        self.assertEqual(len(inst['b']), 4)
        product = inst['b'][0] * inst['b'][1] * inst['b'][2] * inst['b'][3] * inst['x'][0] * inst['x'][1]
        self.assertLess(relative_error(inst['a'] ** 2 * inst.q, product), CONSTRAINT_TOL)

    def test_missing_parameter(self):
        """Test that a missing scalar is a usage error"""
        params = self.params_for(AR_JACKSON, 1)
        del params['b']
        with self.assertRaises(UsageError):
            complete_params(AR_JACKSON, params, self.context(), 1, n=(1,))

    def test_wrong_vector_length(self):
        """Test that x must have r entries"""
        params = self.params_for(AR_JACKSON, 2)
        with self.assertRaises(UsageError):
            complete_params(AR_JACKSON, params, self.context(), 3, n=(1, 1, 1))


class TestInstanceValidation(IdentityCase):
    """Test cases for IdentityInstance shape checks"""

    def test_fixed_rank(self):
        """Test that the one-dimensional quartic identity refuses r = 2"""
        with self.assertRaises(UsageError):
            IdentityInstance(QUARTIC_R1, 2, {'a': 1.1}, self.context(), n=(1, 1))

    def test_box_needs_corner(self):
        """Test that a box identity needs n"""
        with self.assertRaises(UsageError):
            IdentityInstance(DR_QUARTIC, 1, {'a': 1.1, 'x': [1.2]}, self.context())

    def test_simplex_needs_cap(self):
        """Test that a simplex identity needs N"""
        with self.assertRaises(UsageError):
            IdentityInstance(NEW_AR_JACKSON_SIMPLEX, 1, {}, self.context(), n=(1,))


class TestQuarticSpecializations(IdentityCase):
    """Test cases tying the quartic sums together"""

    def test_rank_one_quartic_matches_dr_quartic(self):
        """Test that the D_r quartic sum at r = 1, x = 1 agrees termwise with the one-dimensional sum"""
        ctx = self.context()
        a = self.generic()
        multi = complete_params(DR_QUARTIC, {'a': a, 'x': [1.0]}, ctx, 1, n=(3,))
        single = complete_params(QUARTIC_R1, {'a': a}, ctx, 1, n=(3,))
        for k in range(4):
            self.assertLess(relative_error(summand(multi, (k,)), summand(single, (k,))), 1e-11)
        self.assertLess(relative_error(rhs(multi), rhs(single)), 1e-11)

    def test_literal_form_at_p_zero(self):
        """Test that the literal one-dimensional summand agrees with the balanced one at p = 0"""
        ctx = self.context(p_zero=True)
        inst = complete_params(QUARTIC_R1, {'a': self.generic()}, ctx, 1, n=(3,))
        for k in range(4):
            self.assertLess(relative_error(quartic_r1_literal_summand(inst, (k,)), summand(inst, (k,))), 1e-12)


class TestSimplexSpecializations(IdentityCase):
    """Test cases for the simplex to box specializations"""

    def _params(self, r):
        params = {name: self.generic() for name in 'abcd'}
        params['x'] = self.generic(r)
        return params

    def test_all_pairs(self):
        """Test every specialization at r = 1, 2"""
        corners = {1: [(0,), (1,), (2,), (4,)], 2: [(1, 0), (1, 1), (2, 1)]}
        for pair in SIMPLEX_PAIRS:
            for r, ns in corners.items():
                for n in ns:
                    residual = simplex_specialization_residual(pair, r, n, self._params(r), self.context())
                    self.assertLess(residual, SIMPLEX_TOL, f"{pair} r={r} n={n}")

    def test_second_quadratic_simplex_from_box(self):
        """Test the a = q^(-N-1/2) quadratic simplex sum against the box sum it terminates to"""
        for flip_root in (False, True):
            for n in [(1,), (3,), (1, 1), (2, 1), (0, 2)]:
                ctx = self.context(p_zero=flip_root)
                q, r, big_n = ctx.q, len(n), sum(n)
                a, b, x = self.generic(), self.generic(), self.generic(len(n))
                c = [q ** (-2 * n_i) / x_i for n_i, x_i in zip(n, x)]
                simplex = complete_params(DR_QUADRATIC_SIMPLEX_2, {'a': a, 'b': b, 'x': x, 'c': c}, ctx, r, N=big_n)
                shift = q ** big_n * half_power(q, 1, flip_root)
                box = complete_params(DR_QUADRATIC, {'a': 1 / shift, 'b': b, 'x': [a * shift * x_i for x_i in x]},
                                      ctx, r, n=n)
                self.assertLess(relative_error(lhs(simplex), lhs(box)), SIMPLEX_TOL, f"n={n}")
                self.assertLess(relative_error(rhs(simplex), rhs(box)), SIMPLEX_TOL, f"n={n}")
                self.assertEqual(verify(simplex)['status'], 'pass', f"n={n}")

    def test_other_square_root(self):
        """Test the cubic specialization on the other branch of q^(N/2)"""
        residual = simplex_specialization_residual('dr-cubic', 1, (3,), self._params(1), self.context(),
                                                   flip_root=True)
        self.assertLess(residual, SIMPLEX_TOL)

    def test_instances_share_cap(self):
        """Test that the simplex side uses N = |n|"""
        box, simplex = specialization_instances(NEW_AR_JACKSON, 2, (2, 1), self._params(2), self.context())
        self.assertEqual(simplex.N, 3)
        self.assertEqual(box.n, (2, 1))
        self.assertGreater(lhs_with_scale(simplex)[1], 0)

    def test_unknown_pair(self):
        """Test that an unknown specialization is a usage error"""
        with self.assertRaises(UsageError):
            specialization_instances('ar-jackson', 1, (1,), self._params(1), self.context())


if __name__ == '__main__':
    unittest.main()
