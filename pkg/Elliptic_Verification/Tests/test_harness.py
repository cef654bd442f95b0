#!/usr/bin/env python3
"""
Unit tests for the sampler, the trial runner and the report layout
"""

import json
import os
import sys
import unittest
from pathlib import Path
from unittest.mock import patch

import pandas as pd

script_dir = Path(__file__).parent
parent_dir = script_dir.parent
sys.path.append(str(parent_dir))
sys.path.append(str(script_dir))

from constants import THREADS_ENV_VAR, REPORT_SCHEMA_VERSION, RNG_ALGORITHM, CONSTRAINT_TOL, EXIT_OK
from exceptions import DegenerateParameterError, SamplingExhaustedError, UsageError
from etc_functions import worker_count
from harness import (SamplerConfig, SuiteCase, IDENTITY, INVERSION, PAIR, SIMPLEX, THETA, KRATTENTHALER, LINK,
                     LEMMA, QUARTIC_FORMS, trial_seed, trial_rng, sample_nome, sample_context, sample_instance,
                     run_trial, run_suite, summarize, expand_grid, identity_cases, selftest_cases, exit_code,
                     trials_frame, catalog_frames, box_indices)
from inversions import ALL_KINDS, GENERAL_KINDS, GEOMETRIC_KINDS, InversionKind
from summations import IDENTITIES, SIMPLEX_PAIRS, IdentityInstance
from bailey_pairs import DERIVATIONS


class TestSamplerConfig(unittest.TestCase):
    """Test cases for SamplerConfig validation"""

    def test_defaults(self):
        """Test that the defaults are valid"""
        cfg = SamplerConfig()
        self.assertEqual(cfg.modulus_range, (0.5, 1.5))
        self.assertEqual(cfg.p_max, 0.5)

    def test_rejects_bad_nome_bound(self):
        """Test p_max outside (0, 1)"""
        for p_max in (0, 1, -0.2, 1.5):
            with self.assertRaises(UsageError):
                SamplerConfig(p_max=p_max)

    def test_rejects_bad_modulus_range(self):
        """Test lo <= 0 and lo > hi"""
        with self.assertRaises(UsageError):
            SamplerConfig(modulus_range=(0.0, 1.0))
        with self.assertRaises(UsageError):
            SamplerConfig(modulus_range=(1.5, 1.0))

    def test_rejects_bad_seed(self):
        """Test a negative seed"""
        with self.assertRaises(UsageError):
            SamplerConfig(seed=-1)


class TestSampling(unittest.TestCase):
    """Test cases for the random streams and the instance sampler"""

    def setUp(self):
        """Set up a default sampler configuration"""
        self.cfg = SamplerConfig(seed=42)

    def test_trial_seeds(self):
        """Test that trial seeds are deterministic and distinct"""
        self.assertEqual(trial_seed(42, 0, 0), trial_seed(42, 0, 0))
        seeds = {trial_seed(42, case, trial) for case in range(3) for trial in range(3)}
        self.assertEqual(len(seeds), 9)
        self.assertNotEqual(trial_seed(42, 0, 0), trial_seed(43, 0, 0))

    def test_nome_bound(self):
        """Test 0 < |p| <= p_max"""
        rng = trial_rng(7)
        for _ in range(200):
            p = sample_nome(rng, 0.3)
            self.assertGreater(abs(p), 0)
            self.assertLessEqual(abs(p), 0.3 + 1e-15)

    def test_p_zero_context(self):
        """Test that the trigonometric lane pins p = 0"""
        ctx = sample_context(trial_rng(1), SamplerConfig(p_zero=True))
        self.assertEqual(ctx.p, 0)

    def test_same_seed_same_instance(self):
        """Test that sampling twice with one seed gives one instance"""
        first = sample_instance('new-ar-jackson', 2, self.cfg, n=(1, 1))
        second = sample_instance('new-ar-jackson', 2, self.cfg, n=(1, 1))
        self.assertIsInstance(first, IdentityInstance)
        self.assertEqual(first.params, second.params)
        self.assertEqual(first.ctx.p, second.ctx.p)

    def test_sampled_constraint(self):
        """Test that a sampled A_r Jackson instance satisfies its balancing condition"""
        inst = sample_instance('ar-jackson', 2, self.cfg, n=(1, 2))
        balance = inst['a'] ** 2 * inst.q ** 4 / (inst['b'] * inst['c'] * inst['d'] * inst['e'])
        self.assertLess(abs(balance - 1), CONSTRAINT_TOL)

    def test_inversion_inputs(self):
        """Test sampling inputs for an inversion kind"""
        kind, seqs, ctx = sample_instance('bcr-geom', 2, self.cfg, n=(1, 1), m=3)
        self.assertIsInstance(kind, InversionKind)
        self.assertIsNone(seqs)
        self.assertEqual(kind.m, 3)
        kind, seqs, ctx = sample_instance('cr', 1, self.cfg, n=(2,))
        self.assertFalse(seqs.has_a)
        self.assertIsNotNone(kind.b)

    def test_unknown_target(self):
        """Test that an unknown name is a usage error"""
        with self.assertRaises(UsageError):
            sample_instance('dr-septic', 1, self.cfg, n=(1,))

    def test_exhausted(self):
        """Test that persistent degeneracy ends in SamplingExhaustedError"""
        cfg = SamplerConfig(seed=1, max_resamples=3)
        with patch('harness.verify', return_value={'status': 'degenerate'}):
            with self.assertRaises(SamplingExhaustedError):
                sample_instance('dr-cubic', 1, cfg, n=(1,))


class TestTrials(unittest.TestCase):
    """Test cases for single trials"""

    def setUp(self):
        """Set up a default sampler configuration"""
        self.cfg = SamplerConfig(seed=5)

    def test_record_layout(self):
        """Test the keys and value shapes of a trial record"""
        case = SuiteCase(IDENTITY, 'dr-quadratic', r=2, n=(1, 1), trials=1)
        record, seconds = run_trial(case, 0, 0, self.cfg)
        self.assertEqual(set(record), {'trial_index', 'seed', 'params', 'lhs', 'rhs', 'rel_error', 'condition',
                                       'status', 'resamples'})
        self.assertEqual(record['status'], 'pass')
        self.assertEqual(len(record['lhs']), 2)
        self.assertEqual(len(record['params']['x']), 2)
        self.assertIn('p', record['params'])
        self.assertGreaterEqual(seconds, 0)

    def test_degenerate_draws_are_resampled(self):
        """Test that a degenerate draw is redrawn and counted"""
        case = SuiteCase(THETA, 'inversion', trials=1, tol=1e-11)
        effects = [DegenerateParameterError("vanishing factor"), 0.0]
        with patch('harness.inversion_residual', side_effect=effects):
            record, _ = run_trial(case, 0, 0, self.cfg)
        self.assertEqual(record['status'], 'pass')
        self.assertEqual(record['resamples'], 1)

    def test_exhausted_trial_is_degenerate(self):
        """Test that a trial out of draws is degenerate, not failed"""
        cfg = SamplerConfig(seed=5, max_resamples=2)
        case = SuiteCase(THETA, 'inversion', trials=1)
        with patch('harness.inversion_residual', side_effect=DegenerateParameterError("always")):
            record, _ = run_trial(case, 0, 0, cfg)
        self.assertEqual(record['status'], 'degenerate')
        self.assertEqual(record['resamples'], 3)
        self.assertIsNone(record['rel_error'])

    def test_failure_status(self):
        """Test that a residual above tolerance fails"""
        case = SuiteCase(THETA, 'inversion', trials=1, tol=1e-11)
        with patch('harness.inversion_residual', return_value=1e-3):
            record, _ = run_trial(case, 0, 0, self.cfg)
        self.assertEqual(record['status'], 'fail')

    def test_each_category_runs(self):
        """Test one passing trial per category"""
        cases = [
            SuiteCase(INVERSION, 'ar', r=2, n=(1, 1), l=(0, 1), tol=1e-8),
            SuiteCase(INVERSION, 'ar-geom-neg', r=1, n=(2,), l=(0,), m=2, tol=1e-8),
            SuiteCase(LINK, 'bcr-geom', r=2, n=(1, 1), m=2, tol=1e-9),
            SuiteCase(LEMMA, 'cfg', r=2, n=(1, 1), tol=1e-9),
            SuiteCase(PAIR, 'dr-cubic-pair', r=1, n=(2,), tol=1e-8),
            SuiteCase(QUARTIC_FORMS, 'dr-quartic-pair', r=1, n=(2,), tol=1e-10),
            SuiteCase(SIMPLEX, 'ar-quadratic-2', r=1, n=(2,), tol=1e-9),
            SuiteCase(THETA, 'gustafson-shifted', count=4, tol=1e-10),
            SuiteCase(KRATTENTHALER, 'ar-limit', n=(3,), l=(1,), tol=1e-10, p_zero=True),
        ]
        for index, case in enumerate(cases):
            record, _ = run_trial(case, index, 0, self.cfg)
            self.assertEqual(record['status'], 'pass', case.label())

    def test_quasi_period_needs_nome(self):
        """Test that the quasi-period check refuses the trigonometric lane"""
        case = SuiteCase(THETA, 'quasi-period', trials=1, p_zero=True)
        with self.assertRaises(UsageError):
            run_trial(case, 0, 0, self.cfg)


class TestSuite(unittest.TestCase):
    """Test cases for run_suite and the report"""

    def setUp(self):
        """Set up a default sampler configuration"""
        self.cfg = SamplerConfig(seed=2024)

    def test_empty_selection(self):
        """Test that an empty selection is a usage error"""
        with self.assertRaises(UsageError):
            run_suite([], self.cfg)

    def test_zero_trials(self):
        """Test a case with no trials"""
        report = run_suite([SuiteCase(IDENTITY, 'dr-cubic', r=1, n=(1,), trials=0)], self.cfg)
        self.assertEqual(report['cases'][0]['trials'], [])
        summary = report['summary']
        self.assertEqual((summary['pass_count'], summary['fail_count'], summary['degenerate_count']), (0, 0, 0))
        self.assertIsNone(summary['max_rel_error'])

    def test_new_jackson_grid(self):
        """Test the new A_r Jackson sum over r = 1..2, n_i <= 2"""
        cases = expand_grid(IDENTITY, ['new-ar-jackson'], (1, 2), 4, 5, 1e-8, entry_cap=2)
        report = run_suite(cases, self.cfg)
        self.assertEqual(report['summary']['fail_count'], 0)
        self.assertEqual(exit_code(report), EXIT_OK)
        self.assertEqual(report['summary']['trial_count'], 5 * len(cases))

    def test_report_layout(self):
        """Test the report header and per-case summary"""
        report = run_suite([SuiteCase(PAIR, 'new-ar-jackson-pair', r=1, n=(2,), trials=3)], self.cfg,
                           command=['pair'])
        self.assertEqual(report['schema_version'], REPORT_SCHEMA_VERSION)
        self.assertEqual(report['rng_algorithm'], RNG_ALGORITHM)
        self.assertEqual(report['command'], ['pair'])
        self.assertEqual(report['sampler']['seed'], 2024)
        trials = report['cases'][0]['trials']
        self.assertEqual([t['trial_index'] for t in trials], [0, 1, 2])
        self.assertIsNone(report['summary']['wall_time_ms'])
        self.assertEqual(len(report['trials_sha256']), 64)

    def test_timing(self):
        """Test that wall time is filled only on request"""
        report = run_suite([SuiteCase(THETA, 'addition', trials=2, tol=1e-11)], self.cfg, timing=True)
        self.assertIsNotNone(report['summary']['wall_time_ms'])
        self.assertIsNotNone(report['cases'][0]['summary']['wall_time_ms'])

    def test_deterministic_report(self):
        """Test byte-identical reports inline and equal statuses on three worker processes"""
        cases = [SuiteCase(INVERSION, 'bcr', r=2, n=(1, 1), l=(0, 0), trials=4, tol=1e-8),
                 SuiteCase(IDENTITY, 'cr-jackson', r=2, n=(1, 1), trials=4)]
        with patch.dict(os.environ, {THREADS_ENV_VAR: '1'}):
            first = json.dumps(run_suite(cases, self.cfg), indent=2)
            second = json.dumps(run_suite(cases, self.cfg), indent=2)
        self.assertEqual(first, second)
        with patch.dict(os.environ, {THREADS_ENV_VAR: '3'}):
            threaded = run_suite(cases, self.cfg)
        single = json.loads(first)
        self.assertEqual([[t['status'] for t in c['trials']] for c in single['cases']],
                         [[t['status'] for t in c['trials']] for c in threaded['cases']])
        self.assertEqual(single['trials_sha256'], threaded['trials_sha256'])

    def test_seed_changes_report(self):
        """Test that another seed draws other parameters"""
        case = [SuiteCase(THETA, 'inversion', trials=2, tol=1e-11)]
        first = run_suite(case, SamplerConfig(seed=1))
        second = run_suite(case, SamplerConfig(seed=2))
        self.assertNotEqual(first['trials_sha256'], second['trials_sha256'])

    def test_summary_counts(self):
        """Test summary bookkeeping"""
        trials = [
            {'status': 'pass', 'rel_error': 1e-12, 'resamples': 0},
            {'status': 'fail', 'rel_error': 1e-3, 'resamples': 1},
            {'status': 'degenerate', 'rel_error': None, 'resamples': 3},
        ]
        summary = summarize(trials)
        self.assertEqual(summary['max_rel_error'], 1e-12)
        self.assertEqual((summary['pass_count'], summary['fail_count'], summary['degenerate_count']), (1, 1, 1))
        self.assertAlmostEqual(summary['degenerate_rate'], 5 / 7)


class TestThreads(unittest.TestCase):
    """Test cases for the EHS_THREADS cap"""

    def test_valid(self):
        """Test a positive thread count"""
        with patch.dict(os.environ, {THREADS_ENV_VAR: '2'}):
            self.assertEqual(worker_count(), 2)

    def test_invalid(self):
        """Test zero and non-integer thread counts"""
        for raw in ('0', '-3', 'many'):
            with patch.dict(os.environ, {THREADS_ENV_VAR: raw}):
                with self.assertRaises(UsageError):
                    worker_count()


class TestGrids(unittest.TestCase):
    """Test cases for grid expansion and the selftest coverage"""

    def test_box_indices(self):
        """Test the corner enumeration"""
        self.assertEqual(box_indices(2, 1), [(0, 0), (0, 1), (1, 0)])
        self.assertEqual(box_indices(1, 3, minimum=1), [(1,), (2,), (3,)])
        self.assertEqual(len(box_indices(3, 4, entry_cap=1)), 8)

    def test_inversion_grid_pairs(self):
        """Test that with_lower expands every l <= n"""
        cases = expand_grid(INVERSION, ['ar'], (1,), 2, 1, 1e-8, with_lower=True)
        self.assertEqual([(c.n, c.l) for c in cases],
                         [((0,), (0,)), ((1,), (0,)), ((1,), (1,)), ((2,), (0,)), ((2,), (1,)), ((2,), (2,))])

    def test_identity_cases_respect_fixed_rank(self):
        """Test that the one-dimensional quartic identity only runs at r = 1"""
        cases = identity_cases(['quartic-r1'], (1, 2, 3), 2, 2, 1)
        self.assertTrue(cases)
        self.assertTrue(all(case.r == 1 for case in cases))

    def test_selftest_coverage(self):
        """Test that the quick grid still touches every catalog entry"""
        for quick in (True, False):
            cases = selftest_cases(quick)
            names = {(case.category, case.name) for case in cases}
            for identity_id in IDENTITIES:
                self.assertIn((IDENTITY, identity_id), names)
            for kind in ALL_KINDS:
                self.assertIn((INVERSION, kind), names)
            for derivation in DERIVATIONS:
                self.assertIn((PAIR, derivation), names)
            for pair in SIMPLEX_PAIRS:
                self.assertIn((SIMPLEX, pair), names)
            for variant in ('afg', 'cfg', 'bcfg'):
                self.assertIn((LEMMA, variant), names)
            for check in ('inversion', 'quasi-period', 'addition', 'gustafson', 'gustafson-shifted'):
                self.assertIn((THETA, check), names)
            self.assertTrue(any(case.p_zero and case.category == IDENTITY for case in cases))
            self.assertTrue(any(case.category == KRATTENTHALER for case in cases))
        self.assertLess(len(selftest_cases(True)), len(selftest_cases(False)))

    def test_full_grid_keeps_every_inversion_point(self):
        """Test that the full selftest covers all l <= n with |n| <= 4 for r <= 3 and m <= 4"""
        cases = selftest_cases(False)
        general = [c for c in cases if c.category == INVERSION and c.name in GENERAL_KINDS]
        geometric = [c for c in cases if c.category == INVERSION and c.name in GEOMETRIC_KINDS]
        self.assertEqual(len(general), 3 * 295)
        self.assertEqual(len(geometric), 3 * 4 * 295)
        self.assertTrue(all(c.trials >= 1 for c in general + geometric))


class TestTables(unittest.TestCase):
    """Test cases for the pandas views"""

    def test_catalog_frames(self):
        """Test the catalog tables"""
        identities, kinds, pairs = catalog_frames()
        self.assertEqual((len(identities), len(kinds), len(pairs)), (16, 6, 6))
        self.assertIn('constraint', identities.columns)

    def test_trials_frame(self):
        """Test one row per trial"""
        report = run_suite([SuiteCase(THETA, 'inversion', trials=3, tol=1e-11)], SamplerConfig(seed=3))
        frame = trials_frame(report)
        self.assertIsInstance(frame, pd.DataFrame)
        self.assertEqual(len(frame), 3)
        self.assertTrue((frame['status'] == 'pass').all())


if __name__ == '__main__':
    unittest.main()
