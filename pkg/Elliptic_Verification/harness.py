import hashlib
import itertools
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pandas as pd

from constants import (DEFAULT_SEED, DEFAULT_P_MAX, DEFAULT_MODULUS_RANGE, DEFAULT_MAX_RESAMPLES, ZERO_GUARD,
                       RNG_ALGORITHM, REPORT_SCHEMA_VERSION, THETA_IDENTITY_TOL, GUSTAFSON_TOL, DELTA_TOL,
                       LINK_TOL, LEMMA_TOL, IDENTITY_TOL, PAIR_TOL, QUARTIC_FORMS_TOL, SIMPLEX_TOL,
                       MAX_DEGENERATE_RATE, EXIT_OK, EXIT_FAILURES, JOB_CHUNKS_PER_WORKER)
from etc_functions import complex_pair, real_value, relative_error, normalized_residual, worker_count, half_power
from exceptions import (EllipticError, DegenerateParameterError, ThetaDomainError, ThetaOverflowError,
                        SamplingExhaustedError, UsageError)
from inversions import (ALL_KINDS, GENERAL_CR, GENERAL_KINDS, GEOMETRIC_KINDS, KIND_DESCRIPTIONS, InversionKind,
                        random_oracle, random_rational_oracle, delta_residual, normalization_link, vanishing_lemma_sum,
                        limit_entry, krattenthaler_entry, krattenthaler_residual, limit_residual)
from multiindex import BoxDomain, as_index
from summations import (IDENTITIES, SIMPLEX_PAIRS, BOX, get_identity, catalog_rows, complete_params, verify,
                        specialization_instances, lhs_with_scale)
from bailey_pairs import (DERIVATIONS, DR_QUARTIC_PAIR, BaileyPairSpec, bailey_pair_sides, inverse_pair_residual,
                          quartic_b_first, quartic_b_second, pair_catalog_rows)
from theta_core import (EllipticContext, gustafson_sum, inversion_residual, quasi_period_residual,
                        addition_residual)

logger = logging.getLogger(__name__)

IDENTITY = 'identity'
INVERSION = 'inversion'
LINK = 'link'
LEMMA = 'lemma'
PAIR = 'pair'
QUARTIC_FORMS = 'quartic-forms'
SIMPLEX = 'simplex'
THETA = 'theta'
KRATTENTHALER = 'krattenthaler'

THETA_CHECKS = ('inversion', 'quasi-period', 'addition', 'gustafson', 'gustafson-shifted')
LEMMA_VARIANTS = ('afg', 'cfg', 'bcfg')

# failures of genericity: the trial draws again instead of failing
_DEGENERATE_ERRORS = (DegenerateParameterError, ThetaDomainError, ThetaOverflowError, ZeroDivisionError)


class SamplerConfig:
    """
    Everything the sampler needs to reproduce a run.

    Args:
        seed (int): root seed, every trial stream is derived from it
        p_max (float): nome moduli are drawn from (0, p_max]
        modulus_range (tuple): (lo, hi) for the moduli of q and of every parameter
        degeneracy_guard (float): zero guard of the sampled contexts
        max_resamples (int): degenerate draws allowed per trial
        p_zero (bool): pin p = 0 (trigonometric lane)
    """

    def __init__(self, seed=DEFAULT_SEED, p_max=DEFAULT_P_MAX, modulus_range=DEFAULT_MODULUS_RANGE,
                 degeneracy_guard=ZERO_GUARD, max_resamples=DEFAULT_MAX_RESAMPLES, p_zero=False):
        self.seed = int(seed)
        self.p_max = float(p_max)
        lo, hi = modulus_range
        self.modulus_range = (float(lo), float(hi))
        self.degeneracy_guard = float(degeneracy_guard)
        self.max_resamples = int(max_resamples)
        self.p_zero = bool(p_zero)
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise UsageError(f"Seed must be a 64-bit unsigned integer, got {seed}")
        if not 0 < self.p_max < 1:
            raise UsageError(f"p_max must lie in (0, 1), got {self.p_max}")
        if not 0 < lo <= hi:
            raise UsageError(f"Modulus range needs 0 < lo <= hi, got {modulus_range}")
        if self.degeneracy_guard <= 0:
            raise UsageError("degeneracy_guard must be positive")
        if self.max_resamples < 0:
            raise UsageError("max_resamples must be non-negative")

    def as_dict(self):
        return {
            'seed': self.seed,
            'p_max': self.p_max,
            'modulus_range': list(self.modulus_range),
            'degeneracy_guard': self.degeneracy_guard,
            'max_resamples': self.max_resamples,
            'p_zero': self.p_zero,
        }


class SuiteCase:
    """
    One grid point of a suite: a check family (category), the item inside it
    (identity id, inversion kind, derivation...) and its shape parameters.
    """

    def __init__(self, category, name, r=1, n=None, N=None, l=None, m=None, count=None, trials=1,
                 tol=IDENTITY_TOL, flip_root=False, p_zero=False):
        self.category = category
        self.name = name
        self.r = int(r)
        self.n = None if n is None else as_index(n)
        self.N = None if N is None else int(N)
        self.l = None if l is None else as_index(l)
        self.m = None if m is None else int(m)
        self.count = None if count is None else int(count)
        self.trials = int(trials)
        self.tol = float(tol)
        self.flip_root = bool(flip_root)
        self.p_zero = bool(p_zero)
        if self.trials < 0:
            raise UsageError(f"Trial count must be non-negative, got {trials}")
        if self.n is not None and self.category not in (THETA, KRATTENTHALER) and len(self.n) != self.r:
            raise UsageError(f"n must have {self.r} entries, got {self.n}")

    def label(self):
        parts = [self.category, self.name, f"r={self.r}"]
        for field in ('n', 'N', 'l', 'm', 'count'):
            value = getattr(self, field)
            if value is not None:
                parts.append(f"{field}={value}")
        if self.p_zero:
            parts.append("p=0")
        return ' '.join(parts)

    def as_dict(self):
        return {
            'category': self.category,
            'name': self.name,
            'r': self.r,
            'n': None if self.n is None else list(self.n),
            'N': self.N,
            'l': None if self.l is None else list(self.l),
            'm': self.m,
            'count': self.count,
            'tol': self.tol,
            'flip_root': self.flip_root,
            'p_zero': self.p_zero,
        }


# ---- random streams ----

def trial_seed(root_seed, case_index, trial_index):
    """64-bit seed of one trial, independent of every other trial"""
    sequence = np.random.SeedSequence(entropy=root_seed, spawn_key=(case_index, trial_index))
    return int(sequence.generate_state(1, np.uint64)[0])


def trial_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def sample_complex(rng, modulus_range):
    lo, hi = modulus_range
    return complex(rng.uniform(lo, hi) * np.exp(2j * np.pi * rng.uniform()))


def sample_vector(rng, count, modulus_range):
    return [sample_complex(rng, modulus_range) for _ in range(count)]


def sample_nome(rng, p_max):
    """|p| uniform in (0, p_max], uniform phase"""
    modulus = p_max * (1.0 - rng.uniform())
    return complex(modulus * np.exp(2j * np.pi * rng.uniform()))


def sample_context(rng, cfg, p_zero=False):
    p = 0j if (cfg.p_zero or p_zero) else sample_nome(rng, cfg.p_max)
    q = sample_complex(rng, cfg.modulus_range)
    try:
        return EllipticContext(p, q, zero_guard=cfg.degeneracy_guard)
    except UsageError:
        raise
    except EllipticError as e:
        raise DegenerateParameterError(str(e)) from e


def _with_resampling(rng, cfg, attempt, label):
    """Call attempt(rng) until it survives a draw; returns (outcome, resamples)"""
    for resamples in range(cfg.max_resamples + 1):
        try:
            return attempt(rng), resamples
        except _DEGENERATE_ERRORS as e:
            logger.debug(f"{label}: degenerate draw {resamples}: {e}")
    raise SamplingExhaustedError(f"{label}: {cfg.max_resamples + 1} consecutive degenerate draws")


def _context_params(ctx):
    return {'p': ctx.p, 'q': ctx.q}


def _sample_identity_params(rng, cfg, spec, r):
    params = {}
    for name in spec.scalars:
        if name != spec.free:
            params[name] = sample_complex(rng, cfg.modulus_range)
    for name, offset in spec.vectors.items():
        length = r + offset
        if isinstance(spec.free, tuple) and spec.free[0] == name:
            length -= 1
        params[name] = sample_vector(rng, length, cfg.modulus_range)
    return params


def _sample_oracle(rng, cfg, kind_name, r, n):
    depth = sum(n) + 2
    return random_oracle(rng, r, depth, cfg.modulus_range, with_a=kind_name != GENERAL_CR)


def sample_instance(target, r, cfg, n=None, N=None, m=1, rng=None):
    """
    Draw a generic instance of a catalog identity or an inversion kind.

    Identities come back as an IdentityInstance with the balancing constraint
    solved and every denominator screened by a trial evaluation. Inversion
    kinds come back as (InversionKind, SequenceOracle or None, EllipticContext).
    """
    rng = trial_rng(trial_seed(cfg.seed, 0, 0)) if rng is None else rng
    if target in IDENTITIES:
        spec = get_identity(target)

        def attempt(stream):
            ctx = sample_context(stream, cfg)
            params = _sample_identity_params(stream, cfg, spec, r)
            instance = complete_params(target, params, ctx, r, n=n, N=N)
            if verify(instance)['status'] == 'degenerate':
                raise DegenerateParameterError(f"{instance} has a vanishing denominator")
            return instance

        return _with_resampling(rng, cfg, attempt, target)[0]
    if target in ALL_KINDS:
        if n is None:
            raise UsageError("Inversion sampling needs the corner n")
        n = as_index(n)

        def attempt(stream):
            ctx = sample_context(stream, cfg)
            return _sample_inversion(stream, cfg, target, r, n, m, ctx)

        return _with_resampling(rng, cfg, attempt, target)[0]
    raise UsageError(f"Unknown identity or inversion kind: {target}")


def _sample_inversion(rng, cfg, name, r, n, m, ctx):
    if name in GEOMETRIC_KINDS:
        kind = InversionKind(name, m=m, a=sample_complex(rng, cfg.modulus_range),
                             x=sample_vector(rng, r, cfg.modulus_range))
        return kind, None, ctx
    b = sample_complex(rng, cfg.modulus_range) if name == GENERAL_CR else None
    seqs = _sample_oracle(rng, cfg, name, r, n)
    return InversionKind(name, b=b), seqs, ctx


def _oracle_params(seqs, n):
    record = {}
    if seqs.has_a:
        record['a'] = [seqs.a(t) for t in range(sum(n) + 1)]
    for j, n_j in enumerate(n, start=1):
        record[f"c_{j}"] = [seqs.c(j, k) for k in range(n_j + 1)]
    return record


def _outcome(params, lhs=None, rhs=None, rel_error=None, condition=None):
    return {'params': params, 'lhs': lhs, 'rhs': rhs, 'rel_error': rel_error, 'condition': condition}


# ---- trial attempts, one per category ----

def _identity_attempt(rng, cfg, case):
    spec = get_identity(case.name)
    ctx = sample_context(rng, cfg, case.p_zero)
    params = _sample_identity_params(rng, cfg, spec, case.r)
    if spec.domain == BOX:
        instance = complete_params(case.name, params, ctx, case.r, n=case.n)
    else:
        instance = complete_params(case.name, params, ctx, case.r, N=case.N)
    result = verify(instance, case.tol)
    if result['status'] == 'degenerate':
        raise DegenerateParameterError(f"{instance} has a vanishing denominator")
    record = dict(_context_params(ctx), **instance.params)
    return _outcome(record, result['lhs'], result['rhs'], result['rel_error'], result['condition'])


def _inversion_attempt(rng, cfg, case):
    ctx = sample_context(rng, cfg, case.p_zero)
    kind, seqs, ctx = _sample_inversion(rng, cfg, case.name, case.r, case.n, case.m, ctx)
    raw, residual = delta_residual(kind, seqs, case.n, case.l, ctx)
    delta = 1.0 if case.n == case.l else 0.0
    record = _context_params(ctx)
    if kind.is_geometric:
        record.update({'a': kind.a, 'x': kind.x})
    else:
        if kind.b is not None:
            record['b'] = kind.b
        record.update(_oracle_params(seqs, case.n))
    return _outcome(record, raw + delta, delta, residual)


def _link_attempt(rng, cfg, case):
    ctx = sample_context(rng, cfg, case.p_zero)
    kind = InversionKind(case.name, m=case.m, a=sample_complex(rng, cfg.modulus_range),
                         x=sample_vector(rng, case.r, cfg.modulus_range))
    worst = 0.0
    for k in BoxDomain(case.n):
        for which in ('F', 'G'):
            worst = max(worst, normalization_link(kind, case.n, k, ctx, which))
    record = dict(_context_params(ctx), a=kind.a, x=kind.x)
    return _outcome(record, rel_error=worst)


def _lemma_attempt(rng, cfg, case):
    ctx = sample_context(rng, cfg, case.p_zero)
    b = sample_complex(rng, cfg.modulus_range) if case.name == 'cfg' else None
    seqs = random_oracle(rng, case.r, sum(case.n) + 2, cfg.modulus_range, with_a=case.name != 'cfg')
    raw, residual = vanishing_lemma_sum(case.name, case.n, seqs, ctx, b)
    record = _context_params(ctx)
    if b is not None:
        record['b'] = b
    record.update(_oracle_params(seqs, case.n))
    return _outcome(record, raw, 0j, residual)


def _pair_attempt(rng, cfg, case):
    ctx = sample_context(rng, cfg, case.p_zero)
    _, _, names, _ = DERIVATIONS[case.name]
    params = {name: sample_complex(rng, cfg.modulus_range) for name in names}
    params['x'] = sample_vector(rng, case.r, cfg.modulus_range)
    spec = BaileyPairSpec(case.name, params, flip_root=case.flip_root)
    value, b_n, scale = bailey_pair_sides(spec, case.n, ctx)
    forward = normalized_residual(value - b_n, max(scale, abs(b_n)))
    backward = inverse_pair_residual(spec, case.n, ctx)
    condition = scale / abs(value) if value != 0 else float('inf')
    record = dict(_context_params(ctx), **spec.completed(ctx.q))
    return _outcome(record, value, b_n, max(forward, backward), condition)


def _quartic_forms_attempt(rng, cfg, case):
    ctx = sample_context(rng, cfg, case.p_zero)
    x = sample_vector(rng, case.r, cfg.modulus_range)
    root = half_power(ctx.q, 1, case.flip_root)
    first = quartic_b_first(x, case.n, ctx, root)
    second = quartic_b_second(x, case.n, ctx, root)
    return _outcome(dict(_context_params(ctx), x=x), first, second, relative_error(first, second))


def _simplex_attempt(rng, cfg, case):
    ctx = sample_context(rng, cfg, case.p_zero)
    params = {name: sample_complex(rng, cfg.modulus_range) for name in 'abcd'}
    params['x'] = sample_vector(rng, case.r, cfg.modulus_range)
    box, simplex = specialization_instances(case.name, case.r, case.n, params, ctx, N=case.N,
                                            flip_root=case.flip_root)
    box_value, box_scale = lhs_with_scale(box)
    simplex_value, simplex_scale = lhs_with_scale(simplex)
    residual = normalized_residual(box_value - simplex_value, max(box_scale, simplex_scale))
    return _outcome(dict(_context_params(ctx), **params), box_value, simplex_value, residual)


def _theta_attempt(rng, cfg, case):
    ctx = sample_context(rng, cfg, case.p_zero)
    draw = lambda: sample_complex(rng, cfg.modulus_range)
    record = _context_params(ctx)
    if case.name == 'inversion':
        x = draw()
        record['x'] = x
        return _outcome(record, rel_error=inversion_residual(x, ctx))
    if case.name == 'quasi-period':
        if ctx.p == 0:
            raise UsageError("The quasi-period check needs a nonzero nome")
        x = draw()
        record['x'] = x
        return _outcome(record, rel_error=quasi_period_residual(x, ctx))
    if case.name == 'addition':
        x, y, u, v = draw(), draw(), draw(), draw()
        record.update({'x': x, 'y': y, 'u': u, 'v': v})
        return _outcome(record, rel_error=addition_residual(x, y, u, v, ctx))
    if case.name in ('gustafson', 'gustafson-shifted'):
        count = case.count or 3
        a_values = sample_vector(rng, count, cfg.modulus_range)
        b_values = sample_vector(rng, count - 2, cfg.modulus_range)
        lam = draw() if case.name == 'gustafson-shifted' else 1
        raw, scale = gustafson_sum(a_values, b_values, ctx, lam=lam, shifted=case.name == 'gustafson-shifted')
        record.update({'a': a_values, 'b': b_values, 'lambda': lam})
        return _outcome(record, raw, 0j, normalized_residual(raw, scale))
    raise UsageError(f"Unknown theta check: {case.name}. Known: {', '.join(THETA_CHECKS)}")


def _krattenthaler_attempt(rng, cfg, case):
    (n,), (l,) = case.n, case.l
    seqs = random_rational_oracle(rng, 1, n + 2)
    a_seq = seqs.a
    c_seq = lambda j: seqs.c(1, j)
    paired = krattenthaler_residual(n, l, a_seq, c_seq)
    limit = limit_residual((n,), (l,), seqs)
    mismatch = 0
    for k in range(l, n + 1):
        mismatch = max(mismatch, abs(limit_entry('f', (n,), (k,), seqs) - krattenthaler_entry('f', n, k, a_seq, c_seq)),
                       abs(limit_entry('g', (k,), (l,), seqs) - krattenthaler_entry('g', k, l, a_seq, c_seq)))
    delta = 1 if n == l else 0
    record = {'a': [float(seqs.a(t)) for t in range(n + 1)], 'c_1': [float(seqs.c(1, t)) for t in range(n + 1)]}
    worst = max(abs(paired), abs(limit), mismatch)
    return _outcome(record, float(paired + delta), float(delta), float(worst))


_ATTEMPTS = {
    IDENTITY: _identity_attempt,
    INVERSION: _inversion_attempt,
    LINK: _link_attempt,
    LEMMA: _lemma_attempt,
    PAIR: _pair_attempt,
    QUARTIC_FORMS: _quartic_forms_attempt,
    SIMPLEX: _simplex_attempt,
    THETA: _theta_attempt,
    KRATTENTHALER: _krattenthaler_attempt,
}


def _serialize_params(params):
    record = {}
    for name, value in params.items():
        if isinstance(value, (list, tuple)):
            record[name] = [complex_pair(v) for v in value]
        else:
            record[name] = complex_pair(value)
    return record


def run_trial(case, case_index, trial_index, cfg):
    """Run one trial of a case, resampling degenerate draws; returns the JSON-ready trial record"""
    seed = trial_seed(cfg.seed, case_index, trial_index)
    rng = trial_rng(seed)
    label = f"{case.label()} trial {trial_index}"
    started = time.perf_counter()
    try:
        outcome, resamples = _with_resampling(rng, cfg, lambda stream: _ATTEMPTS[case.category](stream, cfg, case),
                                              label)
    except SamplingExhaustedError as e:
        logger.warning(f"{e}")
        record = {'trial_index': trial_index, 'seed': seed, 'params': None, 'lhs': None, 'rhs': None,
                  'rel_error': None, 'condition': None, 'status': 'degenerate', 'resamples': cfg.max_resamples + 1}
        return record, time.perf_counter() - started
    except Exception as e:
        logger.exception(f"Unexpected error in {label}: {e}")
        raise
    error = outcome['rel_error']
    status = 'pass' if error is not None and np.isfinite(error) and error <= case.tol else 'fail'
    if status == 'fail':
        logger.info(f"{label} failed: rel_error={error}")
    record = {
        'trial_index': trial_index,
        'seed': seed,
        'params': _serialize_params(outcome['params']),
        'lhs': complex_pair(outcome['lhs']),
        'rhs': complex_pair(outcome['rhs']),
        'rel_error': real_value(error),
        'condition': real_value(outcome['condition']),
        'status': status,
        'resamples': resamples,
    }
    return record, time.perf_counter() - started


def summarize(trials, elapsed=None):
    passes = [t for t in trials if t['status'] == 'pass']
    failed = sum(1 for t in trials if t['status'] == 'fail')
    degenerate = sum(1 for t in trials if t['status'] == 'degenerate')
    attempts = sum(t['resamples'] + 1 for t in trials) if trials else 0
    degenerate_draws = attempts - (len(trials) - degenerate)
    return {
        'trial_count': len(trials),
        'max_rel_error': max((t['rel_error'] for t in passes), default=None),
        'pass_count': len(passes),
        'fail_count': failed,
        'degenerate_count': degenerate,
        'degenerate_rate': real_value(degenerate_draws / attempts) if attempts else 0.0,
        'wall_time_ms': None if elapsed is None else round(elapsed * 1000.0, 3),
    }


def trials_digest(cases):
    """sha256 of the canonical JSON of every trial list, in case order"""
    payload = [case['trials'] for case in cases]
    raw = json.dumps(payload, separators=(',', ':'), sort_keys=True).encode('utf-8')
    return hashlib.sha256(raw).hexdigest()


def _run_job(job):
    case, case_index, trial_index, cfg = job
    return run_trial(case, case_index, trial_index, cfg)


def _dispatch(jobs, workers):
    """Run jobs in order, inline for one worker and on a process pool otherwise"""
    if workers == 1 or len(jobs) < 2:
        return [_run_job(job) for job in jobs]
    chunksize = max(1, len(jobs) // (workers * JOB_CHUNKS_PER_WORKER))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs, chunksize=chunksize))


def run_suite(cases, cfg, command=None, timing=False):
    """
    Run every trial of every case and assemble the report. Trials are spread
    over at most EHS_THREADS worker processes; records are ordered by trial_index.
    """
    cases = list(cases)
    if not cases:
        raise UsageError("Nothing selected to run")
    workers = worker_count()
    jobs = [(case, case_index, trial_index, cfg) for case_index, case in enumerate(cases)
            for trial_index in range(case.trials)]
    logger.info(f"Running {len(cases)} cases, {len(jobs)} trials on {workers} workers (seed {cfg.seed})")
    started = time.perf_counter()
    results = _dispatch(jobs, workers)
    elapsed = time.perf_counter() - started

    per_case = {index: [] for index in range(len(cases))}
    for (_, case_index, _, _), result in zip(jobs, results):
        per_case[case_index].append(result)

    case_records = []
    for case_index, case in enumerate(cases):
        outcomes = sorted(per_case[case_index], key=lambda item: item[0]['trial_index'])
        trials = [record for record, _ in outcomes]
        case_elapsed = sum(seconds for _, seconds in outcomes) if timing else None
        summary = summarize(trials, case_elapsed)
        logger.info(f"{case.label()}: {summary['pass_count']} pass, {summary['fail_count']} fail, "
                    f"{summary['degenerate_count']} degenerate")
        case_records.append(dict(case.as_dict(), trials=trials, summary=summary))

    all_trials = [trial for record in case_records for trial in record['trials']]
    overall = summarize(all_trials, elapsed if timing else None)
    overall['case_count'] = len(case_records)
    overall['failed_cases'] = [index for index, record in enumerate(case_records)
                               if record['summary']['fail_count'] > 0]
    return {
        'schema_version': REPORT_SCHEMA_VERSION,
        'command': list(command) if command is not None else None,
        'rng_algorithm': RNG_ALGORITHM,
        'sampler': cfg.as_dict(),
        'cases': case_records,
        'summary': overall,
        'trials_sha256': trials_digest(case_records),
    }


def exit_code(report):
    return EXIT_OK if report['summary']['fail_count'] == 0 else EXIT_FAILURES


# ---- grids ----

def box_indices(r, total_cap, entry_cap=None, minimum=0):
    """All n >= 0 of length r with minimum <= |n| <= total_cap (and n_i <= entry_cap)"""
    entry_cap = total_cap if entry_cap is None else entry_cap
    return [n for n in itertools.product(range(entry_cap + 1), repeat=r) if minimum <= sum(n) <= total_cap]


def lower_indices(n):
    return list(BoxDomain(n))


def expand_grid(category, names, r_values, total_cap, trials, tol, entry_cap=None, m_values=(None,),
                p_zero=False, flip_root=False, with_lower=False, minimum=0):
    """SuiteCases for every name, r, n (and l <= n when with_lower) and m of a grid"""
    cases = []
    for name in names:
        for r in r_values:
            if category == IDENTITY and get_identity(name).fixed_r not in (None, r):
                continue
            for n in box_indices(r, total_cap, entry_cap, minimum):
                lowers = lower_indices(n) if with_lower else [None]
                for l in lowers:
                    for m in m_values:
                        cases.append(SuiteCase(category, name, r=r, n=n, l=l, m=m, trials=trials, tol=tol,
                                               flip_root=flip_root, p_zero=p_zero))
    return cases


def identity_cases(names, r_values, box_cap, simplex_cap, trials, tol=IDENTITY_TOL, p_zero=False, entry_cap=None):
    cases = []
    for name in names:
        spec = get_identity(name)
        if spec.domain == BOX:
            cases.extend(expand_grid(IDENTITY, [name], r_values, box_cap, trials, tol, entry_cap=entry_cap,
                                     p_zero=p_zero))
            continue
        for r in r_values:
            for N in range(simplex_cap + 1):
                cases.append(SuiteCase(IDENTITY, name, r=r, N=N, trials=trials, tol=tol, p_zero=p_zero))
    return cases


def selftest_cases(quick=False):
    """
    The acceptance grid. The full run keeps every grid point with fewer trials
    per point for the heavy families; quick also shrinks the grids.
    """
    if quick:
        theta_trials, gustafson_counts, gustafson_trials = 20, range(2, 5), 10
        r_values, inv_cap, m_values = (1, 2), 2, (1, 2)
        inv_trials, geom_trials, link_trials = 3, 3, 3
        lemma_trials = 3
        id_r, id_box_cap, id_entry_cap, id_simplex_cap, id_trials = (1, 2), 2, 2, 2, 3
        pair_r, pair_cap, pair_trials = (1,), 2, 3
        simplex_r, simplex_cap, simplex_trials = (1, 2), 2, 2
        kratt_cap, kratt_trials = 3, 3
    else:
        theta_trials, gustafson_counts, gustafson_trials = 200, range(2, 7), 50
        r_values, inv_cap, m_values = (1, 2, 3), 4, (1, 2, 3, 4)
        inv_trials, geom_trials, link_trials = 4, 2, 5
        lemma_trials = 10
        id_r, id_box_cap, id_entry_cap, id_simplex_cap, id_trials = (1, 2, 3), 4, 3, 4, 5
        pair_r, pair_cap, pair_trials = (1, 2), 4, 5
        simplex_r, simplex_cap, simplex_trials = (1, 2, 3), 4, 3
        kratt_cap, kratt_trials = 6, 20

    cases = []
    for name in ('inversion', 'quasi-period', 'addition'):
        cases.append(SuiteCase(THETA, name, trials=theta_trials, tol=THETA_IDENTITY_TOL))
    for name in ('gustafson', 'gustafson-shifted'):
        for count in gustafson_counts:
            cases.append(SuiteCase(THETA, name, count=count, trials=gustafson_trials, tol=GUSTAFSON_TOL))

    cases.extend(expand_grid(INVERSION, GENERAL_KINDS, r_values, inv_cap, inv_trials, DELTA_TOL, with_lower=True))
    cases.extend(expand_grid(INVERSION, GEOMETRIC_KINDS, r_values, inv_cap, geom_trials, DELTA_TOL,
                             m_values=m_values, with_lower=True))
    cases.extend(expand_grid(LINK, GEOMETRIC_KINDS, r_values, inv_cap, link_trials, LINK_TOL, m_values=m_values))
    cases.extend(expand_grid(LEMMA, LEMMA_VARIANTS, r_values, inv_cap, lemma_trials, LEMMA_TOL, minimum=1))

    cases.extend(identity_cases(IDENTITIES, id_r, id_box_cap, id_simplex_cap, id_trials, entry_cap=id_entry_cap))
    cases.extend(identity_cases(IDENTITIES, id_r, id_box_cap, id_simplex_cap, id_trials, entry_cap=id_entry_cap,
                                p_zero=True))

    cases.extend(expand_grid(PAIR, DERIVATIONS, pair_r, pair_cap, pair_trials, PAIR_TOL))
    cases.extend(expand_grid(QUARTIC_FORMS, [DR_QUARTIC_PAIR], pair_r, pair_cap, pair_trials, QUARTIC_FORMS_TOL))
    cases.extend(expand_grid(SIMPLEX, SIMPLEX_PAIRS, simplex_r, simplex_cap, simplex_trials, SIMPLEX_TOL))

    for n in range(kratt_cap + 1):
        for l in range(n + 1):
            cases.append(SuiteCase(KRATTENTHALER, 'ar-limit', n=(n,), l=(l,), trials=kratt_trials, tol=1e-10,
                                   p_zero=True))
    return cases


def run_selftest(cfg, quick=False, command=None, timing=False):
    """
    Run the acceptance grid. Returns (report, exit code); a case whose
    degenerate draw rate reaches MAX_DEGENERATE_RATE counts as failed.
    """
    report = run_suite(selftest_cases(quick), cfg, command=command, timing=timing)
    crowded = [index for index, record in enumerate(report['cases'])
               if record['summary']['degenerate_rate'] >= MAX_DEGENERATE_RATE]
    report['summary']['degenerate_rate_exceeded'] = crowded
    for index in crowded:
        logger.warning(f"Case {index} ({report['cases'][index]['name']}) drew too many degenerate parameters")
    code = exit_code(report)
    if crowded:
        code = EXIT_FAILURES
    return report, code


# ---- tables ----

def trials_frame(report):
    """One row per trial, for the --table view"""
    rows = []
    for record in report['cases']:
        for trial in record['trials']:
            rows.append({
                'category': record['category'],
                'name': record['name'],
                'r': record['r'],
                'n': record['n'] if record['n'] is not None else record['N'],
                'trial': trial['trial_index'],
                'rel_error': trial['rel_error'],
                'condition': trial['condition'],
                'status': trial['status'],
                'resamples': trial['resamples'],
            })
    return pd.DataFrame(rows, columns=['category', 'name', 'r', 'n', 'trial', 'rel_error', 'condition', 'status',
                                       'resamples'])


def catalog_frames():
    """(identities, inversion kinds, Bailey pairs) as DataFrames"""
    identities = pd.DataFrame(catalog_rows())
    kinds = pd.DataFrame([{'id': name, 'description': KIND_DESCRIPTIONS[name]} for name in ALL_KINDS])
    pairs = pd.DataFrame(pair_catalog_rows())
    return identities, kinds, pairs
