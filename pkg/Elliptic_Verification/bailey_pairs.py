import logging

from constants import PAIR_TOL
from etc_functions import CompensatedSum, normalized_residual, relative_error, half_power
from exceptions import UsageError, ConstraintViolationError
from inversions import InversionKind, MatrixEntryRequest, entry, GEOM_AR_POS, GEOM_AR_NEG, GEOM_BCR
from multiindex import BoxDomain, as_index, weights
from theta_core import EllipticTerm

logger = logging.getLogger(__name__)

NEW_AR_JACKSON_PAIR = 'new-ar-jackson-pair'
AR_QUADRATIC_1_PAIR = 'ar-quadratic-1-pair'
AR_QUADRATIC_2_PAIR = 'ar-quadratic-2-pair'
DR_QUADRATIC_PAIR = 'dr-quadratic-pair'
DR_CUBIC_PAIR = 'dr-cubic-pair'
DR_QUARTIC_PAIR = 'dr-quartic-pair'

# derivation -> (inversion kind, m, sampled parameters, description)
DERIVATIONS = {
    NEW_AR_JACKSON_PAIR: (GEOM_AR_POS, 1, ('a', 'b', 'd'), "A_r Jackson sum against the m = 1 positive A_r kernel"),
    AR_QUADRATIC_1_PAIR: (GEOM_AR_POS, 2, ('a', 'd'), "A_r Jackson sum (q -> q^2) against the m = 2 positive A_r kernel"),
    AR_QUADRATIC_2_PAIR: (GEOM_AR_NEG, 2, ('a', 'b'), "A_r Jackson sum (q -> q^2) against the m = 2 negative A_r kernel, a^2 bc = X^2 q"),
    DR_QUADRATIC_PAIR: (GEOM_BCR, 2, ('a', 'b'), "C_r Jackson sum (q -> q^2) against the m = 2 BC_r kernel"),
    DR_CUBIC_PAIR: (GEOM_BCR, 3, ('a',), "C_r Jackson sum (q -> q^3) against the m = 3 BC_r kernel"),
    DR_QUARTIC_PAIR: (GEOM_BCR, 4, (), "C_r Jackson sum (q -> q^4) against the m = 4 BC_r kernel, a = i q^(-1/2)"),
}


def _prod(values):
    product = 1
    for v in values:
        product *= v
    return product


class BaileyPairSpec:
    """
    A pair of sequences (a_k, b_k) with sum_{0<=k<=n} F_nk a_k = b_n, where F
    is one of the normalized geometric inversion kernels. For the quartic
    pair the base point is fixed to i q^(-1/2); flip_root selects the other
    square root of q.
    """

    def __init__(self, derivation, params, flip_root=False):
        if derivation not in DERIVATIONS:
            raise UsageError(f"Unknown Bailey pair derivation: {derivation}. Known: {', '.join(DERIVATIONS)}")
        self.derivation = derivation
        self.params = {name: ([complex(v) for v in value] if name == 'x' else complex(value))
                       for name, value in params.items()}
        self.flip_root = bool(flip_root)
        if 'x' not in self.params or not self.params['x']:
            raise UsageError(f"{derivation} needs the point x")
        for name in DERIVATIONS[derivation][2]:
            if name not in self.params:
                raise UsageError(f"{derivation} needs parameter {name}")

    @property
    def r(self):
        return len(self.params['x'])

    def base_point(self, q):
        if self.derivation == DR_QUARTIC_PAIR:
            return 1j / half_power(q, 1, self.flip_root)
        return self.params['a']

    def completed(self, q):
        """Parameters with the derivation's constraint solved (c for the second quadratic pair)"""
        params = dict(self.params)
        if self.derivation == AR_QUADRATIC_2_PAIR:
            big_x = _prod(params['x'])
            solved = big_x * big_x * q / (params['a'] ** 2 * params['b'])
            if 'c' in self.params and relative_error(self.params['c'], solved) > 1e-13:
                raise ConstraintViolationError(f"{self.derivation}: a^2 bc = X^2 q fails for c = {self.params['c']}")
            params['c'] = solved
        params['a'] = self.base_point(q)
        return params

    def kind(self, q):
        name, m, _, _ = DERIVATIONS[self.derivation]
        return InversionKind(name, m=m, a=self.base_point(q), x=self.params['x'])


def _new_ar_jackson_a(p, k, ctx):
    q, a, b, d, x = ctx.q, p['a'], p['b'], p['d'], p['x']
    big_x, size_k = _prod(x), sum(k)
    term = EllipticTerm(ctx)
    term.poch([a * big_x * q, b], size_k).poch_inv([big_x * q / d, a * b * d], size_k)
    for i, x_i in enumerate(x):
        term.poch([d * x_i, big_x * x_i * q / (a * b * d)], k[i]).poch_inv([x_i / a, big_x * x_i * q / b], k[i])
    return term.value


def _new_ar_jackson_b(p, k, ctx):
    q, a, b, d, x = ctx.q, p['a'], p['b'], p['d'], p['x']
    big_x, size_k = _prod(x), sum(k)
    term = EllipticTerm(ctx)
    term.poch([big_x * q / (b * d), a * d], size_k).poch_inv([big_x * q / d, a * b * d], size_k)
    for i, x_i in enumerate(x):
        term.poch([big_x * x_i * q, a * b * q ** (size_k - k[i]) / x_i], k[i])
        term.poch_inv([big_x * x_i * q / b, a * q ** (size_k - k[i]) / x_i], k[i])
    return term.value


def _ar_quadratic_1_a(p, k, ctx):
    q, a, d, x = ctx.q, p['a'], p['d'], p['x']
    q2 = q * q
    big_x, size_k = _prod(x), sum(k)
    term = EllipticTerm(ctx)
    term.poch([a * big_x * q], 2 * size_k).poch_inv([big_x * q2 / d, a * a * d * big_x * q], size_k, q2)
    for i, x_i in enumerate(x):
        term.poch([d * x_i, x_i * q / (a * a * d)], k[i], q2).poch_inv([x_i / a], 2 * k[i])
    return term.value


def _ar_quadratic_1_b(p, k, ctx):
    q, a, d, x = ctx.q, p['a'], p['d'], p['x']
    q2 = q * q
    big_x, size_k = _prod(x), sum(k)
    _, e2 = weights(k)
    term = EllipticTerm(ctx).scalar(q ** (-e2))
    term.poch([a * d, q / (a * d)], size_k).poch_inv([big_x * q2 / d, a * a * d * big_x * q], size_k, q2)
    for i, x_i in enumerate(x):
        term.poch([big_x * x_i * q2, a * a * big_x * q ** (2 * size_k - 2 * k[i] + 1) / x_i], k[i], q2)
        term.poch_inv([a * q ** (size_k - k[i]) / x_i, x_i * q ** (k[i] - size_k + 1) / a], k[i])
    return term.value


def _ar_quadratic_2_a(p, k, ctx):
    q, a, b, c, x = ctx.q, p['a'], p['b'], p['c'], p['x']
    q2 = q * q
    big_x, size_k = _prod(x), sum(k)
    term = EllipticTerm(ctx)
    term.poch([b, c], size_k, q2).poch_inv([big_x / a], 2 * size_k)
    for i, x_i in enumerate(x):
        term.poch([a * x_i * q], 2 * k[i]).poch_inv([big_x * x_i * q2 / b, big_x * x_i * q2 / c], k[i], q2)
    return term.value


def _ar_quadratic_2_b(p, k, ctx):
    q, a, b, c, x = ctx.q, p['a'], p['b'], p['c'], p['x']
    q2 = q * q
    big_x, size_k = _prod(x), sum(k)
    term = EllipticTerm(ctx)
    term.poch([a * b / big_x, big_x * q / (a * b)], size_k).poch_inv([a / big_x, big_x * q / a], size_k)
    for i, x_i in enumerate(x):
        term.poch([big_x * x_i * q2, big_x * x_i * q2 / (b * c)], k[i], q2)
        term.poch_inv([big_x * x_i * q2 / b, big_x * x_i * q2 / c], k[i], q2)
    return term.value


def _dr_quadratic_a(p, k, ctx):
    q, a, b, x = ctx.q, p['a'], p['b'], p['x']
    q2 = q * q
    term = EllipticTerm(ctx)
    for i, x_i in enumerate(x):
        term.poch([a * x_i * q], 2 * k[i]).poch([x_i * q / (a * b), b * x_i / a], k[i], q2)
        term.poch_inv([x_i / a], 2 * k[i]).poch_inv([a * b * x_i * q, a * x_i * q2 / b], k[i], q2)
    return term.value


def _symmetric_pair_ratio(term, x, base, k):
    """prod_{i,j} (x_i x_j base; base)_{k_i} / prod_{i<j} (x_i x_j base; base)_{k_i+k_j}"""
    r = len(x)
    for i in range(r):
        for j in range(r):
            term.poch([x[i] * x[j] * base], k[i], base)
        for j in range(i + 1, r):
            term.poch_inv([x[i] * x[j] * base], k[i] + k[j], base)


def _dr_quadratic_b(p, k, ctx):
    q, a, b, x = ctx.q, p['a'], p['b'], p['x']
    q2 = q * q
    size_k = sum(k)
    term = EllipticTerm(ctx)
    term.poch([b * q ** (1 - size_k), q ** (2 - size_k) / b, a * a * q], size_k, q2)
    _symmetric_pair_ratio(term, x, q2, k)
    for i, x_i in enumerate(x):
        term.poch_inv([a * b * x_i * q, a * x_i * q2 / b, x_i * q ** (2 - size_k) / a,
                       a * q ** (1 + size_k - 2 * k[i]) / x_i], k[i], q2)
    return term.value


def _dr_cubic_a(p, k, ctx):
    q, a, x = ctx.q, p['a'], p['x']
    q3 = q ** 3
    term = EllipticTerm(ctx)
    for i, x_i in enumerate(x):
        term.poch([a * x_i * q], 3 * k[i]).poch([x_i / a ** 3], k[i], q3)
        term.poch_inv([x_i / a], 3 * k[i]).poch_inv([a ** 3 * x_i * q3], k[i], q3)
    return term.value


def _dr_cubic_b(p, k, ctx):
    q, a, x = ctx.q, p['a'], p['x']
    q3 = q ** 3
    size_k = sum(k)
    term = EllipticTerm(ctx)
    _symmetric_pair_ratio(term, x, q3, k)
    # (q^(-2|k|)/a^2, q^(1-2|k|)/a^2, q^(2-2|k|)/a^2; q^3)_{|k|}
    term.poch([q ** (-2 * size_k) / (a * a)], 3 * size_k)
    for i, x_i in enumerate(x):
        term.poch_inv([x_i * q ** (1 - size_k) / a], 3 * k[i])
        term.poch_inv([q ** (-3 * k[i]) / (a ** 3 * x_i)], k[i], q3)
    return term.value


def _dr_quartic_a(p, k, ctx, root):
    term = EllipticTerm(ctx)
    for i, x_i in enumerate(p['x']):
        term.poch([1j * x_i * root], 4 * k[i]).poch_inv([-1j * x_i * root], 4 * k[i])
    return term.value


def quartic_b_first(x, k, ctx, root):
    """First closed form of b_k for the quartic pair (root is the chosen q^(1/2))"""
    q = ctx.q
    q4 = q ** 4
    size_k = sum(k)
    term = EllipticTerm(ctx)
    _symmetric_pair_ratio(term, x, q4, k)
    term.poch([-q ** (2 - 2 * size_k), -q ** (3 - 2 * size_k), -q ** (4 - 2 * size_k)], size_k, q4)
    for i, x_i in enumerate(x):
        shift = q ** (-size_k)
        term.poch_inv([-1j * x_i * root ** 5 * shift, -1j * x_i * root ** 7 * shift, -1j * x_i * root ** 9 * shift,
                       1j * q ** (size_k - 4 * k[i]) * root ** 5 / x_i], k[i], q4)
    return term.value


def quartic_b_second(x, k, ctx, root):
    """Second closed form of b_k for the quartic pair"""
    q = ctx.q
    q4 = q ** 4
    size_k = sum(k)
    _, e2 = weights(k)
    term = EllipticTerm(ctx).scalar(q ** (-3 * size_k - 3 * e2))
    term.poch([-1, -q, -q * q], size_k, q * q)
    _symmetric_pair_ratio(term, x, q4, k)
    for i, x_i in enumerate(x):
        term.theta(1j / (root * x_i)).theta_inv(1j * q ** (size_k - 4 * k[i]) / (root * x_i))
        term.poch([1j * root / x_i], size_k - k[i])
        term.poch_inv([1j / (root * x_i)], size_k).poch_inv([-1j * x_i * q ** (k[i] - size_k) * root], 3 * k[i])
    return term.value


_SEQUENCES = {
    NEW_AR_JACKSON_PAIR: (_new_ar_jackson_a, _new_ar_jackson_b),
    AR_QUADRATIC_1_PAIR: (_ar_quadratic_1_a, _ar_quadratic_1_b),
    AR_QUADRATIC_2_PAIR: (_ar_quadratic_2_a, _ar_quadratic_2_b),
    DR_QUADRATIC_PAIR: (_dr_quadratic_a, _dr_quadratic_b),
    DR_CUBIC_PAIR: (_dr_cubic_a, _dr_cubic_b),
}


def pair_sequences(spec, k, ctx):
    """(a_k, b_k) for the derivation"""
    k = tuple(k)
    if spec.derivation == DR_QUARTIC_PAIR:
        root = half_power(ctx.q, 1, spec.flip_root)
        x = spec.params['x']
        return _dr_quartic_a(spec.params, k, ctx, root), quartic_b_first(x, k, ctx, root)
    a_seq, b_seq = _SEQUENCES[spec.derivation]
    params = spec.completed(ctx.q)
    return a_seq(params, k, ctx), b_seq(params, k, ctx)


def bailey_pair_sides(spec, n, ctx):
    """
    Returns:
        tuple: (sum_{0<=k<=n} F_nk a_k, b_n, sum |F_nk a_k|)
    """
    n = as_index(n)
    if len(n) != spec.r:
        raise UsageError(f"n must have {spec.r} entries, got {n}")
    kind = spec.kind(ctx.q)
    total = CompensatedSum()
    for k in BoxDomain(n):
        a_k, _ = pair_sequences(spec, k, ctx)
        total.add(entry(MatrixEntryRequest(kind, n, k, 'F'), None, ctx) * a_k)
    _, b_n = pair_sequences(spec, n, ctx)
    logger.debug(f"{spec.derivation} n={n}: sum={total.value}, b_n={b_n}")
    return total.value, b_n, total.abs_total


def bailey_pair_residual(spec, n, ctx):
    """|sum_{0<=k<=n} F_nk a_k - b_n| normalized by sum |F_nk a_k|"""
    value, b_n, scale = bailey_pair_sides(spec, n, ctx)
    return normalized_residual(value - b_n, max(scale, abs(b_n)))


def inverse_pair_residual(spec, n, ctx):
    """|sum_{0<=k<=n} G_nk b_k - a_n| normalized the same way"""
    n = as_index(n)
    kind = spec.kind(ctx.q)
    total = CompensatedSum()
    for k in BoxDomain(n):
        _, b_k = pair_sequences(spec, k, ctx)
        total.add(entry(MatrixEntryRequest(kind, n, k, 'G'), None, ctx) * b_k)
    a_n, _ = pair_sequences(spec, n, ctx)
    return normalized_residual(total.value - a_n, max(total.abs_total, abs(a_n)))


def quartic_b_forms_residual(x, k, ctx, flip_root=False):
    """Relative difference between the two closed quartic b_k forms"""
    root = half_power(ctx.q, 1, flip_root)
    return relative_error(quartic_b_first(x, tuple(k), ctx, root), quartic_b_second(x, tuple(k), ctx, root))


def pair_catalog_rows():
    return [{'id': name, 'kernel': kind, 'm': m, 'parameters': ', '.join(list(names) + ['x[r]']),
             'description': description}
            for name, (kind, m, names, description) in DERIVATIONS.items()]


def check_pair(spec, n, ctx, tol=PAIR_TOL):
    residual = bailey_pair_residual(spec, n, ctx)
    return residual, residual <= tol
