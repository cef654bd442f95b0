import logging

from constants import CONSTRAINT_TOL, IDENTITY_TOL
from etc_functions import CompensatedSum, relative_error, half_power
from exceptions import (ConstraintViolationError, DegenerateParameterError, ThetaDomainError, UsageError)
from multiindex import BoxDomain, SimplexDomain, as_index, weights, apply_delta_ratio
from theta_core import EllipticTerm

logger = logging.getLogger(__name__)

BOX = 'box'
SIMPLEX = 'simplex'
HALF_SIMPLEX = 'half-simplex'

AR_JACKSON = 'ar-jackson'
CR_JACKSON = 'cr-jackson'
NEW_AR_JACKSON = 'new-ar-jackson'
NEW_AR_JACKSON_SIMPLEX = 'new-ar-jackson-simplex'
AR_QUADRATIC_1 = 'ar-quadratic-1'
AR_QUADRATIC_1_SIMPLEX = 'ar-quadratic-1-simplex'
AR_QUADRATIC_2 = 'ar-quadratic-2'
AR_QUADRATIC_2_SIMPLEX = 'ar-quadratic-2-simplex'
DR_QUADRATIC = 'dr-quadratic'
DR_QUADRATIC_SIMPLEX_1 = 'dr-quadratic-simplex-1'
DR_QUADRATIC_SIMPLEX_2 = 'dr-quadratic-simplex-2'
DR_CUBIC = 'dr-cubic'
DR_CUBIC_SIMPLEX_A = 'dr-cubic-simplex-a'
DR_CUBIC_SIMPLEX_B = 'dr-cubic-simplex-b'
DR_QUARTIC = 'dr-quartic'
QUARTIC_R1 = 'quartic-r1'

SIMPLEX_PAIRS = (NEW_AR_JACKSON, AR_QUADRATIC_1, AR_QUADRATIC_2, DR_QUADRATIC, DR_CUBIC)


def _prod(values):
    product = 1
    for v in values:
        product *= v
    return product


class IdentityInstance:
    """
    One fully specified instance of a catalog identity: dimension r, the box
    corner n (box identities) or the cap N (simplex identities), the named
    parameters and the elliptic context.
    """

    def __init__(self, identity, r, params, ctx, n=None, N=None):
        self.spec = identity if isinstance(identity, IdentitySpec) else get_identity(identity)
        self.r = int(r)
        self.params = dict(params)
        self.ctx = ctx
        if self.spec.fixed_r is not None and self.r != self.spec.fixed_r:
            raise UsageError(f"{self.spec.identity_id} is only defined for r = {self.spec.fixed_r}")
        if self.r < 1:
            raise UsageError(f"Dimension r must be positive, got {self.r}")
        if self.spec.domain == BOX:
            if n is None:
                raise UsageError(f"{self.spec.identity_id} sums over a box and needs n")
            self.n = as_index(n)
            if len(self.n) != self.r or any(v < 0 for v in self.n):
                raise UsageError(f"n must have {self.r} non-negative entries, got {self.n}")
            self.N = None
        else:
            if N is None or int(N) < 0:
                raise UsageError(f"{self.spec.identity_id} sums over a simplex and needs N >= 0")
            self.N = int(N)
            self.n = None

    @property
    def size(self):
        """|n| for box identities, N for simplex identities"""
        return sum(self.n) if self.n is not None else self.N

    @property
    def q(self):
        return self.ctx.q

    def domain(self):
        if self.spec.domain == BOX:
            return BoxDomain(self.n)
        return SimplexDomain(self.r, self.N, half_cap=self.spec.domain == HALF_SIMPLEX)

    def __getitem__(self, name):
        return self.params[name]

    def __repr__(self):
        where = f"n={self.n}" if self.n is not None else f"N={self.N}"
        return f"IdentityInstance({self.spec.identity_id}, r={self.r}, {where})"


class IdentitySpec:
    def __init__(self, identity_id, title, domain, scalars, vectors, summand, rhs, free=None,
                 constraint='none', solver=None, fixed_r=None):
        self.identity_id = identity_id
        self.title = title
        self.domain = domain
        self.scalars = tuple(scalars)
        # vector name -> length offset, the vector has r + offset entries
        self.vectors = dict(vectors)
        self.summand = summand
        self.rhs = rhs
        self.free = free
        self.constraint = constraint
        self.solver = solver
        self.fixed_r = fixed_r

    def schema(self):
        parts = list(self.scalars)
        for name, offset in self.vectors.items():
            parts.append(f"{name}[r{'+' + str(offset) if offset else ''}]")
        return ', '.join(parts)


def _term(inst, k, m):
    term = EllipticTerm(inst.ctx)
    if 'x' in inst.params:
        apply_delta_ratio(term, inst['x'], inst.q, m, k)
    return term


def _pair_ratio(term, x, q, m, n, k):
    """prod_{i,j} (q^(-m n_j) x_i/x_j; q^m)_{k_i} / (q^m x_i/x_j; q^m)_{k_i}"""
    base = q ** m
    for i, x_i in enumerate(x):
        for j, x_j in enumerate(x):
            term.poch([q ** (-m * n[j]) * x_i / x_j], k[i], base).poch_inv([base * x_i / x_j], k[i], base)


# ---- A_r and C_r Jackson summations ----

def _ar_jackson_summand(inst, k):
    q, a, b, c, d, e, x, n = inst.q, inst['a'], inst['b'], inst['c'], inst['d'], inst['e'], inst['x'], inst.n
    size_k = sum(k)
    term = _term(inst, k, 1)
    for i, x_i in enumerate(x):
        term.theta(a * x_i * q ** (size_k + k[i])).theta_inv(a * x_i)
        term.poch([a * x_i], size_k).poch([d * x_i, e * x_i], k[i])
        term.poch_inv([a * x_i * q ** (n[i] + 1)], size_k).poch_inv([a * x_i * q / b, a * x_i * q / c], k[i])
    _pair_ratio(term, x, q, 1, n, k)
    term.poch([b, c], size_k).poch_inv([a * q / d, a * q / e], size_k)
    return term.scalar(q ** size_k).value


def _ar_jackson_rhs(inst):
    q, a, b, c, d, x, n = inst.q, inst['a'], inst['b'], inst['c'], inst['d'], inst['x'], inst.n
    size_n = sum(n)
    term = EllipticTerm(inst.ctx)
    term.poch([a * q / (b * d), a * q / (c * d)], size_n).poch_inv([a * q / d, a * q / (b * c * d)], size_n)
    for i, x_i in enumerate(x):
        term.poch([a * x_i * q, a * x_i * q / (b * c)], n[i]).poch_inv([a * x_i * q / b, a * x_i * q / c], n[i])
    return term.value


def _cr_jackson_summand(inst, k):
    q, a, x, n, r = inst.q, inst['a'], inst['x'], inst.n, inst.r
    others = [inst['b'], inst['c'], inst['d'], inst['e']]
    term = _term(inst, k, 1).scalar(q ** sum(k))
    for i in range(r):
        for j in range(i, r):
            term.theta(a * x[i] * x[j] * q ** (k[i] + k[j])).theta_inv(a * x[i] * x[j])
    for i in range(r):
        for j in range(r):
            term.poch([q ** (-n[j]) * x[i] / x[j], a * x[i] * x[j]], k[i])
            term.poch_inv([q * x[i] / x[j], a * x[i] * x[j] * q ** (n[j] + 1)], k[i])
    for i in range(r):
        term.poch([v * x[i] for v in others], k[i]).poch_inv([a * x[i] * q / v for v in others], k[i])
    return term.value


def _cr_jackson_rhs(inst):
    q, a, b, c, d, x, n, r = inst.q, inst['a'], inst['b'], inst['c'], inst['d'], inst['x'], inst.n, inst.r
    size_n = sum(n)
    term = EllipticTerm(inst.ctx)
    for i in range(r):
        for j in range(r):
            term.poch([a * x[i] * x[j] * q], n[i])
        for j in range(i + 1, r):
            term.poch_inv([a * x[i] * x[j] * q], n[i] + n[j])
    term.poch([a * q / (b * c), a * q / (b * d), a * q / (c * d)], size_n)
    for i in range(r):
        term.poch_inv([a * x[i] * q / b, a * x[i] * q / c, a * x[i] * q / d,
                       a * q ** (size_n - n[i] + 1) / (b * c * d * x[i])], n[i])
    return term.value


# ---- the new A_r Jackson summation and its simplex companion ----

def _new_ar_jackson_summand(inst, k):
    q, a, b, c, d, x, n = inst.q, inst['a'], inst['b'], inst['c'], inst['d'], inst['x'], inst.n
    size_k, size_n = sum(k), sum(n)
    term = _term(inst, k, 1)
    term.theta(a * q ** (2 * size_k)).theta_inv(a)
    term.poch([a, b, c], size_k).poch_inv([a * q ** (size_n + 1), a * q / b, a * q / c], size_k)
    term.scalar(q ** size_k)
    _pair_ratio(term, x, q, 1, n, k)
    for i, x_i in enumerate(x):
        term.poch([b * c * d / (a * x_i)], size_k - k[i]).poch([d / x_i], size_k)
        term.poch([a * a * x_i * q ** (size_n + 1) / (b * c * d)], k[i])
        term.poch_inv([d / x_i], size_k - k[i]).poch_inv([b * c * d * q ** (-n[i]) / (a * x_i)], size_k)
        term.poch_inv([a * x_i * q / d], k[i])
    return term.value


def _new_ar_jackson_rhs(inst):
    q, a, b, c, d, x, n = inst.q, inst['a'], inst['b'], inst['c'], inst['d'], inst['x'], inst.n
    size_n = sum(n)
    term = EllipticTerm(inst.ctx)
    term.poch([a * q, a * q / (b * c)], size_n).poch_inv([a * q / b, a * q / c], size_n)
    for i, x_i in enumerate(x):
        term.poch([a * x_i * q / (b * d), a * x_i * q / (c * d)], n[i])
        term.poch_inv([a * x_i * q / d, a * x_i * q / (b * c * d)], n[i])
    return term.value


def _new_ar_jackson_simplex_summand(inst, k):
    q, a, b, d, x, c, big_n = inst.q, inst['a'], inst['b'], inst['d'], inst['x'], inst['c'], inst.N
    size_k = sum(k)
    big_c, big_x = _prod(c), _prod(x)
    term = _term(inst, k, 1)
    term.theta(a * q ** (2 * size_k)).theta_inv(a)
    term.poch([a, b, q ** (-big_n)], size_k).poch_inv([a * q / b, a * q ** (big_n + 1)], size_k)
    term.scalar(q ** size_k)
    for i, x_i in enumerate(x):
        term.poch([a * q / (big_c * big_x * x_i)], size_k - k[i]).poch([d / x_i], size_k)
        term.poch([c_j * x_i for c_j in c], k[i])
        term.poch_inv([d / x_i], size_k - k[i]).poch_inv([a * x_i * q / d], k[i])
        term.poch_inv([q * x_i / x_j for x_j in x], k[i])
    term.poch_inv([a * c_i * q / (big_c * big_x) for c_i in c], size_k)
    return term.value


def _new_ar_jackson_simplex_rhs(inst):
    q, a, b, d, x, c, big_n = inst.q, inst['a'], inst['b'], inst['d'], inst['x'], inst['c'], inst.N
    term = EllipticTerm(inst.ctx)
    term.poch([a * q], big_n).scalar_inv(b ** big_n).poch_inv([a * q / b], big_n)
    for x_i in x:
        term.poch([a * x_i * q / (b * d)], big_n).poch_inv([a * x_i * q / d], big_n)
    for c_i in c:
        term.poch([a * q / (c_i * d)], big_n).poch_inv([a * q / (b * c_i * d)], big_n)
    return term.value


# ---- quadratic A_r summations ----

def _ar_quadratic_1_summand(inst, k):
    q, a, b, c, d, x, n = inst.q, inst['a'], inst['b'], inst['c'], inst['d'], inst['x'], inst.n
    q2 = q * q
    size_k, size_n = sum(k), sum(n)
    _, e2 = weights(k)
    term = _term(inst, k, 2)
    term.theta(a * q ** (3 * size_k)).theta_inv(a)
    term.poch([a, b, q / b], size_k).poch_inv([a * q ** (2 * size_n + 1)], size_k)
    term.poch_inv([a * q2 / b, a * q * b], size_k, q2)
    term.scalar(q ** (size_k - e2))
    for i, x_i in enumerate(x):
        term.poch([c * x_i], k[i], q2).poch([d / x_i], size_k, q2).poch([d / (a * x_i)], size_k - k[i])
        term.poch_inv([a * q ** (2 * size_n - 2 * n[i] + 1) / (c * x_i)], size_k)
        term.poch_inv([d / x_i], size_k - k[i], q2)
        term.poch_inv([a * x_i * q ** (k[i] - size_k + 1) / d], k[i])
    _pair_ratio(term, x, q, 2, n, k)
    return term.value


def _ar_quadratic_1_rhs(inst):
    q, a, b, d, x, n = inst.q, inst['a'], inst['b'], inst['d'], inst['x'], inst.n
    q2 = q * q
    size_n = sum(n)
    term = EllipticTerm(inst.ctx)
    term.poch([a * q], 2 * size_n).poch_inv([a * b * q, a * q2 / b], size_n, q2)
    for i, x_i in enumerate(x):
        term.poch([a * b * x_i * q / d, a * x_i * q2 / (b * d)], n[i], q2)
        term.poch_inv([a * x_i * q / d], 2 * n[i])
    return term.value


def _ar_quadratic_1_simplex_summand(inst, k):
    q, a, c, x, b, big_n = inst.q, inst['a'], inst['c'], inst['x'], inst['b'], inst.N
    q2 = q * q
    size_k = sum(k)
    _, e2 = weights(k)
    big_bx = _prod(b) * _prod(x)
    term = _term(inst, k, 2)
    term.theta(a * q ** (3 * size_k)).theta_inv(a)
    term.poch([a, q ** (-big_n), q ** (big_n + 1)], size_k)
    term.poch_inv([a * q ** (big_n + 2), a * q ** (1 - big_n)], size_k, q2)
    term.poch_inv([a * b_i * q / big_bx for b_i in b], size_k)
    term.scalar(q ** (size_k - e2))
    for i, x_i in enumerate(x):
        term.poch([c / x_i], size_k, q2).poch([c / (a * x_i)], size_k - k[i])
        term.poch([b_j * x_i for b_j in b], k[i], q2)
        term.poch_inv([c / x_i], size_k - k[i], q2)
        term.poch_inv([a * x_i * q ** (k[i] - size_k + 1) / c], k[i])
        term.poch_inv([q2 * x_i / x_j for x_j in x], k[i], q2)
    return term.value


def _ar_quadratic_1_simplex_rhs(inst):
    q, a, c, x, b, big_n = inst.q, inst['a'], inst['c'], inst['x'], inst['b'], inst.N
    q2 = q * q
    term = EllipticTerm(inst.ctx)
    if big_n % 2 == 0:
        m = big_n // 2
        term.poch([a * q2], m, q2).poch_inv([q / a], m, q2)
        for x_i in x:
            term.poch([c * q / (a * x_i)], m, q2).poch_inv([a * x_i * q2 / c], m, q2)
        for b_i in b:
            term.poch([a * q2 / (b_i * c)], m, q2).poch_inv([b_i * c * q / a], m, q2)
        return term.value
    m = (big_n + 1) // 2
    term.poch([a * q], m, q2).poch_inv([1 / a], m, q2)
    for x_i in x:
        term.poch([c / (a * x_i)], m, q2).poch_inv([a * x_i * q / c], m, q2)
    for b_i in b:
        term.poch([a * q / (b_i * c)], m, q2).poch_inv([b_i * c / a], m, q2)
    return term.value


def _ar_quadratic_2_summand(inst, k):
    q, a, b, c, d, x, n = inst.q, inst['a'], inst['b'], inst['c'], inst['d'], inst['x'], inst.n
    q2 = q * q
    size_k = sum(k)
    term = _term(inst, k, 2)
    term.poch([b, q / b], size_k).poch_inv([a * q / c, a * q / d], size_k).scalar(q ** size_k)
    _pair_ratio(term, x, q, 2, n, k)
    for i, x_i in enumerate(x):
        term.theta(a * x_i * q ** (size_k + 2 * k[i])).theta_inv(a * x_i)
        term.poch([a * x_i], size_k).poch_inv([a * x_i * q ** (2 * n[i] + 1)], size_k)
        term.poch([c * x_i, d * x_i], k[i], q2).poch_inv([a * x_i * q2 / b, a * b * x_i * q], k[i], q2)
    return term.value


def _ar_quadratic_2_rhs(inst):
    q, a, b, c, x, n = inst.q, inst['a'], inst['b'], inst['c'], inst['x'], inst.n
    q2 = q * q
    size_n = sum(n)
    term = EllipticTerm(inst.ctx)
    term.poch([a * q2 / (b * c), a * b * q / c], size_n, q2).poch_inv([a * q / c], 2 * size_n)
    for i, x_i in enumerate(x):
        term.poch([a * x_i * q], 2 * n[i]).poch_inv([a * x_i * q2 / b, a * b * x_i * q], n[i], q2)
    return term.value


def _ar_quadratic_2_simplex_summand(inst, k):
    q, a, x, b, big_n = inst.q, inst['a'], inst['x'], inst['b'], inst.N
    q2 = q * q
    size_k = sum(k)
    term = _term(inst, k, 2)
    term.poch([q ** (-big_n), q ** (big_n + 1)], size_k).poch_inv([a * q / b_i for b_i in b], size_k)
    term.scalar(q ** size_k)
    for i, x_i in enumerate(x):
        term.theta(a * x_i * q ** (size_k + 2 * k[i])).theta_inv(a * x_i)
        term.poch([a * x_i], size_k).poch([x_i * b_j for b_j in b], k[i], q2)
        term.poch_inv([a * x_i * q ** (big_n + 2), a * x_i * q ** (1 - big_n)], k[i], q2)
        term.poch_inv([q2 * x_i / x_j for x_j in x], k[i], q2)
    return term.value


def _ar_quadratic_2_simplex_rhs(inst):
    q, a, x, b, big_n = inst.q, inst['a'], inst['x'], inst['b'], inst.N
    q2 = q * q
    term = EllipticTerm(inst.ctx)
    if big_n % 2 == 0:
        m = big_n // 2
        for x_i in x:
            term.poch([a * x_i * q2], m, q2).poch_inv([q / (a * x_i)], m, q2)
        for b_i in b:
            term.poch([b_i * q / a], m, q2).poch_inv([a * q2 / b_i], m, q2)
        return term.value
    m = (big_n + 1) // 2
    for x_i in x:
        term.poch([a * x_i * q], m, q2).poch_inv([1 / (a * x_i)], m, q2)
    for b_i in b:
        term.poch([b_i / a], m, q2).poch_inv([a * q / b_i], m, q2)
    return term.value


# ---- D_r quadratic summations ----

def _pair_products_over(term, x, base, k, extra_of_pair):
    """prod_{i<j} 1 / (extra * x_i x_j; base)_{k_i + k_j}"""
    r = len(x)
    for i in range(r):
        for j in range(i + 1, r):
            term.poch_inv([extra_of_pair * x[i] * x[j]], k[i] + k[j], base)


def _dr_quadratic_summand(inst, k):
    q, a, b, x, n = inst.q, inst['a'], inst['b'], inst['x'], inst.n
    q2 = q * q
    size_k = sum(k)
    _, e2 = weights(k)
    term = _term(inst, k, 2).scalar(q ** (size_k - e2))
    _pair_products_over(term, x, q2, k, 1)
    for i, x_i in enumerate(x):
        term.theta(a * x_i * q ** (2 * k[i] + size_k)).theta_inv(a * x_i)
        term.poch([a * x_i], size_k).poch([a * q / x_i], size_k - k[i])
        term.poch_inv([a * x_i * q ** (2 * n[i] + 1), a * q ** (1 - 2 * n[i]) / x_i], size_k)
        term.poch_inv([q ** (k[i] - size_k) * x_i / a], k[i])
    term.poch([a * a * q], size_k, q2).poch([b, q / b], size_k)
    for i, x_i in enumerate(x):
        term.poch_inv([a * b * x_i * q, a * x_i * q2 / b], k[i], q2)
    for i, x_i in enumerate(x):
        for j, x_j in enumerate(x):
            term.poch([q ** (-2 * n[j]) * x_i / x_j, x_i * x_j * q ** (2 * n[j])], k[i], q2)
            term.poch_inv([q2 * x_i / x_j], k[i], q2)
    return term.value


def _dr_quadratic_rhs(inst):
    q, a, b, x, n = inst.q, inst['a'], inst['b'], inst['x'], inst.n
    q2 = q * q
    term = EllipticTerm(inst.ctx)
    for i, x_i in enumerate(x):
        term.poch([a * x_i * q], 2 * n[i]).poch([x_i * q / (a * b), b * x_i / a], n[i], q2)
        term.poch_inv([x_i / a], 2 * n[i]).poch_inv([a * b * x_i * q, a * x_i * q2 / b], n[i], q2)
    return term.value


def _dr_quadratic_simplex_1_summand(inst, k):
    q, a, x, b, big_n = inst.q, inst['a'], inst['x'], inst['b'], inst.N
    q2 = q * q
    size_k = sum(k)
    _, e2 = weights(k)
    term = _term(inst, k, 2).scalar(q ** (size_k - e2))
    term.poch([a * a * q], size_k, q2).poch([q ** (big_n + 1), q ** (-big_n)], size_k)
    for i, x_i in enumerate(x):
        term.poch_inv([a * x_i * q ** (big_n + 2), a * x_i * q ** (1 - big_n)], k[i], q2)
    _pair_products_over(term, x, q2, k, 1)
    for i, x_i in enumerate(x):
        for j, b_j in enumerate(b):
            term.poch([b_j * x_i, x_i / b_j], k[i], q2).poch_inv([q2 * x_i / x[j]], k[i], q2)
    for i, x_i in enumerate(x):
        term.theta(a * x_i * q ** (2 * k[i] + size_k)).theta_inv(a * x_i)
        term.poch([a * x_i], size_k).poch([a * q / x_i], size_k - k[i])
        term.poch_inv([a * q / b[i], a * b[i] * q], size_k)
        term.poch_inv([q ** (k[i] - size_k) * x_i / a], k[i])
    return term.value


def _dr_quadratic_simplex_1_rhs(inst):
    q, a, x, b, big_n = inst.q, inst['a'], inst['x'], inst['b'], inst.N
    q2 = q * q
    term = EllipticTerm(inst.ctx)
    if big_n % 2 == 0:
        m = big_n // 2
        for x_i, b_i in zip(x, b):
            term.poch([a * x_i * q2, a * q2 / x_i, b_i * q / a, q / (a * b_i)], m, q2)
            term.poch_inv([q / (a * x_i), x_i * q / a, a * q2 / b_i, a * b_i * q2], m, q2)
        return term.value
    m = (big_n + 1) // 2
    for x_i, b_i in zip(x, b):
        term.poch([a * x_i * q, a * q / x_i, b_i / a, 1 / (a * b_i)], m, q2)
        term.poch_inv([1 / (a * x_i), x_i / a, a * q / b_i, a * b_i * q], m, q2)
    return term.value


def _dr_quadratic_simplex_2_summand(inst, k):
    q, a, b, x, c, big_n = inst.q, inst['a'], inst['b'], inst['x'], inst['c'], inst.N
    q2 = q * q
    size_k = sum(k)
    _, e2 = weights(k)
    term = _term(inst, k, 2).scalar(q ** (size_k - e2))
    _pair_products_over(term, x, q2, k, a * a * q ** (2 * big_n + 1))
    for i, x_i in enumerate(x):
        term.theta(a * x_i * q ** (2 * k[i] + size_k)).theta_inv(a * x_i)
        term.poch([a * x_i], size_k).poch([q ** (-2 * big_n) / (a * x_i)], size_k - k[i])
        term.poch_inv([a * q / c[i], c[i] * q ** (-2 * big_n) / a], size_k)
        term.poch_inv([q ** (2 * big_n + 1 + k[i] - size_k) * a * x_i], k[i])
    term.poch([b, q / b], size_k).poch([q ** (-2 * big_n)], size_k, q2)
    for i, x_i in enumerate(x):
        term.poch_inv([a * b * x_i * q, a * x_i * q2 / b], k[i], q2)
        for j, c_j in enumerate(c):
            term.poch([c_j * x_i, a * a * q ** (2 * big_n + 1) * x_i / c_j], k[i], q2)
            term.poch_inv([q2 * x_i / x[j]], k[i], q2)
    return term.value


def _dr_quadratic_simplex_2_rhs(inst):
    q, a, b, x, c, big_n = inst.q, inst['a'], inst['b'], inst['x'], inst['c'], inst.N
    q2 = q * q
    term = EllipticTerm(inst.ctx)
    for x_i, c_i in zip(x, c):
        term.poch([a * x_i * q], 2 * big_n).poch([a * b * q / c_i, a * q2 / (b * c_i)], big_n, q2)
        term.poch_inv([a * q / c_i], 2 * big_n).poch_inv([a * x_i * q2 / b, a * b * x_i * q], big_n, q2)
    return term.value


# ---- D_r cubic summations ----

def _dr_cubic_summand(inst, k):
    q, a, x, n = inst.q, inst['a'], inst['x'], inst.n
    q3 = q ** 3
    size_k = sum(k)
    _, e2 = weights(k)
    term = _term(inst, k, 3).scalar(q ** (size_k - 2 * e2))
    _pair_products_over(term, x, q3, k, 1)
    for i, x_i in enumerate(x):
        term.theta(a * x_i * q ** (size_k + 3 * k[i])).theta_inv(a * x_i)
        term.poch([a * x_i], size_k).poch([a * q / x_i], size_k - k[i])
        term.poch_inv([a * x_i * q ** (3 * n[i] + 1), a * q ** (1 - 3 * n[i]) / x_i], size_k)
        term.poch_inv([q ** (k[i] - size_k) * x_i / a], 2 * k[i])
    term.poch([1 / (a * a)], size_k).poch([a * a * q], 2 * size_k)
    for i, x_i in enumerate(x):
        term.poch_inv([a ** 3 * x_i * q3], k[i], q3)
        for j, x_j in enumerate(x):
            term.poch([q ** (-3 * n[j]) * x_i / x_j, x_i * x_j * q ** (3 * n[j])], k[i], q3)
            term.poch_inv([q3 * x_i / x_j], k[i], q3)
    return term.value


def _dr_cubic_rhs(inst):
    q, a, x, n = inst.q, inst['a'], inst['x'], inst.n
    q3 = q ** 3
    term = EllipticTerm(inst.ctx)
    for i, x_i in enumerate(x):
        term.poch([a * x_i * q], 3 * n[i]).poch([x_i / a ** 3], n[i], q3)
        term.poch_inv([x_i / a], 3 * n[i]).poch_inv([a ** 3 * x_i * q3], n[i], q3)
    return term.value


def _dr_cubic_simplex_a_summand(inst, k):
    q, a, x, b, big_n = inst.q, inst['a'], inst['x'], inst['b'], inst.N
    q3 = q ** 3
    size_k = sum(k)
    _, e2 = weights(k)
    term = _term(inst, k, 3).scalar(q ** (size_k - 2 * e2))
    _pair_products_over(term, x, q3, k, a * a * q ** (-big_n))
    for i, x_i in enumerate(x):
        term.theta(a * x_i * q ** (size_k + 3 * k[i])).theta_inv(a * x_i)
        term.poch([a * x_i], size_k).poch([q ** (big_n + 1) / (a * x_i)], size_k - k[i])
        term.poch_inv([a * q / b[i], b[i] * q ** (big_n + 1) / a], size_k)
        term.poch_inv([q ** (k[i] - size_k - big_n) * a * x_i], 2 * k[i])
    term.poch([q ** (-big_n)], size_k).poch([q ** (big_n + 1)], 2 * size_k)
    for i, x_i in enumerate(x):
        term.poch_inv([a * x_i * q ** (big_n + 3)], k[i], q3)
        for j, b_j in enumerate(b):
            term.poch([b_j * x_i, a * a * x_i * q ** (-big_n) / b_j], k[i], q3)
            term.poch_inv([q3 * x_i / x[j]], k[i], q3)
    return term.value


def _dr_cubic_simplex_a_rhs(inst):
    q, a, x, b, big_n = inst.q, inst['a'], inst['x'], inst['b'], inst.N
    q3 = q ** 3
    term = EllipticTerm(inst.ctx)
    for x_i, b_i in zip(x, b):
        term.poch([b_i / a], big_n + 1).poch([q ** (-big_n) / (a * x_i)], big_n + 1, q3)
        term.poch_inv([1 / (a * x_i)], big_n + 1).poch_inv([b_i * q ** (-big_n) / a], big_n + 1, q3)
    return term.value


def _dr_cubic_simplex_b_summand(inst, k):
    q, a, x, b, big_n = inst.q, inst['a'], inst['x'], inst['b'], inst.N
    q3 = q ** 3
    size_k = sum(k)
    _, e2 = weights(k)
    term = _term(inst, k, 3).scalar(q ** (size_k - 2 * e2))
    _pair_products_over(term, x, q3, k, a * a * q ** (big_n + 1))
    for i, x_i in enumerate(x):
        term.theta(a * x_i * q ** (size_k + 3 * k[i])).theta_inv(a * x_i)
        term.poch([a * x_i], size_k).poch([q ** (-big_n) / (a * x_i)], size_k - k[i])
        term.poch_inv([a * q / b[i], b[i] * q ** (-big_n) / a], size_k)
        term.poch_inv([q ** (k[i] - size_k + big_n + 1) * a * x_i], 2 * k[i])
    term.poch([q ** (big_n + 1)], size_k).poch([q ** (-big_n)], 2 * size_k)
    for i, x_i in enumerate(x):
        term.poch_inv([a * x_i * q ** (2 - big_n)], k[i], q3)
        for j, b_j in enumerate(b):
            term.poch([b_j * x_i, a * a * x_i * q ** (big_n + 1) / b_j], k[i], q3)
            term.poch_inv([q3 * x_i / x[j]], k[i], q3)
    return term.value


def _dr_cubic_simplex_b_rhs(inst):
    q, a, x, b, big_n = inst.q, inst['a'], inst['x'], inst['b'], inst.N
    q3 = q ** 3
    term = EllipticTerm(inst.ctx)
    for x_i, b_i in zip(x, b):
        term.poch([a * x_i * q], big_n).poch([a * q ** (2 - big_n) / b_i], big_n, q3)
        term.poch_inv([a * q / b_i], big_n).poch_inv([a * x_i * q ** (2 - big_n)], big_n, q3)
    return term.value


# ---- quartic summations ----

def _dr_quartic_summand(inst, k):
    q, a, x, n = inst.q, inst['a'], inst['x'], inst.n
    q2, q4 = q * q, q ** 4
    size_k = sum(k)
    _, e2 = weights(k)
    term = _term(inst, k, 4).scalar(q ** (size_k - 3 * e2))
    term.poch([-1, -q, -q2], size_k, q2)
    _pair_products_over(term, x, q4, k, -a * a * q)
    for i, x_i in enumerate(x):
        term.theta(a * x_i * q ** (size_k + 4 * k[i])).theta_inv(a * x_i)
        term.poch([a * x_i], size_k).poch([-1 / (a * x_i)], size_k - k[i])
        term.poch_inv([a * x_i * q ** (4 * n[i] + 1), -q ** (-4 * n[i]) / (a * x_i)], size_k)
        term.poch_inv([-q ** (k[i] - size_k + 1) * a * x_i], 3 * k[i])
        for j, x_j in enumerate(x):
            term.poch([q ** (-4 * n[j]) * x_i / x_j, -a * a * x_i * x_j * q ** (4 * n[j] + 1)], k[i], q4)
            term.poch_inv([q4 * x_i / x_j], k[i], q4)
    return term.value


def _dr_quartic_rhs(inst):
    q, a, x, n = inst.q, inst['a'], inst['x'], inst.n
    term = EllipticTerm(inst.ctx)
    for i, x_i in enumerate(x):
        term.poch([a * x_i * q], 4 * n[i]).poch_inv([-a * x_i * q], 4 * n[i])
    return term.value


def _quartic_r1_common(inst, k):
    q, a, n = inst.q, inst['a'], inst.n[0]
    q4 = q ** 4
    (k,) = k
    term = EllipticTerm(inst.ctx)
    term.theta(a * q ** (5 * k)).theta_inv(a)
    term.poch([a], k).poch([-1], 2 * k)
    term.poch([q ** (-4 * n), -a * a * q ** (4 * n + 1)], k, q4)
    term.poch_inv([a * q ** (4 * n + 1), -q ** (-4 * n) / a], k).poch_inv([-a * q], 3 * k)
    return term.scalar(q ** k), k


def _quartic_r1_summand(inst, k):
    term, k = _quartic_r1_common(inst, k)
    q = inst.q
    return term.poch([-q * q], k, q * q).poch_inv([q ** 4], k, q ** 4).value


def quartic_r1_literal_summand(inst, k):
    """
    The one-dimensional quartic summand with 1/(q^2; q^2, p)_k in place of
    (-q^2; q^2, p)_k / (q^4; q^4, p)_k. Agrees with the balanced form only at p = 0.
    """
    term, k = _quartic_r1_common(inst, k)
    q = inst.q
    return term.poch_inv([q * q], k, q * q).value


def _quartic_r1_rhs(inst):
    q, a, n = inst.q, inst['a'], inst.n[0]
    return EllipticTerm(inst.ctx).poch([a * q], 4 * n).poch_inv([-a * q], 4 * n).value


# ---- constraint solvers: value the free parameter must take ----

def _solve_jackson_e(params, size, q):
    return params['a'] ** 2 * q ** (size + 1) / (params['b'] * params['c'] * params['d'])


def _solve_quadratic_d(params, size, q):
    return params['a'] ** 2 * q ** (2 * size + 1) / params['c']


def _solve_new_simplex_d(params, size, q):
    return params['a'] ** 2 * q ** (size + 1) / (params['b'] * _prod(params['c']) * _prod(params['x']))


def _solve_quadratic_simplex_c(params, size, q):
    return params['a'] ** 2 * q / (_prod(params['b']) * _prod(params['x']))


def _solve_quadratic_simplex_last_b(params, size, q):
    return params['a'] ** 2 * q / (_prod(params['b'][:-1]) * _prod(params['x']))


_CATALOG = [
    IdentitySpec(AR_JACKSON, "A_r elliptic Jackson summation", BOX, 'abcde', {'x': 0},
                 _ar_jackson_summand, _ar_jackson_rhs, free='e',
                 constraint="a^2 q^(|n|+1) = bcde", solver=_solve_jackson_e),
    IdentitySpec(CR_JACKSON, "C_r elliptic Jackson summation", BOX, 'abcde', {'x': 0},
                 _cr_jackson_summand, _cr_jackson_rhs, free='e',
                 constraint="a^2 q^(|n|+1) = bcde", solver=_solve_jackson_e),
    IdentitySpec(NEW_AR_JACKSON, "new A_r Jackson summation (inverse of the A_r Jackson sum, m = 1)", BOX,
                 'abcd', {'x': 0}, _new_ar_jackson_summand, _new_ar_jackson_rhs),
    IdentitySpec(NEW_AR_JACKSON_SIMPLEX, "simplex companion of the new A_r Jackson summation", SIMPLEX,
                 'abd', {'x': 0, 'c': 1}, _new_ar_jackson_simplex_summand, _new_ar_jackson_simplex_rhs,
                 free='d', constraint="a^2 q^(N+1) = b c_1...c_(r+1) d x_1...x_r",
                 solver=_solve_new_simplex_d),
    IdentitySpec(AR_QUADRATIC_1, "quadratic A_r summation from the m = 2 positive inversion", BOX, 'abcd',
                 {'x': 0}, _ar_quadratic_1_summand, _ar_quadratic_1_rhs, free='d',
                 constraint="a^2 q^(2|n|+1) = cd", solver=_solve_quadratic_d),
    IdentitySpec(AR_QUADRATIC_1_SIMPLEX, "simplex companion of the first quadratic A_r summation", SIMPLEX,
                 'ac', {'x': 0, 'b': 1}, _ar_quadratic_1_simplex_summand, _ar_quadratic_1_simplex_rhs,
                 free='c', constraint="a^2 q = b_1...b_(r+1) c x_1...x_r", solver=_solve_quadratic_simplex_c),
    IdentitySpec(AR_QUADRATIC_2, "quadratic A_r summation from the m = 2 negative inversion", BOX, 'abcd',
                 {'x': 0}, _ar_quadratic_2_summand, _ar_quadratic_2_rhs, free='d',
                 constraint="a^2 q^(2|n|+1) = cd", solver=_solve_quadratic_d),
    IdentitySpec(AR_QUADRATIC_2_SIMPLEX, "simplex companion of the second quadratic A_r summation", SIMPLEX,
                 'a', {'x': 0, 'b': 2}, _ar_quadratic_2_simplex_summand, _ar_quadratic_2_simplex_rhs,
                 free=('b', -1), constraint="a^2 q = b_1...b_(r+2) x_1...x_r",
                 solver=_solve_quadratic_simplex_last_b),
    IdentitySpec(DR_QUADRATIC, "quadratic D_r summation", BOX, 'ab', {'x': 0},
                 _dr_quadratic_summand, _dr_quadratic_rhs),
    IdentitySpec(DR_QUADRATIC_SIMPLEX_1, "quadratic D_r simplex summation, b = q^-N companion", SIMPLEX, 'a',
                 {'x': 0, 'b': 0}, _dr_quadratic_simplex_1_summand, _dr_quadratic_simplex_1_rhs),
    IdentitySpec(DR_QUADRATIC_SIMPLEX_2, "quadratic D_r simplex summation, a = q^(-N-1/2) companion", SIMPLEX,
                 'ab', {'x': 0, 'c': 0}, _dr_quadratic_simplex_2_summand, _dr_quadratic_simplex_2_rhs),
    IdentitySpec(DR_CUBIC, "cubic D_r summation", BOX, 'a', {'x': 0}, _dr_cubic_summand, _dr_cubic_rhs),
    IdentitySpec(DR_CUBIC_SIMPLEX_A, "cubic D_r simplex summation, a = q^(N/2) companion", SIMPLEX, 'a',
                 {'x': 0, 'b': 0}, _dr_cubic_simplex_a_summand, _dr_cubic_simplex_a_rhs),
    IdentitySpec(DR_CUBIC_SIMPLEX_B, "cubic D_r summation over the half simplex 2|k| <= N", HALF_SIMPLEX, 'a',
                 {'x': 0, 'b': 0}, _dr_cubic_simplex_b_summand, _dr_cubic_simplex_b_rhs),
    IdentitySpec(DR_QUARTIC, "quartic D_r summation", BOX, 'a', {'x': 0}, _dr_quartic_summand, _dr_quartic_rhs),
    IdentitySpec(QUARTIC_R1, "one-dimensional quartic summation (r = 1, x_1 = 1)", BOX, 'a', {},
                 _quartic_r1_summand, _quartic_r1_rhs, fixed_r=1),
]

IDENTITIES = {spec.identity_id: spec for spec in _CATALOG}


def get_identity(identity_id):
    try:
        return IDENTITIES[identity_id]
    except KeyError:
        raise UsageError(f"Unknown identity: {identity_id}. Known: {', '.join(IDENTITIES)}")


def catalog_rows():
    """Rows of the identity catalog, for the list command"""
    return [{
        'id': spec.identity_id,
        'domain': spec.domain,
        'parameters': spec.schema(),
        'free': spec.free if not isinstance(spec.free, tuple) else f"{spec.free[0]}[last]",
        'constraint': spec.constraint,
        'description': spec.title,
    } for spec in _CATALOG]


def _free_slot(spec, params):
    """Current value of the free parameter, or None when the caller left it out"""
    if isinstance(spec.free, tuple):
        name, _ = spec.free
        return params.get(name)
    return params.get(spec.free)


def complete_params(identity_id, partial, ctx, r, n=None, N=None):
    """
    Build an IdentityInstance, solving the balancing constraint for the
    identity's free parameter. For the last-entry vector slot the caller may
    pass one entry short. When every parameter is given, they must already
    satisfy the constraint.
    """
    spec = get_identity(identity_id)
    params = {}
    for name, value in partial.items():
        params[name] = [complex(v) for v in value] if name in spec.vectors else complex(value)
    for name in spec.scalars:
        if name != spec.free and name not in params:
            raise UsageError(f"{identity_id} needs parameter {name}")
    for name, offset in spec.vectors.items():
        expected = r + offset
        have = len(params.get(name, []))
        short_ok = isinstance(spec.free, tuple) and spec.free[0] == name and have == expected - 1
        if have != expected and not short_ok:
            raise UsageError(f"{identity_id} needs {expected} entries in {name}, got {have}")
    instance = IdentityInstance(spec, r, params, ctx, n=n, N=N)
    if spec.solver is None:
        return instance
    size = instance.size
    if isinstance(spec.free, tuple):
        name, _ = spec.free
        values = list(params[name])
        if len(values) == r + spec.vectors[name] - 1:
            values.append(1.0 + 0j)
            params[name] = values
            values[-1] = spec.solver(params, size, ctx.q)
        else:
            _check_constraint(spec, values[-1], spec.solver(params, size, ctx.q))
        params[name] = values
    else:
        solved = spec.solver(params, size, ctx.q)
        if spec.free in partial:
            _check_constraint(spec, params[spec.free], solved)
        params[spec.free] = solved
    instance.params = params
    return instance


def _check_constraint(spec, supplied, solved):
    if relative_error(supplied, solved) > CONSTRAINT_TOL:
        raise ConstraintViolationError(f"{spec.identity_id}: parameters violate {spec.constraint} "
                                       f"({spec.free} = {supplied}, constraint needs {solved})")


def summand(instance, k):
    return instance.spec.summand(instance, tuple(k))


def lhs_with_scale(instance):
    """(lhs, sum of |summand|) over the instance's domain, in lexicographic order"""
    total = CompensatedSum()
    for k in instance.domain():
        total.add(summand(instance, k))
    return total.value, total.abs_total


def lhs(instance):
    return lhs_with_scale(instance)[0]


def rhs(instance):
    return instance.spec.rhs(instance)


def verify(instance, tol=IDENTITY_TOL):
    """
    Evaluate both sides of an identity instance.

    Returns:
        dict: lhs, rhs, rel_error, condition and status (pass, fail or degenerate)
    """
    try:
        left, scale = lhs_with_scale(instance)
        right = rhs(instance)
    except (DegenerateParameterError, ThetaDomainError) as e:
        logger.warning(f"{instance} is degenerate: {e}")
        return {'lhs': None, 'rhs': None, 'rel_error': None, 'condition': None, 'status': 'degenerate'}
    error = relative_error(left, right)
    condition = scale / abs(left) if left != 0 else float('inf')
    status = 'pass' if error <= tol else 'fail'
    if status == 'fail':
        logger.info(f"{instance} failed: lhs={left}, rhs={right}, rel_error={error}")
    return {'lhs': left, 'rhs': right, 'rel_error': error, 'condition': condition, 'status': status}


# ---- simplex companions specialized to the box summations ----

def specialization_instances(pair, r, n, params, ctx, N=None, flip_root=False):
    """
    The (box, simplex) instance pair whose left sides coincide once the simplex
    parameters are specialized to the terminating values of the box summation.
    params supplies the generic values (a, b, c, d, x as needed).
    """
    n = as_index(n)
    if len(n) != r:
        raise UsageError(f"n must have {r} entries")
    q = ctx.q
    size = sum(n)
    N = size if N is None else int(N)
    x = [complex(v) for v in params['x']]
    a = complex(params['a'])
    if pair == NEW_AR_JACKSON:
        b, d = complex(params['b']), complex(params['d'])
        box = complete_params(NEW_AR_JACKSON, {'a': a, 'b': b, 'c': q ** (-N), 'd': d, 'x': x}, ctx, r, n=n)
        c = [q ** (-n_j) / x_j for n_j, x_j in zip(n, x)] + [a * a * q ** (2 * N + 1) / (b * d)]
        simplex = complete_params(NEW_AR_JACKSON_SIMPLEX, {'a': a, 'b': b, 'd': d, 'x': x, 'c': c}, ctx, r, N=N)
        return box, simplex
    if pair == AR_QUADRATIC_1:
        c = complex(params['c'])
        box = complete_params(AR_QUADRATIC_1, {'a': a, 'b': q ** (-N), 'c': c, 'x': x}, ctx, r, n=n)
        b = [q ** (-2 * n_j) / x_j for n_j, x_j in zip(n, x)] + [c]
        simplex = complete_params(AR_QUADRATIC_1_SIMPLEX, {'a': a, 'b': b, 'c': box['d'], 'x': x}, ctx, r, N=N)
        return box, simplex
    if pair == AR_QUADRATIC_2:
        c = complex(params['c'])
        box = complete_params(AR_QUADRATIC_2, {'a': a, 'b': q ** (-N), 'c': c, 'x': x}, ctx, r, n=n)
        b = [q ** (-2 * n_j) / x_j for n_j, x_j in zip(n, x)] + [c, box['d']]
        simplex = complete_params(AR_QUADRATIC_2_SIMPLEX, {'a': a, 'b': b, 'x': x}, ctx, r, N=N)
        return box, simplex
    if pair == DR_QUADRATIC:
        box = complete_params(DR_QUADRATIC, {'a': a, 'b': q ** (-N), 'x': x}, ctx, r, n=n)
        b = [q ** (-2 * n_j) / x_j for n_j, x_j in zip(n, x)]
        simplex = complete_params(DR_QUADRATIC_SIMPLEX_1, {'a': a, 'b': b, 'x': x}, ctx, r, N=N)
        return box, simplex
    if pair == DR_CUBIC:
        root = half_power(q, N, flip_root)
        box = complete_params(DR_CUBIC, {'a': root, 'x': [a * x_i / root for x_i in x]}, ctx, r, n=n)
        b = [q ** (-3 * n_j) / x_j for n_j, x_j in zip(n, x)]
        simplex = complete_params(DR_CUBIC_SIMPLEX_A, {'a': a, 'b': b, 'x': x}, ctx, r, N=N)
        return box, simplex
    raise UsageError(f"Unknown simplex specialization: {pair}. Known: {', '.join(SIMPLEX_PAIRS)}")


def simplex_specialization_residual(pair, r, n, params, ctx, N=None, flip_root=False):
    """|lhs(box) - lhs(simplex)| normalized by the larger term-magnitude sum"""
    box, simplex = specialization_instances(pair, r, n, params, ctx, N=N, flip_root=flip_root)
    box_value, box_scale = lhs_with_scale(box)
    simplex_value, simplex_scale = lhs_with_scale(simplex)
    scale = max(box_scale, simplex_scale)
    logger.debug(f"{pair} specialization: box={box_value}, simplex={simplex_value}")
    if scale == 0:
        return 0.0
    return abs(box_value - simplex_value) / scale
