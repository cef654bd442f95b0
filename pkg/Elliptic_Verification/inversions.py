import logging
import math
from fractions import Fraction

import numpy as np

from constants import DEFAULT_MODULUS_RANGE
from etc_functions import CompensatedSum, normalized_residual, relative_error
from exceptions import UsageError
from multiindex import BoxDomain, leq, weights, subtract, apply_delta_ratio
from theta_core import EllipticTerm

logger = logging.getLogger(__name__)

GENERAL_AR = 'ar'
GENERAL_BCR = 'bcr'
GENERAL_CR = 'cr'
GEOM_AR_POS = 'ar-geom-pos'
GEOM_AR_NEG = 'ar-geom-neg'
GEOM_BCR = 'bcr-geom'

GENERAL_KINDS = (GENERAL_AR, GENERAL_BCR, GENERAL_CR)
GEOMETRIC_KINDS = (GEOM_AR_POS, GEOM_AR_NEG, GEOM_BCR)
ALL_KINDS = GENERAL_KINDS + GEOMETRIC_KINDS

KIND_DESCRIPTIONS = {
    GENERAL_AR: "elliptic A_r matrix inversion, arbitrary a(t), c_j(k)",
    GENERAL_BCR: "elliptic BC_r matrix inversion, arbitrary a(t), c_j(k)",
    GENERAL_CR: "elliptic C_r matrix inversion, arbitrary c_j(k) and scalar b",
    GEOM_AR_POS: "A_r inversion at a(t)=aq^t, c_j(k)=x_j q^(mk), normalized F/G",
    GEOM_AR_NEG: "A_r inversion with m -> -m, x_j -> 1/x_j, normalized F/G",
    GEOM_BCR: "BC_r inversion at a(t)=aq^t, c_j(k)=x_j q^(mk), normalized F/G",
}


class SequenceOracle:
    """
    The sequences a(t) and c_j(k) (j is 1-based) that parametrize the general
    inversions. Backed by closures; see the factories below for tables.
    """

    def __init__(self, a_map=None, c_map=None, description='custom'):
        if c_map is None:
            raise UsageError("A sequence oracle needs the c_j(k) sequences")
        self._a_map = a_map
        self._c_map = c_map
        self.description = description

    @property
    def has_a(self):
        return self._a_map is not None

    def a(self, t):
        if self._a_map is None:
            raise UsageError("This oracle carries no a(t) sequence")
        return self._a_map(t)

    def c(self, j, k):
        return self._c_map(j, k)

    def c_values(self, k):
        """(c_1(k_1), ..., c_r(k_r))"""
        return [self.c(j + 1, kj) for j, kj in enumerate(k)]

    @classmethod
    def from_tables(cls, a_table, c_table, description='table'):
        def lookup(table, key):
            try:
                return table[key]
            except KeyError:
                raise UsageError(f"Oracle table has no entry for {key}")

        a_map = None if a_table is None else (lambda t: lookup(a_table, t))
        return cls(a_map, lambda j, k: lookup(c_table, (j, k)), description)

    @classmethod
    def geometric(cls, a, x, q, m, invert=False):
        """a(t) = a q^t and c_j(k) = x_j q^(mk), or c_j(k) = q^(-mk)/x_j with invert"""
        x = [complex(v) for v in x]
        a_map = None if a is None else (lambda t: a * q ** t)
        if invert:
            return cls(a_map, lambda j, k: q ** (-m * k) / x[j - 1], f"geometric-inverted m={m}")
        return cls(a_map, lambda j, k: x[j - 1] * q ** (m * k), f"geometric m={m}")

    def shifted(self, l):
        """a(t) -> a(t + |l|), c_i(k) -> c_i(k + l_i)"""
        total = sum(l)
        a_map = None if not self.has_a else (lambda t: self.a(t + total))
        return SequenceOracle(a_map, lambda j, k: self.c(j, k + l[j - 1]), f"{self.description} shifted by {tuple(l)}")

    def inverted(self):
        """Every c_j(k) replaced by its reciprocal"""
        a_map = None if not self.has_a else self.a
        return SequenceOracle(a_map, lambda j, k: 1 / self.c(j, k), f"{self.description} inverted")


def _random_unit_values(rng, count, modulus_range):
    lo, hi = modulus_range
    return rng.uniform(lo, hi, count) * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, count))


def random_oracle(rng, r, depth, modulus_range=DEFAULT_MODULUS_RANGE, with_a=True):
    """Dense random tables for t, k in [-depth, depth]"""
    span = list(range(-depth, depth + 1))
    a_table = None
    if with_a:
        a_table = {t: complex(v) for t, v in zip(span, _random_unit_values(rng, len(span), modulus_range))}
    c_table = {}
    for j in range(1, r + 1):
        for k, v in zip(span, _random_unit_values(rng, len(span), modulus_range)):
            c_table[(j, k)] = complex(v)
    return SequenceOracle.from_tables(a_table, c_table, f"random depth={depth}")


def random_rational_oracle(rng, r, depth, with_a=True):
    """Distinct random rationals for exact (p = 0) checks"""
    used = set()

    def draw():
        while True:
            value = Fraction(int(rng.integers(-60, 61)), int(rng.integers(1, 13)))
            if value != 0 and value not in used:
                used.add(value)
                return value

    span = range(-depth, depth + 1)
    a_table = {t: draw() for t in span} if with_a else None
    c_table = {(j, k): draw() for j in range(1, r + 1) for k in span}
    return SequenceOracle.from_tables(a_table, c_table, f"rational depth={depth}")


class InversionKind:
    """
    One of the six inversion families. General kinds take their sequences from
    a SequenceOracle (C_r also needs the scalar b); geometric kinds carry m, a
    and the point x themselves.
    """

    def __init__(self, name, b=None, m=None, a=None, x=None):
        if name not in ALL_KINDS:
            raise UsageError(f"Unknown inversion kind: {name}")
        self.name = name
        self.b = None if b is None else complex(b)
        self.m = None if m is None else int(m)
        self.a = None if a is None else complex(a)
        self.x = None if x is None else [complex(v) for v in x]
        if name == GENERAL_CR and self.b is None:
            raise UsageError("The C_r inversion needs the scalar b")
        if name in GEOMETRIC_KINDS:
            if self.m is None or self.m < 1:
                raise UsageError(f"Geometric kind {name} needs a positive integer m")
            if self.a is None or not self.x:
                raise UsageError(f"Geometric kind {name} needs a and x")

    @property
    def is_geometric(self):
        return self.name in GEOMETRIC_KINDS

    @property
    def counterpart(self):
        """Name of the general inversion a geometric kind specializes"""
        if self.name in (GEOM_AR_POS, GEOM_AR_NEG):
            return GENERAL_AR
        if self.name == GEOM_BCR:
            return GENERAL_BCR
        return self.name

    def counterpart_oracle(self, ctx):
        return SequenceOracle.geometric(self.a, self.x, ctx.q, self.m, invert=self.name == GEOM_AR_NEG)

    def __repr__(self):
        return f"InversionKind({self.name}, m={self.m}, b={self.b})"


class MatrixEntryRequest:
    def __init__(self, kind, row, col, which):
        if which not in ('f', 'g', 'F', 'G'):
            raise UsageError(f"Entry selector must be one of f, g, F, G, got {which}")
        self.kind = kind
        self.row = tuple(row)
        self.col = tuple(col)
        self.which = which


def _product_c(values):
    product = 1
    for v in values:
        product *= v
    return product


# ---- general A_r ----

def _ar_f(n, k, seqs, ctx):
    term = EllipticTerm(ctx)
    ck = seqs.c_values(k)
    big_c = _product_c(ck)
    for t in range(sum(k), sum(n)):
        a_t = seqs.a(t)
        term.theta(a_t * big_c, *[a_t / c for c in ck])
    for i in range(len(n)):
        for t in range(k[i] + 1, n[i] + 1):
            c_it = seqs.c(i + 1, t)
            term.theta_inv(c_it * big_c, *[c_it / c for c in ck])
    return term.value


def _ar_g(k, l, seqs, ctx):
    term = EllipticTerm(ctx)
    r = len(k)
    ck, cl = seqs.c_values(k), seqs.c_values(l)
    big_ck, big_cl = _product_c(ck), _product_c(cl)
    a_k, a_l = seqs.a(sum(k)), seqs.a(sum(l))
    term.theta(a_l * big_cl).theta_inv(a_k * big_ck)
    for i in range(r):
        for j in range(i + 1, r):
            term.theta(cl[i] / cl[j]).theta_inv(ck[i] / ck[j])
    for j in range(r):
        term.scalar(cl[j] ** (j + 1)).theta(a_l / cl[j])
        term.scalar_inv(ck[j] ** (j + 1)).theta_inv(a_k / ck[j])
    for t in range(sum(l) + 1, sum(k) + 1):
        a_t = seqs.a(t)
        term.theta(a_t * big_ck, *[a_t / c for c in ck])
    for i in range(r):
        for t in range(l[i], k[i]):
            c_it = seqs.c(i + 1, t)
            term.theta_inv(c_it * big_ck, *[c_it / c for c in ck])
    return term.value


# ---- general BC_r ----

def _bcr_f(n, k, seqs, ctx):
    term = EllipticTerm(ctx)
    ck = seqs.c_values(k)
    for c in ck:
        for t in range(sum(k), sum(n)):
            a_t = seqs.a(t)
            term.theta(c * a_t, c / a_t)
    for i in range(len(n)):
        for t in range(k[i] + 1, n[i] + 1):
            c_it = seqs.c(i + 1, t)
            for c in ck:
                term.theta_inv(c * c_it, c / c_it)
    return term.value


def _bcr_g(k, l, seqs, ctx):
    term = EllipticTerm(ctx)
    r = len(k)
    ck, cl = seqs.c_values(k), seqs.c_values(l)
    a_k, a_l = seqs.a(sum(k)), seqs.a(sum(l))
    for i in range(r):
        for j in range(i + 1, r):
            term.theta(cl[j] * cl[i], cl[j] / cl[i])
            term.theta_inv(ck[j] * ck[i], ck[j] / ck[i])
    for j in range(r):
        term.scalar(ck[j] ** (j + 1)).theta(cl[j] * a_l, cl[j] / a_l)
        term.scalar_inv(cl[j] ** (j + 1)).theta_inv(ck[j] * a_k, ck[j] / a_k)
    for c in ck:
        for t in range(sum(l) + 1, sum(k) + 1):
            a_t = seqs.a(t)
            term.theta(c * a_t, c / a_t)
    for i in range(r):
        for t in range(l[i], k[i]):
            c_it = seqs.c(i + 1, t)
            for c in ck:
                term.theta_inv(c * c_it, c / c_it)
    return term.value


# ---- general C_r ----

def _cr_f(n, k, seqs, b, ctx):
    term = EllipticTerm(ctx)
    ck = seqs.c_values(k)
    big_c = _product_c(ck)
    for i in range(len(n)):
        for t in range(k[i], n[i]):
            c_it = seqs.c(i + 1, t)
            term.theta(c_it * b / big_c, *[c_it * c for c in ck])
        for t in range(k[i] + 1, n[i] + 1):
            c_it = seqs.c(i + 1, t)
            term.theta_inv(c_it * big_c / b, *[c_it / c for c in ck])
    return term.value


def _cr_g(k, l, seqs, b, ctx):
    term = EllipticTerm(ctx)
    r = len(k)
    ck, cl = seqs.c_values(k), seqs.c_values(l)
    big_ck = _product_c(ck)
    for i in range(r):
        for j in range(i + 1, r):
            term.theta(cl[j] * cl[i], cl[j] / cl[i])
            term.theta_inv(ck[j] * ck[i], ck[j] / ck[i])
    for j in range(r):
        power = r - j
        term.scalar(cl[j] ** power).theta(cl[j] ** 2)
        term.scalar_inv(ck[j] ** power).theta_inv(ck[j] ** 2)
    for i in range(r):
        for t in range(l[i] + 1, k[i] + 1):
            c_it = seqs.c(i + 1, t)
            term.theta(c_it * b / big_ck, *[c_it * c for c in ck])
        for t in range(l[i], k[i]):
            c_it = seqs.c(i + 1, t)
            term.theta_inv(c_it * big_ck / b, *[c_it / c for c in ck])
    return term.value


def general_entry(name, which, row, col, seqs, ctx, b=None):
    """Unnormalized f (which='f') or g (which='g') entry of a general inversion"""
    row, col = tuple(row), tuple(col)
    if not leq(col, row):
        return 0j
    if name == GENERAL_AR:
        return _ar_f(row, col, seqs, ctx) if which == 'f' else _ar_g(row, col, seqs, ctx)
    if name == GENERAL_BCR:
        return _bcr_f(row, col, seqs, ctx) if which == 'f' else _bcr_g(row, col, seqs, ctx)
    if name == GENERAL_CR:
        return _cr_f(row, col, seqs, b, ctx) if which == 'f' else _cr_g(row, col, seqs, b, ctx)
    raise UsageError(f"{name} is not a general inversion kind")


def normalized_general_entry(name, which, row, col, seqs, ctx, b=None):
    """F_nk = g_k0 f_nk / f_n0 and G_kl = f_l0 g_kl / g_k0"""
    row, col = tuple(row), tuple(col)
    if not leq(col, row):
        return 0j
    zero = (0,) * len(row)
    if which == 'F':
        return (general_entry(name, 'g', col, zero, seqs, ctx, b) * general_entry(name, 'f', row, col, seqs, ctx, b)
                / general_entry(name, 'f', row, zero, seqs, ctx, b))
    return (general_entry(name, 'f', col, zero, seqs, ctx, b) * general_entry(name, 'g', row, col, seqs, ctx, b)
            / general_entry(name, 'g', row, zero, seqs, ctx, b))


# ---- geometric inversions ----

def _pair_products(term, x, q, m, upper, lower):
    """prod_{i,j} (q^(-m upper_j) x_i/x_j; q^m)_{lower_i} / (q^m x_i/x_j; q^m)_{lower_i}"""
    base = q ** m
    for i, x_i in enumerate(x):
        for j, x_j in enumerate(x):
            term.poch([q ** (-m * upper[j]) * x_i / x_j], lower[i], base)
            term.poch_inv([base * x_i / x_j], lower[i], base)


def _geom_ar_pos(which, row, col, m, a, x, ctx):
    q = ctx.q
    base = q ** m
    big_x = _product_c(x)
    term = EllipticTerm(ctx)
    if which == 'F':
        n, k = row, col
        size_n, size_k = sum(n), sum(k)
        apply_delta_ratio(term, x, q, m, k)
        term.poch([a * big_x * q ** size_n], m * size_k).poch_inv([a * big_x * q], m * size_k)
        term.scalar(q ** (m * size_k))
        _pair_products(term, x, q, m, n, k)
        for i, x_i in enumerate(x):
            term.theta(big_x * x_i * q ** (m * (size_k + k[i]))).theta_inv(big_x * x_i)
            term.poch([x_i / a], m * k[i]).poch([big_x * x_i], size_k, base)
            term.poch_inv([x_i * q ** (1 - size_n) / a], m * k[i])
            term.poch_inv([big_x * x_i * q ** (m * (n[i] + 1))], size_k, base)
        return term.value
    k, l = row, col
    size_k, size_l = sum(k), sum(l)
    apply_delta_ratio(term, x, q, m, l)
    term.theta(a * big_x * q ** ((m + 1) * size_l)).theta_inv(a * big_x)
    term.poch([a * big_x], size_l).poch_inv([a * big_x * q ** (m * size_k + 1)], size_l)
    term.scalar(q ** (m * size_l))
    _pair_products(term, x, q, m, k, l)
    for i, x_i in enumerate(x):
        term.theta(a * q ** (size_l - m * l[i]) / x_i).theta_inv(a / x_i)
        term.poch([a / x_i], size_l).poch([big_x * x_i * q ** (m * size_k)], l[i], base)
        term.poch_inv([a * q ** (1 - m * k[i]) / x_i], size_l)
        term.poch_inv([big_x * x_i * base], l[i], base)
    return term.value


def _geom_ar_neg(which, row, col, m, a, x, ctx):
    q = ctx.q
    base = q ** m
    big_x = _product_c(x)
    term = EllipticTerm(ctx)
    if which == 'F':
        n, k = row, col
        size_n, size_k = sum(n), sum(k)
        apply_delta_ratio(term, x, q, m, k)
        term.poch([big_x / a], m * size_k).poch_inv([big_x * q ** (1 - size_n) / a], m * size_k)
        term.scalar(q ** (m * size_k))
        _pair_products(term, x, q, m, n, k)
        for i, x_i in enumerate(x):
            term.theta(big_x * x_i * q ** (m * (size_k + k[i]))).theta_inv(big_x * x_i)
            term.poch([a * x_i * q ** size_n], m * k[i]).poch([big_x * x_i], size_k, base)
            term.poch_inv([a * x_i * q], m * k[i])
            term.poch_inv([big_x * x_i * q ** (m * (n[i] + 1))], size_k, base)
        return term.value
    k, l = row, col
    size_k, size_l = sum(k), sum(l)
    apply_delta_ratio(term, x, q, m, l)
    term.theta(big_x * q ** ((m - 1) * size_l) / a).theta_inv(big_x / a)
    term.poch([a / big_x], size_l).poch_inv([a * q ** (1 - m * size_k) / big_x], size_l)
    term.scalar(q ** size_l)
    _pair_products(term, x, q, m, k, l)
    for i, x_i in enumerate(x):
        term.theta(a * x_i * q ** (size_l + m * l[i])).theta_inv(a * x_i)
        term.poch([a * x_i], size_l).poch([big_x * x_i * q ** (m * size_k)], l[i], base)
        term.poch_inv([a * x_i * q ** (m * k[i] + 1)], size_l)
        term.poch_inv([big_x * x_i * base], l[i], base)
    return term.value


def _geom_bcr(which, row, col, m, a, x, ctx):
    q = ctx.q
    base = q ** m
    r = len(x)
    term = EllipticTerm(ctx)
    if which == 'F':
        n, k = row, col
        size_n, size_k = sum(n), sum(k)
        apply_delta_ratio(term, x, q, m, k)
        term.scalar(q ** (m * size_k))
        for i in range(r):
            for j in range(i, r):
                term.theta(x[i] * x[j] * q ** (m * (k[i] + k[j]))).theta_inv(x[i] * x[j])
        for i in range(r):
            for j in range(r):
                term.poch([q ** (-m * n[j]) * x[i] / x[j], x[i] * x[j]], k[i], base)
                term.poch_inv([base * x[i] / x[j], q ** (m * (n[j] + 1)) * x[i] * x[j]], k[i], base)
        for i in range(r):
            term.poch([a * x[i] * q ** size_n, x[i] / a], m * k[i])
            term.poch_inv([a * x[i] * q, x[i] * q ** (1 - size_n) / a], m * k[i])
        return term.value
    k, l = row, col
    size_l = sum(l)
    apply_delta_ratio(term, x, q, m, l)
    term.scalar(q ** (m * size_l))
    for i in range(r):
        for j in range(i + 1, r):
            term.theta(x[i] * x[j] * q ** (m * (l[i] + l[j]))).theta_inv(x[i] * x[j])
    for i in range(r):
        for j in range(r):
            term.poch([q ** (-m * k[j]) * x[i] / x[j], x[i] * x[j] * q ** (m * k[j])], l[i], base)
            term.poch_inv([base * x[i] / x[j], x[i] * x[j] * base], l[i], base)
    for i in range(r):
        term.theta(a * x[i] * q ** (size_l + m * l[i]), a * q ** (size_l - m * l[i]) / x[i])
        term.theta_inv(a * x[i], a / x[i])
        term.poch([a * x[i], a / x[i]], size_l)
        term.poch_inv([a * q ** (1 + m * k[i]) * x[i], a * q ** (1 - m * k[i]) / x[i]], size_l)
    return term.value


_GEOMETRIC_ENTRIES = {
    GEOM_AR_POS: _geom_ar_pos,
    GEOM_AR_NEG: _geom_ar_neg,
    GEOM_BCR: _geom_bcr,
}


def entry(req, seqs, ctx):
    """
    One entry of an inversion pair. General kinds serve f/g directly and F/G
    through the normalization; geometric kinds serve F/G from their closed
    forms and f/g from their general counterpart.
    """
    kind = req.kind
    if not leq(req.col, req.row):
        return 0j
    if kind.is_geometric:
        if req.which in ('F', 'G'):
            return _GEOMETRIC_ENTRIES[kind.name](req.which, req.row, req.col, kind.m, kind.a, kind.x, ctx)
        return general_entry(kind.counterpart, req.which, req.row, req.col, kind.counterpart_oracle(ctx), ctx)
    if seqs is None:
        raise UsageError(f"General kind {kind.name} needs a sequence oracle")
    if kind.name == GENERAL_CR and seqs.has_a:
        raise UsageError("The C_r inversion takes no a(t) sequence")
    if req.which in ('F', 'G'):
        return normalized_general_entry(kind.name, req.which, req.row, req.col, seqs, ctx, kind.b)
    return general_entry(kind.name, req.which, req.row, req.col, seqs, ctx, kind.b)


def normalization_link(kind, n, k, ctx, which='F'):
    """Normalized difference between a closed-form geometric entry and the normalized general entry"""
    if not kind.is_geometric:
        raise UsageError("normalization_link needs a geometric kind")
    closed = entry(MatrixEntryRequest(kind, n, k, which), None, ctx)
    derived = normalized_general_entry(kind.counterpart, which, n, k, kind.counterpart_oracle(ctx), ctx)
    return relative_error(closed, derived)


def delta_residual(kind, seqs, n, l, ctx, swapped=False):
    """
    sum_{l <= k <= n} f_nk g_kl - delta_nl (g and f exchanged when swapped).
    Geometric kinds use the normalized pair F, G.

    Returns:
        tuple: (raw residual, residual normalized by sum |terms| + delta_nl)
    """
    n, l = tuple(n), tuple(l)
    if not leq(l, n):
        raise UsageError(f"delta_residual needs l <= n, got l={l}, n={n}")
    left, right = ('F', 'G') if kind.is_geometric else ('f', 'g')
    if swapped:
        left, right = right, left
    total = CompensatedSum()
    for offset in BoxDomain(subtract(n, l)):
        k = tuple(li + oi for li, oi in zip(l, offset))
        total.add(entry(MatrixEntryRequest(kind, n, k, left), seqs, ctx)
                  * entry(MatrixEntryRequest(kind, k, l, right), seqs, ctx))
    delta = 1.0 if n == l else 0.0
    raw = total.value - delta
    return raw, normalized_residual(raw, total.abs_total + delta)


def _afg_term(n, k, seqs, ctx):
    term = EllipticTerm(ctx)
    r = len(n)
    ck = seqs.c_values(k)
    big_c = _product_c(ck)
    for t in range(1, sum(n)):
        a_t = seqs.a(t)
        term.theta(a_t * big_c, *[a_t / c for c in ck])
    for i in range(r):
        for t in range(n[i] + 1):
            if t == k[i]:
                continue
            c_it = seqs.c(i + 1, t)
            term.theta_inv(c_it * big_c, *[c_it / c for c in ck])
    for i in range(r):
        for j in range(i + 1, r):
            term.theta_inv(ck[i] / ck[j])
    for j in range(r):
        term.scalar_inv(ck[j] ** (j + 1))
    return term.value


def _cfg_term(n, k, seqs, b, ctx):
    term = EllipticTerm(ctx)
    r = len(n)
    ck = seqs.c_values(k)
    big_c = _product_c(ck)
    for i in range(r):
        for j in range(i + 1, r):
            term.theta(ck[j] * ck[i]).theta_inv(ck[j] / ck[i])
    for j in range(r):
        term.theta(ck[j] * b / big_c).scalar_inv(ck[j] ** (r - j))
    for i in range(r):
        # prod_{1<=t<=n_i-1} is 1/f(c_i(0)) when n_i = 0
        if n[i] == 0:
            c_i0 = seqs.c(i + 1, 0)
            term.theta_inv(c_i0 * b / big_c, *[c_i0 * c for c in ck])
        for t in range(1, n[i]):
            c_it = seqs.c(i + 1, t)
            term.theta(c_it * b / big_c, *[c_it * c for c in ck])
        for t in range(n[i] + 1):
            if t == k[i]:
                continue
            c_it = seqs.c(i + 1, t)
            term.theta_inv(c_it * big_c / b, *[c_it / c for c in ck])
    return term.value


def _bcfg_term(n, k, seqs, ctx):
    term = EllipticTerm(ctx)
    r = len(n)
    ck = seqs.c_values(k)
    for j, c in enumerate(ck):
        term.scalar(c ** (j + 1))
        for t in range(1, sum(n)):
            a_t = seqs.a(t)
            term.theta(c * a_t, c / a_t)
    for i in range(r):
        for t in range(n[i] + 1):
            if t == k[i]:
                continue
            c_it = seqs.c(i + 1, t)
            for c in ck:
                term.theta_inv(c * c_it, c / c_it)
    for i in range(r):
        for j in range(i + 1, r):
            term.theta_inv(ck[j] * ck[i], ck[j] / ck[i])
    return term.value


def vanishing_lemma_sum(variant, n, seqs, ctx, b=None):
    """
    Vanishing sums behind the inversions: 'afg' (A_r, uses a(1..|n|-1)),
    'cfg' (C_r, uses b) and 'bcfg' (BC_r analogue). All c_j(0..n_j) are used.

    Returns:
        tuple: (raw sum, sum normalized by the term magnitudes)
    """
    n = tuple(n)
    if sum(n) < 1 or any(v < 0 for v in n):
        raise UsageError(f"Vanishing sums need n >= 0 with |n| >= 1, got {n}")
    if variant == 'cfg' and b is None:
        raise UsageError("The C_r vanishing sum needs b")
    total = CompensatedSum()
    for k in BoxDomain(n):
        if variant == 'afg':
            total.add(_afg_term(n, k, seqs, ctx))
        elif variant == 'cfg':
            total.add(_cfg_term(n, k, seqs, b, ctx))
        elif variant == 'bcfg':
            total.add(_bcfg_term(n, k, seqs, ctx))
        else:
            raise UsageError(f"Unknown vanishing sum variant: {variant}")
    return total.value, normalized_residual(total.value, total.abs_total)


# ---- trigonometric limit and the Krattenthaler pair (exact arithmetic) ----

def limit_entry(which, row, col, seqs):
    """
    The p = 0, b -> 0 limit of the A_r inversion: every theta factor becomes
    1 - a(t)/c_j(k_j) or 1 - c_i(t)/c_j(k_j). Works on any field (Fraction included).
    """
    row, col = tuple(row), tuple(col)
    if not leq(col, row):
        return 0
    r = len(row)
    value = 1
    if which == 'f':
        n, k = row, col
        ck = seqs.c_values(k)
        for t in range(sum(k), sum(n)):
            for c in ck:
                value *= 1 - seqs.a(t) / c
        for i in range(r):
            for t in range(k[i] + 1, n[i] + 1):
                for c in ck:
                    value /= 1 - seqs.c(i + 1, t) / c
        return value
    k, l = row, col
    ck, cl = seqs.c_values(k), seqs.c_values(l)
    a_k, a_l = seqs.a(sum(k)), seqs.a(sum(l))
    for i in range(r):
        for j in range(i + 1, r):
            value *= (1 - cl[i] / cl[j]) / (1 - ck[i] / ck[j])
    for j in range(r):
        value *= cl[j] ** (j + 1) * (1 - a_l / cl[j]) / (ck[j] ** (j + 1) * (1 - a_k / ck[j]))
    for t in range(sum(l) + 1, sum(k) + 1):
        for c in ck:
            value *= 1 - seqs.a(t) / c
    for i in range(r):
        for t in range(l[i], k[i]):
            for c in ck:
                value /= 1 - seqs.c(i + 1, t) / c
    return value


def krattenthaler_entry(which, n, k, a_seq, c_seq):
    """
    f_nk = prod_{j=k}^{n-1} (a_j - c_k) / prod_{j=k+1}^{n} (c_j - c_k)
    g_kl = (a_l - c_l) / (a_k - c_k) * prod_{j=l+1}^{k} (a_j - c_k) / prod_{j=l}^{k-1} (c_j - c_k)
    """
    if k > n:
        return 0
    if which == 'f':
        numerator = math.prod((a_seq(j) - c_seq(k) for j in range(k, n)), start=Fraction(1))
        denominator = math.prod((c_seq(j) - c_seq(k) for j in range(k + 1, n + 1)), start=Fraction(1))
        return numerator / denominator
    row, col = n, k
    numerator = (a_seq(col) - c_seq(col)) * math.prod((a_seq(j) - c_seq(row) for j in range(col + 1, row + 1)),
                                                      start=Fraction(1))
    denominator = (a_seq(row) - c_seq(row)) * math.prod((c_seq(j) - c_seq(row) for j in range(col, row)),
                                                        start=Fraction(1))
    return numerator / denominator


def krattenthaler_residual(n, l, a_seq, c_seq):
    """Exact sum_{l<=k<=n} f_nk g_kl - delta_nl"""
    total = sum((krattenthaler_entry('f', n, k, a_seq, c_seq) * krattenthaler_entry('g', k, l, a_seq, c_seq)
                 for k in range(l, n + 1)), start=Fraction(0))
    return total - (1 if n == l else 0)


def limit_residual(n, l, seqs):
    """Exact delta residual of the trigonometric limit pair"""
    total = 0
    for offset in BoxDomain(subtract(n, l)):
        k = tuple(li + oi for li, oi in zip(l, offset))
        total += limit_entry('f', n, k, seqs) * limit_entry('g', k, l, seqs)
    return total - (1 if tuple(n) == tuple(l) else 0)
