import itertools
import logging
import math

from etc_functions import ScaledProduct
from exceptions import UsageError, DegenerateParameterError
from theta_core import theta_eval

logger = logging.getLogger(__name__)


def as_index(entries):
    entries = tuple(int(e) for e in entries)
    if not entries:
        raise UsageError("A multi-index needs at least one entry")
    return entries


def _same_length(k, l):
    if len(k) != len(l):
        raise UsageError(f"Multi-index lengths differ: {tuple(k)} and {tuple(l)}")


def leq(k, n):
    """Componentwise partial order k <= n"""
    _same_length(k, n)
    return all(ki <= ni for ki, ni in zip(k, n))


def add(k, l):
    _same_length(k, l)
    return tuple(ki + li for ki, li in zip(k, l))


def subtract(k, l):
    _same_length(k, l)
    return tuple(ki - li for ki, li in zip(k, l))


def weights(k):
    """(|k|, e2(k)) with e2(k) = sum_{i<j} k_i k_j"""
    total = sum(k)
    e2 = sum(k[i] * k[j] for i in range(len(k)) for j in range(i + 1, len(k)))
    return total, e2


class BoxDomain:
    """All k with 0 <= k <= n, lexicographic"""

    def __init__(self, upper):
        self.upper = as_index(upper)
        if any(n < 0 for n in self.upper):
            raise UsageError(f"Box upper corner must be non-negative: {self.upper}")

    def __iter__(self):
        return itertools.product(*(range(n + 1) for n in self.upper))

    def __len__(self):
        return math.prod(n + 1 for n in self.upper)


class SimplexDomain:
    """All k >= 0 with |k| <= N, or 2|k| <= N when half_cap is set"""

    def __init__(self, dim, cap, half_cap=False):
        if dim < 1 or cap < 0:
            raise UsageError(f"Simplex needs dim >= 1 and cap >= 0, got dim={dim}, cap={cap}")
        self.dim = int(dim)
        self.cap = int(cap)
        self.half_cap = bool(half_cap)

    @property
    def effective_cap(self):
        return self.cap // 2 if self.half_cap else self.cap

    def __iter__(self):
        limit = self.effective_cap
        for k in itertools.product(range(limit + 1), repeat=self.dim):
            if sum(k) <= limit:
                yield k

    def __len__(self):
        return math.comb(self.effective_cap + self.dim, self.dim)


def iterate_box(n):
    return iter(BoxDomain(n))


def iterate_simplex(r, N, half_cap=False):
    return iter(SimplexDomain(r, N, half_cap))


def _delta_factors(x, ctx):
    r = len(x)
    for i in range(r):
        for j in range(i + 1, r):
            yield (i, j), x[j] * theta_eval(x[i] / x[j], ctx)


def weyl_delta(x, ctx):
    """Delta(x; p) = prod_{i<j} x_j theta(x_i / x_j; p)"""
    product = ScaledProduct()
    for _, factor in _delta_factors(x, ctx):
        product.mul(factor)
    return product.value


def shifted_point(x, q, m, k):
    return [x_i * q ** (m * k_i) for x_i, k_i in zip(x, k)]


def delta_shift(x, q, m, k, ctx):
    """Delta evaluated at the shifted point (x_i q^(m k_i))"""
    if len(x) != len(k):
        raise UsageError(f"Point and multi-index lengths differ: {len(x)} != {len(k)}")
    return weyl_delta(shifted_point(x, q, m, k), ctx)


def delta_ratio(x, q, m, k, ctx):
    """Delta(x q^(mk)) / Delta(x); a factor of Delta(x) below ctx.zero_guard is degenerate"""
    ratio = ScaledProduct()
    ratio.mul(delta_shift(x, q, m, k, ctx))
    for (i, j), factor in _delta_factors(x, ctx):
        if abs(factor) < ctx.zero_guard:
            raise DegenerateParameterError(f"Weyl factor x_{j + 1} theta(x_{i + 1}/x_{j + 1}) = {factor} vanishes "
                                           f"(|.| < {ctx.zero_guard})")
        ratio.div(factor)
    return ratio.value


def apply_delta_ratio(term, x, q, m, k):
    """Multiply an EllipticTerm by Delta(x q^(mk)) / Delta(x), guarding the denominator"""
    if len(x) != len(k):
        raise UsageError(f"Point and multi-index lengths differ: {len(x)} != {len(k)}")
    shifted = shifted_point(x, q, m, k)
    r = len(x)
    for i in range(r):
        for j in range(i + 1, r):
            term.scalar(shifted[j]).theta(shifted[i] / shifted[j])
            term.scalar_inv(x[j]).theta_inv(x[i] / x[j])
    return term
