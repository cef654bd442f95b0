import logging

import numpy as np

from constants import TRUNC_EPS, TRUNC_GUARD, ZERO_GUARD, SCREEN_K_MAX, SCREEN_M_RANGE
from etc_functions import ScaledProduct, CompensatedSum, normalized_residual
from exceptions import (EllipticError, ThetaDomainError, ThetaOverflowError, DegenerateParameterError,
                        SamplingExhaustedError, UsageError)

logger = logging.getLogger(__name__)


class EllipticContext:
    """
    Nome p, base q and the numerical policy shared by every theta evaluation.

    Args:
        p (complex): nome, 0 <= |p| < 1
        q (complex): base, nonzero and generic (q^k not close to any p^m)
        trunc_eps (float): truncation threshold for the infinite product
        zero_guard (float): denominator factors smaller than this are degenerate
        screen (bool): run the genericity screen on q
    """

    def __init__(self, p, q, trunc_eps=TRUNC_EPS, zero_guard=ZERO_GUARD, screen=True):
        self.p = complex(p)
        self.q = complex(q)
        self.trunc_eps = float(trunc_eps)
        self.zero_guard = float(zero_guard)
        if not abs(self.p) < 1:
            raise EllipticError(f"Nome must satisfy |p| < 1, got |p| = {abs(self.p)}")
        if self.q == 0:
            raise EllipticError("Base q must be nonzero")
        if self.trunc_eps <= 0 or self.zero_guard <= 0:
            raise EllipticError("trunc_eps and zero_guard must be positive")
        if screen:
            self._screen_base()

    def _screen_base(self):
        for k in range(1, SCREEN_K_MAX + 1):
            qk = self.q ** k
            if self.p == 0:
                nome_powers = [1.0]
            else:
                nome_powers = [self.p ** m for m in range(-SCREEN_M_RANGE, SCREEN_M_RANGE + 1)]
            for pm in nome_powers:
                if abs(qk - pm) < self.zero_guard:
                    raise EllipticError(f"Base q={self.q} is not generic: q^{k} is within {self.zero_guard} of a nome power")

    @property
    def is_trigonometric(self):
        return self.p == 0

    def __repr__(self):
        return f"EllipticContext(p={self.p}, q={self.q}, trunc_eps={self.trunc_eps}, zero_guard={self.zero_guard})"


class ThetaProfile:
    """Degree k and norm t of a theta function: f(pz) = (-1)^k t z^(-k) f(z)"""

    def __init__(self, degree, norm):
        if int(degree) != degree or degree < 0:
            raise EllipticError(f"Degree must be a non-negative integer, got {degree}")
        if norm == 0:
            raise EllipticError("Norm must be nonzero")
        self.degree = int(degree)
        self.norm = complex(norm)


def truncation_length(x, ctx):
    """Number of (1 - p^j x)(1 - p^(j+1)/x) factor pairs used for theta(x; p)"""
    size = max(abs(x), 1.0 / abs(x))
    nome = abs(ctx.p)
    if size < ctx.trunc_eps:
        return 1 + TRUNC_GUARD
    needed = int(np.ceil(np.log(ctx.trunc_eps / size) / np.log(nome)))
    return max(needed, 1) + TRUNC_GUARD


def theta_eval(x, ctx):
    """theta(x; p) = prod_{j>=0} (1 - p^j x)(1 - p^(j+1)/x)"""
    x = complex(x)
    if x == 0:
        raise ThetaDomainError("theta(x; p) is undefined at x = 0")
    if ctx.p == 0:
        return 1 - x
    product = ScaledProduct()
    nome_power = 1.0 + 0j
    for _ in range(truncation_length(x, ctx)):
        product.mul((1 - nome_power * x) * (1 - nome_power * ctx.p / x))
        nome_power *= ctx.p
    value = product.value
    if not (np.isfinite(value.real) and np.isfinite(value.imag)):
        raise ThetaOverflowError(f"theta({x}) overflowed")
    return value


def _check_denominator(value, ctx, label):
    if abs(value) < ctx.zero_guard:
        raise DegenerateParameterError(f"Denominator factor {label} = {value} vanishes (|.| < {ctx.zero_guard})")
    return value


def theta_product(xs, ctx, y_pm=None):
    """
    Condensed theta product. Without y_pm this is prod theta(x_i); with y_pm it
    is prod theta(x_i y) theta(x_i / y).
    """
    product = ScaledProduct()
    for x in xs:
        if y_pm is None:
            product.mul(theta_eval(x, ctx))
        else:
            product.mul(theta_eval(x * y_pm, ctx))
            product.mul(theta_eval(x / y_pm, ctx))
    return product.value


def _pochhammer_factors(a, k, base):
    """Arguments of the theta factors of (a; base, p)_k, numerator side for k >= 0"""
    if k >= 0:
        return [a * base ** j for j in range(k)]
    return [a * base ** (k + j) for j in range(-k)]


def elliptic_pochhammer(a, k, ctx, base=None):
    """
    Elliptic shifted factorial (a; q, p)_k. For negative k the convention
    (a; q, p)_{-n} = 1 / (a q^{-n}; q, p)_n is used.
    """
    a = complex(a)
    if a == 0:
        raise ThetaDomainError("Shifted factorial argument must be nonzero")
    base = ctx.q if base is None else complex(base)
    k = int(k)
    product = ScaledProduct()
    if k >= 0:
        for arg in _pochhammer_factors(a, k, base):
            product.mul(theta_eval(arg, ctx))
        return product.value
    for arg in _pochhammer_factors(a, k, base):
        product.div(_check_denominator(theta_eval(arg, ctx), ctx, f"theta({arg})"))
    return product.value


def pochhammer_multi(values, k, ctx, base=None):
    product = ScaledProduct()
    for a in values:
        product.mul(elliptic_pochhammer(a, k, ctx, base))
    return product.value


class EllipticTerm:
    """
    Accumulates one summand or matrix entry as a ratio of theta factors,
    shifted factorials and plain scalars. Every theta factor that lands in a
    denominator is checked against ctx.zero_guard.
    """

    def __init__(self, ctx):
        self.ctx = ctx
        self.product = ScaledProduct()

    def theta(self, *xs):
        for x in xs:
            self.product.mul(theta_eval(x, self.ctx))
        return self

    def theta_inv(self, *xs):
        for x in xs:
            self.product.div(_check_denominator(theta_eval(x, self.ctx), self.ctx, f"theta({x})"))
        return self

    def poch(self, values, k, base=None):
        base = self.ctx.q if base is None else base
        for a in values:
            factors = _pochhammer_factors(complex(a), int(k), base)
            if k >= 0:
                self.theta(*factors)
            else:
                self.theta_inv(*factors)
        return self

    def poch_inv(self, values, k, base=None):
        base = self.ctx.q if base is None else base
        for a in values:
            factors = _pochhammer_factors(complex(a), int(k), base)
            if k >= 0:
                self.theta_inv(*factors)
            else:
                self.theta(*factors)
        return self

    def scalar(self, value):
        self.product.mul(value)
        return self

    def scalar_inv(self, value):
        if value == 0:
            raise DegenerateParameterError("Division by a vanishing scalar factor")
        self.product.div(value)
        return self

    def absorb(self, other):
        self.product.absorb(other.product)
        return self

    def absorb_inverse(self, other):
        if other.product.mantissa == 0:
            raise DegenerateParameterError("Division by a vanishing product")
        self.product.absorb_inverse(other.product)
        return self

    @property
    def value(self):
        return self.product.value


def gustafson_sum(a_values, b_values, ctx, lam=1, shifted=False):
    """
    Left side of Gustafson's vanishing theta sum.

    With lam == 1 and shifted False this is
        sum_l a_l prod_j theta(a_l b_j^{+-}) / prod_{j != l} theta(a_l a_j^{+-});
    otherwise the lambda-shifted form
        sum_l prod_j theta(b_j a_l, b_j lam / a_l) / (a_l prod_{j != l} theta(a_j a_l / lam, a_j / a_l)).

    Returns:
        tuple: (raw sum, sum of term magnitudes)
    """
    a_values = [complex(a) for a in a_values]
    b_values = [complex(b) for b in b_values]
    k = len(a_values)
    if k < 2 or len(b_values) != k - 2:
        raise UsageError(f"Need k >= 2 a-values and k-2 b-values, got {k} and {len(b_values)}")
    shifted = shifted or lam != 1
    total = CompensatedSum()
    for l, a_l in enumerate(a_values):
        term = EllipticTerm(ctx)
        others = [a_j for j, a_j in enumerate(a_values) if j != l]
        if shifted:
            for b in b_values:
                term.theta(b * a_l, b * lam / a_l)
            term.scalar_inv(a_l)
            for a_j in others:
                term.theta_inv(a_j * a_l / lam, a_j / a_l)
        else:
            term.scalar(a_l)
            for b in b_values:
                term.theta(a_l * b, a_l / b)
            for a_j in others:
                term.theta_inv(a_l * a_j, a_l / a_j)
        total.add(term.value)
    logger.debug(f"gustafson_sum k={k} shifted={shifted}: {total.value}")
    return total.value, total.abs_total


def degree_norm_check(f, profile, ctx, samples, rng=None):
    """
    Max relative deviation of f from the law f(pz) = (-1)^k t z^(-k) f(z)
    over random sample points on the annulus 0.6 <= |z| <= 1.4.
    """
    if ctx.p == 0:
        raise EllipticError("Degree/norm check needs a nonzero nome")
    if samples < 1:
        raise UsageError("samples must be positive")
    rng = np.random.default_rng(0) if rng is None else rng
    sign = (-1) ** profile.degree
    worst = 0.0
    used = 0
    for _ in range(samples):
        z = rng.uniform(0.6, 1.4) * np.exp(2j * np.pi * rng.uniform())
        fz = complex(f(z))
        if abs(fz) < ctx.zero_guard:
            continue
        used += 1
        factor = sign * profile.norm * z ** (-profile.degree)
        fpz = complex(f(ctx.p * z))
        scale = max(abs(fpz), abs(fz) * abs(profile.norm * z ** (-profile.degree)))
        worst = max(worst, normalized_residual(fpz - factor * fz, scale))
    if used == 0:
        raise SamplingExhaustedError("Every sampled |f(z)| was below the zero guard")
    return worst


def inversion_residual(x, ctx):
    """theta(1/x) = -theta(x)/x"""
    rhs = -theta_eval(x, ctx) / x
    return normalized_residual(theta_eval(1 / x, ctx) - rhs, max(abs(rhs), abs(theta_eval(1 / x, ctx))))


def quasi_period_residual(x, ctx):
    """theta(px) = -theta(x)/x"""
    rhs = -theta_eval(x, ctx) / x
    lhs = theta_eval(ctx.p * x, ctx)
    return normalized_residual(lhs - rhs, max(abs(lhs), abs(rhs)))


def addition_residual(x, y, u, v, ctx):
    """Weierstrass addition: theta(xy,x/y,uv,u/v) - theta(xv,x/v,uy,u/y) = (u/y) theta(yv,y/v,xu,x/u)"""
    first = theta_product([x * y, x / y, u * v, u / v], ctx)
    second = theta_product([x * v, x / v, u * y, u / y], ctx)
    third = (u / y) * theta_product([y * v, y / v, x * u, x / u], ctx)
    return normalized_residual(first - second - third, abs(first) + abs(second) + abs(third))
