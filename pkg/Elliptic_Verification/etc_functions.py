import logging
import os

import numpy as np

from constants import SCALE_LOW, SCALE_HIGH, SIGNIFICANT_DIGITS, THREADS_ENV_VAR
from exceptions import ThetaOverflowError, UsageError

logger = logging.getLogger(__name__)


class CompensatedSum:
    """
    Running complex sum with a Neumaier correction term carried separately for
    the real and imaginary parts. Also tracks the sum of term magnitudes, which
    every residual in this package is normalized by.
    """

    def __init__(self):
        self._re = 0.0
        self._im = 0.0
        self._re_err = 0.0
        self._im_err = 0.0
        self.abs_total = 0.0
        self.count = 0

    @staticmethod
    def _step(total, err, val):
        t = total + val
        if abs(total) >= abs(val):
            err += (total - t) + val
        else:
            err += (val - t) + total
        return t, err

    def add(self, value):
        value = complex(value)
        self._re, self._re_err = self._step(self._re, self._re_err, value.real)
        self._im, self._im_err = self._step(self._im, self._im_err, value.imag)
        self.abs_total += abs(value)
        self.count += 1
        return self

    def extend(self, values):
        for value in values:
            self.add(value)
        return self

    def merge(self, other):
        """Fold a partial sum computed elsewhere (block merge in fixed order)"""
        self.add(other.value)
        # the add above counted the merged value as one term
        self.abs_total += other.abs_total - abs(other.value)
        self.count += other.count - 1
        return self

    @property
    def value(self):
        return complex(self._re + self._re_err, self._im + self._im_err)


class ScaledProduct:
    """
    Complex product kept as mantissa * 2**exponent. The mantissa is renormalized
    whenever its magnitude leaves [SCALE_LOW, SCALE_HIGH], so long chains of
    theta factors do not overflow or underflow before the final recombination.
    """

    def __init__(self, start=1.0):
        self.mantissa = complex(start)
        self.exponent = 0

    def _renormalize(self):
        magnitude = abs(self.mantissa)
        if magnitude == 0.0 or SCALE_LOW <= magnitude <= SCALE_HIGH:
            return
        if not np.isfinite(magnitude):
            raise ThetaOverflowError("Partial product left the representable range; rescale the inputs")
        _, shift = np.frexp(magnitude)
        shift = int(shift)
        self.mantissa = complex(np.ldexp(self.mantissa.real, -shift), np.ldexp(self.mantissa.imag, -shift))
        self.exponent += shift

    def mul(self, value):
        self.mantissa *= value
        self._renormalize()
        return self

    def div(self, value):
        self.mantissa /= value
        self._renormalize()
        return self

    def absorb(self, other):
        self.mantissa *= other.mantissa
        self.exponent += other.exponent
        self._renormalize()
        return self

    def absorb_inverse(self, other):
        self.mantissa /= other.mantissa
        self.exponent -= other.exponent
        self._renormalize()
        return self

    @property
    def value(self):
        if self.mantissa == 0:
            return 0j
        with np.errstate(over='ignore'):
            result = complex(np.ldexp(self.mantissa.real, self.exponent),
                             np.ldexp(self.mantissa.imag, self.exponent))
        if not (np.isfinite(result.real) and np.isfinite(result.imag)):
            raise ThetaOverflowError(f"Product magnitude 2**{self.exponent} is not representable")
        return result


def normalized_residual(raw, scale):
    """|raw| / scale, falling back to |raw| when the scale is zero"""
    if scale > 0:
        return abs(raw) / scale
    return abs(raw)


def relative_error(lhs, rhs):
    denominator = max(abs(lhs), abs(rhs))
    if denominator == 0:
        return 0.0
    return abs(lhs - rhs) / denominator


def complex_pair(z):
    """[re, im] with SIGNIFICANT_DIGITS significant digits; non-finite values become None"""
    if z is None:
        return None
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        return None
    return [float(f"{z.real:.{SIGNIFICANT_DIGITS}g}"), float(f"{z.imag:.{SIGNIFICANT_DIGITS}g}")]


def real_value(x):
    if x is None or not np.isfinite(x):
        return None
    return float(f"{x:.{SIGNIFICANT_DIGITS}g}")


def parse_multi_index(text):
    try:
        entries = tuple(int(part) for part in text.split(',') if part.strip() != '')
    except (AttributeError, ValueError):
        raise UsageError(f"Invalid multi-index: {text!r}")
    if not entries or any(entry < 0 for entry in entries):
        raise UsageError(f"Multi-index must be a non-empty list of non-negative integers: {text!r}")
    return entries


def worker_count():
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None or raw.strip() == '':
        return os.cpu_count() or 1
    try:
        count = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}")
    if count < 1:
        raise UsageError(f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}")
    logger.debug(f"Worker pool capped at {count} workers")
    return count


def half_power(q, twice_exponent, flip=False):
    """q^(twice_exponent/2) through the principal square root of q (negated when flip is set)"""
    root = complex(np.sqrt(complex(q)))
    if flip:
        root = -root
    return root ** int(twice_exponent)
