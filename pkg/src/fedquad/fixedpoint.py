"""Fixed-point codec between real-valued data and the integer vectors fed to FE.

One rounding rule (half away from zero), one shared scale per decrypted
inner product. A decryption of quantized inputs carries the combined scale
2^(weight_bits + 2*data_bits): one weight factor and two data factors per
term. Both the overflow budget and the rounding-error budget are exposed
as explicit formulas so callers can check them before running.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Quantizing magnitudes at or above 2**62 would leave int64 territory on
# the numpy side and signals a caller error in any case.
QUANTIZE_GUARD_BITS = 62

MAX_FRACTIONAL_BITS = 24


@dataclass(frozen=True)
class FixedPointConfig:
    """Fractional bit counts for data (features, labels) and weights."""

    data_bits: int = 12
    weight_bits: int = 12

    def __post_init__(self) -> None:
        for name, bits in (("data_bits", self.data_bits),
                           ("weight_bits", self.weight_bits)):
            if not (0 <= bits <= MAX_FRACTIONAL_BITS):
                raise ValueError(
                    f"{name} must be in [0, {MAX_FRACTIONAL_BITS}], got {bits}"
                )

    @property
    def scale_exp(self) -> int:
        """Scale exponent of a decrypted inner product: one weight and two data factors."""
        return self.weight_bits + 2 * self.data_bits

    @property
    def one_weight(self) -> int:
        """The constant coefficient 1 quantized at weight scale."""
        return 1 << self.weight_bits


@dataclass(frozen=True)
class ScaledResult:
    """A wide integer together with its power-of-two scale."""

    raw: int
    scale_exp: int


def quantize(value: float, bits: int) -> int:
    """Round value * 2**bits to an integer, halves away from zero."""
    magnitude = math.ldexp(abs(float(value)), bits)
    if magnitude >= float(1 << QUANTIZE_GUARD_BITS):
        raise OverflowError(
            f"|{value}| * 2**{bits} exceeds the 2**{QUANTIZE_GUARD_BITS} quantizer guard"
        )
    q = math.floor(magnitude + 0.5)
    return -q if value < 0 else q


def quantize_vector(values, bits: int) -> list[int]:
    """Quantize every entry of a 1-D array-like to a list of Python ints."""
    return [quantize(v, bits) for v in np.asarray(values, dtype=float).ravel()]


def dequantize(result: ScaledResult) -> float:
    """Exact raw / 2**scale_exp as a float (single correctly rounded division)."""
    return result.raw / (1 << result.scale_exp)


def snap_to_grid(values, bits: int) -> np.ndarray:
    """Project real values onto the 2**-bits grid (quantize then dequantize)."""
    arr = np.asarray(values, dtype=float)
    flat = [dequantize(ScaledResult(quantize(v, bits), bits)) for v in arr.ravel()]
    return np.array(flat, dtype=float).reshape(arr.shape)


def overflow_bound(S: int, F: int, qx: int, qw: int,
                   max_abs_x: float, max_abs_w: float) -> int:
    """Upper bound on |raw| for a decrypted gradient slice.

    Each of the S*(F+1) terms is one weight-scale coefficient times two
    data-scale factors. Callers must check the bound is < 2**126 before
    running, and must pass max_abs_w >= 1 when the constant label
    coefficient (value 1 at weight scale) participates.
    """
    for name, n in (("S", S), ("F", F)):
        if n < 1:
            raise ValueError(f"{name} must be >= 1, got {n}")
    return (S * (F + 1)
            * math.ceil(max_abs_w * (1 << qw))
            * math.ceil(max_abs_x * (1 << qx)) ** 2)


def inner_product_error_bound(S: int, F: int, qx: int, qw: int,
                              max_abs_x: float, max_abs_w: float) -> float:
    """Worst-case |dequantized - real| for one decrypted gradient slice.

    Rounding analysis with per-value rounding errors of at most 1/2:
    the quantized residual for one sample differs from 2^(qw+qx) times
    the real residual by at most

        delta = 2^(qw-1) + F * (2^(qw-1)*max_w + 2^(qx-1)*max_x + 1/4)

    and multiplying by the quantized data column adds one more rounded
    factor, giving a raw error of at most

        S * (2^(qw+qx)*max_res/2 + 2^qx*max_x*delta + delta/2)

    with max_res = max_x + F*max_w*max_x bounding the real residual
    (max_abs_x must bound labels as well as features). Divide by the
    scale 2^(qw+2qx) to get the bound below. It is a bound, not an
    estimate; typical errors sit far under it.
    """
    bx = float(max_abs_x)
    bw = float(max_abs_w)
    delta = math.ldexp(1.0, qw - 1) + F * (
        math.ldexp(bw, qw - 1) + math.ldexp(bx, qx - 1) + 0.25
    )
    max_res = bx + F * bw * bx
    raw_err = S * (math.ldexp(max_res, qw + qx - 1) + math.ldexp(bx, qx) * delta
                   + 0.5 * delta)
    return raw_err / math.ldexp(1.0, qw + 2 * qx)
