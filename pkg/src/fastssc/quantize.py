"""Fixed-point LLR value domain with saturating two's-complement arithmetic.

Soft values exist in two interchangeable domains: plain floats, and scaled
integers in a (W, Wc, F) format.  W is the bit width of internal values, Wc
the bit width of channel values, and F the number of fractional bits shared
by both.  Integer LLRs use a symmetric range: a width-w value lies in
[-(2**(w-1) - 1), +(2**(w-1) - 1)].  The most negative two's-complement code
is never produced, so negation and magnitude comparison stay closed.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuantScheme:
    """(W, Wc, F) fixed-point format descriptor."""

    w_internal: int
    w_channel: int
    f_frac: int

    def __post_init__(self):
        if self.w_internal < 2:
            raise ValueError(f"internal width must be >= 2, got {self.w_internal}")
        if not 2 <= self.w_channel <= self.w_internal:
            raise ValueError(
                f"channel width must be in [2, {self.w_internal}], got {self.w_channel}"
            )
        if not 0 <= self.f_frac < self.w_channel:
            raise ValueError(
                f"fractional bits must be in [0, {self.w_channel}), got {self.f_frac}"
            )

    @property
    def internal_limit(self):
        """Largest representable internal magnitude."""
        return (1 << (self.w_internal - 1)) - 1

    @property
    def channel_limit(self):
        """Largest representable channel magnitude."""
        return (1 << (self.w_channel - 1)) - 1

    @property
    def scale(self):
        """Scaling factor 2**F applied to real LLRs before rounding."""
        return float(1 << self.f_frac)

    def __str__(self):
        return f"{self.w_internal}:{self.w_channel}:{self.f_frac}"


def parse_quant(text):
    """Parse a scheme flag of the form ``W:Wc:F``; ``float`` maps to None."""
    text = text.strip().lower()
    if text in ("float", "none", ""):
        return None
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"quantization scheme must be W:Wc:F or 'float', got {text!r}")
    try:
        w, wc, f = (int(p) for p in parts)
    except ValueError:
        raise ValueError(f"quantization scheme fields must be integers, got {text!r}")
    return QuantScheme(w, wc, f)


def quantize_channel(llr, scheme):
    """Map real channel LLRs to saturated fixed-point integers.

    Values are scaled by 2**F, rounded to the nearest integer with ties away
    from zero, and clamped to the symmetric channel range. Quantization is
    monotone: x <= y implies quantize(x) <= quantize(y).

    Parameters
    ----------
    llr : array_like or float
        Channel LLR value(s).
    scheme : QuantScheme
        Target format.

    Returns
    -------
    ndarray or int
        int32 value(s) in [-channel_limit, +channel_limit].
    """
    x = np.asarray(llr, dtype=np.float64)
    scaled = x * scheme.scale
    # round half away from zero; np.round would round ties to even
    q = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    lim = scheme.channel_limit
    q = np.clip(q, -lim, lim).astype(np.int32)
    if np.isscalar(llr) or np.ndim(llr) == 0:
        return int(q)
    return q


def sat_add(a, b, width):
    """Saturating signed addition at the given bit width.

    The sum is computed exactly (inputs are assumed to fit comfortably in
    int64) and clamped to the symmetric range of `width`-bit values.
    """
    if width < 2:
        raise ValueError(f"width must be >= 2, got {width}")
    lim = (1 << (width - 1)) - 1
    s = np.add(a, b, dtype=np.int64)
    s = np.clip(s, -lim, lim)
    if np.ndim(s) == 0:
        return int(s)
    return s.astype(np.int32)
