"""Fixed-point encoding into GF(p) and additive secret sharing.

Field elements are plain Python ints (scalars) or ``uint64`` arrays, always
reduced into ``[0, p)``.  The modulus is the Mersenne prime 2^61 - 1, so any
seven reduced elements can be summed in a ``uint64`` without overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, RangeExceeded, TooFewParties

MODULUS = (1 << 61) - 1
DEFAULT_SCALE = 1 << 16
DEFAULT_RANGE = float(1 << 20)
MAX_PARTIES = 1024

_P64 = np.uint64(MODULUS)
_SHIFT = np.uint64(61)
# 8 * (2^61 - 1) < 2^64, so up to 8 reduced terms fit before a reduction.
_CHUNK = 7


def _reduce64(x: np.ndarray) -> np.ndarray:
    """Reduce uint64 values (any magnitude below 2^64) modulo 2^61 - 1."""
    x = (x >> _SHIFT) + (x & _P64)
    return x - _P64 * (x >= _P64).astype(np.uint64)


def mod_sum(values, axis=None):
    """Sum field elements modulo p along ``axis``.

    Works for Python-int sequences and uint64 arrays of any shape.
    """
    arr = np.asarray(values, dtype=np.uint64)
    if arr.size == 0:
        raise EmptyInput("cannot sum an empty collection of shares")
    if axis is None:
        arr = arr.reshape(-1)
        axis = 0
    if arr.shape[axis] <= _CHUNK:
        out = _reduce64(arr.sum(axis=axis, dtype=np.uint64))
        return int(out) if out.ndim == 0 else out
    arr = np.moveaxis(arr, axis, 0)
    acc = np.zeros(arr.shape[1:], dtype=np.uint64)
    for start in range(0, arr.shape[0], _CHUNK):
        acc = _reduce64(acc + arr[start:start + _CHUNK].sum(axis=0, dtype=np.uint64))
    if acc.ndim == 0:
        return int(acc)
    return acc


def mod_add(a, b):
    """Elementwise (a + b) mod p for reduced operands."""
    s = np.asarray(a, dtype=np.uint64) + np.asarray(b, dtype=np.uint64)
    s = s - _P64 * (s >= _P64).astype(np.uint64)
    return int(s) if s.ndim == 0 else s


def mod_sub(a, b):
    """Elementwise (a - b) mod p for reduced operands."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    s = (a + (_P64 - b))
    s = s - _P64 * (s >= _P64).astype(np.uint64)
    return int(s) if s.ndim == 0 else s


@dataclass(frozen=True)
class FixedPointCodec:
    """Maps reals to field elements by scaling and rounding.

    Negative values land in the upper half of the field; decoding reads the
    element in the signed window (-p/2, p/2].
    """

    scale: int = DEFAULT_SCALE
    range_bound: float = DEFAULT_RANGE
    modulus: int = MODULUS
    max_parties: int = MAX_PARTIES

    def __post_init__(self):
        if self.scale <= 0 or self.range_bound <= 0:
            raise ValueError("scale and range_bound must be positive")
        if self.range_bound * self.scale * self.max_parties >= self.modulus / 2:
            raise ValueError("codec parameters allow modular wraparound")

    @property
    def resolution(self) -> float:
        """Worst-case round-trip error of a single encoded value."""
        return 0.5 / self.scale

    def encode(self, x):
        """Encode a real scalar or array.

        Raises:
            RangeExceeded: if any ``|x|`` exceeds ``range_bound``.
        """
        arr = np.asarray(x, dtype=np.float64)
        if np.any(~np.isfinite(arr)) or np.any(np.abs(arr) > self.range_bound):
            raise RangeExceeded(f"value outside +/-{self.range_bound}")
        ints = np.rint(arr * self.scale).astype(np.int64)
        if self.modulus != MODULUS:
            out = np.mod(ints, self.modulus)
            return int(out) if out.ndim == 0 else out.astype(np.uint64)
        out = np.where(ints < 0, (ints + np.int64(MODULUS)), ints).astype(np.uint64)
        return int(out) if out.ndim == 0 else out

    def decode(self, e):
        """Decode a field element (scalar or array) back to a real."""
        arr = np.asarray(e, dtype=np.uint64)
        half = np.uint64(self.modulus // 2)
        signed = np.where(
            arr > half,
            -((np.uint64(self.modulus) - arr).astype(np.int64)),
            arr.astype(np.int64),
        )
        out = signed.astype(np.float64) / self.scale
        return float(out) if out.ndim == 0 else out


def split(x, n: int, rng: np.random.Generator, modulus: int = MODULUS) -> np.ndarray:
    """Split a field element into ``n`` additive shares.

    The first ``n - 1`` shares are i.i.d. uniform on ``[0, p)``; the last one
    is ``x - sum(others) mod p``.  Works elementwise when ``x`` is an array,
    with the share index as the last axis.
    """
    if n < 2:
        raise TooFewParties(f"need at least 2 shares, got {n}")
    if modulus != MODULUS:
        raise ValueError("only the default Mersenne modulus is supported")
    x = np.asarray(x, dtype=np.uint64)
    free = rng.integers(0, MODULUS, size=x.shape + (n - 1,), dtype=np.uint64)
    last = mod_sub(x, mod_sum(free, axis=-1))
    return np.concatenate([free, np.asarray(last, dtype=np.uint64)[..., None]], axis=-1)


def sum_shares(shares) -> int:
    """Reconstruct a secret: the modular sum of all its shares."""
    arr = np.asarray(shares, dtype=np.uint64)
    if arr.size == 0:
        raise EmptyInput("no shares to sum")
    return mod_sum(arr)
