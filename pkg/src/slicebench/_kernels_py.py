"""Pure-numpy QAM bit-level kernels.

Fallback backend for :mod:`slicebench.kernels`. The compiled extension
implements the same three functions with identical numerics; the two must stay
bit-for-bit interchangeable (see tests/test_kernels.py).

Constellations follow the NR bit-to-symbol Gray mappings with unit average
energy: QPSK, 16-QAM, and 64-QAM. Even-position bits drive the I axis,
odd-position bits the Q axis.
"""

from __future__ import annotations

import math

import numpy as np

from slicebench.errors import DomainError

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT10 = 1.0 / math.sqrt(10.0)
_INV_SQRT42 = 1.0 / math.sqrt(42.0)
_SQRT2 = math.sqrt(2.0)
_SQRT10 = math.sqrt(10.0)
_SQRT42 = math.sqrt(42.0)


def _check_qm(qm: int) -> None:
    if qm not in (2, 4, 6):
        raise DomainError(f"qm must be 2, 4, or 6, got {qm}")


def map_bits(bits: np.ndarray, qm: int) -> np.ndarray:
    """Gray-map a flat bit array (qm bits per symbol) to complex symbols."""
    _check_qm(qm)
    b = np.ascontiguousarray(bits, dtype=np.uint8)
    if b.ndim != 1 or b.size % qm != 0:
        raise DomainError(f"bit array length must be a multiple of qm={qm}")
    s = 1 - 2 * b.reshape(-1, qm).astype(np.int64)
    if qm == 2:
        re, im, scale = s[:, 0], s[:, 1], _INV_SQRT2
    elif qm == 4:
        re = s[:, 0] * (2 - s[:, 2])
        im = s[:, 1] * (2 - s[:, 3])
        scale = _INV_SQRT10
    else:
        re = s[:, 0] * (4 - s[:, 2] * (2 - s[:, 4]))
        im = s[:, 1] * (4 - s[:, 3] * (2 - s[:, 5]))
        scale = _INV_SQRT42
    out = np.empty(s.shape[0], dtype=np.complex128)
    out.real = re * scale
    out.imag = im * scale
    return out


def _axis_bits(t: np.ndarray, qm: int) -> np.ndarray:
    """Hard-decide one axis (already scaled to the odd-integer grid)."""
    n = t.shape[0]
    bits = np.empty((n, qm // 2), dtype=np.uint8)
    bits[:, 0] = t <= 0.0
    if qm >= 4:
        a = np.abs(t)
        if qm == 4:
            bits[:, 1] = a > 2.0
        else:
            bits[:, 1] = a > 4.0
            bits[:, 2] = (a <= 2.0) | (a > 6.0)
    return bits


def demap_hard(symbols: np.ndarray, qm: int) -> np.ndarray:
    """Nearest-point hard decision back to a flat bit array."""
    _check_qm(qm)
    x = np.ascontiguousarray(symbols, dtype=np.complex128)
    if x.ndim != 1:
        raise DomainError("symbol array must be one-dimensional")
    scale = {2: _SQRT2, 4: _SQRT10, 6: _SQRT42}[qm]
    out = np.empty((x.shape[0], qm), dtype=np.uint8)
    out[:, 0::2] = _axis_bits(x.real * scale, qm)
    out[:, 1::2] = _axis_bits(x.imag * scale, qm)
    return out.reshape(-1)


def count_bit_errors(a: np.ndarray, b: np.ndarray) -> int:
    """Number of positions where the two bit arrays differ."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise DomainError("bit arrays must have identical shape")
    return int(np.count_nonzero(a != b))
