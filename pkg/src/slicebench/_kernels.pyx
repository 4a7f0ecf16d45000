# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled QAM bit-level kernels.

Hot path of the link simulator: Gray mapping, hard-decision demapping, and
bit comparison. Semantics and numerics must match slicebench._kernels_py
bit for bit; keep the two in lockstep.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

from slicebench.errors import DomainError

cnp.import_array()

cdef double INV_SQRT2 = 1.0 / sqrt(2.0)
cdef double INV_SQRT10 = 1.0 / sqrt(10.0)
cdef double INV_SQRT42 = 1.0 / sqrt(42.0)
cdef double SQRT2 = sqrt(2.0)
cdef double SQRT10 = sqrt(10.0)
cdef double SQRT42 = sqrt(42.0)


def map_bits(bits, int qm):
    """Gray-map a flat bit array (qm bits per symbol) to complex symbols."""
    if qm != 2 and qm != 4 and qm != 6:
        raise DomainError(f"qm must be 2, 4, or 6, got {qm}")
    cdef const unsigned char[::1] b = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t nbits = b.shape[0]
    if nbits % qm != 0:
        raise DomainError(f"bit array length must be a multiple of qm={qm}")
    cdef Py_ssize_t nsym = nbits // qm
    out = np.empty(nsym, dtype=np.complex128)
    # Write through a (nsym, 2) float64 view: column 0 = real, 1 = imag.
    cdef double[:, ::1] ov = out.view(np.float64).reshape(nsym, 2)
    cdef Py_ssize_t k, o
    cdef long s0, s1, s2, s3, s4, s5
    if qm == 2:
        for k in range(nsym):
            o = 2 * k
            s0 = 1 - 2 * b[o]
            s1 = 1 - 2 * b[o + 1]
            ov[k, 0] = s0 * INV_SQRT2
            ov[k, 1] = s1 * INV_SQRT2
    elif qm == 4:
        for k in range(nsym):
            o = 4 * k
            s0 = 1 - 2 * b[o]
            s1 = 1 - 2 * b[o + 1]
            s2 = 1 - 2 * b[o + 2]
            s3 = 1 - 2 * b[o + 3]
            ov[k, 0] = (s0 * (2 - s2)) * INV_SQRT10
            ov[k, 1] = (s1 * (2 - s3)) * INV_SQRT10
    else:
        for k in range(nsym):
            o = 6 * k
            s0 = 1 - 2 * b[o]
            s1 = 1 - 2 * b[o + 1]
            s2 = 1 - 2 * b[o + 2]
            s3 = 1 - 2 * b[o + 3]
            s4 = 1 - 2 * b[o + 4]
            s5 = 1 - 2 * b[o + 5]
            ov[k, 0] = (s0 * (4 - s2 * (2 - s4))) * INV_SQRT42
            ov[k, 1] = (s1 * (4 - s3 * (2 - s5))) * INV_SQRT42
    return out


def demap_hard(symbols, int qm):
    """Nearest-point hard decision back to a flat bit array."""
    if qm != 2 and qm != 4 and qm != 6:
        raise DomainError(f"qm must be 2, 4, or 6, got {qm}")
    arr = np.ascontiguousarray(symbols, dtype=np.complex128)
    if arr.ndim != 1:
        raise DomainError("symbol array must be one-dimensional")
    cdef Py_ssize_t nsym = arr.shape[0]
    cdef const double[:, ::1] xv = arr.view(np.float64).reshape(nsym, 2)
    out = np.empty(nsym * qm, dtype=np.uint8)
    cdef unsigned char[::1] ob = out
    cdef Py_ssize_t k, o, axis
    cdef double scale, t, a
    if qm == 2:
        scale = SQRT2
    elif qm == 4:
        scale = SQRT10
    else:
        scale = SQRT42
    for k in range(nsym):
        o = qm * k
        for axis in range(2):
            t = xv[k, axis] * scale
            ob[o + axis] = t <= 0.0
            if qm >= 4:
                a = fabs(t)
                if qm == 4:
                    ob[o + axis + 2] = a > 2.0
                else:
                    ob[o + axis + 2] = a > 4.0
                    ob[o + axis + 4] = (a <= 2.0) or (a > 6.0)
    return out


def count_bit_errors(a, b):
    """Number of positions where the two bit arrays differ."""
    cdef const unsigned char[::1] av = np.ascontiguousarray(a, dtype=np.uint8)
    cdef const unsigned char[::1] bv = np.ascontiguousarray(b, dtype=np.uint8)
    if av.shape[0] != bv.shape[0]:
        raise DomainError("bit arrays must have identical shape")
    cdef Py_ssize_t k
    cdef long errors = 0
    for k in range(av.shape[0]):
        errors += av[k] != bv[k]
    return errors
