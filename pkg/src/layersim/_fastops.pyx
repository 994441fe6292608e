# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled state-update primitives.

Mirrors layersim._pyops with tight C loops; layersim.backend selects
between the two at import time. All updates run in place on C-contiguous
complex128 arrays of shape [batch, 2**n]; only ``permute`` uses a scratch
buffer (one state row).
"""

import numpy as np

from libc.math cimport cos, sin, sqrt

ctypedef double complex cplx


def phase_mult(cplx[:, ::1] psi, const double[::1] alpha):
    """psi[b, i] *= exp(1j * alpha[i])."""
    cdef Py_ssize_t b, i
    cdef cplx w
    for i in range(psi.shape[1]):
        w = cos(alpha[i]) + 1j * sin(alpha[i])
        for b in range(psi.shape[0]):
            psi[b, i] = psi[b, i] * w


def phase_mult_rows(cplx[:, ::1] psi, const double[:, ::1] alpha):
    """psi[b, i] *= exp(1j * alpha[b, i])."""
    cdef Py_ssize_t b, i
    for b in range(psi.shape[0]):
        for i in range(psi.shape[1]):
            psi[b, i] = psi[b, i] * (cos(alpha[b, i]) + 1j * sin(alpha[b, i]))


def diag_mult(cplx[:, ::1] psi, const cplx[::1] diag):
    cdef Py_ssize_t b, i
    for b in range(psi.shape[0]):
        for i in range(psi.shape[1]):
            psi[b, i] = psi[b, i] * diag[i]


def diag_mult_rows(cplx[:, ::1] psi, const cplx[:, ::1] diag):
    cdef Py_ssize_t b, i
    for b in range(psi.shape[0]):
        for i in range(psi.shape[1]):
            psi[b, i] = psi[b, i] * diag[b, i]


def xor_gather(cplx[:, ::1] psi, long long mask):
    """psi[b, j] <- psi[b, j ^ mask] (pairwise swap, no arithmetic)."""
    cdef Py_ssize_t b, j, k
    cdef cplx tmp
    if mask == 0:
        return
    for b in range(psi.shape[0]):
        for j in range(psi.shape[1]):
            k = j ^ mask
            if j < k:
                tmp = psi[b, j]
                psi[b, j] = psi[b, k]
                psi[b, k] = tmp


def permute(cplx[:, ::1] psi, const long long[::1] sigma):
    """psi[b, j] <- psi[b, sigma[j]]."""
    cdef Py_ssize_t b, j, dim = psi.shape[1]
    scratch_arr = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] scratch = scratch_arr
    for b in range(psi.shape[0]):
        for j in range(dim):
            scratch[j] = psi[b, sigma[j]]
        for j in range(dim):
            psi[b, j] = scratch[j]


def fhwt(cplx[:, ::1] psi):
    """In-place fast Hadamard-Walsh transform of every batch row."""
    cdef Py_ssize_t b, g, i, dim = psi.shape[1]
    cdef Py_ssize_t stride = 1
    cdef double inv = 1.0 / sqrt(2.0)
    cdef cplx up, lo
    while stride < dim:
        for b in range(psi.shape[0]):
            for g in range(0, dim, 2 * stride):
                for i in range(g, g + stride):
                    up = psi[b, i]
                    lo = psi[b, i + stride]
                    psi[b, i] = (up + lo) * inv
                    psi[b, i + stride] = (up - lo) * inv
        stride = stride * 2


def apply_1q(cplx[:, ::1] psi, const cplx[:, ::1] u, int bitpos):
    cdef Py_ssize_t b, g, i, dim = psi.shape[1]
    cdef Py_ssize_t h = 1 << bitpos
    cdef cplx u00 = u[0, 0], u01 = u[0, 1], u10 = u[1, 0], u11 = u[1, 1]
    cdef cplx a, c
    for b in range(psi.shape[0]):
        for g in range(0, dim, 2 * h):
            for i in range(g, g + h):
                a = psi[b, i]
                c = psi[b, i + h]
                psi[b, i] = u00 * a + u01 * c
                psi[b, i + h] = u10 * a + u11 * c


def apply_2q(cplx[:, ::1] psi, const cplx[:, ::1] u, int pa, int pb):
    """Local index order is (bit at pa, bit at pb)."""
    cdef Py_ssize_t b, i, dim = psi.shape[1]
    cdef Py_ssize_t ha = (<Py_ssize_t>1) << pa
    cdef Py_ssize_t hb = (<Py_ssize_t>1) << pb
    cdef Py_ssize_t both = ha | hb
    cdef cplx v0, v1, v2, v3
    for b in range(psi.shape[0]):
        for i in range(dim):
            if i & both:
                continue
            v0 = psi[b, i]
            v1 = psi[b, i + hb]
            v2 = psi[b, i + ha]
            v3 = psi[b, i + both]
            psi[b, i] = u[0, 0] * v0 + u[0, 1] * v1 + u[0, 2] * v2 + u[0, 3] * v3
            psi[b, i + hb] = u[1, 0] * v0 + u[1, 1] * v1 + u[1, 2] * v2 + u[1, 3] * v3
            psi[b, i + ha] = u[2, 0] * v0 + u[2, 1] * v1 + u[2, 2] * v2 + u[2, 3] * v3
            psi[b, i + both] = u[3, 0] * v0 + u[3, 1] * v1 + u[3, 2] * v2 + u[3, 3] * v3


def diag_1q(cplx[:, ::1] psi, const cplx[::1] d2, int bitpos):
    cdef Py_ssize_t b, g, i, dim = psi.shape[1]
    cdef Py_ssize_t h = 1 << bitpos
    cdef cplx d0 = d2[0], d1 = d2[1]
    for b in range(psi.shape[0]):
        for g in range(0, dim, 2 * h):
            for i in range(g, g + h):
                psi[b, i] = psi[b, i] * d0
                psi[b, i + h] = psi[b, i + h] * d1


def diag_2q(cplx[:, ::1] psi, const cplx[::1] d4, int pa, int pb):
    cdef Py_ssize_t b, i, dim = psi.shape[1]
    cdef Py_ssize_t ha = (<Py_ssize_t>1) << pa
    cdef Py_ssize_t hb = (<Py_ssize_t>1) << pb
    cdef Py_ssize_t both = ha | hb
    cdef cplx d0 = d4[0], d1 = d4[1], d2 = d4[2], d3 = d4[3]
    for b in range(psi.shape[0]):
        for i in range(dim):
            if i & both:
                continue
            psi[b, i] = psi[b, i] * d0
            psi[b, i + hb] = psi[b, i + hb] * d1
            psi[b, i + ha] = psi[b, i + ha] * d2
            psi[b, i + both] = psi[b, i + both] * d3


def antidiag_1q(cplx[:, ::1] psi, const cplx[::1] d2, int bitpos):
    """Apply [[0, d2[0]], [d2[1], 0]] on one qubit."""
    cdef Py_ssize_t b, g, i, dim = psi.shape[1]
    cdef Py_ssize_t h = 1 << bitpos
    cdef cplx d0 = d2[0], d1 = d2[1]
    cdef cplx up
    for b in range(psi.shape[0]):
        for g in range(0, dim, 2 * h):
            for i in range(g, g + h):
                up = psi[b, i]
                psi[b, i] = d0 * psi[b, i + h]
                psi[b, i + h] = d1 * up


def kron_chain(const cplx[:, ::1] diags):
    """Tensor product of per-qubit diagonals; returns (diag, mult count)."""
    cdef Py_ssize_t m = diags.shape[0]
    cdef Py_ssize_t size = (<Py_ssize_t>1) << m
    out_arr = np.empty(size, dtype=np.complex128)
    cdef cplx[::1] out = out_arr
    cdef Py_ssize_t cur = 2, i, k
    cdef long long mults = 0
    cdef cplx g0, g1, v
    out[0] = diags[0, 0]
    out[1] = diags[0, 1]
    for k in range(1, m):
        g0 = diags[k, 0]
        g1 = diags[k, 1]
        for i in range(cur - 1, -1, -1):
            v = out[i]
            out[2 * i] = v * g0
            out[2 * i + 1] = v * g1
        cur = cur * 2
        mults = mults + cur
    return out_arr, int(mults)


def zsum(const cplx[:, ::1] psi, const double[::1] weights):
    """Per-row sum of |amplitude|^2 * weights."""
    cdef Py_ssize_t b, i
    out_arr = np.empty(psi.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc, re, im
    for b in range(psi.shape[0]):
        acc = 0.0
        for i in range(psi.shape[1]):
            re = psi[b, i].real
            im = psi[b, i].imag
            acc = acc + (re * re + im * im) * weights[i]
        out[b] = acc
    return out_arr
