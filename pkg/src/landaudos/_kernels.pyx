# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for guiding-center Laguerre tables and mode sums."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, exp

cnp.import_array()

BACKEND = "cython"


def gc_table(double[::1] s, int n):
    """Signed guiding-center Laguerre functions, shape (len(s), n, n).

    Entry ``[t, a, b]`` with ``b >= a`` is ``g_{b-a, a}(s_t)`` where
    ``g_{p,m}(s) = sqrt(m!/(m+p)!) s^{p/2} e^{-s/2} L^{(p)}_m(s)``; the
    lower triangle is ``(-1)^{a-b}`` times the transposed entry.
    """
    cdef Py_ssize_t N = s.shape[0]
    out = np.zeros((N, n, n), dtype=np.float64)
    cdef double[:, :, ::1] T = out
    cdef Py_ssize_t t, p, j
    cdef double st, start, g, gprev, gnext, sgn
    for t in range(N):
        st = s[t]
        start = exp(-0.5 * st)
        for p in range(n):
            if p > 0:
                start = start * sqrt(st / p)
            g = start
            gprev = 0.0
            sgn = -1.0 if (p % 2) else 1.0
            for j in range(n - p):
                T[t, j, j + p] = g
                if p > 0:
                    T[t, j + p, j] = sgn * g
                gnext = ((2 * j + 1 + p - st) * g - sqrt(<double>(j * (j + p))) * gprev) / sqrt(
                    <double>((j + 1) * (j + p + 1)))
                gprev = g
                g = gnext
    return out


def field_matrix(double[::1] s, double[::1] psi, double[::1] u, double[::1] v, int n):
    """Hermitian n x n matrix of a superposition of plane-wave modes.

    Mode ``m`` contributes ``c_{m,p} g_{p,j}(s_m)`` to entry ``[j, j+p]``
    with ``c_{m,p} = u_m e^{i p psi_m}`` for even ``p`` and
    ``i v_m e^{i p psi_m}`` for odd ``p``.  The lower triangle is the
    complex conjugate of the upper one.
    """
    cdef Py_ssize_t M = s.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] V = out
    cdef double[::1] start = np.exp(-0.5 * np.asarray(s))
    cdef double[::1] sq = np.sqrt(np.asarray(s))
    cdef double[::1] gcur = np.empty(M)
    cdef double[::1] gprev = np.empty(M)
    cdef double[::1] cre = np.empty(M)
    cdef double[::1] cim = np.empty(M)
    cdef Py_ssize_t p, j, m
    cdef double ang, ca, sa, acc_re, acc_im, g, gn, coef, b, d, rp
    for p in range(n):
        if p > 0:
            rp = 1.0 / sqrt(<double>p)
            for m in range(M):
                start[m] = start[m] * sq[m] * rp
        for m in range(M):
            ang = p * psi[m]
            ca = cos(ang)
            sa = sin(ang)
            if p % 2 == 0:
                cre[m] = u[m] * ca
                cim[m] = u[m] * sa
            else:
                cre[m] = -v[m] * sa
                cim[m] = v[m] * ca
            gcur[m] = start[m]
            gprev[m] = 0.0
        for j in range(n - p):
            coef = 2 * j + 1 + p
            b = sqrt(<double>(j * (j + p)))
            d = 1.0 / sqrt(<double>((j + 1) * (j + p + 1)))
            acc_re = 0.0
            acc_im = 0.0
            for m in range(M):
                g = gcur[m]
                acc_re = acc_re + cre[m] * g
                acc_im = acc_im + cim[m] * g
                gn = ((coef - s[m]) * g - b * gprev[m]) * d
                gprev[m] = g
                gcur[m] = gn
            V[j, j + p] = acc_re + 1j * acc_im
            if p > 0:
                V[j + p, j] = acc_re - 1j * acc_im
    return out
