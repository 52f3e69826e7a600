# cython: language_level=3
"""Compiled pointwise kernels. Signatures mirror ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, pow, sqrt

cnp.import_array()


cdef struct Power:
    int whole      # integer part of the exponent on r2
    int half       # 1 if an extra sqrt(r2) factor is needed
    int generic    # 1 if neither: fall back to pow
    double expo


cdef inline Power _power(double half_q):
    # |z|^q = r2^half_q; integer and half-integer half_q avoid pow()
    cdef Power pw
    cdef double twice = 2.0 * half_q
    pw.expo = half_q
    pw.generic = 1
    pw.whole = 0
    pw.half = 0
    if half_q >= 0.0 and twice == <double>(<int>twice) and twice <= 16.0:
        pw.generic = 0
        pw.whole = <int>twice // 2
        pw.half = <int>twice % 2
    return pw


cdef inline double _amp(double r2, Power pw) nogil:
    cdef double acc = 1.0
    cdef int k
    if pw.generic:
        return pow(r2, pw.expo)
    for k in range(pw.whole):
        acc *= r2
    if pw.half:
        acc *= sqrt(r2)
    return acc


def nonlinear_phase(const double complex[::1] psi, double dt, double p):
    cdef Py_ssize_t i, n = psi.shape[0]
    cdef double re, im, th, c, s
    cdef Power pw = _power(0.5 * (p - 2.0))
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    with nogil:
        for i in range(n):
            re = psi[i].real
            im = psi[i].imag
            th = dt * _amp(re * re + im * im, pw)
            c = cos(th)
            s = sin(th)
            o[i] = (re * c - im * s) + 1j * (re * s + im * c)
    return out


def abs_power_sum(const double complex[::1] u, double p):
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double acc = 0.0, re, im
    cdef Power pw = _power(0.5 * p)
    with nogil:
        for i in range(n):
            re = u[i].real
            im = u[i].imag
            acc += _amp(re * re + im * im, pw)
    return acc


def power_nonlinearity(const double[::1] u, double p):
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double v
    cdef Power pw = _power(0.5 * (p - 2.0))
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            v = u[i]
            o[i] = _amp(v * v, pw) * v
    return out


def max_abs(const double complex[::1] u):
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double m = 0.0, r2
    with nogil:
        for i in range(n):
            r2 = u[i].real * u[i].real + u[i].imag * u[i].imag
            if r2 > m:
                m = r2
    return sqrt(m)
