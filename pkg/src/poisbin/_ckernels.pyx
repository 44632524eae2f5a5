# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Mirrors :mod:`poisbin._pykernels` entry for entry."""

import numpy as np

cimport numpy as cnp
from libc.float cimport DBL_MIN
from libc.math cimport atan2, cos, exp, log, log1p, sin, M_PI

cnp.import_array()


def bernoulli_convolve(const double[::1] p):
    """Iterated two-term convolution; returns the pmf of the sum on 0..n.

    Results below DBL_MIN are flushed to zero.
    """
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t j, k
    cdef double pj, qj, v
    out = np.zeros(n + 1, dtype=np.float64)
    cdef double[::1] w = out
    w[0] = 1.0
    with nogil:
        for j in range(n):
            pj = p[j]
            qj = 1.0 - pj
            k = j + 1
            while k > 0:
                v = w[k] * qj + w[k - 1] * pj
                # subnormals are slow and untrustworthy; callers repair anything this small
                w[k] = v if v >= DBL_MIN else 0.0
                k -= 1
            v = w[0] * qj
            w[0] = v if v >= DBL_MIN else 0.0
    return out


def contour_trapezoid(const double[::1] p, const double[::1] mult,
                      double r, long k, long nodes):
    """Trapezoid sum of the normalised contour integrand at radius ``r``.

    Returns ``(central, outer, outer_abs)``: node averages of the real
    integrand over |theta| <= pi/2, over the remaining arc, and of its
    modulus over the remaining arc.
    """
    cdef Py_ssize_t m = p.shape[0]
    cdef Py_ssize_t j, l
    cdef double theta, s2, logmod, phase, a, pr, ql, val, half
    cdef double central = 0.0, outer = 0.0, outer_abs = 0.0
    cdef double cc = 0.0, co = 0.0, ca = 0.0, y, t
    cdef double[::1] scale = np.empty(m, dtype=np.float64)
    for l in range(m):
        pr = p[l] * r
        ql = 1.0 - p[l]
        scale[l] = 4.0 * ql * pr / ((ql + pr) * (ql + pr))
    half = 0.5 * M_PI
    with nogil:
        for j in range(nodes):
            theta = -M_PI + 2.0 * M_PI * j / nodes
            s2 = sin(0.5 * theta)
            s2 = s2 * s2
            logmod = 0.0
            phase = -k * theta
            for l in range(m):
                pr = p[l] * r
                ql = 1.0 - p[l]
                logmod += mult[l] * 0.5 * log1p(-scale[l] * s2)
                phase += mult[l] * atan2(pr * sin(theta), ql + pr * cos(theta))
            a = exp(logmod)
            val = a * cos(phase)
            # Neumaier-compensated accumulation
            if -half <= theta <= half:
                t = central + val
                if abs(central) >= abs(val):
                    cc += (central - t) + val
                else:
                    cc += (val - t) + central
                central = t
            else:
                t = outer + val
                if abs(outer) >= abs(val):
                    co += (outer - t) + val
                else:
                    co += (val - t) + outer
                outer = t
                outer_abs += a
    return (central + cc) / nodes, (outer + co) / nodes, outer_abs / nodes


def reverse_cumsum(const double[::1] x):
    """Compensated suffix sums: ``out[i] = sum(x[i:])``."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef double s = 0.0, c = 0.0, t, v
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        i = n - 1
        while i >= 0:
            v = x[i]
            t = s + v
            if abs(s) >= abs(v):
                c += (s - t) + v
            else:
                c += (v - t) + s
            s = t
            o[i] = s + c
            i -= 1
    return out
