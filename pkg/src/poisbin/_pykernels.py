"""Pure numpy/Python versions of the compiled kernels.

Same signatures and return conventions as :mod:`poisbin._ckernels`.
"""

import numpy as np

DBL_MIN = np.finfo(np.float64).tiny


def bernoulli_convolve(p):
    p = np.ascontiguousarray(p, dtype=np.float64)
    n = p.shape[0]
    w = np.zeros(n + 1)
    w[0] = 1.0
    for j in range(n):
        pj = p[j]
        qj = 1.0 - pj
        # right-hand side is evaluated before assignment, so no aliasing
        w[1 : j + 2] = w[1 : j + 2] * qj + w[0 : j + 1] * pj
        w[0] *= qj
        seg = w[: j + 2]
        seg[seg < DBL_MIN] = 0.0
    return w


def contour_trapezoid(p, mult, r, k, nodes):
    p = np.asarray(p, dtype=np.float64)
    mult = np.asarray(mult, dtype=np.float64)
    theta = -np.pi + 2.0 * np.pi * np.arange(nodes) / nodes
    q = 1.0 - p
    pr = p * r
    scale = 4.0 * q * pr / (q + pr) ** 2
    s2 = np.sin(0.5 * theta) ** 2
    logmod = np.zeros(nodes)
    phase = -k * theta
    for l in range(p.shape[0]):
        # a zero factor at theta = pi (q = p r) gives log 0 = -inf, i.e. modulus 0
        with np.errstate(divide="ignore"):
            logmod += mult[l] * 0.5 * np.log1p(-scale[l] * s2)
        phase += mult[l] * np.arctan2(pr[l] * np.sin(theta), q[l] + pr[l] * np.cos(theta))
    a = np.exp(logmod)
    val = a * np.cos(phase)
    inner = np.abs(theta) <= 0.5 * np.pi
    return (
        _neumaier(val[inner]) / nodes,
        _neumaier(val[~inner]) / nodes,
        float(np.sum(a[~inner])) / nodes,
    )


def reverse_cumsum(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    s = 0.0
    c = 0.0
    for i in range(x.shape[0] - 1, -1, -1):
        v = float(x[i])
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[i] = s + c
    return out


def _neumaier(values):
    s = 0.0
    c = 0.0
    for v in values.tolist():
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c
