import os
import subprocess
import sys

import numpy as np
import pytest

from poisbin import _pykernels, kernels


def compiled():
    try:
        from poisbin import _ckernels
    except ImportError:
        pytest.skip("compiled kernels not built")
    return _ckernels


def test_backend_name_is_known():
    assert kernels.BACKEND in ("cython", "python")


def test_pure_python_switch():
    code = "from poisbin import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, POISBIN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


class TestBackendsAgree:
    def test_convolve_bitwise(self, rng):
        ck = compiled()
        for n in (1, 2, 17, 300):
            p = rng.random(n)
            np.testing.assert_array_equal(ck.bernoulli_convolve(p), _pykernels.bernoulli_convolve(p))

    def test_convolve_flushes_subnormals(self):
        ck = compiled()
        p = np.full(3000, 0.3)
        a = ck.bernoulli_convolve(p)
        b = _pykernels.bernoulli_convolve(p)
        tiny = np.finfo(float).tiny
        assert not np.any((a > 0) & (a < tiny))
        np.testing.assert_array_equal(a, b)

    def test_contour_trapezoid(self, rng):
        ck = compiled()
        vals = np.sort(rng.random(5))
        mult = np.array([3.0, 1.0, 2.0, 5.0, 1.0])
        for r, k, nodes in ((0.7, 4, 256), (1.3, 7, 512)):
            a = ck.contour_trapezoid(vals, mult, r, k, nodes)
            b = _pykernels.contour_trapezoid(vals, mult, r, k, nodes)
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_reverse_cumsum(self, rng):
        ck = compiled()
        x = rng.random(1000) * 10.0 ** rng.integers(-20, 0, 1000)
        a = ck.reverse_cumsum(x)
        b = _pykernels.reverse_cumsum(x)
        np.testing.assert_allclose(a, b, rtol=1e-15)
        assert a[0] == pytest.approx(np.sum(x), rel=1e-14)


def test_convolve_sums_to_one(rng):
    p = rng.random(50)
    w = kernels.bernoulli_convolve(p)
    assert w.shape == (51,)
    assert np.sum(w) == pytest.approx(1.0, abs=1e-14)
    assert np.dot(np.arange(51), w) == pytest.approx(p.sum(), rel=1e-13)


def test_reverse_cumsum_compensates():
    x = np.array([1.0, 1e-16, 1e-16, 1e-16, 1e-16])
    out = kernels.reverse_cumsum(x)
    assert out[0] == 1.0 + 4e-16 or abs(out[0] - (1.0 + 4e-16)) <= 2.3e-16
    assert out[1] == pytest.approx(4e-16, rel=1e-15)
