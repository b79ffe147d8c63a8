import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpput import _pykernels, kernels

BACKENDS = kernels.available_backends()


def m_matrix_system(seed, n, contact):
    """Tridiagonal M-matrix LCP with a known solution in contact on ``[0, contact)``.

    A put-like solution ``u*`` is chosen first: it equals a falling obstacle on
    the contact rows and lies strictly above it afterwards.  ``d = A u* - w*``
    with ``w* > 0`` exactly on the contact rows makes ``u*`` the unique solution.
    Returns ``(a, b, c, d, g, u*)``.
    """
    rng = np.random.default_rng(seed)
    a = -rng.uniform(0.0, 1.0, n)
    c = -rng.uniform(0.0, 1.0, n)
    a[0] = 0.0
    c[-1] = 0.0
    b = -(a + c) + rng.uniform(0.05, 1.0, n)  # strictly diagonally dominant
    i = np.arange(n)
    g = np.maximum(float(n) - 2.0 * i, 0.0)
    u = g.copy()
    gap = rng.uniform(0.1, 3.0, n) + 0.5 * np.maximum(i - contact, 0) ** 1.5
    u[contact:] = g[contact:] + gap[contact:]
    w = np.zeros(n)
    w[:contact] = rng.uniform(0.1, 2.0, contact)
    Au = b * u
    Au[1:] += a[1:] * u[:-1]
    Au[:-1] += c[:-1] * u[1:]
    return a, b, c, Au - w, g, u


def lcp_defects(a, b, c, d, g, u):
    Au = b * u
    Au[1:] += a[1:] * u[:-1]
    Au[:-1] += c[:-1] * u[1:]
    w = Au - d
    return (float(np.max(g - u)), float(np.max(-w)),
            float(np.max(np.abs(np.minimum(u - g, w)))))


def test_backend_selection():
    assert kernels.BACKEND in kernels.available_backends()
    assert "python" in kernels.available_backends()
    assert kernels.get_backend("python") is _pykernels
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_var_forces_pure_python():
    code = "from jumpput import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, JUMPPUT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("backend", BACKENDS)
@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 60), st.data())
def test_brennan_schwartz_solves_left_interval_lcp(backend, seed, n, data):
    contact = data.draw(st.integers(0, n))
    a, b, c, d, g, exact = m_matrix_system(seed, n, contact)
    u = kernels.get_backend(backend).brennan_schwartz(a, b, c, d, g)
    np.testing.assert_allclose(u, exact, rtol=1e-9, atol=1e-9)
    below, neg_w, comp = lcp_defects(a, b, c, d, g, u)
    assert below <= 1e-12
    assert neg_w <= 1e-8
    assert comp <= 1e-8


@pytest.mark.parametrize("backend", BACKENDS)
@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 40), st.floats(0.5, 1.8))
def test_psor_solves_general_lcp(backend, seed, n, omega):
    rng = np.random.default_rng(seed)
    a, b, c, d, _, _ = m_matrix_system(seed, n, 0)
    g = rng.uniform(-1.0, 10.0, n)  # arbitrary contact pattern
    u, iters, ok = kernels.get_backend(backend).psor(a, b, c, d, g, np.maximum(g, 0.0), omega,
                                                     1e-12, 200_000)
    assert ok and iters >= 1
    below, neg_w, comp = lcp_defects(a, b, c, d, g, u)
    assert below <= 1e-12
    assert neg_w <= 1e-8
    assert comp <= 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 60), st.data())
def test_backends_agree_bitwise(seed, n, data):
    backends = kernels.available_backends()
    if len(backends) < 2:
        pytest.skip("compiled extension not built")
    contact = data.draw(st.integers(0, n))
    args = m_matrix_system(seed, n, contact)[:5]
    outs = [kernels.get_backend(name).brennan_schwartz(*args) for name in backends]
    np.testing.assert_array_equal(outs[0], outs[1])
    u0 = np.maximum(args[4], 0.0)
    ps = [kernels.get_backend(name).psor(*args, u0, 1.3, 1e-11, 100_000) for name in backends]
    np.testing.assert_array_equal(ps[0][0], ps[1][0])
    assert ps[0][1] == ps[1][1]


def test_psor_reports_non_convergence(backend):
    a, b, c, d, g, _ = m_matrix_system(1, 30, 10)
    u, iters, ok = kernels.get_backend(backend).psor(a, b, c, d, g, np.zeros(30), 1.0, 1e-14, 1)
    assert not ok and iters == 1


def test_brennan_schwartz_without_contact_is_tridiagonal_solve(backend):
    from scipy.linalg import solve_banded

    a, b, c, d, g, _ = m_matrix_system(3, 25, 0)
    g = g - 1e3  # obstacle never active
    u = kernels.get_backend(backend).brennan_schwartz(a, b, c, d, g)
    ab = np.vstack([np.r_[0.0, c[:-1]], b, np.r_[a[1:], 0.0]])
    np.testing.assert_allclose(u, solve_banded((1, 1), ab, d), rtol=1e-12)
