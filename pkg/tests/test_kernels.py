"""The numba and numpy implementations of every hot kernel must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quva import _kernels as K

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


@needs_numba
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_apply_1q_backends_agree(n, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    mat = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    t = int(rng.integers(n))
    np.testing.assert_allclose(K.apply_1q_numba(amps, mat, t, n), K.apply_1q_numpy(amps, mat, t, n), atol=1e-13)


@needs_numba
@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_apply_cx_backends_agree(n, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    c, t = (int(v) for v in rng.choice(n, 2, replace=False))
    np.testing.assert_array_equal(K.apply_cx_numba(amps, c, t, n), K.apply_cx_numpy(amps, c, t, n))


@needs_numba
def test_rk4_backends_agree():
    n_steps = 512
    v = np.linspace(0, 3, 2 * n_steps + 1)
    slopes = np.linspace(-5, 5, 7)
    a = K.rk4_batch_numba(1.0, 0.5, 20.0, 30.0, v, 0.4, slopes, n_steps, 64)
    b = K.rk4_batch_numpy(1.0, 0.5, 20.0, 30.0, v, 0.4, slopes, n_steps, 64)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)


@needs_numba
def test_rbf_backends_agree(rng):
    x, y = rng.normal(size=(9, 4)), rng.normal(size=(5, 4))
    np.testing.assert_allclose(K.rbf_cross_numba(x, y, 0.7, 2.0), K.rbf_cross_numpy(x, y, 0.7, 2.0), rtol=1e-13)


def test_rk4_harmonic_oscillator_accuracy():
    # f'' + 16 f = 0, f(0) = 1, f'(0) = 0 -> cos(4x)
    out, fp_end, _ = K.rk4_batch_numpy(1.0, 0.0, 16.0, 0.0, np.zeros(2 * 1024 + 1), 1.0, np.array([0.0]), 1024, 128)
    x = np.linspace(0, 1, 9)
    np.testing.assert_allclose(out[0], np.cos(4 * x), atol=1e-10)
    assert fp_end[0] == pytest.approx(-4 * np.sin(4.0), abs=1e-9)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, QUVA_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from quva import _kernels; print(_kernels.backend_name())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
