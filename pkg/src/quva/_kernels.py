"""Hot inner loops, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports and ``QUVA_DISABLE_NUMBA`` is not
set to a truthy value. Both implementations are always importable under the
``*_numba`` / ``*_numpy`` names so tests and benchmarks can compare them.
"""
from __future__ import annotations

import os

import numpy as np

_TRUTHY = {"1", "true", "yes", "on"}


def numba_disabled_by_env() -> bool:
    return os.environ.get("QUVA_DISABLE_NUMBA", "").strip().lower() in _TRUTHY


try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not numba_disabled_by_env()


# ---------------------------------------------------------------- gates


def apply_1q_numpy(amps, mat, target, n):
    psi = amps.reshape(1 << target, 2, 1 << (n - target - 1))
    return np.einsum("ij,ajb->aib", mat, psi).reshape(-1)


def apply_cx_numpy(amps, control, target, n):
    psi = amps.reshape((2,) * n).copy()
    sel = [slice(None)] * n
    sel[control] = 1
    sel = tuple(sel)
    axis = target - 1 if target > control else target
    psi[sel] = np.flip(psi[sel], axis=axis)
    return psi.reshape(-1)


# ---------------------------------------------------------------- RK4


def rk4_batch_numpy(kappa2, kappa1, kappa0, kappa_n, v_half, f0, fp0, n_steps, stride):
    """Integrate f'' = -(k1 f' + (k0 + V + kn f^2) f) / k2 on [0, 1].

    ``fp0`` is a vector of initial slopes integrated side by side.
    ``v_half`` holds V at x = k h / 2, k = 0..2 n_steps. Returns samples of f
    every ``stride`` steps (endpoint included), f'(1), and max |f| per slope.
    """
    h = 1.0 / n_steps
    fp0 = np.asarray(fp0, dtype=np.float64)
    f = np.full(fp0.shape, float(f0))
    g = fp0.copy()
    out = np.empty((fp0.shape[0], n_steps // stride + 1))
    out[:, 0] = f
    peak = np.abs(f)

    def acc(f, g, v):
        return -(kappa1 * g + (kappa0 + v + kappa_n * f * f) * f) / kappa2

    for i in range(n_steps):
        v0, vm, v1 = v_half[2 * i], v_half[2 * i + 1], v_half[2 * i + 2]
        k1f, k1g = g, acc(f, g, v0)
        k2f, k2g = g + 0.5 * h * k1g, acc(f + 0.5 * h * k1f, g + 0.5 * h * k1g, vm)
        k3f, k3g = g + 0.5 * h * k2g, acc(f + 0.5 * h * k2f, g + 0.5 * h * k2g, vm)
        k4f, k4g = g + h * k3g, acc(f + h * k3f, g + h * k3g, v1)
        f = f + h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
        g = g + h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        np.maximum(peak, np.abs(f), out=peak)
        if (i + 1) % stride == 0:
            out[:, (i + 1) // stride] = f
    return out, g, peak


# ---------------------------------------------------------------- RBF


def rbf_cross_numpy(x, y, length_scale, signal_var):
    sq = (x * x).sum(1)[:, None] + (y * y).sum(1)[None, :] - 2.0 * (x @ y.T)
    np.maximum(sq, 0.0, out=sq)
    return signal_var * np.exp(-0.5 * sq / (length_scale * length_scale))


if HAVE_NUMBA:

    @njit(cache=True)
    def apply_1q_numba(amps, mat, target, n):
        out = amps.copy()
        stride = 1 << (n - target - 1)
        for i in range(amps.shape[0]):
            if i & stride == 0:
                j = i | stride
                a0 = amps[i]
                a1 = amps[j]
                out[i] = mat[0, 0] * a0 + mat[0, 1] * a1
                out[j] = mat[1, 0] * a0 + mat[1, 1] * a1
        return out

    @njit(cache=True)
    def apply_cx_numba(amps, control, target, n):
        out = amps.copy()
        cbit = 1 << (n - control - 1)
        tbit = 1 << (n - target - 1)
        for i in range(amps.shape[0]):
            if i & cbit and not i & tbit:
                j = i | tbit
                out[i] = amps[j]
                out[j] = amps[i]
        return out

    @njit(cache=True)
    def _acc(f, g, v, kappa2, kappa1, kappa0, kappa_n):
        return -(kappa1 * g + (kappa0 + v + kappa_n * f * f) * f) / kappa2

    @njit(cache=True)
    def rk4_batch_numba(kappa2, kappa1, kappa0, kappa_n, v_half, f0, fp0, n_steps, stride):
        h = 1.0 / n_steps
        m = fp0.shape[0]
        out = np.empty((m, n_steps // stride + 1))
        g_end = np.empty(m)
        peak = np.empty(m)
        for b in range(m):
            f = f0
            g = fp0[b]
            out[b, 0] = f
            top = abs(f)
            for i in range(n_steps):
                v0 = v_half[2 * i]
                vm = v_half[2 * i + 1]
                v1 = v_half[2 * i + 2]
                k1f = g
                k1g = _acc(f, g, v0, kappa2, kappa1, kappa0, kappa_n)
                k2f = g + 0.5 * h * k1g
                k2g = _acc(f + 0.5 * h * k1f, g + 0.5 * h * k1g, vm, kappa2, kappa1, kappa0, kappa_n)
                k3f = g + 0.5 * h * k2g
                k3g = _acc(f + 0.5 * h * k2f, g + 0.5 * h * k2g, vm, kappa2, kappa1, kappa0, kappa_n)
                k4f = g + h * k3g
                k4g = _acc(f + h * k3f, g + h * k3g, v1, kappa2, kappa1, kappa0, kappa_n)
                f = f + h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
                g = g + h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
                if abs(f) > top:
                    top = abs(f)
                if (i + 1) % stride == 0:
                    out[b, (i + 1) // stride] = f
            g_end[b] = g
            peak[b] = top
        return out, g_end, peak

    @njit(cache=True)
    def rbf_cross_numba(x, y, length_scale, signal_var):
        # Inner loop runs over y rows for contiguous, vectorisable access.
        nx, ny, dim = x.shape[0], y.shape[0], x.shape[1]
        out = np.zeros((nx, ny))
        scale = -0.5 / (length_scale * length_scale)
        yt = np.ascontiguousarray(y.T)
        for i in range(nx):
            row = out[i]
            for k in range(dim):
                xik = x[i, k]
                yk = yt[k]
                for j in range(ny):
                    d = xik - yk[j]
                    row[j] += d * d
            for j in range(ny):
                row[j] = signal_var * np.exp(scale * row[j])
        return out


def _pick(name):
    if USE_NUMBA:
        return globals()[name + "_numba"]
    return globals()[name + "_numpy"]


def apply_1q(amps, mat, target, n):
    return _pick("apply_1q")(amps, mat, target, n)


def apply_cx(amps, control, target, n):
    return _pick("apply_cx")(amps, control, target, n)


def rk4_batch(kappa2, kappa1, kappa0, kappa_n, v_half, f0, fp0, n_steps, stride):
    fp0 = np.ascontiguousarray(fp0, dtype=np.float64)
    v_half = np.ascontiguousarray(v_half, dtype=np.float64)
    return _pick("rk4_batch")(
        float(kappa2), float(kappa1), float(kappa0), float(kappa_n),
        v_half, float(f0), fp0, int(n_steps), int(stride),
    )


def rbf_cross(x, y, length_scale, signal_var):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _pick("rbf_cross")(x, y, float(length_scale), float(signal_var))


def backend_name() -> str:
    return f"numba {numba.__version__}" if USE_NUMBA else "numpy"
