"""Time each hot kernel under numba and pure numpy.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The numba variants are warmed up once so compile time is excluded. Results
are also checked for agreement before timing.
"""
import argparse
import timeit

import numpy as np

from quva import _kernels as K


def cases(rng):
    n = 10
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps /= np.linalg.norm(amps)
    ry = np.array([[np.cos(0.3), -np.sin(0.3)], [np.sin(0.3), np.cos(0.3)]], dtype=np.complex128)
    steps = 1 << 12
    v_half = 40.0 * (4 / 11) * (1 - 2 * np.linspace(0, 1, 2 * steps + 1)) ** 2
    fp0 = np.linspace(-20, 20, 64)
    x = rng.uniform(-1, 1, size=(1000, 12))
    y = rng.uniform(-1, 1, size=(1200, 12))
    return {
        "apply_1q (10 qubits)": ("apply_1q", (amps, ry, 4, n)),
        "apply_cx (10 qubits)": ("apply_cx", (amps, 2, 7, n)),
        "rk4_batch (4096 steps x 64 slopes)": ("rk4_batch", (1.0, 1.0, 40.0, 500.0, v_half, 0.54, fp0, steps, steps // 8)),
        "rbf_cross (1000 x 1200, dim 12)": ("rbf_cross", (x, y, 1.0, 1.0)),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(u, v) for u, v in zip(a, b))
    return np.allclose(a, b, rtol=1e-10, atol=1e-12)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for label, (name, call_args) in cases(rng).items():
        fast = getattr(K, f"{name}_numba")
        slow = getattr(K, f"{name}_numpy")
        if not same(fast(*call_args), slow(*call_args)):
            raise SystemExit(f"{name}: backends disagree")
        t_np = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        print(f"{label:40s} {1e3 * t_np:10.3f} {1e3 * t_nb:10.3f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
