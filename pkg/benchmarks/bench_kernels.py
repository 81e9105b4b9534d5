"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from mfcontest import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    R = np.zeros(4096)
    R[:2048] = 2.0
    y = np.linspace(0, 1, 20_000)
    z = np.linspace(0.01, 1.99, 2_000)
    S = np.concatenate([[0.0], np.cumsum(np.linspace(2, 0, 1024))])
    x0 = np.ones(20_000)
    lo, hi = np.zeros(20_000), np.full(20_000, 2.0)
    return [
        ("gn_eval n=4096, 2e4 points", lambda k: k.gn_eval(R, y)),
        ("gn_inverse n=4096, 2e3 points", lambda k: k.gn_inverse(R, z, 1e-12)),
        ("xi_trinomial n=1024", lambda k: k.xi_trinomial(S, 0.3, 0.4, 0.3)),
        ("exit_two_boundary 2e4 paths, dt=1e-3",
         lambda k: k.exit_two_boundary(x0, lo, hi, 0.0, 1.0, 1e-3,
                                       np.random.default_rng(0).bit_generator, 10 ** 7)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    compiled = kernels.compiled_backend()
    py = kernels.python_backend
    print(f"{'kernel':40s} {'numpy [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s}")
    for name, fn in cases():
        t_py = best_of(lambda: fn(py), args.repeat)
        if compiled is None:
            print(f"{name:40s} {t_py:11.4f} {'n/a':>13s} {'':>8s}")
            continue
        t_c = best_of(lambda: fn(compiled), args.repeat)
        print(f"{name:40s} {t_py:11.4f} {t_c:13.4f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
