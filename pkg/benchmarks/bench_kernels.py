"""Compiled vs numpy kernel timings, plus one end-to-end QFI evaluation per backend.

Usage: python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from phasediff import _kernels_py

try:
    from phasediff import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    n = 1200
    x = np.linspace(-20, 20, 3000)
    lam = np.sort(rng.random(n))[::-1] ** 8
    g2 = rng.random((n, n))
    g2 = g2 + g2.T
    d = 400
    rho = rng.normal(size=(d, d)) * 1e-2
    psi = rng.normal(size=(d, 2000))
    cells = 1500
    b0 = rng.random(cells) + 1.0
    b_re = rng.normal(size=(60, cells)) * 1e-3
    b_im = rng.normal(size=(60, cells)) * 1e-3
    counts = rng.integers(1, 100, cells).astype(float)
    return {
        "amplitudes (n=4000)": lambda m: m.displaced_squeezed_amplitudes(3.0, -2.0, 4000),
        "hermite table (300 x 3000)": lambda m: m.hermite_functions(x, 300),
        "qfi pair sum (1200^2)": lambda m: m.qfi_pair_sum(lam, g2, 1e-12),
        "band contraction (400 x 2000)": lambda m: m.harmonic_table(rho, np.zeros_like(rho), psi),
        "binned log-likelihood": lambda m: m.harmonic_loglik(counts, b0, b_re, b_im, 0.3),
    }


def end_to_end(pure: bool) -> float:
    env = dict(os.environ, PHASEDIFF_PURE_PYTHON="1" if pure else "0")
    code = ("import time; from phasediff.fock import ProbeSpec; from phasediff.sweep import optimize_beta; "
            "t = time.perf_counter(); optimize_beta(8.0, 0.05, verify=False); "
            "print(time.perf_counter() - t)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        t_cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:32s} {t_py:11.2f} {t_cy:12.2f} {t_py / t_cy:8.2f}")
    t_py, t_cy = end_to_end(True), end_to_end(False)
    print(f"{'optimize_beta(8, 0.05) [s]':32s} {t_py:11.2f} {t_cy:12.2f} {t_py / t_cy:8.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
