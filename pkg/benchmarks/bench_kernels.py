"""Compiled kernels against their pure-numpy bodies.

Run with ``python3 benchmarks/bench_kernels.py``.  Kernel timings call the
numba dispatcher and its ``py_func`` side by side in one process.  A
``py_func`` body still calls compiled helpers (``admm_chunk`` and
``golden_max`` do), so the end-to-end solve, timed in two subprocesses with
and without ``HALS_DISABLE_NUMBA=1``, is the clean comparison.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from hals import kernels
from hals._accel import HAS_NUMBA
from hals.solver import eliminate_diffuse

SOLVE_SNIPPET = """
import time
import numpy as np
from hals.channel import ChannelConfig, sample_hsd
from hals.ofdm import observe, qpsk_pilots, sigma_for_snr
from hals.solver import HalsOptions, default_hyperparams, solve_hals
t = sample_hsd(ChannelConfig(N={N}, L={L}, m=4, seed=1))
sigma = sigma_for_snr(t.h, 10.0)
obs = observe(t.h, qpsk_pilots({N}, 2), sigma, 3)
tau, lam = default_hyperparams(sigma, {N}, {L}, np.linalg.norm(t.diffuse.c_d))
opts = HalsOptions(tau=tau, lam=lam)
solve_hals(obs, t.D, opts)  # warm-up / compile
best = min(
    (lambda t0: (solve_hals(obs, t.D, opts), time.perf_counter() - t0)[1])(time.perf_counter())
    for _ in range({reps})
)
print(best)
"""


def _best(fn, reps):
    return min(timeit.repeat(fn, number=1, repeat=reps))


def kernel_table(N, reps):
    rng = np.random.default_rng(0)
    L = max(1, 4 * N // 5)
    D = np.exp(2j * np.pi * np.outer(np.arange(N), np.arange(L) / L)) / np.sqrt(N)
    W = eliminate_diffuse(D, 0.5)
    w, V = np.linalg.eigh(W)
    V = np.ascontiguousarray(V)
    Wr = W @ (rng.standard_normal(N) + 1j * rng.standard_normal(N))
    z = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    f = rng.uniform(0, 1, 512)
    M = rng.standard_normal((N + 1, N + 1)) + 0j

    def admm(fn):
        x = np.zeros(N, complex)
        u = np.zeros(N, complex)
        Z = np.zeros((N + 1, N + 1), complex)
        Lam = np.zeros_like(Z)
        return lambda: fn(Wr, V, w, 1.0, 2.0, x, u, 0.0, Z, Lam, 50)

    cases = [
        ("admm_chunk x50", "admm_chunk", admm),
        ("trig_poly 512", "trig_poly", lambda k: (lambda: k(z, f))),
        ("golden_max 60", "golden_max", lambda k: (lambda: k(z, 0.1, 0.12, 60))),
        ("toeplitz_diag_sums", "toeplitz_diag_sums", lambda k: (lambda: k(M))),
    ]
    rows = []
    for label, name, make in cases:
        disp = getattr(kernels, name)
        fast = make(disp)
        fast()  # compile
        t_fast = _best(fast, reps)
        t_slow = _best(make(disp.py_func), reps)
        rows.append((label, t_fast, t_slow))
    return rows


def solve_times(N, reps):
    out = {}
    for label, env in (("numba", {}), ("numpy", {"HALS_DISABLE_NUMBA": "1"})):
        code = SOLVE_SNIPPET.format(N=N, L=4 * N // 5, reps=reps)
        res = subprocess.run([sys.executable, "-c", code], env={**os.environ, **env},
                             capture_output=True, text=True, check=True)
        out[label] = float(res.stdout.strip().splitlines()[-1])
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=50)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--skip-solve", action="store_true")
    args = p.parse_args(argv)

    if not HAS_NUMBA:
        print("numba unavailable or disabled; both columns run the numpy path")
    print(f"{'kernel':<22}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for label, a, b in kernel_table(args.N, args.reps):
        print(f"{label:<22}{1e3 * a:>12.3f}{1e3 * b:>12.3f}{b / a:>10.1f}")
    if not args.skip_solve:
        t = solve_times(args.N, max(1, args.reps // 2))
        print(f"{'solve_hals N=' + str(args.N):<22}{1e3 * t['numba']:>12.1f}{1e3 * t['numpy']:>12.1f}"
              f"{t['numpy'] / t['numba']:>10.1f}")


if __name__ == "__main__":
    main()
