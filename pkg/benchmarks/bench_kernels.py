"""Time the numba-compiled kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Compilation happens in a warm-up call and is reported separately.
"""

import argparse
import time

import numpy as np

from magnon import kernels


def _cases(rng):
    n = 4096
    phases = rng.random(n // 2) * 2 * np.pi
    amps = np.arange(1, n // 2 + 1, dtype=float) ** -1.0
    values = rng.standard_normal(n)
    moduli = np.abs(rng.standard_normal((2001, 101)))
    d0 = rng.standard_normal(512)
    e0 = np.append(-np.ones(511), 0.0)

    def tql(f):
        d, e, rows = d0.copy(), e0.copy(), np.eye(512)
        return f(d, e, rows, 30)

    def running_max(f):
        out = np.zeros((101, 101))
        f(out, moduli)

    return [
        ("synthesize_disorder", "N=4096", lambda f: f(phases, amps, n)),
        ("periodogram", "N=4096", lambda f: f(values)),
        ("bessel_table", "m<=400, 200 args", lambda f: f(400, np.linspace(0.0, 400.0, 200))),
        ("running_max_pairs", "2001 x 101", running_max),
        ("tql_inplace", "N=512", tql),
    ]


def _best(call, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        call()
        best = min(best, time.perf_counter() - start)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'compile':>9s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, size, case in _cases(rng):
        label = f"{name} ({size})"
        jit_f, np_f = kernels.VARIANTS[name]
        start = time.perf_counter()
        case(jit_f)
        compile_s = time.perf_counter() - start
        t_jit = _best(lambda: case(jit_f), args.repeat)
        t_np = _best(lambda: case(np_f), max(1, args.repeat // 2))
        print(f"{label:34s} {compile_s:9.3f} {t_jit:10.4f} {t_np:10.4f} {t_np / t_jit:8.1f}x")


if __name__ == "__main__":
    main()
