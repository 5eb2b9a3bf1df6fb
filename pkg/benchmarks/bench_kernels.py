"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]
"""

import argparse
import time

import numpy as np

from rfbm.kernels import available_backends


def _cases(scale, rng):
    n = int(200_000 * scale)
    x = rng.standard_normal((8, n))
    y = np.cumsum(0.1 * rng.standard_normal((8, n)) - 0.01, axis=1)
    steps = 0.1 * rng.standard_normal(int(2_000_000 * scale)) - 0.01
    q = np.abs(np.cumsum(rng.standard_normal(n)))
    f = np.full(n, np.median(q))
    L, J = int(400 * scale) or 1, 200
    b1 = np.cumsum(rng.standard_normal((16, L + 1)), axis=1)
    b2 = np.cumsum(rng.standard_normal((16, L + 2 * J + 1)), axis=1)
    w = 1.0 / (3.0 + 0.01 * np.arange(-J, J + 1))
    return {
        "kahan_cumsum": lambda k: k.kahan_cumsum(x),
        "lindley": lambda k: k.lindley(0.0, steps),
        "window_sup": lambda k: k.window_sup(y, 500),
        "crossings": lambda k: k.crossings(q, f),
        "field_grid_max": lambda k: k.field_grid_max(b1, b2, w, J, 1, L, 1, J),
    }


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args(argv)
    backends = available_backends()
    cases = _cases(args.scale, np.random.default_rng(0))
    names = list(backends)
    print(f"{'kernel':<16}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}")
    for case, fn in cases.items():
        times = {n: best_time(lambda: fn(backends[n]), args.repeat) for n in names}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{case:<16}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in names)
              + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
