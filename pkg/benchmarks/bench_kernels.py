"""Timing comparison of the compiled and pure-Python DP kernels.

Runs the three hot kernels (hard-DTW accumulation, soft-DTW forward,
soft-DTW backward) on square grids of growing size against both
backends and prints a table with the speedup. The pure backend is
imported directly, so this works regardless of which backend the
package selected at import time.

Usage: python benchmarks/bench_kernels.py [--sizes 32,64,128] [--repeats 5]
"""

import argparse
import time

import numpy as np

from warpalign._kernels import BACKEND, _reference

try:
    from warpalign._kernels import _core
except ImportError:
    _core = None

GAMMA = 0.1


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_size(n: int, repeats: int, rng: np.random.Generator):
    D = rng.uniform(0.1, 2.0, size=(n, n))
    rows = []
    for name, prepare in (
        ("dtw_accumulate", lambda mod: lambda: mod.dtw_accumulate(D)),
        ("softdtw_forward", lambda mod: lambda: mod.softdtw_forward(D, GAMMA)),
        ("softdtw_backward", lambda mod: _backward_closure(mod, D)),
    ):
        t_ref = _time(prepare(_reference), repeats)
        t_core = _time(prepare(_core), repeats) if _core is not None else None
        rows.append((name, n, t_ref, t_core))
    return rows


def _backward_closure(mod, D):
    R = mod.softdtw_forward(D, GAMMA)
    return lambda: mod.softdtw_backward(D, R, GAMMA)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="32,64,128",
                        help="comma-separated square grid sizes")
    parser.add_argument("--repeats", type=int, default=5,
                        help="repetitions per measurement (best is kept)")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]

    print(f"active package backend: {BACKEND}")
    if _core is None:
        print("compiled kernels unavailable; timing the pure backend only")
    print(f"{'kernel':<18} {'n':>5} {'python':>12} {'compiled':>12} {'speedup':>9}")
    rng = np.random.default_rng(0)
    for n in sizes:
        for name, size, t_ref, t_core in bench_size(n, args.repeats, rng):
            if t_core is None:
                print(f"{name:<18} {size:>5} {t_ref * 1e3:>10.3f}ms {'-':>12} {'-':>9}")
            else:
                print(f"{name:<18} {size:>5} {t_ref * 1e3:>10.3f}ms "
                      f"{t_core * 1e3:>10.3f}ms {t_ref / t_core:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
