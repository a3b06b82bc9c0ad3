"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run with:  python benchmarks/bench_kernels.py
(Each kernel is warmed up once so numba JIT compilation is not timed.)
"""

import time

import numpy as np

from ermlab import _accel


def _time(fn, *args, repeat=5):
    fn(*args)  # warm-up (JIT compile on the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def make_cases(rng):
    d = 80
    a = rng.standard_normal((d, d))
    sym = a @ a.T / d

    spd = sym + d * np.eye(d)
    b = rng.standard_normal(d)
    l = np.zeros_like(spd)
    assert _accel.IMPLS["numpy"]["cholesky_factor"](spd, l.copy()) == -1

    x = rng.standard_normal((20000, 8))
    means = rng.standard_normal((12, 8))

    lcho = np.linalg.cholesky(spd[:8, :8] / d + np.eye(8))
    resp = rng.random((20000, 3))
    resp /= resp.sum(axis=1, keepdims=True)

    trials, m, n, r = 3000, 50, 10, 6
    xs = rng.standard_normal((trials, m, n))
    ys = rng.standard_normal((trials, m))
    xts = rng.standard_normal((trials, n))
    yts = rng.standard_normal(trials)

    return [
        ("jacobi_evd 80x80",
         lambda impl: impl["jacobi_evd"](sym.copy(), np.eye(d), 1e-13, 60)),
        ("cholesky_factor 80x80",
         lambda impl: impl["cholesky_factor"](spd, np.zeros_like(spd))),
        ("forward+back solve",
         lambda impl: impl["back_solve"](l, impl["forward_solve"](l, b))
         if impl["cholesky_factor"](spd, l) == -1 else None),
        ("assign_nearest 20k x 12",
         lambda impl: impl["assign_nearest"](x, means)),
        ("mahalanobis_sq 20k x 8",
         lambda impl: impl["mahalanobis_sq"](x, lcho)),
        ("weighted_moments 20k x 8 x 3",
         lambda impl: impl["weighted_moments"](x, resp)),
        ("ols_pad_trials 3000 x (50x10), r=6",
         lambda impl: impl["ols_pad_trials"](xs, ys, xts, yts, r)),
        ("ridge_trials 3000 x (50x10)",
         lambda impl: impl["ridge_trials"](xs, ys, xts, yts, 1.0)),
    ]


def main():
    rng = np.random.default_rng(0)
    cases = make_cases(rng)
    backends = list(_accel.IMPLS)
    if "numba" not in backends:
        try:
            _accel.IMPLS["numba"] = _accel._build_numba_impls()
            backends = list(_accel.IMPLS)
        except ImportError:
            pass

    width = max(len(name) for name, _ in cases)
    header = f"{'kernel':<{width}}  " + "  ".join(f"{b:>12}" for b in backends)
    if len(backends) > 1:
        header += f"  {'speedup':>9}"
    print(f"active backend: {_accel.BACKEND}")
    print(header)
    print("-" * len(header))
    for name, runner in cases:
        times = [_time(runner, _accel.IMPLS[b]) for b in backends]
        row = f"{name:<{width}}  " + "  ".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) > 1 and times[1] > 0:
            row += f"  {times[0] / times[1]:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
