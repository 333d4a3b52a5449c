"""Time the numba kernels against their pure-numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each case is run once untimed (numba compiles on first call), then timed
``repeat`` times; the best time is reported.  Results from both backends are
compared before timing.
"""
import argparse
import time

import numpy as np

from ffspline import kernels
from ffspline.field import Space, field_create
from ffspline.linforms import cube_system
from ffspline.sampling import rng_for


def cases():
    rng = rng_for(0, 99)
    S2 = Space(field_create(2), 8)
    S3 = Space(field_create(3), 4)
    mask2 = rng.random(S2.size) < 0.5
    vals2 = rng.integers(0, 2, S2.size)
    mask3 = rng.random(S3.size) < 0.7
    vals3 = rng.integers(0, 3, S3.size)
    vs = rng.integers(0, S2.size, (1 << 16, 3))
    anchors = rng.integers(0, S2.size, 1 << 16)
    sysm = cube_system(2)
    g = np.exp(2j * np.pi * rng.random(S3.size))
    return {
        "cube_scan F_3^4 m=2": lambda b: kernels.cube_scan(mask3, vals3, 3, 2, S3.points(), S3, b),
        "almost_cube_eval F_2^8 m=3 (65536 draws)": lambda b: kernels.almost_cube_eval(
            mask2, vals2, 2, anchors, vs, S2, b),
        "pattern_count F_2^8 2-cube": lambda b: kernels.pattern_count(
            mask2, np.array(sysm.coefs), np.zeros(len(sysm), dtype=np.int64), S2, b),
        "gowers_power F_3^4 m=3": lambda b: kernels.gowers_power(g, 3, S3, b),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-12)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'case':45s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for name, run in cases().items():
        ref = run("numpy")
        got = run("numba")  # compiles
        if not same(ref, got):
            raise SystemExit(f"backends disagree on {name}")
        t_np = best_of(lambda: run("numpy"), args.repeat)
        t_nb = best_of(lambda: run("numba"), args.repeat)
        print(f"{name:45s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
