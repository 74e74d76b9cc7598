"""Compare the numba and pure-numpy versions of the float kernels.

    python benchmarks/bench_kernels.py [--repeat 5] [--quick]

Each kernel is called once untimed (JIT compile), then timed with the best of
``--repeat`` runs. Results of both backends are checked for agreement.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from cohesive import _kernels as K


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(quick: bool):
    rng = np.random.default_rng(0)
    n_vars = 2_000 if quick else 20_000
    for n in (8, 64, 512):
        p = rng.random(n) + 0.1
        p /= p.sum()
        H = rng.random(n) * 4
        H *= 2.0 / (p @ H)
        L = 0.2 * H
        xis = rng.normal(size=(n_vars // max(1, n // 8), n))
        yield f"band_rho_batch n={n} rows={len(xis)}", "band_rho_batch", (p, L, H, xis)

    for n in (12, 16, 18) if not quick else (10, 12):
        w = rng.integers(1, 1000, size=n).astype(np.int64)
        yield f"band_extreme_pairs n={n}", "band_extreme_pairs", (w, int(w.sum() // 3), 0)

    for k in (1, 2, 3):
        C = rng.normal(size=(12, k))
        d = rng.normal(size=12)
        widths = rng.random(k) * 3 + 0.5
        yield f"minmax_affine_grid k={k}", "minmax_affine_grid", (C, d, widths, 16, 40)


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), atol=1e-9)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller inputs")
    args = ap.parse_args()

    if not K.HAVE_NUMBA:
        print("numba unavailable (or COHESIVE_NUMBA=0); timing the numpy path only")
    print(f"{'kernel':44s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}  agree")
    for label, name, fn_args in cases(args.quick):
        np_fn = getattr(K, f"numpy_{name}")
        t_np = best_of(lambda: np_fn(*fn_args), args.repeat)
        if K.HAVE_NUMBA:
            nb_fn = getattr(K, f"numba_{name}")
            ref = np_fn(*fn_args)
            out = nb_fn(*fn_args)  # compile
            t_nb = best_of(lambda: nb_fn(*fn_args), args.repeat)
            print(f"{label:44s} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:7.1f}x  "
                  f"{'yes' if same(ref, out) else 'NO'}")
        else:
            print(f"{label:44s} {1e3 * t_np:11.3f} {'-':>11s} {'-':>8s}  -")


if __name__ == "__main__":
    main()
