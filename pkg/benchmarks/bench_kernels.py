"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Reports the best wall time per case and the largest disagreement between backends.
"""

import argparse
import timeit

import numpy as np

from lipscope import _kernels_py

try:
    from lipscope import _kernels
except ImportError:
    _kernels = None


def symmetric_stack(m, p, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, p, p))
    return 0.5 * (A + np.swapaxes(A, 1, 2))


def lp_case(m, seed):
    rng = np.random.default_rng(seed)
    a = rng.exponential(size=m)
    h = np.sqrt(a) + 0.1 * rng.random(m)
    return a, h


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the numpy fallback is available")
    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["cython"] = _kernels

    print(f"{'case':34s} " + " ".join(f"{b:>12s}" for b in backends) + "   max |diff|")
    for m, p in [(10_000, 1), (10_000, 4), (1_000, 16), (50, 64), (10, 80)]:
        H = symmetric_stack(m, p, seed=p)
        outs = {b: mod.spectral_norms(H) for b, mod in backends.items()}
        times = {b: best_time(lambda mod=mod: mod.spectral_norms(H), args.repeat) for b, mod in backends.items()}
        diff = max(float(np.max(np.abs(o - outs["python"]))) for o in outs.values())
        print(f"{f'spectral_norms m={m} p={p}':34s} " + " ".join(f"{times[b]:12.4f}" for b in backends) + f"   {diff:.2e}")

    for m in (10_000, 100_000):
        a, h = lp_case(m, seed=m)
        order = np.lexsort((-h, a))
        hull = {b: mod.upper_hull(a[order], h[order]) for b, mod in backends.items()}
        times = {b: best_time(lambda mod=mod: mod.upper_hull(a[order], h[order]), args.repeat)
                 for b, mod in backends.items()}
        same = all(np.array_equal(v, hull["python"]) for v in hull.values())
        print(f"{f'upper_hull m={m}':34s} " + " ".join(f"{times[b]:12.4f}" for b in backends)
              + f"   {'identical' if same else 'DIFFER'}")

        idx = order[hull["python"]]
        slope = np.diff(h[idx]) / np.diff(a[idx])
        c1s = np.concatenate([[0.0], np.clip(slope, 0, None)])
        c0s = np.concatenate([[h.max()], h[idx][:-1] - c1s[1:] * a[idx][:-1]])
        picks = {b: mod.lp_best_vertex(a, h, c0s, c1s) for b, mod in backends.items()}
        times = {b: best_time(lambda mod=mod: mod.lp_best_vertex(a, h, c0s, c1s), args.repeat)
                 for b, mod in backends.items()}
        same = len(set(picks.values())) == 1
        print(f"{f'lp_best_vertex m={m} k={len(c0s)}':34s} " + " ".join(f"{times[b]:12.4f}" for b in backends)
              + f"   {'identical' if same else 'DIFFER'}")


if __name__ == "__main__":
    main()
