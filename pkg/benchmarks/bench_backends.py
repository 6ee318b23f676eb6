"""Throughput comparison of the two pairwise-reduction backends.

Times ``bag_means`` on a symmetric Gram workload and on a rectangular
cross block, for both the compiled extension and the NumPy fallback.
Reports the best-of-``--repeats`` wall time and million point-pair
evaluations per second.

Usage::

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --bags 96 --bag-size 192 --family laplacian
"""

import argparse
import time

import numpy as np

from distreg import _pairwise_np
from distreg.embedding import Bag, stack_bags

try:
    from distreg import _pairwise_cy
except ImportError:
    _pairwise_cy = None

FAMILY_CODE = {"gaussian": _pairwise_np.GAUSSIAN, "laplacian": _pairwise_np.LAPLACIAN}


def _workload(rng, bags, bag_size, dim):
    pts, starts = stack_bags(
        Bag(rng.standard_normal((bag_size, dim))) for _ in range(bags)
    )
    return pts, starts


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bags", type=int, default=64)
    ap.add_argument("--bag-size", type=int, default=128)
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--family", choices=sorted(FAMILY_CODE), default="gaussian")
    ap.add_argument("--bandwidth", type=float, default=1.0)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    pts_a, starts_a = _workload(rng, args.bags, args.bag_size, args.dim)
    pts_b, starts_b = _workload(rng, max(args.bags // 2, 1), args.bag_size, args.dim)
    code = FAMILY_CODE[args.family]

    sym_pairs = (args.bags * args.bag_size) ** 2
    cross_pairs = pts_a.shape[0] * pts_b.shape[0]
    tasks = [
        ("symmetric gram", sym_pairs,
         lambda impl: impl.bag_means(pts_a, starts_a, pts_a, starts_a,
                                     code, args.bandwidth, symmetric=True)),
        ("cross block", cross_pairs,
         lambda impl: impl.bag_means(pts_a, starts_a, pts_b, starts_b,
                                     code, args.bandwidth)),
    ]
    impls = [("numpy", _pairwise_np)]
    if _pairwise_cy is not None:
        impls.append(("cython", _pairwise_cy))
    else:
        print("compiled extension not available; timing the fallback only")

    print(
        f"{args.bags} bags x {args.bag_size} points, dim={args.dim}, "
        f"family={args.family}, best of {args.repeats}"
    )
    print(f"{'task':<16} {'backend':<8} {'seconds':>10} {'Mpairs/s':>10} {'speedup':>8}")
    for task_name, pairs, run in tasks:
        base_time = None
        for impl_name, impl in impls:
            best = _time(lambda: run(impl), args.repeats)
            if base_time is None:
                base_time = best
            print(
                f"{task_name:<16} {impl_name:<8} {best:>10.4f} "
                f"{pairs / best / 1e6:>10.1f} {base_time / best:>7.2f}x"
            )

    if len(impls) == 2:
        ref = impls[0][1].bag_means(pts_a, starts_a, pts_b, starts_b, code, args.bandwidth)
        alt = impls[1][1].bag_means(pts_a, starts_a, pts_b, starts_b, code, args.bandwidth)
        gap = float(np.max(np.abs(ref - alt)))
        print(f"max cross-backend disagreement: {gap:.3e}")


if __name__ == "__main__":
    main()
