"""Time the compiled kernels against the numpy fallback on chain-verification workloads.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from cantorfence import kernels
from cantorfence.torus_geom import SolidTorus, build_chain, verify_chain


def _workloads():
    parent = SolidTorus(np.zeros(3), np.array([0.0, 0.0, 1.0]), 1.0, 0.45)
    chain = build_chain(parent, 16)
    a, b = chain.core_pair(0, 1)
    u1, v1 = a.basis()
    u2, v2 = b.basis()
    link = chain.link(0)
    e1, e2 = u1, v1
    theta = np.linspace(0, 2 * np.pi, 4096)
    phi = theta[::-1].copy()
    return {
        "gauss_linking M=256": lambda impl: kernels.gauss_linking_circles(
            a.center, u1, v1, a.radius, b.center, u2, v2, b.radius, 256, impl=impl),
        "circle_pair_distances 4096": lambda impl: kernels.circle_pair_distances(
            a.center, u1, v1, a.radius, b.center, u2, v2, b.radius, theta, phi, impl=impl),
        "max_core_distance grid=64": lambda impl: kernels.max_core_distance_on_torus(
            parent.center, parent.axis, parent.major, link.center, e1, e2, link.axis,
            link.major, link.minor, 64, impl=impl),
    }, parent, chain


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    impls = kernels.implementations()
    work, parent, chain = _workloads()
    print(f"default backend: {kernels.BACKEND}")
    print(f"{'kernel':<30}" + "".join(f"{name:>14}" for name in impls) + f"{'speedup':>10}")
    for label, fn in work.items():
        times = {}
        for name, impl in impls.items():
            fn(impl)  # warm up
            number = 20
            times[name] = min(timeit.repeat(lambda: fn(impl), number=number, repeat=args.repeat)) / number
        row = f"{label:<30}" + "".join(f"{times[n] * 1e3:>12.3f}ms" for n in impls)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)
        ref = fn(impls["python"])
        for name, impl in impls.items():
            assert np.allclose(fn(impl), ref, rtol=1e-10, atol=1e-12), f"{name} disagrees on {label}"
    t = min(timeit.repeat(lambda: verify_chain(parent, chain), number=1, repeat=args.repeat))
    print(f"verify_chain q=16 end to end ({kernels.BACKEND}): {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
