"""Compare the compiled assembly core against the pure-numpy fallback.

Usage:  python benchmarks/bench_backends.py [N ...]

Times the three hot reductions (far-pair matrix accumulation, the
difference-form energy, the commutator form) at the given grid sizes and
checks the backends agree.
"""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from frachs import backend
from frachs.forms import _far_g2, _far_tensors
from frachs.grid import RadialGrid
from frachs.kernel import get_kernel


def bench(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(sizes):
    pairs = backend.both_backends()
    names = [name for name, _ in pairs]
    print(f"available backends: {', '.join(names)}")
    n, alpha = 3.0, 1.0
    ker = get_kernel(n, alpha)
    for N in sizes:
        grid = RadialGrid(n=n, r_min=1e-6, R=1.0, N=N)
        h = grid.h
        M = N - 1
        nu = 0.5 * (n - alpha)
        cAA, cBB, cX = _far_tensors(ker, nu, h, M)
        f = np.ascontiguousarray(np.exp(nu * grid.log_nodes[:-1]))
        t, g2 = _far_g2(ker, nu, h, M, 5)
        g2 = np.ascontiguousarray(g2)
        rng = np.random.default_rng(0)
        U = rng.random((M, 5))
        V = rng.random((M, 5))
        E = rng.random((M, 5))
        print(f"\nN = {N}")
        results = {}
        for name, impl in pairs:
            tm, A = bench(lambda: impl.accumulate_far_pairs(np.zeros((M + 1, M + 1)), f, cAA, cBB, cX, h * h))
            te, ev = bench(impl.far_pair_energy, U, V, f, g2, h * h)
            tc, cv = bench(impl.far_pair_commutator, E, U, V, f, g2, h * h)
            results[name] = (np.asarray(A), ev, cv)
            print(f"  {name:8s}  matrix {tm*1e3:8.1f} ms   energy {te*1e3:8.1f} ms   commutator {tc*1e3:8.1f} ms")
        if len(results) == 2:
            a, b = (results[k] for k in names)
            dm = np.max(np.abs(a[0] - b[0])) / max(np.max(np.abs(a[0])), 1e-300)
            print(f"  agreement: matrix {dm:.2e}, energy {abs(a[1]-b[1])/abs(a[1]):.2e}, "
                  f"commutator {abs(a[2]-b[2])/max(abs(a[2]),1e-300):.2e}")


if __name__ == "__main__":
    sizes = [int(x) for x in sys.argv[1:]] or [200, 400, 800]
    main(sizes)
