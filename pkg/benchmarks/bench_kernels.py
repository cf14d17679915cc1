"""Time the compiled and pure-Python kernel backends on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from scalelab import kernels
from scalelab.density import gaussian
from scalelab.functionals import hartree_energy_box


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    pts = rng.normal(size=(200_000, 3))
    coeffs, alphas = np.array([0.6, 0.4]), np.array([1.0, 2.5])
    centers = np.array([[0.0, 0.0, 0.0], [0.4, -0.2, 0.1]])
    pa, pb = rng.normal(size=(3000, 3)), rng.normal(size=(3001, 3))
    qa, qb = rng.uniform(size=3000), rng.uniform(size=3001)
    density = gaussian(1.0, 1.0)

    cases = {
        "gaussian_mix_eval (2e5 points)": lambda: kernels.gaussian_mix_eval(pts, coeffs, alphas, centers),
        "coulomb_pair_sum (3000 x 3001)": lambda: kernels.coulomb_pair_sum(pa, qa, pb, qb),
        "6D Hartree oracle (16/24 nodes)": lambda: hartree_energy_box(density),
    }
    backends = kernels.available_backends()
    print(f"{'kernel':34s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    original = kernels.backend()
    try:
        for name, fn in cases.items():
            row = []
            for b in backends:
                kernels.use_backend(b)
                row.append(_best(fn, args.repeat))
            line = f"{name:34s}" + "".join(f"{t:11.4f}s" for t in row)
            if len(row) > 1:
                line += f"{row[backends.index('python')] / row[backends.index('cython')]:11.1f}x"
            print(line)
    finally:
        kernels.use_backend(original)


if __name__ == "__main__":
    main()
