"""Benchmark the two Hermitian eigensolver backends.

Times the compiled Cython Jacobi kernel against the pure-Python fallback on
seeded random Hermitian matrices and checks that both reproduce the spectrum
of numpy's LAPACK reference. Run from the repository root:

    python3 benchmarks/bench_eig.py --sizes 8,16,32,64 --repeats 5
"""

import argparse
import time

import numpy as np

from irssec.numerics import _jacobi_py

try:
    from irssec.numerics import _jacobi_cy
except ImportError:
    _jacobi_cy = None


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


def bench_backend(kernel, mats, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for a in mats:
            kernel.jacobi_eigh(a)
        best = min(best, time.perf_counter() - t0)
    return best / len(mats)


def spectrum_error(kernel, mats):
    worst = 0.0
    for a in mats:
        w, u = kernel.jacobi_eigh(a)
        ref = np.linalg.eigvalsh(a)
        scale = max(np.max(np.abs(ref)), 1.0)
        worst = max(worst, np.max(np.abs(np.sort(w) - ref)) / scale)
        worst = max(worst, np.max(np.abs(u.conj().T @ u - np.eye(a.shape[0]))))
    return worst


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="8,16,32,64,128")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--matrices", type=int, default=4, help="matrices per size")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    rng = np.random.default_rng(args.seed)
    backends = [("python", _jacobi_py)]
    if _jacobi_cy is not None:
        backends.insert(0, ("compiled", _jacobi_cy))
    else:
        print("compiled extension not built; timing the fallback only")

    header = f"{'n':>5} " + "".join(f"{name + ' [ms]':>16}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for n in sizes:
        mats = [random_hermitian(rng, n) for _ in range(args.matrices)]
        times = []
        for name, kernel in backends:
            err = spectrum_error(kernel, mats)
            if err > 1e-9:
                raise SystemExit(f"{name} backend disagrees with LAPACK: {err:.3g}")
            times.append(bench_backend(kernel, mats, args.repeats))
        line = f"{n:>5} " + "".join(f"{t * 1e3:>16.3f}" for t in times)
        if len(times) == 2:
            line += f"{times[1] / times[0]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
