"""Compare the compiled and pure-numpy smoothing kernels.

    python benchmarks/bench_kernels.py [--sizes 250,500,1000,2000] [--repeat 5]

Prints the best-of-``repeat`` wall time per call for each backend and the
speed-up, after checking that both backends return the same numbers.
"""

import argparse
import timeit

import numpy as np

from fairiv import kernels


def workloads(n, rng):
    x = rng.uniform(-1, 1, (n, 1))
    t = rng.standard_normal((n, 2))
    h = 0.2
    return {
        "product_kernel": lambda: kernels.product_kernel(x, x, h),
        "loo_cv_score": lambda: kernels.loo_cv_score(x, t, h),
        "kernel_weight_matrix": lambda: kernels.kernel_weight_matrix(x, h),
    }


def run(sizes, repeat):
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is available")
    print(f"{'kernel':<22}{'n':>6}" + "".join(f"{b + ' (ms)':>16}" for b in backends)
          + (f"{'speed-up':>10}" if len(backends) > 1 else ""))
    for n in sizes:
        rng = np.random.default_rng(n)
        jobs = workloads(n, rng)
        for name, job in jobs.items():
            times, outputs = {}, {}
            for b in backends:
                previous = kernels.use_backend(b)
                try:
                    outputs[b] = job()
                    times[b] = min(timeit.repeat(job, number=1, repeat=repeat))
                finally:
                    kernels.use_backend(previous)
            if len(backends) > 1:
                a, c = outputs["python"], outputs["compiled"]
                if not np.allclose(a, c, rtol=1e-12, atol=1e-14):
                    raise AssertionError(f"backends disagree on {name} at n={n}")
            row = f"{name:<22}{n:>6}" + "".join(f"{1e3 * times[b]:>16.2f}" for b in backends)
            if len(backends) > 1:
                row += f"{times['python'] / times['compiled']:>9.1f}x"
            print(row)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="250,500,1000,2000")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    run([int(v) for v in args.sizes.split(",")], args.repeat)


if __name__ == "__main__":
    main()
