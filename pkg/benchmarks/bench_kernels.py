"""Compare the compiled and pure-numpy minor-enumeration kernels.

Usage: ``python3 benchmarks/bench_kernels.py [--dims 10,14,18] [--repeat 3]``
"""
import argparse
import time

import numpy as np

from sppm._backend import BACKEND, get_kernel
from sppm.exact import sppm_exact


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dims", default="10,14,18")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()
    backends = ["python"] + (["cython"] if BACKEND == "cython" else [])
    rng = np.random.default_rng(0)
    print(f"{'dim':>4} {'dtype':>8} " + " ".join(f"{b:>10}" for b in backends) + "  speedup  agree")
    for dim in (int(d) for d in args.dims.split(",")):
        for dtype in ("real", "complex"):
            A = rng.standard_normal((dim, dim))
            if dtype == "complex":
                A = A + 1j * rng.standard_normal((dim, dim))
            times, logs = {}, {}
            for b in backends:
                times[b] = best_time(lambda: sppm_exact(A, 2, threads=args.threads, backend=b), args.repeat)
                logs[b] = sppm_exact(A, 2, threads=args.threads, backend=b).log
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            agree = max(abs(v - logs["python"]) for v in logs.values())
            print(f"{dim:>4} {dtype:>8} " + " ".join(f"{times[b]:>9.4f}s" for b in backends)
                  + f"  {speed:>6.1f}x  {agree:.1e}")
    if BACKEND != "cython":
        print("compiled kernel not built; only the fallback was timed")
    kernel = get_kernel()
    print(f"active backend: {BACKEND} ({kernel.__module__})")


if __name__ == "__main__":
    main()
