"""Time the solver kernels with numba and with the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each backend runs in its own interpreter because the switch is read at
import time (JCHD_DISABLE_NUMBA).
"""
import argparse
import json
import os
import subprocess
import sys
import time

CASES = {
    # name: (callable source, number of calls)
    "build_hamiltonian": (
        "k.build_hamiltonian(1.0, 0.01, 1.0, 0.02, 1.0, 0.3, 0.16, 0.2, 8)", 20000),
    "fixed_point_sf": (
        "k.solve_fixed_point(1.0, 0.0, 1.0, 0.0, 1.0, 0.3, 0.16, 8, 0.1, 1e-10, 10000, 0.5, True)",
        200),
    "fixed_point_plain": (
        "k.solve_fixed_point(1.0, 0.0, 1.0, 0.0, 1.0, 0.3, 0.2, 8, 0.1, 1e-10, 10000, 0.5, False)",
        20),
    "bisect_boundary": (
        "k.bisect_boundary(1.0, 0.0, 1.0, 0.0, 1.0, 0.3, 8, 0.0, 1.0, 1e-6, 60, 1e-6,"
        " 0.1, 1e-10, 10000, 0.5, True)", 5),
}


def _worker(repeat):
    from jchd import _kernels as k

    results = {"numba": k.USING_NUMBA}
    for name, (src, number) in CASES.items():
        eval(src)  # warm-up / compile
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            for _ in range(number):
                eval(src)
            best = min(best, (time.perf_counter() - t0) / number)
        results[name] = best
    print(json.dumps(results))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        _worker(args.repeat)
        return

    timings = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, JCHD_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(args.repeat)],
                             env=env, check=True, capture_output=True, text=True).stdout
        timings[label] = json.loads(out.strip().splitlines()[-1])
    if not timings["numba"]["numba"]:
        print("numba not importable: both columns use the numpy path")
    print(f"{'kernel':<20}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name in CASES:
        a, b = timings["numba"][name] * 1e3, timings["numpy"][name] * 1e3
        print(f"{name:<20}{a:>12.4f}{b:>12.4f}{b / a:>10.2f}")


if __name__ == "__main__":
    main()
