"""Compare the compiled and pure-Python simulation kernels.

    python benchmarks/bench_kernels.py [--trials N] [--repeat R]

Both backends must produce identical histograms; the script checks that
before reporting timings.
"""

import argparse
import time

from tieruns import _backend
from tieruns.simulation import SimulationCase, run_case

CASES = [(4, 4, 4, 4), (2,) * 11, (5,) * 14, (2, 4, 5, 3, 5, 3, 4, 5, 5, 5, 5, 4, 5, 3)]


def best_time(case, backend, repeat):
    best, hist = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        hist = run_case(case, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, hist


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = sorted(_backend.BACKENDS)
    print(f"{'case':<12}{'N':>5}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for counts in CASES:
        case = SimulationCase(counts, trials=args.trials, seed=1)
        times, hists = {}, {}
        for b in backends:
            times[b], hists[b] = best_time(case, b, args.repeat)
        if len(set(map(lambda h: h.counts.tobytes(), hists.values()))) != 1:
            raise SystemExit(f"backends disagree on {counts}")
        speed = (f"{times['python'] / times['compiled']:>9.1f}x"
                 if "compiled" in times else f"{'n/a':>10}")
        label = f"{max(counts)}x{len(counts)}" if len(set(counts)) == 1 else "unequal"
        print(f"{label:<12}{case.total_points:>5}"
              + "".join(f"{times[b]:>11.3f}s" for b in backends) + speed)


if __name__ == "__main__":
    main()
