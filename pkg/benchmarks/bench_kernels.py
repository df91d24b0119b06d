"""Compare the numba per-tick kernels against the vectorized numpy fallback.

Run: python3 benchmarks/bench_kernels.py [--ticks N] [--repeat R]

Times both implementations of the electrode/ADC kernel and the firmware
averaging chain on an identical workload, reports the best-of-R wall time
for each, and checks the outputs agree (the two paths may differ by one
count where a value lands exactly on a rounding tie).
"""

import argparse
import time

import numpy as np

from phtelem import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--ticks", type=int, default=1_800_000,
                        help="samples at 100 Hz (default: one 5-hour run)")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    noise = rng.normal(0.0, 0.6, args.ticks)
    seg_start = np.array([0.0, 1800.0, 5400.0, 9000.0])
    seg_ph = np.array([7.0, 10.0, 4.0, 7.0])
    electrode_args = (seg_start, seg_ph, args.ticks, 0.01, 7.0, 0.67,
                      0.0, 31.0, 0.155, noise, 1.0, 1024.0, 2048.0, 4095)

    # compile outside the timed region
    counts_nb = kernels._electrode_counts_loop(*electrode_args)
    counts_np = kernels._electrode_counts_numpy(*electrode_args)
    mismatch = int((counts_nb != counts_np).sum())
    assert np.abs(counts_nb - counts_np).max(initial=0) <= 1

    t_nb = best_of(lambda: kernels._electrode_counts_loop(*electrode_args), args.repeat)
    t_np = best_of(lambda: kernels._electrode_counts_numpy(*electrode_args), args.repeat)
    print(f"electrode_counts  {args.ticks:>9} ticks   "
          f"numba {t_nb * 1e3:8.1f} ms   numpy {t_np * 1e3:8.1f} ms   "
          f"speedup x{t_np / t_nb:.1f}   ties differing by 1 count: {mismatch}")

    raw = counts_nb
    fw_nb = kernels._firmware_chain_loop(raw, 10, 5)
    fw_np = kernels._firmware_chain_numpy(raw, 10, 5)
    assert np.array_equal(fw_nb, fw_np)

    t_nb = best_of(lambda: kernels._firmware_chain_loop(raw, 10, 5), args.repeat)
    t_np = best_of(lambda: kernels._firmware_chain_numpy(raw, 10, 5), args.repeat)
    print(f"firmware_chain    {args.ticks:>9} ticks   "
          f"numba {t_nb * 1e3:8.1f} ms   numpy {t_np * 1e3:8.1f} ms   "
          f"speedup x{t_np / t_nb:.1f}")


if __name__ == "__main__":
    main()
