"""Hot numeric kernels for the long-run simulation.

Two implementations of each kernel exist: a numba @njit per-tick loop that
mirrors the hardware, and a vectorized pure-numpy path (segment-wise closed
form of the first-order lag). Set PHTELEM_NO_NUMBA=1 to force the numpy path;
it is also used automatically when numba is unavailable.

benchmarks/bench_kernels.py compares the two.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def use_numba() -> bool:
    return HAVE_NUMBA and os.environ.get("PHTELEM_NO_NUMBA", "") not in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# Electrode + ADC: ticks -> raw counts
# ---------------------------------------------------------------------------


@njit(cache=True)
def _electrode_counts_loop(
    seg_start_s,
    seg_ph,
    n_ticks,
    dt_s,
    ph0,
    tau_s,
    e0_mv,
    sens_mv_per_ph,
    drift_mv_per_min,
    noise_mv,
    gain,
    bias_mv,
    fullscale_mv,
    levels,
):
    counts = np.empty(n_ticks, dtype=np.int64)
    alpha = 1.0 - math.exp(-dt_s / tau_s)
    ph = ph0
    n_seg = seg_start_s.shape[0]
    seg = 0
    for i in range(n_ticks):
        t = (i + 1) * dt_s
        while seg + 1 < n_seg and t >= seg_start_s[seg + 1]:
            seg += 1
        target = seg_ph[seg]
        ph = ph + (target - ph) * alpha
        e = e0_mv + sens_mv_per_ph * (7.0 - ph) + drift_mv_per_min * (t / 60.0)
        if noise_mv.shape[0] > 0:
            e += noise_mv[i]
        v = e * gain + bias_mv
        if v < 0.0:
            v = 0.0
        elif v > fullscale_mv:
            v = fullscale_mv
        counts[i] = int(math.floor(v / fullscale_mv * levels + 0.5))
    return counts


def _electrode_counts_numpy(
    seg_start_s,
    seg_ph,
    n_ticks,
    dt_s,
    ph0,
    tau_s,
    e0_mv,
    sens_mv_per_ph,
    drift_mv_per_min,
    noise_mv,
    gain,
    bias_mv,
    fullscale_mv,
    levels,
):
    t = (np.arange(n_ticks, dtype=np.float64) + 1.0) * dt_s
    ph = np.empty(n_ticks, dtype=np.float64)
    # closed-form relaxation within each constant-pH segment
    seg_idx = np.searchsorted(seg_start_s, t, side="right") - 1
    ph_entry = ph0
    t_entry = 0.0
    for s in range(len(seg_start_s)):
        mask = seg_idx == s
        if not mask.any():
            continue
        target = seg_ph[s]
        ts = t[mask]
        ph[mask] = target + (ph_entry - target) * np.exp(-(ts - t_entry) / tau_s)
        ph_entry = ph[mask][-1]
        t_entry = ts[-1]
    e = e0_mv + sens_mv_per_ph * (7.0 - ph) + drift_mv_per_min * (t / 60.0)
    if noise_mv.shape[0]:
        e = e + noise_mv
    v = np.clip(e * gain + bias_mv, 0.0, fullscale_mv)
    return np.floor(v / fullscale_mv * levels + 0.5).astype(np.int64)


def electrode_counts(
    seg_start_s: np.ndarray,
    seg_ph: np.ndarray,
    n_ticks: int,
    dt_s: float,
    ph0: float,
    tau_s: float,
    e0_mv: float,
    sens_mv_per_ph: float,
    drift_mv_per_min: float,
    noise_mv: np.ndarray,
    gain: float,
    bias_mv: float,
    fullscale_mv: float,
    levels: int,
) -> np.ndarray:
    """Raw pH-channel ADC counts for n_ticks samples at dt_s spacing."""
    args = (
        np.ascontiguousarray(seg_start_s, dtype=np.float64),
        np.ascontiguousarray(seg_ph, dtype=np.float64),
        int(n_ticks),
        float(dt_s),
        float(ph0),
        float(tau_s),
        float(e0_mv),
        float(sens_mv_per_ph),
        float(drift_mv_per_min),
        np.ascontiguousarray(noise_mv, dtype=np.float64),
        float(gain),
        float(bias_mv),
        float(fullscale_mv),
        int(levels),
    )
    if use_numba():
        return _electrode_counts_loop(*args)
    return _electrode_counts_numpy(*args)


# ---------------------------------------------------------------------------
# Firmware chain: raw counts -> 10 Hz frame values (integer, round-half-up)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _firmware_chain_loop(raw, avg_n, ma_window):
    n_frames = raw.shape[0] // avg_n
    out = np.empty(n_frames, dtype=np.int64)
    block_avgs = np.empty(n_frames, dtype=np.int64)
    acc = 0
    k = 0
    for i in range(n_frames * avg_n):
        acc += raw[i]
        if (i + 1) % avg_n == 0:
            avg = (2 * acc + avg_n) // (2 * avg_n)
            block_avgs[k] = avg
            m = ma_window if k + 1 >= ma_window else k + 1
            s = 0
            for j in range(k - m + 1, k + 1):
                s += block_avgs[j]
            out[k] = (2 * s + m) // (2 * m)
            acc = 0
            k += 1
    return out


def _firmware_chain_numpy(raw, avg_n, ma_window):
    n_frames = raw.shape[0] // avg_n
    blocks = raw[: n_frames * avg_n].reshape(n_frames, avg_n)
    sums = blocks.sum(axis=1)
    block_avgs = (2 * sums + avg_n) // (2 * avg_n)
    csum = np.concatenate(([0], np.cumsum(block_avgs)))
    k = np.arange(n_frames)
    m = np.minimum(k + 1, ma_window)
    win_sum = csum[k + 1] - csum[k + 1 - m]
    return (2 * win_sum + m) // (2 * m)


def firmware_chain(raw: np.ndarray, avg_n: int, ma_window: int) -> np.ndarray:
    """Block-average then moving-average a raw count series; one value per block."""
    raw = np.ascontiguousarray(raw, dtype=np.int64)
    if use_numba():
        return _firmware_chain_loop(raw, int(avg_n), int(ma_window))
    return _firmware_chain_numpy(raw, int(avg_n), int(ma_window))
