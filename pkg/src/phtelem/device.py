"""Physics model of the glass electrode, analog front-end and 12-bit ADC.

Everything here is deterministic on a virtual clock: a fixed seed reproduces
an identical potential trace bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class DeviceError(Exception):
    """Base error for the device model."""


class ElectrodeNotReadyError(DeviceError):
    """Electrode used before the membrane is hydrated."""


@dataclass(frozen=True)
class ElectrodeParams:
    """Lumped electrical model of the miniaturized glass electrode."""

    e0_mv: float = 0.0
    sensitivity_mv_per_ph: float = 31.0
    drift_mv_per_min: float = 0.0
    tau_s: float = 0.67
    noise_sigma_mv: float = 0.6
    source_impedance_gohm: float = 5.1
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.sensitivity_mv_per_ph <= 0:
            raise ValueError("sensitivity_mv_per_ph must be > 0")
        if self.tau_s <= 0:
            raise ValueError("tau_s must be > 0")
        if self.noise_sigma_mv < 0:
            raise ValueError("noise_sigma_mv must be >= 0")
        if self.source_impedance_gohm <= 0:
            raise ValueError("source_impedance_gohm must be > 0")


# Default bias puts pH 7 (E = e0 = 0 mV) at mid-scale: round(1024/2048*4095) = 2048.
DEFAULT_BIAS_MV = 1024.0


@dataclass(frozen=True)
class AfeParams:
    """JFET buffer + ADC front-end parameters."""

    c_gs_pf: float = 2.0
    c_gd_pf: float = 2.0
    buffer_gain: float = 1.0
    bias_offset_mv: float = DEFAULT_BIAS_MV
    adc_fullscale_mv: float = 2048.0
    adc_bits: int = 12

    def __post_init__(self) -> None:
        if self.c_gs_pf + self.c_gd_pf <= 0:
            raise ValueError("c_gs_pf + c_gd_pf must be > 0")
        if not (0 < self.buffer_gain <= 1):
            raise ValueError("buffer_gain must be in (0, 1]")
        if self.adc_bits != 12:
            raise ValueError("adc_bits must be 12")
        if self.adc_fullscale_mv <= 0:
            raise ValueError("adc_fullscale_mv must be > 0")

    @property
    def c_iss_pf(self) -> float:
        return self.c_gs_pf + self.c_gd_pf

    @property
    def adc_levels(self) -> int:
        return (1 << self.adc_bits) - 1


@dataclass(frozen=True)
class BathSchedule:
    """Piecewise-constant pH exposure program plus bath temperature."""

    segments: tuple[tuple[float, float], ...] = ((0.0, 7.0),)
    temp_c: float = 25.0

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("schedule needs at least one segment")
        starts = [s for s, _ in self.segments]
        if starts != sorted(set(starts)):
            raise ValueError("segment start times must be strictly increasing")
        for _, ph in self.segments:
            if not (0.0 <= ph <= 14.0):
                raise ValueError("pH must be within [0, 14]")

    def ph_at(self, t_s: float) -> float:
        ph = self.segments[0][1]
        for start, value in self.segments:
            if t_s >= start:
                ph = value
            else:
                break
        return ph


@dataclass
class ElectrodeState:
    """Mutable electrode state advanced on the virtual clock."""

    t_s: float = 0.0
    ph_surface: float = 7.0
    hydrated: bool = True


def input_impedance(afe: AfeParams, freq_hz: float) -> float:
    """Buffer input impedance in GOhm at a given frequency (capacitive 1/f law)."""
    if freq_hz <= 0:
        raise ValueError("frequency must be > 0 (impedance unbounded at DC)")
    c_iss_f = afe.c_iss_pf * 1e-12
    z_ohm = 1.0 / (TWO_PI * freq_hz * c_iss_f)
    return z_ohm / 1e9


def potential_noise_mv(params: ElectrodeParams, t_s: float) -> float:
    """Deterministic Gaussian noise sample for (seed, t): a pure function."""
    if params.noise_sigma_mv == 0.0:
        return 0.0
    t_ns = int(round(t_s * 1e9))
    rng = np.random.default_rng([params.rng_seed, t_ns])
    return float(rng.normal(0.0, params.noise_sigma_mv))


def electrode_potential(params: ElectrodeParams, state: ElectrodeState) -> float:
    """Electrode potential in mV: Nernst-like slope + linear drift + noise."""
    if not state.hydrated:
        raise ElectrodeNotReadyError("membrane not hydrated; soak the electrode first")
    t_min = state.t_s / 60.0
    e = (
        params.e0_mv
        + params.sensitivity_mv_per_ph * (7.0 - state.ph_surface)
        + params.drift_mv_per_min * t_min
    )
    return e + potential_noise_mv(params, state.t_s)


def step(
    state: ElectrodeState,
    schedule: BathSchedule,
    params: ElectrodeParams,
    dt_s: float,
) -> ElectrodeState:
    """Advance the virtual clock by dt and relax ph_surface toward the bath pH."""
    if dt_s <= 0:
        raise ValueError("dt_s must be > 0")
    t_next = state.t_s + dt_s
    target = schedule.ph_at(t_next)
    alpha = 1.0 - math.exp(-dt_s / params.tau_s)
    state.ph_surface = state.ph_surface + (target - state.ph_surface) * alpha
    state.t_s = t_next
    return state


TEMP_V25_MV = 1050.0
TEMP_K_MV_PER_C = 5.19


def temp_sensor_mv(
    temp_c: float, v25_mv: float = TEMP_V25_MV, k_mv_per_c: float = TEMP_K_MV_PER_C
) -> float:
    """Linear analog temperature sensor output in mV."""
    if not (-10.0 <= temp_c <= 60.0):
        raise ValueError("temperature out of sensor range [-10, 60] degC")
    return v25_mv - k_mv_per_c * (temp_c - 25.0)


def temp_from_mv(
    v_mv: float, v25_mv: float = TEMP_V25_MV, k_mv_per_c: float = TEMP_K_MV_PER_C
) -> float:
    """Inverse of temp_sensor_mv."""
    return 25.0 + (v25_mv - v_mv) / k_mv_per_c


def adc_quantize(v_mv: float, afe: AfeParams) -> int:
    """Quantize a voltage to raw counts, round-half-up, clamped to the rails."""
    counts, _ = adc_quantize_ex(v_mv, afe)
    return counts


def adc_quantize_ex(v_mv: float, afe: AfeParams) -> tuple[int, bool]:
    """adc_quantize plus a saturation flag (clamping is silent otherwise)."""
    v = v_mv * afe.buffer_gain + afe.bias_offset_mv
    saturated = v < 0.0 or v > afe.adc_fullscale_mv
    v = min(max(v, 0.0), afe.adc_fullscale_mv)
    counts = math.floor(v / afe.adc_fullscale_mv * afe.adc_levels + 0.5)
    return counts, saturated


def adc_quantize_sensor(v_mv: float, afe: AfeParams) -> int:
    """Quantize the temperature channel (no buffer gain or bias applied)."""
    v = min(max(v_mv, 0.0), afe.adc_fullscale_mv)
    return math.floor(v / afe.adc_fullscale_mv * afe.adc_levels + 0.5)


def counts_to_mv(counts: float, afe: AfeParams) -> float:
    """Inverse ADC mapping back to electrode millivolts (pH channel)."""
    return (counts / afe.adc_levels * afe.adc_fullscale_mv - afe.bias_offset_mv) / afe.buffer_gain


def counts_to_sensor_mv(counts: float, afe: AfeParams) -> float:
    """Inverse ADC mapping for the unbuffered temperature channel."""
    return counts / afe.adc_levels * afe.adc_fullscale_mv
