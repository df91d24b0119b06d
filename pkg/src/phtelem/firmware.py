"""Node firmware signal chain: 100 Hz sampling, block averaging, moving average.

All arithmetic is integer with round-half-up, so the emulated chain is exact
and platform independent.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field


class ProtocolError(Exception):
    """Raw sample outside the ADC range."""


@dataclass(frozen=True)
class FirmwareConfig:
    sample_hz: int = 100
    avg_n: int = 10
    ma_window: int = 5
    tx_period_ms: int = 100

    def __post_init__(self) -> None:
        if self.avg_n < 1 or self.ma_window < 1:
            raise ValueError("avg_n and ma_window must be >= 1")
        # 100 Hz sampling with avg_n=10 must emit every tx_period_ms
        if self.sample_hz * self.tx_period_ms != 1000 * self.avg_n:
            raise ValueError("sample_hz / avg_n must equal 1000 / tx_period_ms")


def _round_half_up_div(total: int, n: int) -> int:
    return (2 * total + n) // (2 * n)


@dataclass
class ChannelPipeline:
    """Per-channel block accumulator plus moving-average buffer."""

    avg_n: int = 10
    ma_window: int = 5
    accumulator: int = 0
    block_count: int = 0
    ma_buffer: deque = field(default_factory=deque)

    def ingest_sample(self, raw: int) -> int | None:
        """Accumulate one raw sample; returns the block average when complete."""
        if not (0 <= raw <= 4095):
            raise ProtocolError(f"raw sample {raw} outside 12-bit range")
        self.accumulator += raw
        self.block_count += 1
        if self.block_count < self.avg_n:
            return None
        avg = _round_half_up_div(self.accumulator, self.avg_n)
        self.accumulator = 0
        self.block_count = 0
        return avg

    def moving_average(self, v: int) -> int:
        """Filter a block average; warm-up uses the partial window."""
        self.ma_buffer.append(v)
        if len(self.ma_buffer) > self.ma_window:
            self.ma_buffer.popleft()
        return _round_half_up_div(sum(self.ma_buffer), len(self.ma_buffer))


@dataclass(frozen=True)
class DataFrameFields:
    seq: int
    t_ms: int
    ph_filtered: int
    temp_filtered: int


class FirmwareCore:
    """Tick-driven two-channel acquisition chain emitting 10 Hz frame fields."""

    def __init__(self, config: FirmwareConfig | None = None) -> None:
        self.config = config or FirmwareConfig()
        self.ph = ChannelPipeline(self.config.avg_n, self.config.ma_window)
        self.temp = ChannelPipeline(self.config.avg_n, self.config.ma_window)
        self.seq = 0
        self.tick_count = 0

    def tick(self, ph_raw: int, temp_raw: int) -> DataFrameFields | None:
        """Ingest one sample pair; returns frame fields when a block completes."""
        self.tick_count += 1
        ph_avg = self.ph.ingest_sample(ph_raw)
        temp_avg = self.temp.ingest_sample(temp_raw)
        if ph_avg is None:
            return None
        assert temp_avg is not None
        fields = DataFrameFields(
            seq=self.seq & 0xFFFF,
            t_ms=self.tick_count * 1000 // self.config.sample_hz,
            ph_filtered=self.ph.moving_average(ph_avg),
            temp_filtered=self.temp.moving_average(temp_avg),
        )
        self.seq += 1
        return fields
