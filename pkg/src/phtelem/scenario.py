"""Scenario files: TOML description of one simulated measurement run.

Schema (all tables optional, defaults shown in scenarios/calibration.toml):

    [scenario]   id, seed, duration_s, start_utc
    [electrode]  e0_mv, sensitivity_mv_per_ph, drift_mv_per_min, tau_s,
                 noise_sigma_mv, source_impedance_gohm
    [afe]        c_gs_pf, c_gd_pf, buffer_gain, bias_offset_mv,
                 adc_fullscale_mv, adc_bits
    [firmware]   sample_hz, avg_n, ma_window, tx_period_ms
    [link]       drop_prob, latency_ms, jitter_ms, seed
    [bath]       temp_c, segments = [[start_s, ph], ...]
    [[annotations]]  label, t_start_ms, t_end_ms, expected_ph
"""

from __future__ import annotations

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field

from .device import AfeParams, BathSchedule, ElectrodeParams
from .firmware import FirmwareConfig
from .host import Annotation, SessionConfig
from .protocol import LinkParams

DEFAULT_START_UTC = "2026-01-01T00:00:00.000Z"


@dataclass(frozen=True)
class Scenario:
    id: str = "scenario"
    seed: int = 0
    duration_s: float = 60.0
    start_utc: str = DEFAULT_START_UTC
    electrode: ElectrodeParams = field(default_factory=ElectrodeParams)
    afe: AfeParams = field(default_factory=AfeParams)
    firmware: FirmwareConfig = field(default_factory=FirmwareConfig)
    link: LinkParams = field(default_factory=LinkParams)
    schedule: BathSchedule = field(default_factory=BathSchedule)
    annotations: tuple[Annotation, ...] = ()

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError("duration_s must be > 0")
        if self.schedule.segments[0][0] != 0.0:
            raise ValueError("first bath segment must start at t = 0")

    def session_config(self) -> SessionConfig:
        return SessionConfig(firmware=self.firmware, afe=self.afe)


def scenario_from_dict(raw: dict) -> Scenario:
    sc = raw.get("scenario", {})
    bath = raw.get("bath", {})
    segments = tuple(tuple(map(float, seg)) for seg in bath.get("segments", [[0.0, 7.0]]))
    annotations = tuple(
        Annotation(
            label=a["label"],
            t_start_ms=int(a["t_start_ms"]),
            t_end_ms=int(a["t_end_ms"]),
            expected_ph=a.get("expected_ph"),
        )
        for a in raw.get("annotations", [])
    )
    electrode_kw = dict(raw.get("electrode", {}))
    electrode_kw.setdefault("rng_seed", int(sc.get("seed", 0)))
    return Scenario(
        id=sc.get("id", "scenario"),
        seed=int(sc.get("seed", 0)),
        duration_s=float(sc.get("duration_s", 60.0)),
        start_utc=sc.get("start_utc", DEFAULT_START_UTC),
        electrode=ElectrodeParams(**electrode_kw),
        afe=AfeParams(**raw.get("afe", {})),
        firmware=FirmwareConfig(**raw.get("firmware", {})),
        link=LinkParams(**raw.get("link", {})),
        schedule=BathSchedule(segments=segments, temp_c=float(bath.get("temp_c", 25.0))),
        annotations=annotations,
    )


def load_scenario(path: str) -> Scenario:
    with open(path, "rb") as f:
        raw = tomllib.load(f)
    return scenario_from_dict(raw)
