"""Post-processing: drift compensation, sensitivity fit, response and
stability metrics, and the power-budget calculator.

Calibration windows are located by annotation label convention:
cal-ph7-a / cal-ph10 / cal-ph4 / cal-ph7-b carry an expected_ph; transition
annotations are labeled step-<from>-<to> (e.g. step-10-4); an optional
"stability" annotation marks the window for the stability metric.
"""

from __future__ import annotations

import math
import re
try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .host import Annotation, Session

GAS_CONSTANT = 8.314462618  # J/(mol K)
FARADAY = 96485.33212  # C/mol

DEFAULT_SETTLING_BAND_PH = 0.05

_STEP_LABEL = re.compile(r"^step-(\d+(?:\.\d+)?)-(\d+(?:\.\d+)?)$")


class AnalysisError(Exception):
    pass


@dataclass(frozen=True)
class SampleSeries:
    """Column view of a session's samples on the device timebase."""

    t_ms: np.ndarray
    ph_mv: np.ndarray
    temp_c: np.ndarray

    @classmethod
    def from_session(cls, session: Session) -> "SampleSeries":
        return cls(
            t_ms=np.array([s.t_ms for s in session.samples], dtype=np.int64),
            ph_mv=np.array([s.ph_mv for s in session.samples]),
            temp_c=np.array([s.temp_c for s in session.samples]),
        )

    def window_mask(self, window: Annotation) -> np.ndarray:
        return (self.t_ms >= window.t_start_ms) & (self.t_ms < window.t_end_ms)

    def with_ph_mv(self, ph_mv: np.ndarray) -> "SampleSeries":
        return SampleSeries(self.t_ms, ph_mv, self.temp_c)


@dataclass(frozen=True)
class WindowStats:
    mean_mv: float
    mean_t_ms: float
    stddev_mv: float
    n: int


@dataclass(frozen=True)
class DriftModel:
    rate_mv_per_min: float
    t_ref_ms: float
    e_ref_mv: float


@dataclass(frozen=True)
class SensitivityModel:
    slope_mv_per_ph: float
    e7_mv: float

    def __post_init__(self) -> None:
        if self.slope_mv_per_ph <= 0:
            raise AnalysisError("fitted slope must be > 0")


def window_stats(series: SampleSeries, window: Annotation) -> WindowStats:
    mask = series.window_mask(window)
    n = int(mask.sum())
    if n == 0:
        raise AnalysisError(f"annotation {window.label!r} contains no samples")
    mv = series.ph_mv[mask]
    return WindowStats(
        mean_mv=float(mv.mean()),
        mean_t_ms=float(series.t_ms[mask].mean()),
        stddev_mv=float(mv.std()),
        n=n,
    )


def fit_drift(ref_a: WindowStats, ref_b: WindowStats) -> DriftModel:
    """Two-point time-based drift fit from two same-pH reference windows."""
    if ref_b.mean_t_ms <= ref_a.mean_t_ms:
        raise AnalysisError("second reference window must be later than the first")
    dt_min = (ref_b.mean_t_ms - ref_a.mean_t_ms) / 60000.0
    rate = (ref_b.mean_mv - ref_a.mean_mv) / dt_min
    return DriftModel(rate_mv_per_min=rate, t_ref_ms=ref_a.mean_t_ms, e_ref_mv=ref_a.mean_mv)


def apply_drift(series: SampleSeries, model: DriftModel) -> SampleSeries:
    """Subtract the fitted linear drift; extrapolates beyond the anchors."""
    corrected = series.ph_mv - model.rate_mv_per_min * (series.t_ms - model.t_ref_ms) / 60000.0
    return series.with_ph_mv(corrected)


def fit_sensitivity(series: SampleSeries, cal_windows: list[Annotation]) -> SensitivityModel:
    """Least-squares electrode slope from window means vs expected pH."""
    points = [(w.expected_ph, window_stats(series, w).mean_mv) for w in cal_windows]
    phs = np.array([p for p, _ in points], dtype=float)
    mvs = np.array([v for _, v in points], dtype=float)
    if len(set(phs.tolist())) < 2:
        raise AnalysisError("need calibration windows at >= 2 distinct pH values")
    coeffs = np.polyfit(phs, mvs, 1)
    slope = -float(coeffs[0])
    e7 = float(np.polyval(coeffs, 7.0))
    return SensitivityModel(slope_mv_per_ph=slope, e7_mv=e7)


def nernst_slope(temp_c: float) -> float:
    """Theoretical electrode slope in mV/pH at a given temperature."""
    if not (-20.0 < temp_c < 100.0):
        raise AnalysisError("temperature out of range (-20, 100) degC")
    return math.log(10.0) * GAS_CONSTANT * (temp_c + 273.15) / FARADAY * 1000.0


def to_ph(series: SampleSeries, model: SensitivityModel) -> np.ndarray:
    """Convert drift-corrected potentials to pH units."""
    return 7.0 + (model.e7_mv - series.ph_mv) / model.slope_mv_per_ph


def response_rate(
    ph: np.ndarray,
    t_ms: np.ndarray,
    window: Annotation,
    from_ph: float,
    to_ph_value: float,
    band: float = DEFAULT_SETTLING_BAND_PH,
) -> tuple[float, float]:
    """Settling time and effective response rate of a pH step transition.

    Settling ends at the first sample after which the series stays within
    +/- band of the target for the rest of the annotation window.
    """
    mask = (t_ms >= window.t_start_ms) & (t_ms < window.t_end_ms)
    if not mask.any():
        raise AnalysisError("transition window contains no samples")
    tw = t_ms[mask]
    vw = ph[mask]
    outside = np.abs(vw - to_ph_value) > band
    if outside[-1]:
        raise AnalysisError("series never settles within the transition window")
    last_outside = np.nonzero(outside)[0]
    settled_idx = int(last_outside[-1]) + 1 if len(last_outside) else 0
    period_s = float(np.median(np.diff(tw)) / 1000.0) if len(tw) > 1 else 0.1
    settling_s = (float(tw[settled_idx]) - window.t_start_ms) / 1000.0
    if settling_s <= 0.0:
        settling_s = period_s  # already in band at the first sample
    rate = abs(from_ph - to_ph_value) / settling_s
    return settling_s, rate


def stability(ph: np.ndarray, t_ms: np.ndarray, window: Annotation) -> float:
    """Maximum absolute deviation from the window mean, in pH units."""
    mask = (t_ms >= window.t_start_ms) & (t_ms < window.t_end_ms)
    if not mask.any():
        raise AnalysisError("stability window contains no samples")
    vw = ph[mask]
    return float(np.abs(vw - vw.mean()).max())


# ---------------------------------------------------------------------------
# Power budget
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerEntry:
    component: str
    power_mw: float
    intraoral: bool = False
    optional: bool = False

    def __post_init__(self) -> None:
        if self.power_mw < 0:
            raise ValueError("power_mw must be >= 0")


@dataclass(frozen=True)
class PowerBudget:
    entries: tuple[PowerEntry, ...]


def _round2(x: float) -> float:
    return float(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def power_totals(budget: PowerBudget) -> tuple[float, float, float]:
    """(total, total without optional components, intraoral subtotal) in mW."""
    total = sum(e.power_mw for e in budget.entries)
    essential = sum(e.power_mw for e in budget.entries if not e.optional)
    intraoral = sum(e.power_mw for e in budget.entries if e.intraoral)
    return _round2(total), _round2(essential), _round2(intraoral)


def load_power_budget(path: str) -> PowerBudget:
    with open(path, "rb") as f:
        raw = tomllib.load(f)
    entries = tuple(
        PowerEntry(
            component=e["component"],
            power_mw=float(e["power_mw"]),
            intraoral=bool(e.get("intraoral", False)),
            optional=bool(e.get("optional", False)),
        )
        for e in raw.get("entry", [])
    )
    return PowerBudget(entries)


# ---------------------------------------------------------------------------
# Metrics pipeline
# ---------------------------------------------------------------------------


def _find(annotations: list[Annotation], label: str) -> Annotation | None:
    for a in annotations:
        if a.label == label:
            return a
    return None


def compute_metrics(
    session: Session,
    band: float = DEFAULT_SETTLING_BAND_PH,
    budget: PowerBudget | None = None,
) -> dict:
    """Full post-processing pipeline; returns a JSON-serializable document."""
    if not session.samples:
        raise AnalysisError("session has no samples")
    series = SampleSeries.from_session(session)
    annotations = list(session.annotations)

    doc: dict = {
        "session": session.id,
        "n_samples": len(session.samples),
        "gaps": {
            "events": len(session.gaps),
            "missing_frames": sum(g.missing for g in session.gaps),
            "duplicates": session.duplicates,
        },
    }

    ref_a = _find(annotations, "cal-ph7-a")
    ref_b = _find(annotations, "cal-ph7-b")
    if ref_a is not None and ref_b is not None:
        drift = fit_drift(window_stats(series, ref_a), window_stats(series, ref_b))
    else:
        drift = DriftModel(0.0, float(series.t_ms[0]), float(series.ph_mv[0]))
    corrected = apply_drift(series, drift)
    doc["drift"] = {
        "rate_mv_per_min": drift.rate_mv_per_min,
        "t_ref_ms": drift.t_ref_ms,
        "e_ref_mv": drift.e_ref_mv,
    }

    cal_windows = [a for a in annotations if a.expected_ph is not None and a.label.startswith("cal-")]
    if len({w.expected_ph for w in cal_windows}) < 2:
        doc["sensitivity"] = None
        doc["calibration_windows"] = []
        doc["response"] = []
        return doc
    sens = fit_sensitivity(corrected, cal_windows)
    ph = to_ph(corrected, sens)
    doc["sensitivity"] = {
        "slope_mv_per_ph": sens.slope_mv_per_ph,
        "e7_mv": sens.e7_mv,
        "nernst_slope_mv_per_ph_25c": nernst_slope(25.0),
    }
    doc["calibration_windows"] = [
        {
            "label": w.label,
            "expected_ph": w.expected_ph,
            **window_stats(corrected, w).__dict__,
        }
        for w in cal_windows
    ]

    doc["response"] = []
    for a in annotations:
        m = _STEP_LABEL.match(a.label)
        if not m:
            continue
        from_ph, target = float(m.group(1)), float(m.group(2))
        settling_s, rate = response_rate(ph, series.t_ms, a, from_ph, target, band)
        doc["response"].append(
            {
                "label": a.label,
                "from_ph": from_ph,
                "to_ph": target,
                "band_ph": band,
                "settling_s": settling_s,
                "rate_ph_per_s": rate,
            }
        )

    stab_window = _find(annotations, "stability")
    if stab_window is None and ref_b is not None:
        stab_window = ref_b
    if stab_window is not None:
        doc["stability"] = {
            "label": stab_window.label,
            "t_start_ms": stab_window.t_start_ms,
            "t_end_ms": stab_window.t_end_ms,
            "max_abs_deviation_ph": stability(ph, series.t_ms, stab_window),
        }

    if budget is not None:
        total, essential, intraoral = power_totals(budget)
        doc["power"] = {
            "total_mw": total,
            "total_without_optional_mw": essential,
            "intraoral_mw": intraoral,
            "entries": [e.__dict__ for e in budget.entries],
        }
    return doc
