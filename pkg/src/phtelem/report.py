"""Self-contained HTML report with an embedded SVG measurement plot.

Output bytes are deterministic for identical inputs; the curve is
downsampled by min/max binning so transient spikes survive plotting.
"""

from __future__ import annotations

import html
import json

import numpy as np

from . import analysis
from .host import Session

MAX_PLOT_POINTS = 5000

_PALETTE = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759",
    "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
]


class ReportError(Exception):
    pass


def minmax_downsample(t: np.ndarray, v: np.ndarray, max_points: int = MAX_PLOT_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Keep per-bin extrema so the downsampled curve preserves spikes."""
    n = len(t)
    if n <= max_points:
        return t, v
    n_bins = max_points // 2
    edges = np.linspace(0, n, n_bins + 1).astype(np.int64)
    keep: list[int] = []
    for b in range(n_bins):
        lo, hi = edges[b], edges[b + 1]
        if hi <= lo:
            continue
        seg = v[lo:hi]
        i_min = lo + int(np.argmin(seg))
        i_max = lo + int(np.argmax(seg))
        keep.extend(sorted({i_min, i_max}))
    idx = np.array(keep, dtype=np.int64)
    return t[idx], v[idx]


def _svg_plot(
    t_s: np.ndarray,
    values: np.ndarray,
    ylabel: str,
    annotations,
    width: int = 860,
    height: int = 360,
) -> str:
    ml, mr, mt, mb = 56, 16, 14, 40
    pw, ph_px = width - ml - mr, height - mt - mb
    t0, t1 = float(t_s[0]), float(t_s[-1])
    if t1 <= t0:
        t1 = t0 + 1.0
    v0, v1 = float(values.min()), float(values.max())
    pad = max((v1 - v0) * 0.08, 1e-6)
    v0, v1 = v0 - pad, v1 + pad

    def sx(t: float) -> float:
        return ml + (t - t0) / (t1 - t0) * pw

    def sy(v: float) -> float:
        return mt + (v1 - v) / (v1 - v0) * ph_px

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph_px}" fill="#fafafa" stroke="#ccc"/>',
    ]

    for i, a in enumerate(annotations):
        color = _PALETTE[i % len(_PALETTE)]
        x0 = max(sx(a.t_start_ms / 1000.0), ml)
        x1 = min(sx(a.t_end_ms / 1000.0), ml + pw)
        if x1 > x0:
            parts.append(
                f'<rect x="{x0:.2f}" y="{mt}" width="{x1 - x0:.2f}" height="{ph_px}" '
                f'fill="{color}" fill-opacity="0.15"/>'
            )

    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        yv = v0 + (v1 - v0) * frac
        y = sy(yv)
        parts.append(f'<line x1="{ml}" y1="{y:.2f}" x2="{ml + pw}" y2="{y:.2f}" stroke="#e0e0e0"/>')
        parts.append(f'<text x="{ml - 6}" y="{y + 4:.2f}" text-anchor="end">{yv:.2f}</text>')
        tv = t0 + (t1 - t0) * frac
        x = sx(tv)
        parts.append(f'<text x="{x:.2f}" y="{height - mb + 16}" text-anchor="middle">{tv:.0f}</text>')

    points = " ".join(f"{sx(float(ts)):.2f},{sy(float(v)):.2f}" for ts, v in zip(t_s, values))
    parts.append(f'<polyline points="{points}" fill="none" stroke="#1f2d50" stroke-width="1"/>')
    parts.append(
        f'<text x="{ml + pw / 2:.0f}" y="{height - 8}" text-anchor="middle">time [s]</text>'
    )
    parts.append(
        f'<text x="14" y="{mt + ph_px / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {mt + ph_px / 2:.0f})">{html.escape(ylabel)}</text>'
    )
    parts.append("</svg>")
    return "".join(parts)


def _legend_html(annotations) -> str:
    items = []
    for i, a in enumerate(annotations):
        color = _PALETTE[i % len(_PALETTE)]
        span = f"{a.t_start_ms / 1000.0:.1f}&ndash;{a.t_end_ms / 1000.0:.1f} s"
        expected = "" if a.expected_ph is None else f", expected pH {a.expected_ph:g}"
        items.append(
            f'<li><span style="display:inline-block;width:12px;height:12px;'
            f'background:{color};opacity:0.5;margin-right:6px"></span>'
            f"{html.escape(a.label)} ({span}{expected})</li>"
        )
    return "<ul>" + "".join(items) + "</ul>" if items else "<p>No annotations.</p>"


def _metric_rows(metrics: dict) -> str:
    rows = []

    def row(name: str, value: str) -> None:
        rows.append(f"<tr><td>{html.escape(name)}</td><td>{value}</td></tr>")

    drift = metrics.get("drift")
    if drift:
        row("Drift rate", f"{drift['rate_mv_per_min']:.4f} mV/min")
    sens = metrics.get("sensitivity")
    if sens:
        row("Electrode slope", f"{sens['slope_mv_per_ph']:.2f} mV/pH")
        row("Potential at pH 7 (corrected)", f"{sens['e7_mv']:.2f} mV")
        row("Theoretical Nernst slope (25 &deg;C)", f"{sens['nernst_slope_mv_per_ph_25c']:.2f} mV/pH")
    for r in metrics.get("response", []):
        row(
            f"Response {html.escape(r['label'])}",
            f"settling {r['settling_s']:.2f} s, {r['rate_ph_per_s']:.3f} pH/s",
        )
    stab = metrics.get("stability")
    if stab:
        row("Stability (max |dev|)", f"{stab['max_abs_deviation_ph']:.4f} pH")
    gaps = metrics.get("gaps", {})
    row(
        "Link gaps",
        f"{gaps.get('events', 0)} events, {gaps.get('missing_frames', 0)} missing frames, "
        f"{gaps.get('duplicates', 0)} duplicates",
    )
    return "".join(rows)


def _power_table(metrics: dict) -> str:
    power = metrics.get("power")
    if not power:
        return ""
    rows = "".join(
        f"<tr><td>{html.escape(e['component'])}</td><td>{e['power_mw']:.3f}</td>"
        f"<td>{'yes' if e['intraoral'] else ''}</td><td>{'yes' if e['optional'] else ''}</td></tr>"
        for e in power["entries"]
    )
    return (
        "<h2>Power budget</h2>"
        "<table><tr><th>Component</th><th>mW</th><th>Intraoral</th><th>Optional</th></tr>"
        f"{rows}</table>"
        f"<p>Total {power['total_mw']:.2f} mW; without optional {power['total_without_optional_mw']:.2f} mW; "
        f"intraoral {power['intraoral_mw']:.2f} mW.</p>"
    )


def render_report(session: Session, metrics: dict) -> bytes:
    """Render a print-ready HTML document for a stopped session."""
    if not session.samples:
        raise ReportError("session has no samples")
    if not metrics:
        raise ReportError("metrics are required to render a report")

    series = analysis.SampleSeries.from_session(session)
    drift = metrics.get("drift") or {"rate_mv_per_min": 0.0, "t_ref_ms": 0.0, "e_ref_mv": 0.0}
    model = analysis.DriftModel(drift["rate_mv_per_min"], drift["t_ref_ms"], drift["e_ref_mv"])
    corrected = analysis.apply_drift(series, model)
    sens = metrics.get("sensitivity")
    if sens:
        values = analysis.to_ph(
            corrected, analysis.SensitivityModel(sens["slope_mv_per_ph"], sens["e7_mv"])
        )
        ylabel = "pH"
    else:
        values = corrected.ph_mv
        ylabel = "potential [mV]"

    t_s = series.t_ms / 1000.0
    t_plot, v_plot = minmax_downsample(t_s, values)
    svg = _svg_plot(t_plot, v_plot, ylabel, session.annotations)

    doc = f"""<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>pH telemetry report &mdash; {html.escape(session.id)}</title>
<style>
body {{ font-family: sans-serif; margin: 2em auto; max-width: 920px; color: #222; }}
table {{ border-collapse: collapse; }} td, th {{ border: 1px solid #bbb; padding: 4px 10px; }}
h1 {{ font-size: 1.4em; }} h2 {{ font-size: 1.1em; margin-top: 1.4em; }}
@media print {{ body {{ margin: 0; }} }}
</style></head><body>
<h1>pH telemetry report &mdash; {html.escape(session.id)}</h1>
<p>Device: {html.escape(session.device_info)} &middot; started {html.escape(session.start_utc)}
&middot; {len(session.samples)} samples</p>
{svg}
<h2>Annotated phases</h2>
{_legend_html(session.annotations)}
<h2>Metrics</h2>
<table>{_metric_rows(metrics)}</table>
{_power_table(metrics)}
<h2>Raw metrics document</h2>
<pre>{html.escape(json.dumps(metrics, indent=2, sort_keys=True))}</pre>
</body></html>
"""
    return doc.encode()
