import numpy as np
import pytest

from phtelem import analysis, host, protocol, report


def build_session(n=600):
    store = host.SessionStore()
    session = store.start_session(
        config=host.SessionConfig(),
        device_info="node-1",
        session_id="rpt",
        start_utc="2026-01-01T00:00:00.000Z",
    )
    # four pH plateaus at counts 2048 / 1862 / 2234 / 2048 (pH 7 / 10 / 4 / 7 at 31 mV/pH)
    q = n // 4
    counts = [2048] * q + [1862] * q + [2234] * q + [2048] * (n - 3 * q)
    for i, c in enumerate(counts):
        frame = protocol.Data(seq=i, t_ms=(i + 1) * 100, ph_raw=c, temp_raw=1730)
        session.ingest_frame(frame, session.recv_time(float((i + 1) * 100)))
    qms = q * 100
    session.add_annotation(host.Annotation("cal-ph7-a", 100, qms, expected_ph=7.0))
    session.add_annotation(host.Annotation("cal-ph10", qms + 100, 2 * qms, expected_ph=10.0))
    session.add_annotation(host.Annotation("cal-ph4", 2 * qms + 100, 3 * qms, expected_ph=4.0))
    session.add_annotation(host.Annotation("cal-ph7-b", 3 * qms + 100, n * 100, expected_ph=7.0))
    session.stop()
    return session


@pytest.fixture(scope="module")
def session():
    return build_session()


@pytest.fixture(scope="module")
def metrics(session):
    return analysis.compute_metrics(session)


class TestRender:
    def test_shaded_region_per_annotation(self, session, metrics):
        doc = report.render_report(session, metrics).decode()
        assert doc.count('fill-opacity="0.15"') == len(session.annotations)
        for a in session.annotations:
            assert a.label in doc

    def test_byte_identical_rerender(self, session, metrics):
        assert report.render_report(session, metrics) == report.render_report(session, metrics)

    def test_metrics_appear(self, session, metrics):
        doc = report.render_report(session, metrics).decode()
        assert "Electrode slope" in doc
        assert "Power budget" not in doc  # no budget supplied
        assert "Link gaps" in doc

    def test_empty_session_rejected(self, metrics):
        store = host.SessionStore()
        empty = store.start_session(
            config=host.SessionConfig(),
            device_info="node-2",
            session_id="empty",
            start_utc="2026-01-01T00:00:00.000Z",
        )
        empty.stop()
        with pytest.raises(report.ReportError):
            report.render_report(empty, metrics)

    def test_empty_metrics_rejected(self, session):
        with pytest.raises(report.ReportError):
            report.render_report(session, {})


class TestDownsample:
    def test_short_series_untouched(self):
        t = np.arange(100, dtype=float)
        v = np.sin(t)
        dt, dv = report.minmax_downsample(t, v)
        assert dt is t and dv is v

    def test_extrema_preserved(self):
        rng = np.random.default_rng(11)
        t = np.arange(50_000, dtype=float)
        v = rng.normal(size=t.size)
        v[12_345] = 40.0  # isolated spike must survive downsampling
        v[37_000] = -40.0
        dt, dv = report.minmax_downsample(t, v)
        assert len(dt) <= report.MAX_PLOT_POINTS
        assert dv.max() == 40.0
        assert dv.min() == -40.0
        assert np.all(np.diff(dt) > 0)
