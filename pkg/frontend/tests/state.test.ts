import { describe, expect, it } from "vitest";

import { LiveViewState } from "../src/state";
import type { SseEvent } from "../src/stream";

function sample(t_ms: number, ph_mv = 0): SseEvent {
  return { event: "sample", data: { t_ms, ph_mv, temp_c: 36.5 } };
}

describe("LiveViewState.apply", () => {
  it("keeps device timestamps strictly increasing", () => {
    const s = new LiveViewState();
    expect(s.apply(sample(100))).toBe(true);
    expect(s.apply(sample(300))).toBe(true);
    expect(s.apply(sample(200))).toBe(false); // late arrival dropped
    expect(s.apply(sample(300))).toBe(false); // duplicate dropped
    expect(s.samples.map((x) => x.t_ms)).toEqual([100, 300]);
  });

  it("collects annotations, gaps, and the stopped flag", () => {
    const s = new LiveViewState();
    s.apply({ event: "annotation", data: { label: "cal-ph7-a", t_start_ms: 1, t_end_ms: 2 } });
    s.apply({ event: "gap", data: { t_ms: 500, after_seq: 4, missing: 2 } });
    s.apply({ event: "stopped", data: { session: "x" } });
    expect(s.annotations[0]?.label).toBe("cal-ph7-a");
    expect(s.gaps[0]?.missing).toBe(2);
    expect(s.stopped).toBe(true);
  });

  it("ignores unknown events", () => {
    const s = new LiveViewState();
    expect(s.apply({ event: "mystery", data: {} })).toBe(false);
  });
});

describe("two-click marking", () => {
  it("opens on the first click and posts on the second", () => {
    const s = new LiveViewState();
    expect(s.markClick(1000, "cal-ph7-a", 7)).toBeNull();
    expect(s.pending).toEqual({ t_start_ms: 1000 });
    const body = s.markClick(4000, "cal-ph7-a", 7);
    expect(body).toEqual({ label: "cal-ph7-a", t_start_ms: 1000, t_end_ms: 4000, expected_ph: 7 });
    expect(s.pending).toBeNull();
  });

  it("cancels when the closing click is not after the opening one", () => {
    const s = new LiveViewState();
    s.markClick(5000, "x");
    expect(s.markClick(5000, "x")).toBeNull();
    expect(s.pending).toBeNull();
  });

  it("rounds fractional chart coordinates to whole milliseconds", () => {
    const s = new LiveViewState();
    s.markClick(1000.4, "stability");
    const body = s.markClick(1999.6, "stability");
    expect(body).toEqual({ label: "stability", t_start_ms: 1000, t_end_ms: 2000, expected_ph: null });
  });
});
