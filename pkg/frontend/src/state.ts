/** Client-side view state for a live session.
 *
 * The server log is the single source of truth; this class only accumulates
 * what has been streamed so the chart can render it. Device timestamps are
 * kept strictly increasing: late or duplicate samples are dropped, never
 * shown out of order.
 */

import type { AnnotationBody } from "./api.js";
import type { SseEvent } from "./stream.js";

export interface Sample {
  t_ms: number;
  ph_mv: number;
  temp_c: number;
}

export interface GapMark {
  t_ms: number;
  missing: number;
}

export interface PendingMark {
  t_start_ms: number;
}

export class LiveViewState {
  samples: Sample[] = [];
  annotations: AnnotationBody[] = [];
  gaps: GapMark[] = [];
  stopped = false;
  /** Open region from the first of a two-click marking, if any. */
  pending: PendingMark | null = null;

  get lastTMs(): number {
    const last = this.samples[this.samples.length - 1];
    return last ? last.t_ms : -1;
  }

  /** Apply one streamed event; returns true if the view changed. */
  apply(ev: SseEvent): boolean {
    switch (ev.event) {
      case "sample": {
        const t = ev.data.t_ms as number;
        if (t <= this.lastTMs) return false; // out-of-order or duplicate
        this.samples.push({
          t_ms: t,
          ph_mv: ev.data.ph_mv as number,
          temp_c: ev.data.temp_c as number,
        });
        return true;
      }
      case "annotation":
        this.annotations.push(ev.data as unknown as AnnotationBody);
        return true;
      case "gap":
        this.gaps.push({
          t_ms: ev.data.t_ms as number,
          missing: ev.data.missing as number,
        });
        return true;
      case "stopped":
        this.stopped = true;
        return true;
      default:
        return false;
    }
  }

  /**
   * Two-click region marking: the first click opens a region at a device
   * timestamp, the second closes it and returns the annotation to post.
   * A second click at or before the opening edge cancels the mark.
   */
  markClick(tMs: number, label: string, expectedPh?: number): AnnotationBody | null {
    const t = Math.round(tMs);
    if (this.pending === null) {
      this.pending = { t_start_ms: t };
      return null;
    }
    const start = this.pending.t_start_ms;
    this.pending = null;
    if (t <= start) return null; // cancelled
    return {
      label,
      t_start_ms: start,
      t_end_ms: t,
      expected_ph: expectedPh ?? null,
    };
  }
}
