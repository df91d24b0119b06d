/** Server-sent-events client with automatic reconnect and resume.
 *
 * Built on fetch + ReadableStream rather than EventSource so the parser is
 * unit-testable and the resume point (last seen device timestamp) can be
 * threaded into the reconnect URL.
 */

export interface SseEvent {
  event: string;
  data: Record<string, unknown>;
}

/** Incremental parser for a text/event-stream byte stream. */
export class SseParser {
  private buffer = "";

  /** Feed a chunk; returns the events completed by it. Comment lines (keepalives) are dropped. */
  push(chunk: string): SseEvent[] {
    this.buffer += chunk;
    const events: SseEvent[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf("\n\n")) >= 0) {
      const block = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 2);
      const parsed = parseBlock(block);
      if (parsed) events.push(parsed);
    }
    return events;
  }
}

function parseBlock(block: string): SseEvent | null {
  let event = "message";
  const dataLines: string[] = [];
  for (const line of block.split("\n")) {
    if (line.startsWith(":") || line === "") continue;
    if (line.startsWith("event:")) event = line.slice(6).trim();
    else if (line.startsWith("data:")) dataLines.push(line.slice(5).trim());
  }
  if (dataLines.length === 0) return null;
  try {
    return { event, data: JSON.parse(dataLines.join("\n")) };
  } catch {
    return null;
  }
}

export interface StreamOptions {
  /** Called for every decoded event. */
  onEvent: (ev: SseEvent) => void;
  /** Resume point; events with t_ms at or below this are already known. */
  sinceTMs?: number;
  /** Delay before reconnecting after a dropped connection. */
  retryMs?: number;
  fetchFn?: typeof fetch;
}

/**
 * Consume a session stream URL builder until a "stopped" event or stop() is
 * called. On connection loss it reconnects with since_t_ms set to the last
 * sample timestamp it saw, so no samples are lost or duplicated.
 */
export class StreamClient {
  lastTMs: number;
  private stopped = false;

  constructor(
    private urlFor: (sinceTMs: number) => string,
    private opts: StreamOptions,
  ) {
    this.lastTMs = opts.sinceTMs ?? -1;
  }

  stop(): void {
    this.stopped = true;
  }

  async run(): Promise<void> {
    const fetchFn = this.opts.fetchFn ?? fetch;
    const retryMs = this.opts.retryMs ?? 1000;
    while (!this.stopped) {
      try {
        const res = await fetchFn(this.urlFor(this.lastTMs));
        if (!res.ok || !res.body) throw new Error(`stream HTTP ${res.status}`);
        const reader = res.body.getReader();
        const decoder = new TextDecoder();
        const parser = new SseParser();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const ev of parser.push(decoder.decode(value, { stream: true }))) {
            if (ev.event === "sample" && typeof ev.data.t_ms === "number") {
              if (ev.data.t_ms <= this.lastTMs) continue; // duplicate after resume
              this.lastTMs = ev.data.t_ms;
            }
            this.opts.onEvent(ev);
            if (ev.event === "stopped") {
              this.stopped = true;
            }
          }
          if (this.stopped) {
            await reader.cancel().catch(() => undefined);
            return;
          }
        }
      } catch {
        // fall through to retry
      }
      if (!this.stopped) await sleep(retryMs);
    }
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
