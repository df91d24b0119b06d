/** Wires the console UI: start/stop controls, live chart, two-click marking. */

import { ApiClient } from "./api.js";
import { DEFAULT_LAYOUT, renderChart, timeAtX } from "./chart.js";
import { LiveViewState } from "./state.js";
import { StreamClient } from "./stream.js";

const api = new ApiClient("");
let state = new LiveViewState();
let stream: StreamClient | null = null;
let sessionId: string | null = null;

const $ = (id: string) => document.getElementById(id) as HTMLElement;

function redraw(): void {
  $("chart").innerHTML = renderChart(state);
  $("status").textContent = sessionId
    ? `${sessionId} · ${state.samples.length} samples · ${state.stopped ? "stopped" : "recording"}`
    : "no session";
  const dl = $("download") as HTMLAnchorElement;
  if (sessionId && state.stopped) {
    dl.href = api.exportUrl(sessionId);
    dl.removeAttribute("hidden");
  } else {
    dl.setAttribute("hidden", "");
  }
}

async function start(): Promise<void> {
  const speed = Number(($("speed") as HTMLInputElement).value) || 1;
  const info = await api.startSession({ device_info: "console", speed });
  sessionId = info.id;
  state = new LiveViewState();
  stream = new StreamClient((since) => api.streamUrl(info.id, since), {
    onEvent: (ev) => {
      if (state.apply(ev)) redraw();
    },
  });
  void stream.run();
  redraw();
}

async function stop(): Promise<void> {
  if (!sessionId) return;
  await api.stopSession(sessionId);
  stream?.stop();
  redraw();
}

function onChartClick(ev: MouseEvent): void {
  if (!sessionId || !state.samples.length) return;
  const svg = $("chart").querySelector("svg");
  if (!svg) return;
  const rect = svg.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * DEFAULT_LAYOUT.width;
  const label = ($("label") as HTMLInputElement).value.trim();
  if (!label) return;
  const phRaw = ($("expected-ph") as HTMLInputElement).value.trim();
  const body = state.markClick(timeAtX(x, state), label, phRaw ? Number(phRaw) : undefined);
  if (body) {
    void api.addAnnotation(sessionId, body).then(redraw);
  }
  redraw();
}

$("start").addEventListener("click", () => void start());
$("stop").addEventListener("click", () => void stop());
$("chart").addEventListener("click", (ev) => onChartClick(ev as MouseEvent));
redraw();
