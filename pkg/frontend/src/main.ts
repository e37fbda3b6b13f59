/** Browser bootstrap: config, event wiring, and the render sink. */

import { createApi } from "./api.js";
import { TriageController } from "./controller.js";
import type { QueueState } from "./state.js";
import type { DashboardConfig } from "./types.js";
import { renderApp } from "./view.js";

function readConfig(): DashboardConfig {
  const params = new URLSearchParams(window.location.search);
  const interval = Number(params.get("interval") ?? "5");
  const threshold = Number(params.get("threshold") ?? "0.5");
  return {
    baseUrl: params.get("api") ?? "http://127.0.0.1:8765",
    pollIntervalMs: (Number.isFinite(interval) && interval > 0 ? interval : 5) * 1000,
    alertThreshold:
      Number.isFinite(threshold) && threshold >= 0 && threshold <= 1
        ? threshold
        : 0.5,
  };
}

function start(): void {
  const config = readConfig();
  const root = document.getElementById("queue");
  const slider = document.getElementById("threshold") as HTMLInputElement | null;
  const readout = document.getElementById("threshold-value");
  if (root === null || slider === null || readout === null) {
    throw new Error("dashboard shell markup is missing");
  }

  // The slider re-buckets the alert styling only; scores never change.
  let threshold = config.alertThreshold;
  slider.value = String(threshold);
  readout.textContent = threshold.toFixed(2);

  let lastState: QueueState | null = null;
  const render = (state: QueueState): void => {
    lastState = state;
    root.innerHTML = renderApp(state, threshold);
  };

  const api = createApi(config.baseUrl);
  const controller = new TriageController(api, render, config.pollIntervalMs);

  slider.addEventListener("input", () => {
    threshold = Number(slider.value);
    readout.textContent = threshold.toFixed(2);
    if (lastState !== null) render(lastState);
  });

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement | null;
    const studentId = target?.getAttribute("data-ack");
    if (studentId) void controller.toggleAck(studentId);
  });

  controller.start();
}

start();
