/** HTML string builders; DOM wiring lives in main.ts. */

import { describeFeature } from "./labels.js";
import { QueueState, isAlert, sparkline } from "./state.js";
import type { TriageRow } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBanner(state: QueueState): string {
  const parts: string[] = [];
  if (state.stale) {
    const since =
      state.lastServerTime === null
        ? "never reached"
        : `last update ${new Date(state.lastServerTime).toLocaleTimeString()}`;
    parts.push(
      `<div class="banner banner-stale">Service unreachable, showing the last snapshot (${since})</div>`,
    );
  }
  for (const notice of state.notices) {
    parts.push(`<div class="banner banner-notice">${escapeHtml(notice)}</div>`);
  }
  return parts.join("");
}

function renderTopFeatures(row: TriageRow): string {
  return row.top_features
    .map(
      (f) =>
        `<span class="feature" title="${escapeHtml(f.name)}">${escapeHtml(
          describeFeature(f.name),
        )}: ${f.value.toFixed(2)}</span>`,
    )
    .join("");
}

export function renderRow(row: TriageRow, threshold: number): string {
  const classes = ["row"];
  if (row.acknowledged) classes.push("acknowledged");
  if (isAlert(row, threshold)) classes.push("alert");
  const button = row.acknowledged ? "Unack" : "Ack";
  return (
    `<tr class="${classes.join(" ")}" data-student-id="${escapeHtml(row.student_id)}">` +
    `<td class="rank">${row.rank}</td>` +
    `<td class="student">${escapeHtml(row.student_id)}</td>` +
    `<td class="score">${row.score.toFixed(2)}</td>` +
    `<td class="spark">${sparkline(row.recent_activity)}</td>` +
    `<td class="features">${renderTopFeatures(row)}</td>` +
    `<td class="ack"><button data-ack="${escapeHtml(row.student_id)}">${button}</button></td>` +
    `</tr>`
  );
}

export function renderQueue(state: QueueState, threshold: number): string {
  if (state.rows.length === 0) {
    return `<div class="empty">No active sessions yet</div>`;
  }
  const body = state.rows.map((row) => renderRow(row, threshold)).join("");
  return (
    `<table class="queue">` +
    `<thead><tr><th>#</th><th>Student</th><th>Risk</th>` +
    `<th>Activity</th><th>Why</th><th></th></tr></thead>` +
    `<tbody>${body}</tbody></table>`
  );
}

export function renderApp(state: QueueState, threshold: number): string {
  return renderBanner(state) + renderQueue(state, threshold);
}
