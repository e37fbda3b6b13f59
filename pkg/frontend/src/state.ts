/** Pure queue-state transitions; the controller and view stay thin. */

import type { AckResponse, SessionsResponse, TriageRow } from "./types.js";

export interface QueueState {
  /** Rows in display order; ranks are always a permutation of 1..n. */
  rows: TriageRow[];
  /** True when the last poll failed and rows show the previous snapshot. */
  stale: boolean;
  /** Server clock of the last successful poll, ms. */
  lastServerTime: number | null;
  /** One-line messages, e.g. a row removed because the session vanished. */
  notices: string[];
}

export function initialState(): QueueState {
  return { rows: [], stale: false, lastServerTime: null, notices: [] };
}

function byScoreThenId(a: TriageRow, b: TriageRow): number {
  if (a.score !== b.score) return b.score - a.score;
  return a.student_id < b.student_id ? -1 : a.student_id > b.student_id ? 1 : 0;
}

/** Sort by score descending (id ascending on ties) and reassign ranks 1..n. */
export function sortForDisplay(rows: TriageRow[]): TriageRow[] {
  return [...rows]
    .sort(byScoreThenId)
    .map((row, i) => ({ ...row, rank: i + 1 }));
}

/** Ranks are 1..n and agree with the score-descending, id-ascending order. */
export function ranksConsistent(rows: TriageRow[]): boolean {
  const sorted = [...rows].sort(byScoreThenId);
  return sorted.every((row, i) => row.rank === i + 1);
}

export function applySnapshot(
  state: QueueState,
  response: SessionsResponse,
): QueueState {
  const rows = ranksConsistent(response.assessments)
    ? [...response.assessments].sort((a, b) => a.rank - b.rank)
    : sortForDisplay(response.assessments);
  return {
    rows,
    stale: false,
    lastServerTime: response.server_time,
    notices: state.notices,
  };
}

/** Notices are toasts: the next timer-driven poll sweeps them away. */
export function clearNotices(state: QueueState): QueueState {
  return state.notices.length === 0 ? state : { ...state, notices: [] };
}

export function markStale(state: QueueState): QueueState {
  return { ...state, stale: true };
}

export function applyAck(
  state: QueueState,
  studentId: string,
  acknowledged: boolean,
): QueueState {
  return {
    ...state,
    rows: state.rows.map((row) =>
      row.student_id === studentId ? { ...row, acknowledged } : row,
    ),
  };
}

/** Fold the ack endpoint's bare assessment into the displayed row. */
export function mergeServerRow(
  state: QueueState,
  serverRow: AckResponse,
): QueueState {
  return {
    ...state,
    rows: state.rows.map((row) =>
      row.student_id === serverRow.student_id
        ? { ...row, ...serverRow, recent_activity: row.recent_activity }
        : row,
    ),
  };
}

export function removeRow(
  state: QueueState,
  studentId: string,
  notice: string,
): QueueState {
  const rows = sortForDisplay(
    state.rows.filter((row) => row.student_id !== studentId),
  );
  return { ...state, rows, notices: [...state.notices, notice] };
}

export function isAlert(row: TriageRow, threshold: number): boolean {
  return row.score >= threshold;
}

const BLOCKS = ["▁", "▂", "▃", "▄", "▅", "▆", "▇", "█"];

/** Unicode block sparkline; empty input gives an empty string. */
export function sparkline(counts: number[]): string {
  if (counts.length === 0) return "";
  const peak = Math.max(...counts);
  if (peak <= 0) return BLOCKS[0]!.repeat(counts.length);
  return counts
    .map((c) => BLOCKS[Math.round((c / peak) * (BLOCKS.length - 1))])
    .join("");
}
