/** Single rendering loop: one poll in flight at most, actions serialized. */

import { HttpError } from "./api.js";
import type { AckResponse, SessionsResponse } from "./types.js";
import {
  QueueState,
  applyAck,
  applySnapshot,
  clearNotices,
  initialState,
  markStale,
  mergeServerRow,
  removeRow,
} from "./state.js";

/** The slice of the service the queue needs; detail views go through TriageApi. */
export interface QueueApi {
  sessions(): Promise<SessionsResponse>;
  setAcknowledged(studentId: string, acknowledged: boolean): Promise<AckResponse>;
}

export class TriageController {
  private state: QueueState = initialState();
  private inFlight = false;
  private timer: ReturnType<typeof setInterval> | null = null;
  private actions: Promise<void> = Promise.resolve();

  constructor(
    private readonly api: QueueApi,
    private readonly render: (state: QueueState) => void,
    private readonly intervalMs: number = 5000,
  ) {}

  current(): QueueState {
    return this.state;
  }

  start(): void {
    if (this.timer !== null) return;
    void this.pollOnce(true);
    this.timer = setInterval(() => void this.pollOnce(true), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  async pollOnce(sweepNotices = false): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      const response = await this.api.sessions();
      const base = sweepNotices ? clearNotices(this.state) : this.state;
      this.state = applySnapshot(base, response);
    } catch {
      // Keep the last snapshot on any failure; the view shows it as stale.
      this.state = markStale(this.state);
    } finally {
      this.inFlight = false;
    }
    this.render(this.state);
  }

  /**
   * Flip a row's acknowledged flag.
   *
   * The flip shows immediately; the request joins a serial queue. A failed
   * request rolls the row back, a 404 removes it with a notice and refreshes
   * the list. Returns a promise settling when this action has been applied.
   */
  toggleAck(studentId: string): Promise<void> {
    const row = this.state.rows.find((r) => r.student_id === studentId);
    if (row === undefined) return this.actions;
    const target = !row.acknowledged;
    this.state = applyAck(this.state, studentId, target);
    this.render(this.state);
    this.actions = this.actions.then(async () => {
      try {
        const updated = await this.api.setAcknowledged(studentId, target);
        this.state = mergeServerRow(this.state, updated);
        this.render(this.state);
      } catch (err) {
        if (err instanceof HttpError && err.status === 404) {
          this.state = removeRow(
            this.state,
            studentId,
            `${studentId} left the exercise; row removed`,
          );
          this.render(this.state);
          await this.pollOnce();
        } else {
          this.state = applyAck(this.state, studentId, !target);
          this.render(this.state);
        }
      }
    });
    return this.actions;
  }
}
