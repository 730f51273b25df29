// Alarm triage: the dismiss dialog's flags become the per-source FA vector.
//
// Status is optimistic nowhere: cards update only on the server's ack, and
// an in-flight guard makes a double-clicked dismissal a single request.

import { ApiClient, ApiError } from "./api.js";
import { ConsoleStore } from "./store.js";
import type { FeedbackFlags, FeedbackResponse } from "./types.js";

export interface TriageResult {
  ok: boolean;
  error?: string;
}

export class TriageController {
  private inFlight = new Set<number>();

  constructor(
    private api: ApiClient,
    private store: ConsoleStore,
  ) {}

  async dismiss(alarmId: number, flags: FeedbackFlags): Promise<TriageResult> {
    return this.submit(alarmId, async () => {
      const response = await this.api.feedback(alarmId, {
        verdict: "false-alarm",
        fa: flags,
      });
      this.store.setAlarmStatus(alarmId, "dismissed", response.model_version);
      return response;
    });
  }

  async confirm(alarmId: number): Promise<TriageResult> {
    return this.submit(alarmId, async () => {
      const response = await this.api.feedback(alarmId, { verdict: "true-anomaly" });
      this.store.setAlarmStatus(alarmId, "confirmed", response.model_version);
      return response;
    });
  }

  private async submit(
    alarmId: number,
    send: () => Promise<FeedbackResponse>,
  ): Promise<TriageResult> {
    if (this.inFlight.has(alarmId)) {
      return { ok: false, error: "request already in flight" };
    }
    this.inFlight.add(alarmId);
    try {
      await send();
      return { ok: true };
    } catch (err) {
      // the card stays open; surface the server's reason
      const message = err instanceof ApiError ? err.message : String(err);
      return { ok: false, error: message };
    } finally {
      this.inFlight.delete(alarmId);
    }
  }
}
