// Event intake with sequence-number deduplication.
//
// The service delivers events at-least-once with monotone `seq` numbers; a
// reconnecting consumer replays from its cursor and must drop what it has
// already applied. Gap markers (buffer overrun on the server) pass through
// so the UI can show a discontinuity instead of silently interpolating.

import type { TelemetryEvent } from "./types.js";

export class EventFeed {
  lastSeq = 0;
  private sink: (event: TelemetryEvent) => void;

  constructor(sink: (event: TelemetryEvent) => void) {
    this.sink = sink;
  }

  /** Applies one raw event; returns true when it was new. */
  accept(event: TelemetryEvent): boolean {
    if (event.type !== "gap" && event.seq <= this.lastSeq) {
      return false;
    }
    this.lastSeq = Math.max(this.lastSeq, event.seq);
    this.sink(event);
    return true;
  }

  acceptBatch(events: TelemetryEvent[]): number {
    let applied = 0;
    for (const event of events) {
      if (this.accept(event)) applied += 1;
    }
    return applied;
  }
}

/** Long-poll pump: repeatedly fetches events after the feed's cursor. */
export async function pumpEvents(
  feed: EventFeed,
  fetchEvents: (since: number) => Promise<{ events: TelemetryEvent[]; next: number }>,
  shouldStop: () => boolean,
): Promise<void> {
  while (!shouldStop()) {
    const batch = await fetchEvents(feed.lastSeq);
    feed.acceptBatch(batch.events);
    if (batch.events.length === 0 && shouldStop()) return;
  }
}

/** Wires a browser EventSource to the feed; returns a disposer. */
export function subscribeSse(feed: EventFeed, url: string): () => void {
  const source = new EventSource(`${url}?since=${feed.lastSeq}`);
  source.onmessage = (message) => {
    feed.accept(JSON.parse(message.data) as TelemetryEvent);
  };
  return () => source.close();
}
