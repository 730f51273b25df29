import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { EventFeed, pumpEvents } from "../src/events.js";
import { ConsoleStore } from "../src/store.js";
import type { TelemetryEvent } from "../src/types.js";
import { MockService, intervalEvent } from "./mockService.js";

describe("event feed", () => {
  it("drops already-applied sequence numbers after a reconnect", () => {
    const applied: number[] = [];
    const feed = new EventFeed((event) => applied.push(event.seq));
    feed.acceptBatch([1, 2, 3, 4, 5].map((seq) => intervalEvent(seq, seq * 4)));
    // reconnect replays an overlapping window
    feed.acceptBatch([3, 4, 5, 6, 7, 8].map((seq) => intervalEvent(seq, seq * 4)));
    expect(applied).toEqual([1, 2, 3, 4, 5, 6, 7, 8]);
  });

  it("no double-plotted points after reconnect", () => {
    const store = new ConsoleStore();
    const feed = new EventFeed((event) => store.applyEvent(event));
    feed.acceptBatch([1, 2, 3].map((seq) => intervalEvent(seq, seq * 4)));
    feed.acceptBatch([2, 3, 4].map((seq) => intervalEvent(seq, seq * 4)));
    const ts = store.sections[0].points.map((p) => p.t);
    expect(new Set(ts).size).toBe(ts.length);
    expect(ts).toHaveLength(4 * 4);
  });

  it("gap markers pass through and mark a discontinuity", () => {
    const store = new ConsoleStore();
    const feed = new EventFeed((event) => store.applyEvent(event));
    feed.accept(intervalEvent(1, 0));
    feed.accept({ seq: 1, type: "gap", dropped_through: 5 } as TelemetryEvent);
    expect(store.sections[0].discontinuityAt).not.toBeNull();
  });

  it("polling pump fetches until told to stop", async () => {
    const service = new MockService();
    service.events = [1, 2, 3].map((seq) => intervalEvent(seq, seq * 4));
    const api = new ApiClient("http://mock", service.fetch);
    const applied: number[] = [];
    const feed = new EventFeed((event) => applied.push(event.seq));
    let stop = false;
    await pumpEvents(
      feed,
      async (since) => {
        const batch = await api.events(since);
        if (batch.events.length === 0) stop = true;
        return batch;
      },
      () => stop,
    );
    expect(applied).toEqual([1, 2, 3]);
    expect(feed.lastSeq).toBe(3);
  });
});
