import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ConsoleStore } from "../src/store.js";
import { TriageController } from "../src/triage.js";
import { MockService, openAlarm } from "./mockService.js";

function setup() {
  const service = new MockService();
  service.alarms = [openAlarm(1, 1), openAlarm(2, null)];
  const api = new ApiClient("http://mock", service.fetch);
  const store = new ConsoleStore();
  store.seedAlarms(service.alarms);
  return { service, api, store, triage: new TriageController(api, store) };
}

describe("alarm triage", () => {
  it("dismissing with section flags sends exactly one request with matching flags", async () => {
    const { service, store, triage } = setup();
    const result = await triage.dismiss(1, { actuators: false, sections: [1] });
    expect(result.ok).toBe(true);
    expect(service.feedbackRequests).toHaveLength(1);
    const sent = service.feedbackRequests[0];
    expect(sent.alarmId).toBe(1);
    expect(sent.request.verdict).toBe("false-alarm");
    expect(sent.request.fa).toEqual({ actuators: false, sections: [1] });
    // the card closes only on the server's ack, and the version bump lands
    expect(store.alarms.get(1)?.status).toBe("dismissed");
    expect(store.modelVersion).toBe(2);
  });

  it("confirming produces no flag-carrying feedback and no version change", async () => {
    const { service, store, triage } = setup();
    const result = await triage.confirm(2);
    expect(result.ok).toBe(true);
    const withFlags = service.feedbackRequests.filter((r) => r.request.fa !== undefined);
    expect(withFlags).toHaveLength(0);
    expect(service.feedbackRequests.map((r) => r.request.verdict)).toEqual(["true-anomaly"]);
    expect(store.alarms.get(2)?.status).toBe("confirmed");
    expect(store.modelVersion).toBe(1);
  });

  it("a double-clicked dismissal is a single request", async () => {
    const { service, triage } = setup();
    service.feedbackDelayMs = 20;
    const [first, second] = await Promise.all([
      triage.dismiss(1, { actuators: true, sections: [] }),
      triage.dismiss(1, { actuators: true, sections: [] }),
    ]);
    expect(service.feedbackRequests).toHaveLength(1);
    expect([first.ok, second.ok].sort()).toEqual([false, true]);
  });

  it("server rejection leaves the card open with the reason", async () => {
    const { service, store, triage } = setup();
    service.failNextFeedback = "alarm already dismissed";
    const result = await triage.dismiss(1, { actuators: false, sections: [0] });
    expect(result.ok).toBe(false);
    expect(result.error).toBe("alarm already dismissed");
    expect(store.alarms.get(1)?.status).toBe("open");
  });
});
