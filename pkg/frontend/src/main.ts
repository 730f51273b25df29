// Console bootstrap: wire the store to the event stream and the DOM.

import { ApiClient } from "./api.js";
import { renderSectionChart } from "./charts.js";
import { EventFeed, pumpEvents, subscribeSse } from "./events.js";
import { ConsoleStore } from "./store.js";
import { TriageController } from "./triage.js";
import type { AlarmInfo } from "./types.js";

const api = new ApiClient("");
const store = new ConsoleStore();
const triage = new TriageController(api, store);
const feed = new EventFeed((event) => store.applyEvent(event));

function alarmCard(alarm: AlarmInfo, sections: number): HTMLElement {
  const card = document.createElement("div");
  card.className = "alarm-card";
  const where = alarm.source === "actuator" ? "actuator state" : `section ${alarm.section}`;
  card.innerHTML = `
    <div class="alarm-head">#${alarm.id} &middot; t=${alarm.t_reported} &middot; ${where}</div>
    <div class="alarm-meta">${alarm.mse !== null ? `error ${alarm.mse.toExponential(2)} vs threshold ${alarm.threshold?.toExponential(2)}` : "unknown actuator combination"}</div>
    <form class="fa-flags">
      <label><input type="checkbox" name="actuators" ${alarm.source === "actuator" ? "checked" : ""}/> actuators</label>
      ${Array.from({ length: sections }, (_, g) =>
        `<label><input type="checkbox" name="section-${g}" ${alarm.section === g ? "checked" : ""}/> section ${g}</label>`,
      ).join("")}
    </form>
    <div class="alarm-actions">
      <button class="dismiss">dismiss as false</button>
      <button class="confirm">confirm anomaly</button>
      <span class="error-toast"></span>
    </div>`;

  const toast = card.querySelector<HTMLElement>(".error-toast")!;
  card.querySelector<HTMLButtonElement>(".dismiss")!.addEventListener("click", async (ev) => {
    ev.preventDefault();
    const form = card.querySelector<HTMLFormElement>(".fa-flags")!;
    const flags = {
      actuators: (form.elements.namedItem("actuators") as HTMLInputElement).checked,
      sections: Array.from({ length: sections }, (_, g) => g).filter(
        (g) => (form.elements.namedItem(`section-${g}`) as HTMLInputElement).checked,
      ),
    };
    const result = await triage.dismiss(alarm.id, flags);
    if (!result.ok) toast.textContent = result.error ?? "failed";
  });
  card.querySelector<HTMLButtonElement>(".confirm")!.addEventListener("click", async (ev) => {
    ev.preventDefault();
    const result = await triage.confirm(alarm.id);
    if (!result.ok) toast.textContent = result.error ?? "failed";
  });
  return card;
}

function render(sections: number): void {
  const charts = document.getElementById("charts")!;
  charts.innerHTML = store.sections
    .map((trace, g) =>
      renderSectionChart(g, trace, [...store.alarms.values()], store.versionChangePoints(g), {
        width: charts.clientWidth || 860,
        height: 180,
        logScale: true,
      }),
    )
    .join("");
  const list = document.getElementById("alarms")!;
  list.replaceChildren(...store.openAlarms().map((alarm) => alarmCard(alarm, sections)));
  document.getElementById("version")!.textContent = `model v${store.modelVersion}`;
}

async function start(): Promise<void> {
  const status = await api.status();
  store.seedAlarms(await api.alarms());
  let dirty = true;
  store.onChange(() => {
    dirty = true;
  });
  setInterval(() => {
    if (dirty) {
      dirty = false;
      render(status.sections);
    }
  }, 250);

  if (typeof EventSource !== "undefined") {
    subscribeSse(feed, "/events");
  } else {
    void pumpEvents(feed, (since) => api.events(since, 10), () => store.finished);
  }

  document.getElementById("start")!.addEventListener("click", () => {
    const speed = Number((document.getElementById("speed") as HTMLInputElement).value || "0");
    void api.session("start", { speed });
  });
  document.getElementById("pause")!.addEventListener("click", () => void api.session("pause"));
  document.getElementById("resume")!.addEventListener("click", () => void api.session("resume"));
}

void start();
