// Console state: rolling per-section traces, alarm cards, model version.
//
// The console is stateless with respect to detection: everything here is
// rebuilt from /alarms + the event stream, so a page reload reconstructs the
// same view. Alarm card status only changes on server acknowledgement.

import type { AlarmInfo, TelemetryEvent, TracePoint } from "./types.js";

export interface SectionTrace {
  points: TracePoint[];
  discontinuityAt: number | null;
}

export class ConsoleStore {
  sections: SectionTrace[] = [];
  alarms = new Map<number, AlarmInfo>();
  modelVersion = 1;
  finished = false;
  retention: number;
  listeners: Array<() => void> = [];

  constructor(retention = 2000) {
    this.retention = retention;
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  private section(g: number): SectionTrace {
    while (this.sections.length <= g) {
      this.sections.push({ points: [], discontinuityAt: null });
    }
    return this.sections[g];
  }

  seedAlarms(alarms: AlarmInfo[]): void {
    for (const alarm of alarms) this.alarms.set(alarm.id, alarm);
    this.notify();
  }

  applyEvent(event: TelemetryEvent): void {
    switch (event.type) {
      case "interval": {
        for (let g = 0; g < event.mse.length; g += 1) {
          const trace = this.section(g);
          for (let i = 0; i < event.ticks.length; i += 1) {
            trace.points.push({
              t: event.ticks[i],
              mse: event.mse[g][i],
              threshold: event.thresholds[g],
              modelVersion: event.model_version,
            });
          }
          if (trace.points.length > this.retention) {
            trace.points.splice(0, trace.points.length - this.retention);
          }
        }
        this.modelVersion = Math.max(this.modelVersion, event.model_version);
        break;
      }
      case "alarm": {
        const existing = this.alarms.get(event.alarm.id);
        // server acks drive status; never regress a resolved card to open
        if (!existing || existing.status === "open") {
          this.alarms.set(event.alarm.id, event.alarm);
        }
        break;
      }
      case "adaptation": {
        this.modelVersion = Math.max(this.modelVersion, event.model_version);
        break;
      }
      case "gap": {
        for (const trace of this.sections) {
          const last = trace.points[trace.points.length - 1];
          trace.discontinuityAt = last ? last.t : 0;
        }
        break;
      }
      case "status": {
        if (event.state === "finished") this.finished = true;
        break;
      }
    }
    this.notify();
  }

  setAlarmStatus(alarmId: number, status: AlarmInfo["status"], modelVersion?: number): void {
    const alarm = this.alarms.get(alarmId);
    if (!alarm) return;
    this.alarms.set(alarmId, { ...alarm, status });
    if (modelVersion !== undefined) {
      this.modelVersion = Math.max(this.modelVersion, modelVersion);
    }
    this.notify();
  }

  openAlarms(): AlarmInfo[] {
    return [...this.alarms.values()]
      .filter((alarm) => alarm.status === "open")
      .sort((a, b) => a.t_reported - b.t_reported);
  }

  versionChangePoints(g: number): number[] {
    const trace = this.sections[g];
    if (!trace) return [];
    const changes: number[] = [];
    for (let i = 1; i < trace.points.length; i += 1) {
      if (trace.points[i].modelVersion !== trace.points[i - 1].modelVersion) {
        changes.push(trace.points[i].t);
      }
    }
    return changes;
  }
}
