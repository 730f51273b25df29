// Wire types for the replay/feedback service.

export interface ServiceStatus {
  state: "idle" | "running" | "paused" | "finished";
  cursor: number;
  speed: number;
  records: number;
  model_version: number;
  sections: number;
  alarms: number;
  last_seq: number;
}

export interface IntervalEvent {
  seq: number;
  type: "interval";
  t_start: number;
  t_end: number;
  ticks: number[];
  mse: number[][]; // [section][tick]
  thresholds: number[]; // per section, constant over the interval
  labels: number[];
  alarm_ids: number[];
  model_version: number;
}

export interface AlarmInfo {
  id: number;
  t_start: number;
  t_reported: number;
  t_last: number;
  source: "actuator" | "section";
  section: number | null;
  mse: number | null;
  threshold: number | null;
  model_version: number;
  status: "open" | "confirmed" | "dismissed";
}

export interface AlarmEvent {
  seq: number;
  type: "alarm";
  alarm: AlarmInfo;
}

export interface AdaptationEvent {
  seq: number;
  type: "adaptation";
  model_version: number;
  report: Record<string, unknown>;
}

export interface GapEvent {
  seq: number;
  type: "gap";
  dropped_through: number;
}

export interface StatusEvent {
  seq: number;
  type: "status";
  state: string;
  cursor: number;
}

export type TelemetryEvent =
  | IntervalEvent
  | AlarmEvent
  | AdaptationEvent
  | GapEvent
  | StatusEvent;

export interface FeedbackFlags {
  actuators: boolean;
  sections: number[];
}

export interface FeedbackRequest {
  verdict: "true-anomaly" | "false-alarm";
  fa?: FeedbackFlags;
}

export interface FeedbackResponse {
  alarm_id: number;
  verdict: string;
  adapted: boolean;
  model_version: number;
}

export interface TracePoint {
  t: number;
  mse: number;
  threshold: number;
  modelVersion: number;
}
