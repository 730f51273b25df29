// Thin JSON client over the service endpoints. The fetch implementation is
// injectable so tests can run against a scripted mock.

import type {
  AlarmInfo,
  FeedbackRequest,
  FeedbackResponse,
  ServiceStatus,
  TelemetryEvent,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  status(): Promise<ServiceStatus> {
    return this.request<ServiceStatus>("/status");
  }

  session(action: string, params: { speed?: number; to?: number } = {}): Promise<unknown> {
    return this.request("/session", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ action, ...params }),
    });
  }

  async events(since: number, wait = 0): Promise<{ events: TelemetryEvent[]; next: number }> {
    const query = wait > 0 ? `since=${since}&wait=${wait}` : `since=${since}`;
    return this.request(`/events?${query}`);
  }

  async alarms(): Promise<AlarmInfo[]> {
    const body = await this.request<{ alarms: AlarmInfo[] }>("/alarms");
    return body.alarms;
  }

  feedback(alarmId: number, request: FeedbackRequest): Promise<FeedbackResponse> {
    return this.request(`/alarms/${alarmId}/feedback`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
  }

  modelVersion(): Promise<{ version: number }> {
    return this.request("/model/version");
  }
}
