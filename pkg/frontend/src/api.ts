// Thin typed client for the /v1 experiment service.

import type { Defaults, ExperimentStatus, FieldError, PolicyInfo, ResultsPayload } from "./types";

export class ApiError extends Error {
  status: number;
  fieldErrors: FieldError[];

  constructor(status: number, message: string, fieldErrors: FieldError[] = []) {
    super(message);
    this.status = status;
    this.fieldErrors = fieldErrors;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}/v1${path}`, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const errors: FieldError[] = Array.isArray(body.errors) ? body.errors : [];
      const message =
        errors.map((e) => `${e.field}: ${e.message}`).join("; ") ||
        body.error ||
        `request failed with ${response.status}`;
      throw new ApiError(response.status, message, errors);
    }
    return body as T;
  }

  policies(): Promise<{ policies: PolicyInfo[] }> {
    return this.request("/policies");
  }

  defaults(): Promise<Defaults> {
    return this.request("/defaults");
  }

  submitExperiment(body: Record<string, unknown>): Promise<{ id: string }> {
    return this.request("/experiments", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  status(id: string): Promise<ExperimentStatus> {
    return this.request(`/experiments/${id}`);
  }

  results(id: string): Promise<ResultsPayload> {
    return this.request(`/experiments/${id}/results`);
  }

  cancel(id: string): Promise<{ id: string; state: string }> {
    return this.request(`/experiments/${id}`, { method: "DELETE" });
  }
}
