import type { AlertView, ResultView } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`API error ${status}: ${detail}`);
  }
}

/** 409 from the resolve endpoint: someone already resolved this alert. */
export class ConflictError extends ApiError {}

export class NotFoundError extends ApiError {}

async function raiseFor(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  if (response.status === 409) throw new ConflictError(409, detail);
  if (response.status === 404) throw new NotFoundError(404, detail);
  throw new ApiError(response.status, detail);
}

export class ReviewApi {
  constructor(readonly baseUrl: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as T;
  }

  async listAlerts(status: "open" | "all" = "open"): Promise<AlertView[]> {
    const doc = await this.getJson<{ alerts: AlertView[] }>(
      `/api/alerts?status=${status}`,
    );
    return doc.alerts;
  }

  getAlert(alertId: string): Promise<AlertView> {
    return this.getJson<AlertView>(`/api/alerts/${encodeURIComponent(alertId)}`);
  }

  async resolveAlert(
    alertId: string,
    resolvedValue: boolean,
    resolver = "reviewer",
  ): Promise<AlertView> {
    const response = await fetch(
      `${this.baseUrl}/api/alerts/${encodeURIComponent(alertId)}/resolve`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ resolved_value: resolvedValue, resolver }),
      },
    );
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as AlertView;
  }

  getResult(sampleId: string): Promise<ResultView> {
    return this.getJson<ResultView>(
      `/api/samples/${encodeURIComponent(sampleId)}/result`,
    );
  }

  async getImage(sampleId: string): Promise<ArrayBuffer> {
    const response = await fetch(
      `${this.baseUrl}/api/samples/${encodeURIComponent(sampleId)}/image`,
    );
    if (!response.ok) await raiseFor(response);
    return response.arrayBuffer();
  }
}
