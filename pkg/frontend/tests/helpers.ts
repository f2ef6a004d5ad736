import { vi } from "vitest";
import type { AlertView, ResultView } from "../src/types.js";

export function makeAlert(overrides: Partial<AlertView> = {}): AlertView {
  return {
    alert_id: "s0001:pose",
    sample_id: "s0001",
    kind: "pose",
    human_value: true,
    ai_value: false,
    resolution: null,
    ...overrides,
  };
}

export function makeResult(overrides: Partial<ResultView> = {}): ResultView {
  return {
    sample_id: "s0001",
    fusion_pose: { kind: "pose", alert: false, human_value: true, ai_value: true },
    fusion_rostrum: { kind: "rostrum", alert: false, human_value: true, ai_value: true },
    skeleton: null,
    measurements_px: null,
    measurements_cm: null,
    status: "awaiting_review",
    failure_reason: null,
    ...overrides,
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** 2x2 black P6 image, enough for the image endpoint. */
export function tinyPpm(): ArrayBuffer {
  const header = new TextEncoder().encode("P6\n2 2\n255\n");
  const out = new Uint8Array(header.length + 12);
  out.set(header, 0);
  return out.buffer;
}

export type RouteTable = Record<string, (init?: RequestInit) => Response | Promise<Response>>;

/**
 * Installs a fetch mock keyed by "METHOD path". Routes can be swapped between
 * calls by mutating the table.
 */
export function mockFetch(routes: RouteTable): ReturnType<typeof vi.fn> {
  const fn = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const handler = routes[`${method} ${path}`];
    if (!handler) {
      return new Response(JSON.stringify({ detail: `no route ${method} ${path}` }), {
        status: 404,
      });
    }
    return handler(init);
  });
  vi.stubGlobal("fetch", fn);
  return fn;
}

/** Waits for queued microtasks (pending awaits in event handlers) to settle. */
export async function flush(): Promise<void> {
  for (let i = 0; i < 10; i += 1) await Promise.resolve();
}
