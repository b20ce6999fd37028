/** Thin client for the service JSON API. */

import { ExampleRow, QueryParams, SlicesResponse } from "./types.js";

export interface SlicesResult {
  body: SlicesResponse;
  cacheOnly: boolean;
}

async function asJson(response: Response): Promise<any> {
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      detail = JSON.stringify(body.detail ?? body);
    } catch {
      // keep the status code
    }
    throw new Error(`request failed: ${detail}`);
  }
  return response.json();
}

export async function uploadDataset(
  baseUrl: string,
  body: {
    content?: string;
    path?: string;
    label_column: string;
    score_column: string;
    delimiter?: string;
    loss_kind?: string;
  },
): Promise<{ dataset_id: string; report: unknown }> {
  const response = await fetch(`${baseUrl}/v1/datasets`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  return asJson(response);
}

export async function createSession(
  baseUrl: string,
  body: { dataset_id: string } & Record<string, unknown>,
): Promise<{ session_id: string }> {
  const response = await fetch(`${baseUrl}/v1/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  return asJson(response);
}

export async function fetchSlices(
  baseUrl: string,
  sessionId: string,
  params: QueryParams,
): Promise<SlicesResult> {
  const search = new URLSearchParams({
    k: String(params.k),
    min_effect_size: String(params.minEffectSize),
  });
  const response = await fetch(
    `${baseUrl}/v1/sessions/${sessionId}/slices?${search}`,
  );
  const body = (await asJson(response)) as SlicesResponse;
  return { body, cacheOnly: response.headers.get("x-cache-only") === "true" };
}

export async function fetchExamples(
  baseUrl: string,
  sessionId: string,
  sliceId: string,
  limit: number,
): Promise<{ rows: ExampleRow[] }> {
  const response = await fetch(
    `${baseUrl}/v1/sessions/${sessionId}/slices/${sliceId}/examples?limit=${limit}`,
  );
  return asJson(response);
}
