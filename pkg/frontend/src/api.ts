import type {
  MetricsResponse,
  MunicipalitiesResponse,
  WhatifRequest,
  WhatifResponse,
} from './types.js';

export class ApiHttpError extends Error {
  status: number;
  detail: string;

  constructor(status: number, error: string, detail: string) {
    super(error);
    this.status = status;
    this.detail = detail;
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) return (await response.json()) as T;
  let error = `HTTP ${response.status}`;
  let detail = '';
  try {
    const body = await response.json();
    error = body.error ?? error;
    detail = body.detail ?? '';
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiHttpError(response.status, error, detail);
}

export class ApiClient {
  private whatifController: AbortController | null = null;

  constructor(readonly baseUrl: string) {}

  async municipalities(filters: {
    year?: string;
    state?: string;
    level?: string;
  }): Promise<MunicipalitiesResponse> {
    const params = new URLSearchParams();
    if (filters.year) params.set('year', filters.year);
    if (filters.state) params.set('state', filters.state);
    if (filters.level) params.set('level', filters.level);
    const qs = params.toString();
    const url = `${this.baseUrl}/api/municipalities${qs ? `?${qs}` : ''}`;
    return parseOrThrow(await fetch(url));
  }

  async metrics(): Promise<MetricsResponse> {
    return parseOrThrow(await fetch(`${this.baseUrl}/api/metrics`));
  }

  /** Posts a what-if query; an earlier in-flight request is aborted so the
   * latest slider position always wins. */
  async whatif(body: WhatifRequest): Promise<WhatifResponse> {
    this.whatifController?.abort();
    const controller = new AbortController();
    this.whatifController = controller;
    const response = await fetch(`${this.baseUrl}/api/whatif`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
      signal: controller.signal,
    });
    return parseOrThrow(await Promise.resolve(response));
  }
}
