// Typed client for the service API. Errors arrive as structured
// {code, message, detail} bodies and are rethrown as ApiError.

import type {
  Channel,
  CompletionParams,
  SessionSnapshot,
  SketchJson,
  StatsJson,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
    public detail: Record<string, unknown> = {},
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, '');
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      headers: { 'content-type': 'application/json' },
      ...init,
    });
    const text = await response.text();
    let body: any = null;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      body = null;
    }
    if (!response.ok) {
      if (body && typeof body.code === 'string') {
        throw new ApiError(body.code, body.message ?? text, response.status, body.detail ?? {});
      }
      throw new ApiError('http_error', text || response.statusText, response.status);
    }
    return body as T;
  }

  createSession(theme: SketchJson, id?: string, turnOrder?: Channel[]): Promise<SessionSnapshot> {
    return this.request('/sessions', {
      method: 'POST',
      body: JSON.stringify({ theme, id, turn_order: turnOrder }),
    });
  }

  getSession(id: string): Promise<SessionSnapshot> {
    return this.request(`/sessions/${encodeURIComponent(id)}`);
  }

  submitStrokes(id: string, player: Channel, sketch: SketchJson): Promise<SessionSnapshot> {
    return this.request(`/sessions/${encodeURIComponent(id)}/strokes`, {
      method: 'POST',
      body: JSON.stringify({ player, sketch }),
    });
  }

  complete(
    id: string,
    params: CompletionParams,
  ): Promise<{ suggestion: unknown; sketch: SketchJson; state: SessionSnapshot }> {
    return this.request(`/sessions/${encodeURIComponent(id)}/complete`, {
      method: 'POST',
      body: JSON.stringify(params),
    });
  }

  resolve(
    id: string,
    decision: 'accept' | 'modify' | 'reject',
    sketch?: SketchJson,
  ): Promise<SessionSnapshot> {
    return this.request(`/sessions/${encodeURIComponent(id)}/resolve`, {
      method: 'POST',
      body: JSON.stringify({ decision, sketch }),
    });
  }

  consensus(id: string, player: Channel): Promise<SessionSnapshot> {
    return this.request(`/sessions/${encodeURIComponent(id)}/consensus`, {
      method: 'POST',
      body: JSON.stringify({ player }),
    });
  }

  stats(id: string): Promise<StatsJson> {
    return this.request(`/sessions/${encodeURIComponent(id)}/stats`);
  }

  health(): Promise<{ status: string; checkpoint: string }> {
    return this.request('/healthz');
  }

  eventsUrl(id: string, since = 0): string {
    const ws = this.baseUrl.replace(/^http/, 'ws');
    return `${ws}/sessions/${encodeURIComponent(id)}/events?since=${since}`;
  }
}
