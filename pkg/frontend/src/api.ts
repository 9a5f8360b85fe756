/** Typed fetch client for the conversation service. The UI talks to the
 * engine exclusively through these endpoints. */

export interface EntityMatch {
  id: string;
  name: string;
  entity_type: string;
  match_score: number;
  rank_score: number;
}

export interface FilterVerdict {
  blocked: boolean;
  category?: string | null;
  trigger?: string | null;
  exemption?: string | null;
}

export interface TurnDebug {
  intent: string;
  topic_user: string | null;
  topic: string;
  sentiment: number;
  is_question: boolean;
  entities: EntityMatch[];
  input_filter: FilterVerdict;
  output_filter?: FilterVerdict;
  generator: string;
  ranker?: string;
  latency_ms: number;
  topic_change?: string;
  movie?: { current: string; question_kind: string; stack_size: number };
  [key: string]: unknown;
}

export interface TurnEnvelope {
  session_id: string;
  turn_index: number;
  text: string;
  closed: boolean;
  debug: TurnDebug;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service responded ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers: { "content-type": "application/json", ...(init?.headers ?? {}) },
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  async health(): Promise<{ status: string; sessions: number }> {
    return this.request("/health");
  }

  async createSession(deviceId?: string): Promise<string> {
    const body = JSON.stringify(deviceId ? { device_id: deviceId } : {});
    const out = await this.request<{ session_id: string }>("/sessions", {
      method: "POST",
      body,
    });
    return out.session_id;
  }

  async sendTurn(sessionId: string, text: string): Promise<TurnEnvelope> {
    return this.request(`/sessions/${sessionId}/turns`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  async getSession(sessionId: string): Promise<Record<string, unknown>> {
    return this.request(`/sessions/${sessionId}`);
  }

  async deleteSession(sessionId: string): Promise<void> {
    await this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }
}
