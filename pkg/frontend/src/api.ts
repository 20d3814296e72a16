/**
 * Typed client for the session service. All reads go through the schema
 * validators; polling keeps a monotone cursor so no event is seen twice.
 */
import {
  parsePollResponse,
  type EditJson,
  type HierarchyJson,
  type PollResponse,
  type SessionEvent,
} from "./schema";
import { HierarchySchema, SchemaMismatch } from "./schema";

export interface AnswerBody {
  edits: EditJson[];
  deselected: string[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class SessionClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await res.json().catch(() => ({}));
    if (!res.ok) {
      const detail =
        typeof (body as { detail?: unknown }).detail === "string"
          ? (body as { detail: string }).detail
          : res.statusText;
      throw new ApiError(res.status, detail);
    }
    return body;
  }

  async createSession(config: Record<string, unknown>): Promise<string> {
    const body = (await this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ config }),
    })) as { id: string };
    return body.id;
  }

  async pollEvents(id: string, since: number): Promise<PollResponse> {
    return parsePollResponse(
      await this.request(`/sessions/${id}/events?since=${since}`),
    );
  }

  async submitAnswer(id: string, answer: AnswerBody): Promise<unknown> {
    return this.request(`/sessions/${id}/answer`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(answer),
    });
  }

  async hierarchy(id: string): Promise<HierarchyJson> {
    const raw = await this.request(`/sessions/${id}/hierarchy`);
    const parsed = HierarchySchema.safeParse(raw);
    if (!parsed.success) throw new SchemaMismatch(parsed.error.message, raw);
    return parsed.data;
  }
}

export interface PollerHooks {
  onEvent(event: SessionEvent): void;
  onStateChange?(state: PollResponse["state"]): void;
  onError?(err: unknown): void;
}

/**
 * Polling loop with a monotone cursor. Pauses itself when the session pauses
 * on a question (the next `resume()` picks up after the answer) and stops for
 * good when the session finishes.
 */
export class EventPoller {
  private cursor = -1;
  private running = false;

  constructor(
    private readonly client: SessionClient,
    private readonly sessionId: string,
    private readonly hooks: PollerHooks,
  ) {}

  get position(): number {
    return this.cursor;
  }

  /** Poll until the stream pauses or finishes; returns the final state. */
  async drain(): Promise<PollResponse["state"]> {
    this.running = true;
    let state: PollResponse["state"] = "streaming";
    while (this.running) {
      let res: PollResponse;
      try {
        res = await this.client.pollEvents(this.sessionId, this.cursor);
      } catch (err) {
        this.hooks.onError?.(err);
        throw err;
      }
      for (const event of res.events) {
        if (event.cursor <= this.cursor) continue; // never re-deliver
        this.cursor = event.cursor;
        this.hooks.onEvent(event);
      }
      if (res.state !== state) {
        state = res.state;
        this.hooks.onStateChange?.(state);
      }
      if (state !== "streaming") break;
    }
    this.running = false;
    return state;
  }

  stop(): void {
    this.running = false;
  }
}
