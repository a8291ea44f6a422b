/** Typed client for the chat-service HTTP surface. Nothing else in the
 * app talks to the network. `fetch` and `EventSource` are injectable so
 * tests can run against scripted fakes. */

import type {
  MessageResult,
  SessionSummary,
  StoredRecordWire,
  TranscriptView,
} from "./types.js";

export class HttpError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

/** 409: a turn is already running in this session. */
export class TurnBusy extends HttpError {}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function raiseForStatus(response: Response): Promise<Response> {
  if (response.ok) return response;
  let detail = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the generic detail
  }
  if (response.status === 409) throw new TurnBusy(409, detail);
  throw new HttpError(response.status, detail);
}

export class ApiClient {
  constructor(
    private readonly base = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await raiseForStatus(await this.fetchFn(this.base + path, init));
    return (await response.json()) as T;
  }

  async listSessions(): Promise<SessionSummary[]> {
    const body = await this.json<{ sessions: SessionSummary[] }>("/sessions");
    return body.sessions;
  }

  async createSession(title?: string): Promise<string> {
    const body = await this.json<{ session_id: string }>("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(title ? { title } : {}),
    });
    return body.session_id;
  }

  transcript(sessionId: string): Promise<TranscriptView> {
    return this.json(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  postMessage(sessionId: string, text: string): Promise<MessageResult> {
    return this.json(`/sessions/${encodeURIComponent(sessionId)}/messages`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  async schemaMarkdown(): Promise<string> {
    const response = await raiseForStatus(await this.fetchFn(this.base + "/schema"));
    return response.text();
  }
}

// -- event streaming -------------------------------------------------------

const RECORD_KINDS = ["user_message", "agent_event", "reply"] as const;

export interface EventSourceLike {
  addEventListener(type: string, listener: (event: MessageEvent) => void): void;
  close(): void;
  onerror: ((event: unknown) => void) | null;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface StreamOptions {
  base?: string;
  /** resume after this record index; -1 replays from the start */
  after?: number;
  factory?: EventSourceFactory;
  retryMs?: number;
  onReconnect?: (attempt: number) => void;
}

/** Subscribe to a session's record stream. Reconnects on error and
 * resumes from the last index it saw, so records are delivered exactly
 * once, in order. Returns a function that closes the stream. */
export function streamRecords(
  sessionId: string,
  onRecord: (record: StoredRecordWire) => void,
  options: StreamOptions = {},
): () => void {
  const base = options.base ?? "";
  const factory: EventSourceFactory =
    options.factory ?? ((url) => new EventSource(url) as unknown as EventSourceLike);
  const retryMs = options.retryMs ?? 1000;

  let lastIndex = options.after ?? -1;
  let source: EventSourceLike | null = null;
  let closed = false;
  let attempts = 0;

  const connect = () => {
    if (closed) return;
    const url =
      `${base}/sessions/${encodeURIComponent(sessionId)}/events?after=${lastIndex}`;
    source = factory(url);
    for (const kind of RECORD_KINDS) {
      source.addEventListener(kind, (event) => {
        const record = JSON.parse(event.data) as StoredRecordWire;
        if (record.index <= lastIndex) return; // replayed overlap
        lastIndex = record.index;
        onRecord(record);
      });
    }
    source.onerror = () => {
      source?.close();
      if (closed) return;
      attempts += 1;
      options.onReconnect?.(attempts);
      setTimeout(connect, Math.min(retryMs * attempts, 15000));
    };
  };

  connect();
  return () => {
    closed = true;
    source?.close();
  };
}
