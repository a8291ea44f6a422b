/** Scripted stand-ins for the chat service: an in-memory store behind a
 * fetch fake plus controllable EventSource fakes. Wire shapes mirror the
 * captured fixtures exactly. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { EventSourceLike } from "../src/api.js";
import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import type {
  SessionSummary,
  StoredRecordWire,
  TranscriptView,
  TurnStatus,
} from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export interface Scenario {
  records: StoredRecordWire[];
  transcript: TranscriptView;
}

export interface Fixtures {
  happy: Scenario;
  clarify_mid: Scenario;
  clarify_done: Scenario;
  failed: Scenario;
}

export function loadFixtures(): Fixtures {
  return JSON.parse(
    readFileSync(join(here, "fixtures", "records.json"), "utf-8"),
  ) as Fixtures;
}

export function loadSchemaMarkdown(): string {
  return readFileSync(join(here, "fixtures", "schema.md"), "utf-8");
}

/** Let queued microtasks and zero-delay timers run. */
export async function settle(rounds = 4): Promise<void> {
  for (let i = 0; i < rounds; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

export class FakeEventSource implements EventSourceLike {
  onerror: ((event: unknown) => void) | null = null;
  closed = false;
  private listeners = new Map<string, ((event: MessageEvent) => void)[]>();

  constructor(readonly url: string) {}

  addEventListener(type: string, listener: (event: MessageEvent) => void): void {
    const existing = this.listeners.get(type) ?? [];
    existing.push(listener);
    this.listeners.set(type, existing);
  }

  close(): void {
    this.closed = true;
  }

  emit(record: StoredRecordWire): void {
    if (this.closed) return;
    for (const listener of this.listeners.get(record.kind) ?? []) {
      listener({ data: JSON.stringify(record) } as MessageEvent);
    }
  }

  fail(): void {
    this.onerror?.({});
  }
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

interface FakeSession {
  summary: SessionSummary;
  records: StoredRecordWire[];
}

/** In-memory chat service. Posting a message runs the scripted turn:
 * the prepared records are appended one at a time and pushed through
 * every open stream, then the POST resolves, like the real service. */
export class FakeService {
  readonly sessions = new Map<string, FakeSession>();
  readonly posts: { sessionId: string; text: string }[] = [];
  readonly sources: FakeEventSource[] = [];
  schemaMarkdown = "# Database Guide\n\n## Introduction\n\nstub\n";
  /** next scripted turn per session: records to append on POST */
  scriptedTurns = new Map<string, StoredRecordWire[]>();
  /** resolved before the POST returns; lets tests hold the turn open */
  turnGate: Promise<void> = Promise.resolve();
  failNextPost: { status: number; detail: string } | null = null;
  offline = false;

  addSession(sessionId: string, records: StoredRecordWire[], title = "t"): void {
    this.sessions.set(sessionId, {
      summary: { session_id: sessionId, title, created_at: 1700000000 + this.sessions.size },
      records: [...records],
    });
  }

  transcriptOf(sessionId: string): TranscriptView {
    const session = this.sessions.get(sessionId)!;
    const turns: TranscriptView["turns"] = [];
    let open: TranscriptView["turns"][number] | null = null;
    let pending: [string, string] | null = null;
    for (const record of session.records) {
      if (record.kind === "user_message") {
        open = {
          user_message: String(record.data.text),
          events: [],
          reply: "",
          status: "answered",
        };
        turns.push(open);
      } else if (record.kind === "agent_event" && open) {
        open.events.push(
          record.data as unknown as TranscriptView["turns"][number]["events"][number],
        );
      } else if (record.kind === "reply" && open) {
        open.reply = String(record.data.text);
        open.status = record.data.status as TurnStatus;
        if (open.status === "clarifying") {
          pending = [open.user_message, open.reply];
        } else {
          pending = null;
        }
        open = null;
      }
    }
    return {
      session_id: sessionId,
      created_at: session.summary.created_at,
      title: session.summary.title,
      pending_clarification: pending,
      turns,
    };
  }

  private appendLive(sessionId: string, record: StoredRecordWire): void {
    const session = this.sessions.get(sessionId)!;
    session.records.push(record);
    for (const source of this.sources) {
      if (!source.closed && source.url.includes(`/sessions/${sessionId}/events`)) {
        source.emit(record);
      }
    }
  }

  readonly fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    if (this.offline) throw new TypeError("fetch failed");
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");

    if (path === "/sessions" && method === "GET") {
      const sessions = [...this.sessions.values()]
        .map((s) => s.summary)
        .sort((a, b) => a.created_at - b.created_at);
      return jsonResponse({ sessions });
    }
    if (path === "/sessions" && method === "POST") {
      const sessionId = `new-${this.sessions.size}`;
      this.addSession(sessionId, [], "");
      return jsonResponse({ session_id: sessionId }, 201);
    }
    if (path === "/schema") {
      return new Response(this.schemaMarkdown, {
        status: 200,
        headers: { "content-type": "text/markdown; charset=utf-8" },
      });
    }

    const message = path.match(/^\/sessions\/([^/]+)\/messages$/);
    if (message && method === "POST") {
      const sessionId = decodeURIComponent(message[1]);
      const text = (JSON.parse(String(init?.body)) as { text: string }).text;
      this.posts.push({ sessionId, text });
      if (this.failNextPost) {
        const { status, detail } = this.failNextPost;
        this.failNextPost = null;
        return jsonResponse({ detail }, status);
      }
      await this.turnGate;
      const scripted = this.scriptedTurns.get(sessionId) ?? [];
      this.scriptedTurns.delete(sessionId);
      for (const record of scripted) this.appendLive(sessionId, record);
      const last = scripted[scripted.length - 1];
      return jsonResponse({
        session_id: sessionId,
        reply: last ? String(last.data.text) : "",
        status: last ? (last.data.status as string) : "answered",
        events: [],
      });
    }

    const single = path.match(/^\/sessions\/([^/]+)$/);
    if (single && method === "GET") {
      const sessionId = decodeURIComponent(single[1]);
      if (!this.sessions.has(sessionId)) {
        return jsonResponse({ detail: `unknown session ${sessionId}` }, 404);
      }
      return jsonResponse(this.transcriptOf(sessionId));
    }

    return jsonResponse({ detail: `unhandled ${method} ${path}` }, 500);
  };

  /** EventSource factory: replays persisted records newer than ?after=
   * on the next macrotask, then stays open for live appends. */
  readonly sourceFactory = (url: string): FakeEventSource => {
    const source = new FakeEventSource(url);
    this.sources.push(source);
    const match = url.match(/\/sessions\/([^/]+)\/events\?after=(-?\d+)/);
    if (match) {
      const sessionId = decodeURIComponent(match[1]);
      const after = Number(match[2]);
      setTimeout(() => {
        const session = this.sessions.get(sessionId);
        if (!session) return;
        for (const record of session.records) {
          if (record.index > after) source.emit(record);
        }
      }, 0);
    }
    return source;
  };
}

// -- DOM test rig ------------------------------------------------------------

/** Replace the document body with a fresh root and mount the app on it. */
export function mountApp(service: FakeService): App {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  root.id = "app";
  document.body.appendChild(root);
  return new App(root, new ApiClient("", service.fetchFn), service.sourceFactory);
}

export function find<T extends Element>(selector: string): T {
  const el = document.querySelector<T>(selector);
  if (!el) throw new Error(`missing ${selector}`);
  return el;
}

export function submitForm(formSelector: string, inputSelector: string, text: string): void {
  const input = find<HTMLInputElement>(inputSelector);
  input.value = text;
  input.dispatchEvent(new Event("input"));
  find<HTMLFormElement>(formSelector).dispatchEvent(
    new Event("submit", { cancelable: true }),
  );
}
