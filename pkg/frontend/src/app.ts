/** App shell: owns state and wiring, delegates all markup to the pure
 * renderers in cards.ts / schema.ts. One render path; every state
 * change repaints from the current record log. */

import { ApiClient, HttpError, TurnBusy, streamRecords } from "./api.js";
import type { EventSourceFactory } from "./api.js";
import { renderTranscript, turnViewsFromRecords, turnViewsFromTranscript } from "./cards.js";
import { renderSchemaExplorer } from "./schema.js";
import type { SessionSummary, StoredRecordWire, TranscriptView } from "./types.js";

interface AppState {
  view: "chat" | "schema";
  sessions: SessionSummary[];
  activeSession: string | null;
  /** replayed + live records for the active session */
  records: StoredRecordWire[];
  /** first paint from GET /sessions/{id}, until the replay catches up */
  transcript: TranscriptView | null;
  draft: string;
  clarifyDraft: string;
  sending: boolean;
  offline: boolean;
  notice: string | null;
  schemaMarkdown: string | null;
  schemaQuery: string;
  schemaSection: string | null;
}

export class App {
  readonly state: AppState = {
    view: "chat",
    sessions: [],
    activeSession: null,
    records: [],
    transcript: null,
    draft: "",
    clarifyDraft: "",
    sending: false,
    offline: false,
    notice: null,
    schemaMarkdown: null,
    schemaQuery: "",
    schemaSection: null,
  };

  private closeStream: (() => void) | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly sourceFactory?: EventSourceFactory,
  ) {}

  async init(): Promise<void> {
    try {
      this.state.sessions = await this.api.listSessions();
      this.state.offline = false;
    } catch {
      this.state.offline = true;
    }
    this.render();
    const first = this.state.sessions[0];
    if (first) await this.selectSession(first.session_id);
  }

  async selectSession(sessionId: string): Promise<void> {
    this.closeStream?.();
    this.state.activeSession = sessionId;
    this.state.records = [];
    this.state.transcript = null;
    this.state.notice = null;
    try {
      this.state.transcript = await this.api.transcript(sessionId);
      this.state.offline = false;
    } catch (error) {
      if (error instanceof HttpError) this.state.notice = error.message;
      else this.state.offline = true;
      this.render();
      return;
    }
    this.render();
    this.closeStream = streamRecords(
      sessionId,
      (record) => {
        this.state.records.push(record);
        this.render();
      },
      { factory: this.sourceFactory },
    );
  }

  async newSession(): Promise<void> {
    try {
      const sessionId = await this.api.createSession();
      this.state.sessions = await this.api.listSessions();
      await this.selectSession(sessionId);
    } catch {
      this.state.offline = true;
      this.render();
    }
  }

  /** Post one message; the composer and the clarify box both land here.
   * The stream paints the turn while it runs; the lock opens when the
   * POST settles. */
  async send(text: string): Promise<void> {
    const sessionId = this.state.activeSession;
    const trimmed = text.trim();
    if (!sessionId || !trimmed || this.state.sending) return;
    this.state.sending = true;
    this.state.notice = null;
    this.render();
    try {
      await this.api.postMessage(sessionId, trimmed);
      this.state.draft = "";
      this.state.clarifyDraft = "";
    } catch (error) {
      if (error instanceof TurnBusy) {
        this.state.notice = "A turn is already running in this session.";
      } else if (error instanceof HttpError) {
        this.state.notice = error.message;
      } else {
        this.state.offline = true;
      }
    } finally {
      this.state.sending = false;
      this.render();
    }
  }

  async openSchema(): Promise<void> {
    this.state.view = "schema";
    if (this.state.schemaMarkdown === null) {
      try {
        this.state.schemaMarkdown = await this.api.schemaMarkdown();
      } catch {
        this.state.offline = true;
      }
    }
    this.render();
  }

  render(): void {
    const s = this.state;
    this.root.innerHTML = "";

    const banner = document.createElement("div");
    if (s.offline) {
      banner.className = "banner banner-offline";
      banner.textContent = "Backend unreachable. Your draft is kept.";
      this.root.appendChild(banner);
    } else if (s.notice) {
      banner.className = "banner banner-notice";
      banner.textContent = s.notice;
      this.root.appendChild(banner);
    }

    const tabs = document.createElement("nav");
    tabs.className = "tabs";
    for (const view of ["chat", "schema"] as const) {
      const tab = document.createElement("button");
      tab.className = s.view === view ? "tab active" : "tab";
      tab.dataset.view = view;
      tab.textContent = view;
      tab.onclick = () => {
        if (view === "schema") void this.openSchema();
        else {
          s.view = "chat";
          this.render();
        }
      };
      tabs.appendChild(tab);
    }
    this.root.appendChild(tabs);

    if (s.view === "schema") {
      this.root.appendChild(this.renderSchemaPane());
      return;
    }
    this.root.appendChild(this.renderSessionPane());
    this.root.appendChild(this.renderChatPane());
  }

  private renderSessionPane(): HTMLElement {
    const pane = document.createElement("aside");
    pane.className = "sessions";
    const newButton = document.createElement("button");
    newButton.className = "new-session";
    newButton.textContent = "new chat";
    newButton.onclick = () => void this.newSession();
    pane.appendChild(newButton);

    const list = document.createElement("ul");
    for (const session of this.state.sessions) {
      const item = document.createElement("li");
      const link = document.createElement("a");
      link.href = "#";
      link.dataset.session = session.session_id;
      link.className =
        session.session_id === this.state.activeSession ? "session active" : "session";
      link.textContent = session.title || "(untitled)";
      link.onclick = (event) => {
        event.preventDefault();
        void this.selectSession(session.session_id);
      };
      item.appendChild(link);
      list.appendChild(item);
    }
    if (this.state.sessions.length === 0) {
      const empty = document.createElement("li");
      empty.className = "empty-state";
      empty.textContent = "no sessions yet";
      list.appendChild(empty);
    }
    pane.appendChild(list);
    return pane;
  }

  private renderChatPane(): HTMLElement {
    const pane = document.createElement("main");
    pane.className = "chat";

    // the replay stream becomes authoritative as soon as it delivers
    const views =
      this.state.records.length > 0
        ? turnViewsFromRecords(this.state.records)
        : this.state.transcript
          ? turnViewsFromTranscript(this.state.transcript)
          : [];
    const transcript = renderTranscript(views);
    const clarifyForm = transcript.querySelector<HTMLFormElement>("form.clarify-reply");
    if (clarifyForm) {
      const input = clarifyForm.querySelector<HTMLInputElement>("input[name=reply]")!;
      input.value = this.state.clarifyDraft;
      input.oninput = () => {
        this.state.clarifyDraft = input.value;
      };
      if (this.state.sending) {
        clarifyForm.querySelector("button")!.disabled = true;
      }
      clarifyForm.onsubmit = (event) => {
        event.preventDefault();
        void this.send(input.value);
      };
    }
    pane.appendChild(transcript);

    const composer = document.createElement("form");
    composer.className = "composer";
    composer.innerHTML =
      `<input name="draft" type="text" placeholder="Ask about the database" autocomplete="off">` +
      `<button type="submit">Send</button>`;
    const draftInput = composer.querySelector<HTMLInputElement>("input[name=draft]")!;
    draftInput.value = this.state.draft;
    draftInput.oninput = () => {
      this.state.draft = draftInput.value;
    };
    const sendButton = composer.querySelector<HTMLButtonElement>("button")!;
    sendButton.disabled = this.state.sending || this.state.activeSession === null;
    composer.onsubmit = (event) => {
      event.preventDefault();
      void this.send(draftInput.value);
    };
    pane.appendChild(composer);
    return pane;
  }

  private renderSchemaPane(): HTMLElement {
    const pane = document.createElement("main");
    pane.className = "schema";

    const search = document.createElement("form");
    search.className = "schema-search";
    search.innerHTML =
      `<input name="query" type="search" placeholder="Search the schema" autocomplete="off">` +
      `<button type="submit">Search</button>`;
    const queryInput = search.querySelector<HTMLInputElement>("input[name=query]")!;
    queryInput.value = this.state.schemaQuery;
    search.onsubmit = (event) => {
      event.preventDefault();
      this.state.schemaQuery = queryInput.value.trim();
      this.render();
    };
    pane.appendChild(search);

    if (this.state.schemaMarkdown === null) {
      const loading = document.createElement("p");
      loading.className = "empty-state";
      loading.textContent = this.state.offline
        ? "Schema unavailable while offline."
        : "Loading schema...";
      pane.appendChild(loading);
      return pane;
    }

    const explorer = renderSchemaExplorer(this.state.schemaMarkdown, {
      query: this.state.schemaQuery,
      activeSection: this.state.schemaSection,
    });
    for (const link of Array.from(
      explorer.querySelectorAll<HTMLAnchorElement>("a[data-section]"),
    )) {
      link.onclick = (event) => {
        event.preventDefault();
        this.state.schemaSection = link.dataset.section ?? null;
        this.state.schemaQuery = "";
        this.render();
      };
    }
    pane.appendChild(explorer);
    return pane;
  }
}
