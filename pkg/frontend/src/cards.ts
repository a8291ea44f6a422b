/** Pure view construction: records in, DOM out.
 *
 * Everything here is a function of its arguments only, so replaying a
 * persisted event log yields byte-identical markup to what the live
 * stream produced. The app shell re-renders through this single path.
 */

import { renderMarkdown } from "./markdown.js";
import { escapeHtml, highlightSql } from "./sql.js";
import type {
  AgentEventWire,
  StoredRecordWire,
  TranscriptView,
  TurnStatus,
} from "./types.js";

export interface TurnView {
  userText: string;
  events: AgentEventWire[];
  reply: string | null;
  status: TurnStatus | null;
  /** last turn ended in a clarification question; show the inline reply box */
  awaitingReply: boolean;
}

export function turnViewsFromRecords(records: StoredRecordWire[]): TurnView[] {
  const views: TurnView[] = [];
  let open: TurnView | null = null;
  for (const record of records) {
    if (record.kind === "user_message") {
      open = {
        userText: String(record.data.text ?? ""),
        events: [],
        reply: null,
        status: null,
        awaitingReply: false,
      };
      views.push(open);
    } else if (record.kind === "agent_event" && open) {
      open.events.push(record.data as unknown as AgentEventWire);
    } else if (record.kind === "reply" && open) {
      open.reply = String(record.data.text ?? "");
      open.status = (record.data.status as TurnStatus) ?? null;
      open = null;
    }
  }
  markAwaiting(views);
  return views;
}

export function turnViewsFromTranscript(transcript: TranscriptView): TurnView[] {
  const views = transcript.turns.map((turn) => ({
    userText: turn.user_message,
    events: turn.events,
    reply: turn.reply,
    status: turn.status,
    awaitingReply: false,
  }));
  markAwaiting(views);
  return views;
}

function markAwaiting(views: TurnView[]): void {
  const last = views[views.length - 1];
  if (last && last.status === "clarifying") last.awaitingReply = true;
}

// -- payload accessors; events come off the wire, so never trust a key ----

const text = (p: Record<string, unknown>, key: string): string =>
  p[key] == null ? "" : String(p[key]);

const chip = (label: string, variant: string): string =>
  `<span class="chip chip-${variant}">${escapeHtml(label)}</span>`;

function previewTable(payload: Record<string, unknown>): string {
  const columns = (payload.columns as string[] | undefined) ?? [];
  const rows = (payload.preview_rows as string[][] | undefined) ?? [];
  if (columns.length === 0) return "<p class=\"muted\">no result columns</p>";
  const head = columns.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  const body = rows
    .map(
      (row) =>
        `<tr>${row.map((cell) => `<td>${escapeHtml(String(cell))}</td>`).join("")}</tr>`,
    )
    .join("");
  return `<table class="preview"><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

function eventBody(event: AgentEventWire): string {
  const p = event.payload;
  switch (event.kind) {
    case "intent_assessed": {
      const parts = [chip(text(p, "decision"), "decision")];
      if (p.normalized_intent)
        parts.push(`<p class="intent">${escapeHtml(text(p, "normalized_intent"))}</p>`);
      parts.push(`<p class="muted">${escapeHtml(text(p, "reason"))}</p>`);
      return parts.join("");
    }
    case "clarification_requested":
      return `<p class="question">${escapeHtml(text(p, "question"))}</p>`;
    case "sql_attempt":
      return `<pre><code class="lang-sql">${highlightSql(text(p, "sql"))}</code></pre>`;
    case "execution_result": {
      if (text(p, "status") !== "success") {
        return (
          chip(text(p, "failure_class") || "failure", "failure") +
          `<p class="error-message">${escapeHtml(text(p, "message"))}</p>`
        );
      }
      const count = Number(p.row_count ?? 0);
      const noun = count === 1 ? "row" : "rows";
      let html = previewTable(p);
      html += `<p class="muted">${count} ${noun} shown</p>`;
      if (p.truncated) html += chip("truncated", "truncated");
      return html;
    }
    case "critique": {
      const issues = (p.issues as { category: string; detail: string }[] | undefined) ?? [];
      const items = issues
        .map(
          (issue) =>
            `<li><strong>${escapeHtml(issue.category)}</strong>: ${escapeHtml(issue.detail)}</li>`,
        )
        .join("");
      return (
        chip(text(p, "decision"), text(p, "decision") === "approved" ? "ok" : "revise") +
        (items ? `<ul class="issues">${items}</ul>` : "")
      );
    }
    case "final_sql":
      return (
        chip(p.approved ? "approved" : "not approved", p.approved ? "ok" : "failure") +
        `<pre><code class="lang-sql">${highlightSql(text(p, "sql"))}</code></pre>`
      );
    case "answer":
      return `<div class="prose">${renderMarkdown(text(p, "text"))}</div>`;
    case "error":
      return (
        chip(text(p, "stage"), "failure") +
        `<p class="error-message">${escapeHtml(text(p, "detail"))}</p>`
      );
    default:
      return `<pre>${escapeHtml(JSON.stringify(p))}</pre>`;
  }
}

const EVENT_LABELS: Record<string, string> = {
  intent_assessed: "intent",
  clarification_requested: "clarification",
  sql_attempt: "SQL attempt",
  execution_result: "execution",
  critique: "critique",
  final_sql: "final SQL",
  answer: "answer",
  error: "error",
};

export function renderEventCard(event: AgentEventWire): HTMLElement {
  const card = document.createElement("section");
  card.className = `card card-${event.kind}`;
  let label = EVENT_LABELS[event.kind] ?? event.kind;
  if (event.kind === "sql_attempt") {
    label += ` ${text(event.payload, "round")}.${text(event.payload, "attempt")}`;
  }
  card.innerHTML = `<header>${escapeHtml(label)}</header><div class="card-body">${eventBody(event)}</div>`;
  return card;
}

export function statusBadge(status: TurnStatus | null): string {
  if (status === null) return `<span class="badge badge-live">working</span>`;
  const variant =
    status === "answered" ? "ok" : status === "clarifying" ? "wait" : "bad";
  return `<span class="badge badge-${variant}">${escapeHtml(status)}</span>`;
}

export function renderTurn(view: TurnView): HTMLElement {
  const turn = document.createElement("article");
  turn.className = "turn";
  if (view.status) turn.dataset.status = view.status;

  const user = document.createElement("div");
  user.className = "user-message";
  user.innerHTML = `<p>${escapeHtml(view.userText)}</p>`;
  turn.appendChild(user);

  const cards = document.createElement("div");
  cards.className = "event-cards";
  for (const event of view.events) cards.appendChild(renderEventCard(event));
  turn.appendChild(cards);

  if (view.reply !== null) {
    const reply = document.createElement("div");
    reply.className = "reply";
    reply.innerHTML =
      `<div class="prose">${renderMarkdown(view.reply)}</div>` + statusBadge(view.status);
    turn.appendChild(reply);
  } else {
    const pending = document.createElement("div");
    pending.className = "reply reply-pending";
    pending.innerHTML = statusBadge(null);
    turn.appendChild(pending);
  }

  if (view.awaitingReply) {
    const form = document.createElement("form");
    form.className = "clarify-reply";
    form.innerHTML =
      `<input name="reply" type="text" placeholder="Answer the question to continue" autocomplete="off">` +
      `<button type="submit">Reply</button>`;
    turn.appendChild(form);
  }

  return turn;
}

export function renderTranscript(views: TurnView[]): HTMLElement {
  const container = document.createElement("div");
  container.className = "transcript";
  for (const view of views) container.appendChild(renderTurn(view));
  return container;
}
