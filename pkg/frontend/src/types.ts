/** Wire types for the chat-service HTTP surface. */

export type RecordKind = "user_message" | "agent_event" | "reply";

export type EventKind =
  | "intent_assessed"
  | "clarification_requested"
  | "sql_attempt"
  | "execution_result"
  | "critique"
  | "final_sql"
  | "answer"
  | "error";

export type TurnStatus = "answered" | "clarifying" | "failed" | "refused";

export interface AgentEventWire {
  kind: EventKind;
  payload: Record<string, unknown>;
  timestamp: number;
}

/** One line of the per-session append-only log, as streamed over SSE
 * and replayed from GET /sessions/{id}/events. */
export interface StoredRecordWire {
  index: number;
  kind: RecordKind;
  data: Record<string, unknown>;
  timestamp: number;
}

export interface SessionSummary {
  session_id: string;
  title: string | null;
  created_at: number;
}

export interface TurnWire {
  user_message: string;
  events: AgentEventWire[];
  reply: string;
  status: TurnStatus;
}

export interface TranscriptView {
  session_id: string;
  created_at: number;
  title: string | null;
  pending_clarification: [string, string] | null;
  turns: TurnWire[];
}

export interface MessageResult {
  session_id: string;
  reply: string;
  status: TurnStatus;
  events: AgentEventWire[];
}
