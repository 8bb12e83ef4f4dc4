// Wire types of the debugging service: newline-delimited JSON.
// The server greets with {"hello": {...}}; afterwards every request
// {"id": n, "cmd": {...}} gets one {"id": n, "view": ...} or
// {"id": n, "error": ...} reply.

export const SUPPORTED_SCHEMA = 1;

export interface LogEvent {
  k: "spawn" | "send" | "rec";
  id?: number;
  pid?: string;
}

export interface HistoryEntry {
  kind: "seq" | "send" | "rec" | "spawn" | "self";
  id?: number;
  pid?: string;
  to?: string;
  from?: string;
  value?: string;
}

export interface ProcessView {
  pid: string;
  status: "runnable" | "terminated" | "blocked" | "stuck";
  status_detail?: string;
  line: number | null;
  col: number | null;
  expr: string;
  bindings: [string, string][];
  stack_depth: number;
  history: HistoryEntry[];
  log: LogEvent[];
  output: string;
}

export interface MailboxRow {
  id: number;
  from: string;
  to: string;
  value: string;
}

export interface HistoryDetail {
  pid: string;
  index: number;
  kind: string;
  env: [string, string][];
  expr: string;
  stack_depth: number;
  id?: number;
  to?: string;
  sender?: string;
  child?: string;
  value?: string;
}

export interface StateView {
  schema: number;
  session: string;
  mode: "user" | "replay";
  entry: string;
  outcome: string | null;
  error: string | null;
  processes: ProcessView[];
  mailbox: MailboxRow[];
  requests: string[];
  source: string;
  attached_log?: { pid: string; events: LogEvent[] }[];
  detail?: HistoryDetail;
}

export interface Hello {
  hello: { schema: number; service: string };
}

export type Command =
  | { op: "create"; source: string; entry: string; log?: string }
  | { op: "apply"; session: string; text: string }
  | { op: "snapshot"; session: string }
  | { op: "close"; session: string };

export interface Reply {
  id: number;
  view?: StateView;
  error?: string;
  closed?: string;
}
