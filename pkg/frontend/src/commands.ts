// Every user gesture maps to exactly one textual command of the
// controller's request language.  The UI never interprets commands
// itself; it sends the string and waits for the next view.

import { HistoryEntry, LogEvent, MailboxRow } from "./protocol.js";

export function stepCommand(pid: string, n = 1): string {
  return `step ${pid} ${n}`;
}

export function backCommand(pid: string, n = 1): string {
  return `back ${pid} ${n}`;
}

export function rollVarCommand(pid: string, name: string): string {
  return `roll-var ${pid} ${name}`;
}

export function rollCreationCommand(pid: string): string {
  return `roll-creation ${pid}`;
}

export function traceCommand(seed?: number): string {
  return seed === undefined ? "trace" : `trace ${seed}`;
}

export function replayCommand(): string {
  return "replay";
}

export function resetCommand(): string {
  return "reset";
}

export function undoCommand(): string {
  return "undo";
}

export function redoCommand(): string {
  return "redo";
}

// "reveal the stored snapshot" on a history item of a process pane
export function inspectHistoryCommand(pid: string, index: number): string {
  return `inspect ${pid} ${index}`;
}

// "roll to this action" on a history item of a process pane
export function rollHistoryCommand(pid: string, item: HistoryEntry): string | null {
  switch (item.kind) {
    case "send":
      return `roll-send ${pid} ${item.id}`;
    case "rec":
      return `roll-rec ${pid} ${item.id}`;
    case "spawn":
      return `roll-spawn ${pid} ${item.pid}`;
    default:
      return null; // seq/self items are not rollback anchors
  }
}

// "roll this in-flight message back into its sender"
export function rollMailboxCommand(row: MailboxRow): string {
  return `roll-send ${row.from} ${row.id}`;
}

// "replay up to this logged event" on a pending log entry
export function replayLogCommand(pid: string, ev: LogEvent): string {
  switch (ev.k) {
    case "send":
      return `replay-send ${pid} ${ev.id}`;
    case "rec":
      return `replay-rec ${pid} ${ev.id}`;
    case "spawn":
      return `replay-spawn ${pid} ${ev.pid}`;
  }
}
