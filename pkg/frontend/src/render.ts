// Pure view rendering: StateView in, HTML string out.  All semantic
// state comes from the last server view; the client computes nothing.
// Interactive elements carry their exact command string in data-cmd,
// which is also what the tests snapshot.

import {
  HistoryEntry, LogEvent, MailboxRow, ProcessView, StateView,
  SUPPORTED_SCHEMA,
} from "./protocol.js";
import {
  backCommand, inspectHistoryCommand, replayLogCommand, rollHistoryCommand,
  rollMailboxCommand, rollVarCommand, stepCommand,
} from "./commands.js";

export interface UiState {
  selectedPid: string | null;
  selectedMessage: number | null;
  pending: boolean;
}

export const initialUiState: UiState = {
  selectedPid: null,
  selectedMessage: null,
  pending: false,
};

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function button(cmd: string | null, label: string, disabled: boolean): string {
  if (cmd === null) {
    return "";
  }
  const dis = disabled ? " disabled" : "";
  return `<button data-cmd="${esc(cmd)}"${dis}>${esc(label)}</button>`;
}

function sourcePane(view: StateView, ui: UiState): string {
  const selected =
    view.processes.find((p) => p.pid === ui.selectedPid) ?? view.processes[0];
  const hl = selected?.line ?? -1;
  const lines = view.source.split("\n").map((text, i) => {
    const n = i + 1;
    const cls = n === hl ? ' class="hl"' : "";
    return `<span${cls} data-line="${n}">${esc(text)}</span>`;
  });
  return `<section class="source"><pre>${lines.join("\n")}</pre></section>`;
}

function historyList(p: ProcessView, ui: UiState): string {
  const items = p.history.map((item: HistoryEntry, i) => {
    const cmd = rollHistoryCommand(p.pid, item);
    const label = item.id !== undefined ? `${item.kind}(${item.id})`
      : item.pid !== undefined ? `${item.kind}(${item.pid})` : item.kind;
    const detail = item.value !== undefined ? ` ${esc(item.value)}` : "";
    return `<li data-item="${i}">${esc(label)}${detail}` +
      button(inspectHistoryCommand(p.pid, i), "view", ui.pending) +
      `${button(cmd, "roll", ui.pending)}</li>`;
  });
  return `<ul class="history">${items.join("")}</ul>`;
}

function detailBox(view: StateView): string {
  const d = view.detail;
  if (!d) {
    return "";
  }
  const env = d.env.map(([n, v]) => `<tr><td>${esc(n)}</td>` +
    `<td>${esc(v)}</td></tr>`).join("");
  const extra = [
    d.id !== undefined ? `message ${d.id}` : "",
    d.to ? `to ${esc(d.to)}` : "",
    d.sender ? `from ${esc(d.sender)}` : "",
    d.child ? `child ${esc(d.child)}` : "",
    d.value !== undefined ? esc(d.value) : "",
  ].filter(Boolean).join(" ");
  return `<section class="detail"><h2>${esc(d.pid)} history[${d.index}] ` +
    `${esc(d.kind)}</h2><p>${extra}</p>` +
    `<code class="expr">${esc(d.expr)}</code>` +
    `<div class="stack">stack depth: ${d.stack_depth}</div>` +
    `<table class="bindings">${env}</table></section>`;
}

function logList(p: ProcessView, ui: UiState, replayMode: boolean): string {
  const items = p.log.map((ev: LogEvent) => {
    const label = ev.k === "spawn" ? `spawn(${ev.pid})` : `${ev.k}(${ev.id})`;
    const cmd = replayMode ? replayLogCommand(p.pid, ev) : null;
    return `<li>${esc(label)}${button(cmd, "replay to here", ui.pending)}</li>`;
  });
  return `<ul class="log">${items.join("")}</ul>`;
}

function bindingsTable(p: ProcessView, ui: UiState): string {
  const rows = p.bindings.map(([name, value]) =>
    `<tr><td>${esc(name)}</td><td>${esc(value)}</td>` +
    `<td>${button(rollVarCommand(p.pid, name), "roll to binding", ui.pending)}` +
    `</td></tr>`);
  return `<table class="bindings">${rows.join("")}</table>`;
}

function processPane(p: ProcessView, ui: UiState, replayMode: boolean): string {
  const sel = p.pid === ui.selectedPid ? " selected" : "";
  const detail = p.status_detail ? ` (${esc(p.status_detail)})` : "";
  const output = p.output
    ? `<pre class="output">${esc(p.output)}</pre>` : "";
  return `<article class="process${sel}" data-pid="${esc(p.pid)}">` +
    `<h2>${esc(p.pid)} <em>${p.status}${detail}</em></h2>` +
    `<div class="controls">` +
    button(stepCommand(p.pid), "step", ui.pending) +
    button(backCommand(p.pid), "back", ui.pending) +
    `</div>` +
    `<code class="expr">${esc(p.expr)}</code>` +
    `<div class="stack">stack depth: ${p.stack_depth}</div>` +
    bindingsTable(p, ui) +
    historyList(p, ui) +
    logList(p, ui, replayMode) +
    output +
    `</article>`;
}

function mailboxTable(rows: MailboxRow[], ui: UiState): string {
  const body = rows.map((m) =>
    `<tr data-msg="${m.id}"><td>${m.id}</td><td>${esc(m.from)}</td>` +
    `<td>${esc(m.to)}</td><td>${esc(m.value)}</td>` +
    `<td>${button(rollMailboxCommand(m), "roll send", ui.pending)}</td></tr>`);
  return `<section class="mailbox"><h2> in flight </h2>` +
    `<table>${body.join("")}</table></section>`;
}

export function render(view: StateView, ui: UiState = initialUiState): string {
  if (view.schema !== SUPPORTED_SCHEMA) {
    return `<div class="banner error">schema ${view.schema} not supported ` +
      `(client speaks ${SUPPORTED_SCHEMA}); controls disabled</div>`;
  }
  const outcome = view.outcome
    ? `<div class="banner outcome-${esc(view.outcome)}">${esc(view.outcome)}` +
      (view.error ? `: ${esc(view.error)}` : "") + `</div>`
    : "";
  const requests = view.requests.length
    ? `<section class="requests"><h2>requests</h2><ol>` +
      view.requests.map((r) => `<li>${esc(r)}</li>`).join("") +
      `</ol></section>`
    : "";
  const replayMode = view.mode === "replay";
  return `<div class="debugger" data-session="${esc(view.session)}">` +
    `<header>${esc(view.entry)} &mdash; ${view.mode} mode</header>` +
    outcome +
    sourcePane(view, ui) +
    `<section class="processes">` +
    view.processes.map((p) => processPane(p, ui, replayMode)).join("") +
    `</section>` +
    detailBox(view) +
    mailboxTable(view.mailbox, ui) +
    requests +
    `</div>`;
}

// All command strings reachable from the rendered controls, in document
// order; the tests pin these against the rendered HTML.
export function controlCommands(html: string): string[] {
  const out: string[] = [];
  const re = /data-cmd="([^"]*)"/g;
  let m: RegExpExecArray | null;
  while ((m = re.exec(html)) !== null) {
    out.push(m[1].replace(/&amp;/g, "&").replace(/&lt;/g, "<")
      .replace(/&gt;/g, ">").replace(/&quot;/g, '"'));
  }
  return out;
}
