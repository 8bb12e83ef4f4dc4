// Browser entry point.  Expects a WebSocket gateway that forwards
// newline-delimited JSON lines to the debugging service verbatim
// (one text frame per line), e.g.:  websocat --text ws-l:127.0.0.1:8080 tcp:127.0.0.1:4715

import { DebugClient, Transport } from "./client.js";
import { render, initialUiState, UiState } from "./render.js";
import { StateView } from "./protocol.js";

function wsTransport(url: string): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    let lineCb: ((line: string) => void) | null = null;
    let closeCb: (() => void) | null = null;
    ws.onopen = () =>
      resolve({
        send: (line) => ws.send(line + "\n"),
        onLine: (cb) => {
          lineCb = cb;
        },
        onClose: (cb) => {
          closeCb = cb;
        },
        close: () => ws.close(),
      });
    ws.onerror = () => reject(new Error(`cannot reach ${url}`));
    ws.onmessage = (ev) => {
      for (const line of String(ev.data).split("\n")) {
        if (line.trim() && lineCb) {
          lineCb(line);
        }
      }
    };
    ws.onclose = () => closeCb && closeCb();
  });
}

async function start() {
  const root = document.getElementById("app")!;
  const params = new URLSearchParams(location.search);
  const gateway = params.get("gateway") ?? "ws://127.0.0.1:8080";
  const session = params.get("session") ?? "s1";
  const client = new DebugClient(await wsTransport(gateway));
  await client.ready;

  let ui: UiState = { ...initialUiState };
  let view: StateView = await client.view({ op: "snapshot", session });

  const draw = () => {
    root.innerHTML = render(view, ui);
  };

  root.addEventListener("click", async (ev) => {
    const target = ev.target as HTMLElement;
    const pane = target.closest("[data-pid]") as HTMLElement | null;
    if (pane) {
      ui.selectedPid = pane.dataset.pid ?? null;
    }
    const cmd = target.dataset?.cmd;
    if (!cmd || ui.pending) {
      draw();
      return;
    }
    ui.pending = true;
    draw();
    try {
      view = await client.view({ op: "apply", session, text: cmd });
    } catch (err) {
      console.error(err);
    } finally {
      ui.pending = false;
      draw();
    }
  });

  draw();
}

start().catch((err) => {
  const root = document.getElementById("app");
  if (root) {
    root.innerHTML = `<div class="banner error">${String(err)}</div>`;
  }
});
