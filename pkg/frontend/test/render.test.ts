import { readFileSync, existsSync, writeFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { StateView } from "../src/protocol.js";
import { controlCommands, initialUiState, render } from "../src/render.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = (name: string) => join(here, "fixtures", name);

function initialView(): StateView {
  return JSON.parse(readFileSync(fixture("initial_stock_view.json"), "utf8"));
}

describe("render", () => {
  it("matches the golden snapshot of the initial stock view", () => {
    const html = render(initialView(), initialUiState);
    const goldenPath = fixture("initial_stock_view.html");
    if (!existsSync(goldenPath)) {
      writeFileSync(goldenPath, html + "\n");
    }
    expect(html + "\n").toBe(readFileSync(goldenPath, "utf8"));
  });

  it("shows one pane per process with its controls", () => {
    const html = render(initialView());
    expect(html).toContain('data-pid="&lt;0.0.0&gt;"');
    expect(controlCommands(html)).toEqual([
      "step <0.0.0> 1",
      "back <0.0.0> 1",
    ]);
  });

  it("highlights the evaluated line of the source pane", () => {
    const html = render(initialView());
    expect(html).toContain('<span class="hl" data-line="1">main() -&gt;</span>');
  });

  it("renders mailbox rows with their roll command", () => {
    const view = initialView();
    view.mailbox = [{ id: 0, from: "<0.2.0>", to: "<0.0.0>", value: "{add,5}" }];
    const html = render(view);
    expect(html).toContain("<td>{add,5}</td>");
    expect(controlCommands(html)).toContain("roll-send <0.2.0> 0");
  });

  it("renders history and pending-log controls in replay mode", () => {
    const view = initialView();
    view.mode = "replay";
    view.processes[0].history = [{ kind: "send", id: 1, to: "<0.0.0>",
                                   value: "stop" }];
    view.processes[0].log = [{ k: "rec", id: 2 }];
    const html = render(view);
    const cmds = controlCommands(html);
    expect(cmds).toContain("roll-send <0.0.0> 1");
    expect(cmds).toContain("replay-rec <0.0.0> 2");
    expect(cmds).toContain("inspect <0.0.0> 0");
  });

  it("reveals a history item's stored snapshot when present", () => {
    const view = initialView();
    view.detail = {
      pid: "<0.1.0>", index: 2, kind: "send",
      env: [["S", "<0.0.0>"]], expr: "S ! {add,3}", stack_depth: 1,
      id: 0, to: "<0.0.0>", value: "{add,3}",
    };
    const html = render(view);
    expect(html).toContain("history[2]");
    expect(html).toContain("S ! {add,3}");
    expect(html).toContain("message 0");
  });

  it("disables controls while a command is pending", () => {
    const html = render(initialView(), { ...initialUiState, pending: true });
    expect(html).toContain("disabled");
  });

  it("schema mismatch renders a banner and nothing else", () => {
    const view = initialView();
    view.schema = 99;
    const html = render(view);
    expect(html).toContain("schema 99 not supported");
    expect(controlCommands(html)).toEqual([]);
  });

  it("never invents state: everything rendered comes from the view", () => {
    const view = initialView();
    const html = render(view);
    expect(html).not.toContain("undefined");
    expect(html).toContain("user mode");
  });
});
