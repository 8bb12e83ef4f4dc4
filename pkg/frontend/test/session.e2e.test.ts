// Scripted session against the real Python service:
// trace -> replay -> roll-send -> step, ending Done.

import { spawn, ChildProcess } from "node:child_process";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { DebugClient } from "../src/client.js";
import { connectTcp } from "../src/transport-node.js";
import { rollHistoryCommand, stepCommand } from "../src/commands.js";
import { StateView } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const stockErl = join(here, "..", "..", "tests", "programs", "stock.erl");

let server: ChildProcess;
let port: number;

beforeAll(async () => {
  server = spawn("python3", ["-m", "revdbg.cli", "serve", stockErl,
                             "-e", "main()", "--port", "0"],
                 { stdio: ["ignore", "pipe", "inherit"] });
  port = await new Promise<number>((resolve, reject) => {
    let buf = "";
    server.stdout!.on("data", (chunk) => {
      buf += chunk.toString();
      const m = buf.match(/listening on [\d.]+:(\d+)/);
      if (m) {
        resolve(parseInt(m[1], 10));
      }
    });
    server.on("exit", (code) => reject(new Error(`server exited: ${code}`)));
    setTimeout(() => reject(new Error("server start timeout")), 15000);
  });
}, 20000);

afterAll(() => {
  server.kill();
});

describe("scripted session against the live service", () => {
  it("trace, replay, roll-send, step ends Done", async () => {
    const client = new DebugClient(await connectTcp("127.0.0.1", port));
    const hello = await client.ready;
    expect(hello.schema).toBe(1);

    const session = "s1"; // preloaded by `revdbg serve FILE`
    let view: StateView = await client.view({ op: "snapshot", session });
    expect(view.mode).toBe("user");
    expect(view.processes).toHaveLength(1);

    view = await client.view({ op: "apply", session, text: "trace 1" });
    expect(view.attached_log!.length).toBeGreaterThan(0);

    view = await client.view({ op: "apply", session, text: "replay" });
    expect(view.mode).toBe("replay");

    // drive the root far into the replay; it blocks once it terminates
    view = await client.view({ op: "apply", session,
                               text: stepCommand("<0.0.0>", 200) });
    const withSend = view.processes.find((p) =>
      p.history.some((h) => h.kind === "send"));
    expect(withSend).toBeDefined();
    const sendItem = withSend!.history.find((h) => h.kind === "send")!;
    const roll = rollHistoryCommand(withSend!.pid, sendItem)!;

    view = await client.view({ op: "apply", session, text: roll });
    expect(view.outcome).toBe("done");
    expect(view.processes.every((p) =>
      p.history.every((h) => !(h.kind === "send" && h.id === sendItem.id))))
      .toBe(true);

    view = await client.view({ op: "apply", session,
                               text: stepCommand(withSend!.pid, 1) });
    expect(view.outcome).toBe("done");

    client.close();
  }, 30000);

  it("rejects overlapping commands client side", async () => {
    const client = new DebugClient(await connectTcp("127.0.0.1", port));
    await client.ready;
    const first = client.view({ op: "snapshot", session: "s1" });
    await expect(client.view({ op: "snapshot", session: "s1" }))
      .rejects.toThrow(/in flight/);
    await first;
    client.close();
  });
});
