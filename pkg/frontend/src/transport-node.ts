// TCP transport for node (tests and scripting); the browser uses a
// WebSocket gateway instead.

import * as net from "node:net";
import { Transport } from "./client.js";

export function connectTcp(host: string, port: number): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const sock = net.createConnection({ host, port }, () => resolve(transport));
    sock.on("error", reject);
    let buffer = "";
    let lineCb: ((line: string) => void) | null = null;
    let closeCb: (() => void) | null = null;
    sock.on("data", (chunk) => {
      buffer += chunk.toString("utf8");
      let idx;
      while ((idx = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, idx);
        buffer = buffer.slice(idx + 1);
        if (line.trim() && lineCb) {
          lineCb(line);
        }
      }
    });
    sock.on("close", () => closeCb && closeCb());
    const transport: Transport = {
      send: (line) => sock.write(line + "\n"),
      onLine: (cb) => {
        lineCb = cb;
      },
      onClose: (cb) => {
        closeCb = cb;
      },
      close: () => sock.end(),
    };
  });
}
