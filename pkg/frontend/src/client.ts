// Protocol client: newline-framed JSON with a single in-flight command.
// Transports differ by host: node tests use a TCP socket, the browser
// build uses a WebSocket gateway that forwards lines verbatim.

import { Command, Hello, Reply, StateView, SUPPORTED_SCHEMA } from "./protocol.js";

export interface Transport {
  send(line: string): void;
  onLine(cb: (line: string) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

export class SchemaMismatchError extends Error {
  constructor(public readonly got: number) {
    super(`server schema ${got}, client supports ${SUPPORTED_SCHEMA}`);
  }
}

export class ServiceError extends Error {}

interface Waiter {
  resolve: (r: Reply) => void;
  reject: (e: Error) => void;
  id: number;
}

export class DebugClient {
  readonly ready: Promise<Hello["hello"]>;
  private waiter: Waiter | null = null;
  private nextId = 0;
  private closed = false;

  constructor(private readonly transport: Transport) {
    let helloResolve: (h: Hello["hello"]) => void;
    let helloReject: (e: Error) => void;
    this.ready = new Promise((res, rej) => {
      helloResolve = res;
      helloReject = rej;
    });
    let greeted = false;
    transport.onLine((line) => {
      const msg = JSON.parse(line);
      if (!greeted) {
        greeted = true;
        const hello = (msg as Hello).hello;
        if (!hello || hello.schema !== SUPPORTED_SCHEMA) {
          helloReject(new SchemaMismatchError(hello ? hello.schema : -1));
          transport.close();
          return;
        }
        helloResolve(hello);
        return;
      }
      const reply = msg as Reply;
      if (this.waiter && reply.id === this.waiter.id) {
        const w = this.waiter;
        this.waiter = null;
        w.resolve(reply);
      }
    });
    transport.onClose(() => {
      this.closed = true;
      if (this.waiter) {
        const w = this.waiter;
        this.waiter = null;
        w.reject(new ServiceError("connection closed"));
      }
    });
  }

  get busy(): boolean {
    return this.waiter !== null;
  }

  call(cmd: Command): Promise<Reply> {
    if (this.closed) {
      return Promise.reject(new ServiceError("connection closed"));
    }
    if (this.waiter) {
      return Promise.reject(new ServiceError("a command is already in flight"));
    }
    const id = ++this.nextId;
    return new Promise<Reply>((resolve, reject) => {
      this.waiter = { resolve, reject, id };
      this.transport.send(JSON.stringify({ id, cmd }));
    });
  }

  async view(cmd: Command): Promise<StateView> {
    const reply = await this.call(cmd);
    if (reply.error !== undefined) {
      throw new ServiceError(reply.error);
    }
    if (reply.view === undefined) {
      throw new ServiceError("reply carried no view");
    }
    return reply.view;
  }

  close(): void {
    this.transport.close();
  }
}
