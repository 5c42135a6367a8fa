/**
 * Client for the replay core's line-delimited JSON bridge.
 *
 * Spawns `python -m prpl.bridge` and speaks one JSON request / one JSON
 * response per line. All numeric results cross the boundary as
 * shortest-round-trip decimal, so every double survives exactly; byte
 * payloads travel base64-encoded. The binding layer contains no replay or
 * loss logic of its own: every operation is answered by the core process.
 */

import { spawn, type ChildProcessByStdio } from "node:child_process";
import { createInterface, type Interface } from "node:readline";
import type { Readable, Writable } from "node:stream";

export interface BridgeOptions {
  /** Python executable; defaults to PRPL_PYTHON or `python3`. */
  python?: string;
}

interface Pending {
  resolve: (value: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export class BridgeError extends Error {}

export class CoreBridge {
  private child: ChildProcessByStdio<Writable, Readable, null>;
  private lines: Interface;
  private pending = new Map<number, Pending>();
  private nextId = 1;
  private closed = false;

  constructor(options: BridgeOptions = {}) {
    const python = options.python ?? process.env.PRPL_PYTHON ?? "python3";
    this.child = spawn(python, ["-m", "prpl.bridge"], {
      stdio: ["pipe", "pipe", "inherit"],
    });
    this.lines = createInterface({ input: this.child.stdout });
    this.lines.on("line", (line) => this.onLine(line));
    this.child.on("exit", () => {
      this.closed = true;
      for (const [, p] of this.pending) {
        p.reject(new BridgeError("bridge process exited"));
      }
      this.pending.clear();
    });
  }

  private onLine(line: string): void {
    if (!line.trim()) return;
    const message = JSON.parse(line) as Record<string, unknown>;
    const id = message["id"] as number;
    const waiter = this.pending.get(id);
    if (!waiter) return;
    this.pending.delete(id);
    if (message["ok"] === true) {
      waiter.resolve(message);
    } else {
      waiter.reject(new BridgeError(String(message["error"] ?? "bridge error")));
    }
  }

  request(
    op: string,
    params: Record<string, unknown> = {},
  ): Promise<Record<string, unknown>> {
    if (this.closed) {
      return Promise.reject(new BridgeError("bridge is closed"));
    }
    const id = this.nextId++;
    const payload = JSON.stringify({ id, op, ...params });
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.child.stdin.write(payload + "\n");
    });
  }

  async close(): Promise<void> {
    if (this.closed) return;
    try {
      await this.request("shutdown");
    } catch {
      // the process may already be gone; nothing to clean up beyond state
    }
    this.closed = true;
    this.child.stdin.end();
  }
}
