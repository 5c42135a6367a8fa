import { execFileSync } from "node:child_process";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { CoreBridge } from "../src/bridge.js";
import { BoundBuffer } from "../src/buffer.js";
import { parseSnapshot, writeSnapshot } from "../src/snapshot.js";

const PYTHON = process.env.PRPL_PYTHON ?? "python3";

describe("snapshot interchange format", () => {
  let bridge: CoreBridge;

  beforeAll(() => {
    bridge = new CoreBridge();
  });

  afterAll(async () => {
    await bridge.close();
  });

  it("parses a payload-buffer snapshot produced by the core", async () => {
    const buf = await BoundBuffer.create(bridge, 5, {
      kind: "per",
      alpha: 0.6,
      beta: 0.4,
      epsilon: 1e-10,
    });
    const payloads = ["alpha", "bravo", "charlie"].map(
      (s) => new TextEncoder().encode(s));
    for (const p of payloads) await buf.add(p);
    await buf.updatePriorities([0, 2], [2.0, 0.5]);
    const bytes = await buf.snapshot();
    const snap = parseSnapshot(bytes);
    expect(snap.header.storageKind).toBe(1);
    expect(snap.header.capacity).toBe(5);
    expect(snap.header.count).toBe(3);
    expect(snap.header.cursor).toBe(3);
    expect(snap.header.scheme.kind).toBe("per");
    expect(snap.header.scheme.alpha).toBe(0.6);
    expect(snap.header.scheme.epsilon).toBe(1e-10);
    expect(snap.header.maxPriority).toBe(2.0 ** 0.6 + 1e-10);
    expect(snap.payloads.map((p) => new TextDecoder().decode(p))).toEqual([
      "alpha",
      "bravo",
      "charlie",
    ]);
    expect(snap.priorities[0]).toBe(2.0 ** 0.6 + 1e-10);
    expect(snap.priorities[1]).toBe(1.0);
    expect(snap.priorities[2]).toBe(0.5 ** 0.6 + 1e-10);
    await buf.close();
  });

  it("re-emits core snapshots byte for byte", async () => {
    const buf = await BoundBuffer.create(bridge, 4, {
      kind: "lap",
      alpha: 0.4,
      kappa: 0.01,
    });
    for (let i = 0; i < 7; i++) {
      await buf.add(new Uint8Array([i, i * 2, i * 3]));
    }
    await buf.updatePriorities([1, 3], [0.5, 7.25]);
    const bytes = await buf.snapshot();
    expect(writeSnapshot(parseSnapshot(bytes))).toEqual(bytes);
    await buf.close();
  });

  it("parses tabular snapshots written by the core", () => {
    const script = [
      "import sys",
      "from prpl.replay import ReplayBuffer, SchemeConfig, Transition",
      "buf = ReplayBuffer(3, SchemeConfig.per(beta_anneal=(0.4, 5000)))",
      "buf.add(Transition(0, 1, 0.5, 1, False))",
      "buf.add(Transition(1, 0, -2.25, 0, True))",
      "buf.update_priorities([0], [3.0])",
      "sys.stdout.buffer.write(buf.to_snapshot())",
    ].join("\n");
    const bytes = new Uint8Array(
      execFileSync(PYTHON, ["-c", script], { maxBuffer: 1 << 20 }));
    const snap = parseSnapshot(bytes);
    expect(snap.header.storageKind).toBe(0);
    expect(snap.header.scheme.betaAnneal).toEqual([0.4, 5000]);
    expect(snap.transitions).toEqual([
      { state: 0, action: 1, reward: 0.5, nextState: 1, terminal: false },
      { state: 1, action: 0, reward: -2.25, nextState: 0, terminal: true },
    ]);
    expect(snap.priorities[0]).toBe(3.0 ** 0.6 + 1e-10);
    expect(writeSnapshot(snap)).toEqual(bytes);
  });

  it("rejects malformed snapshots", () => {
    expect(() => parseSnapshot(new Uint8Array([1, 2, 3]))).toThrow(/trunc/);
    const bad = new Uint8Array(91);
    bad.set([0x58, 0x58, 0x58, 0x58], 0);
    expect(() => parseSnapshot(bad)).toThrow(/magic/);
  });
});
