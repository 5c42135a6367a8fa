import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { CoreBridge } from "../src/bridge.js";
import { BoundBuffer } from "../src/buffer.js";

const text = (s: string) => new TextEncoder().encode(s);
const ascii = (b: Uint8Array) => new TextDecoder().decode(b);

describe("bound buffer", () => {
  let bridge: CoreBridge;

  beforeAll(() => {
    bridge = new CoreBridge();
  });

  afterAll(async () => {
    await bridge.close();
  });

  it("returns the stored payload from a singleton buffer", async () => {
    const buf = await BoundBuffer.create(bridge, 4, { kind: "uniform" });
    expect(await buf.add(text("only"))).toBe(0);
    const batch = await buf.sample(1, 7);
    expect(batch.indices).toEqual([0]);
    expect(ascii(batch.payloads[0]!)).toBe("only");
    expect(batch.probabilities).toEqual([1.0]);
    expect(batch.isWeights).toEqual([1.0]);
    await buf.close();
  });

  it("overwrites the oldest slot once capacity is reached", async () => {
    const buf = await BoundBuffer.create(bridge, 2, { kind: "uniform" });
    expect(await buf.add(text("a"))).toBe(0);
    expect(await buf.add(text("b"))).toBe(1);
    expect(await buf.add(text("c"))).toBe(0);
    const batch = await buf.sample(64, 3);
    const seen = new Set(batch.indices.map(
      (i, k) => `${i}:${ascii(batch.payloads[k]!)}`));
    expect(seen).toEqual(new Set(["0:c", "1:b"]));
    await buf.close();
  });

  it("keeps zero-error slots sampleable under the PER epsilon floor", async () => {
    const buf = await BoundBuffer.create(bridge, 2, {
      kind: "per",
      alpha: 1.0,
      beta: 1.0,
      epsilon: 0.5,
    });
    await buf.add(text("x"));
    await buf.add(text("y"));
    await buf.updatePriorities([0], [0.0]);
    expect(await buf.priority(0)).toBe(0.5);
    const batch = await buf.sample(256, 11);
    expect(new Set(batch.indices)).toEqual(new Set([0, 1]));
    await buf.close();
  });

  it("tracks the running max priority for new additions", async () => {
    const buf = await BoundBuffer.create(bridge, 4, {
      kind: "lap",
      alpha: 1.0,
      kappa: 1.0,
    });
    await buf.add(text("p"));
    expect(await buf.updatePriorities([0], [4.0])).toBe(4.0);
    await buf.add(text("q"));
    expect(await buf.priority(1)).toBe(4.0);
    await buf.close();
  });

  it("rejects oversized payloads", async () => {
    const buf = await BoundBuffer.create(bridge, 2, { kind: "uniform" }, 4);
    await expect(buf.add(text("too-long"))).rejects.toThrow(/exceeds/);
    await buf.close();
  });

  it("round-trips through the snapshot interchange", async () => {
    const buf = await BoundBuffer.create(bridge, 3, {
      kind: "lap",
      alpha: 0.4,
      kappa: 1.0,
    });
    await buf.add(text("one"));
    await buf.add(text("two"));
    await buf.updatePriorities([0, 1], [3.0, 0.25]);
    const bytes = await buf.snapshot();
    const restored = await BoundBuffer.load(bridge, bytes);
    expect(restored.capacity).toBe(3);
    expect(restored.scheme).toMatchObject({ kind: "lap", alpha: 0.4 });
    expect(await restored.snapshot()).toEqual(bytes);
    const a = await buf.sample(8, 99);
    const b = await restored.sample(8, 99);
    expect(b).toEqual(a);
    await buf.close();
    await restored.close();
  });
});
