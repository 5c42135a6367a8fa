/**
 * BoundBuffer: a prioritized replay buffer living in the core process,
 * holding opaque byte payloads. Semantics (ring overwrite, max-priority
 * insertion, proportional sampling, importance weights) are exactly the
 * core's: every call is delegated.
 *
 * A buffer must be driven from one logical owner at a time; requests are
 * serialized over the bridge pipe in call order.
 */

import type { CoreBridge } from "./bridge.js";

export interface SchemeConfig {
  kind: "uniform" | "per" | "lap";
  alpha?: number;
  beta?: number;
  epsilon?: number;
  kappa?: number;
  beta_anneal?: [number, number] | null;
}

export interface SampleResult {
  indices: number[];
  payloads: Uint8Array[];
  probabilities: number[];
  isWeights: number[];
}

function toBase64(payload: Uint8Array): string {
  return Buffer.from(payload).toString("base64");
}

function fromBase64(text: string): Uint8Array {
  return new Uint8Array(Buffer.from(text, "base64"));
}

export class BoundBuffer {
  private constructor(
    private readonly bridge: CoreBridge,
    private readonly handle: number,
    readonly capacity: number,
    readonly scheme: SchemeConfig,
  ) {}

  static async create(
    bridge: CoreBridge,
    capacity: number,
    scheme: SchemeConfig,
    maxPayload = 65536,
  ): Promise<BoundBuffer> {
    const reply = await bridge.request("create_buffer", {
      capacity,
      scheme,
      max_payload: maxPayload,
    });
    return new BoundBuffer(bridge, reply["buffer"] as number, capacity, scheme);
  }

  /** Rebuild a buffer in the core from snapshot bytes. */
  static async load(bridge: CoreBridge, data: Uint8Array): Promise<BoundBuffer> {
    const reply = await bridge.request("load_snapshot", {
      data: Buffer.from(data).toString("base64"),
    });
    return new BoundBuffer(
      bridge,
      reply["buffer"] as number,
      reply["capacity"] as number,
      reply["scheme"] as SchemeConfig,
    );
  }

  async add(payload: Uint8Array): Promise<number> {
    const reply = await this.bridge.request("add", {
      buffer: this.handle,
      payload: toBase64(payload),
    });
    return reply["slot"] as number;
  }

  async sample(batch: number, seed: number): Promise<SampleResult> {
    const reply = await this.bridge.request("sample", {
      buffer: this.handle,
      batch,
      seed,
    });
    return {
      indices: reply["indices"] as number[],
      payloads: (reply["payloads"] as string[]).map(fromBase64),
      probabilities: reply["probabilities"] as number[],
      isWeights: reply["is_weights"] as number[],
    };
  }

  async updatePriorities(slots: number[], absDeltas: number[]): Promise<number> {
    const reply = await this.bridge.request("update_priorities", {
      buffer: this.handle,
      slots,
      abs_deltas: absDeltas,
    });
    return reply["max_priority"] as number;
  }

  async priority(slot: number): Promise<number> {
    const reply = await this.bridge.request("priority", {
      buffer: this.handle,
      slot,
    });
    return reply["priority"] as number;
  }

  /** Serialize the buffer to the versioned binary snapshot format. */
  async snapshot(): Promise<Uint8Array> {
    const reply = await this.bridge.request("snapshot", {
      buffer: this.handle,
    });
    return fromBase64(reply["data"] as string);
  }

  async close(): Promise<void> {
    await this.bridge.request("close_buffer", { buffer: this.handle });
  }
}
