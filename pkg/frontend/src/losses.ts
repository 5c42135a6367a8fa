/**
 * Loss evaluation over the bridge: elementwise values and gradients for
 * batches of TD errors, plus the scalar priority/statistic helpers.
 * Results are the core's own doubles, bit for bit.
 */

import type { CoreBridge } from "./bridge.js";
import type { SchemeConfig } from "./buffer.js";

export type LossKind = "l1" | "mse" | "huber" | "pal" | "per_tau";

export interface LossParams {
  kappa?: number;
  alpha?: number;
  tau?: number;
  beta?: number;
  /** mean clipped priority, required for `pal` */
  lam?: number;
  /** min/sum power coefficient, required for `per_tau` */
  eta?: number;
  /** dataset size backing `eta` */
  n?: number;
}

export interface LossBatch {
  values: number[];
  grads: number[];
}

export async function lossBatch(
  bridge: CoreBridge,
  kind: LossKind,
  deltas: number[],
  params: LossParams = {},
): Promise<LossBatch> {
  const reply = await bridge.request("losses", { kind, deltas, params });
  return {
    values: reply["values"] as number[],
    grads: reply["grads"] as number[],
  };
}

export async function priorityOf(
  bridge: CoreBridge,
  absDelta: number,
  scheme: SchemeConfig,
): Promise<number> {
  const reply = await bridge.request("priority_of", {
    abs_delta: absDelta,
    scheme,
  });
  return reply["priority"] as number;
}

export async function palLambda(
  bridge: CoreBridge,
  deltas: number[],
  alpha: number,
  kappa = 1.0,
): Promise<number> {
  const reply = await bridge.request("pal_lambda", { deltas, alpha, kappa });
  return reply["value"] as number;
}
