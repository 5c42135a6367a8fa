export { BridgeError, CoreBridge, type BridgeOptions } from "./bridge.js";
export {
  BoundBuffer,
  type SampleResult,
  type SchemeConfig,
} from "./buffer.js";
export {
  lossBatch,
  palLambda,
  priorityOf,
  type LossBatch,
  type LossKind,
  type LossParams,
} from "./losses.js";
export {
  parseSnapshot,
  writeSnapshot,
  SNAPSHOT_MAGIC,
  SNAPSHOT_VERSION,
  type Snapshot,
  type SnapshotHeader,
  type TabularRecord,
} from "./snapshot.js";
