/**
 * Reader/writer for the core's binary buffer snapshot (magic "PRPL",
 * version 1, little-endian). This is the interchange format shared with
 * the core: the frontend parses it for inspection and can emit it back
 * byte-identically, which the parity tests rely on.
 *
 * Layout: header (magic, version u32, storage kind u8, capacity u64,
 * count u64, cursor u64, scheme tag u8, alpha/beta/epsilon/kappa f64,
 * anneal flag u8, anneal start f64, anneal end u64, max priority f64),
 * then `count` records, then `count` leaf priorities as f64. Records are
 * length-prefixed byte strings for payload buffers (storage kind 1) and
 * fixed (i64 state, i64 action, f64 reward, i64 next_state, u8 terminal)
 * tuples for tabular buffers (storage kind 0).
 */

export const SNAPSHOT_MAGIC = "PRPL";
export const SNAPSHOT_VERSION = 1;
const HEADER_SIZE = 91;

export type SchemeKind = "uniform" | "per" | "lap";
const SCHEME_KINDS: SchemeKind[] = ["uniform", "per", "lap"];

export interface SnapshotHeader {
  version: number;
  storageKind: number;
  capacity: number;
  count: number;
  cursor: number;
  scheme: {
    kind: SchemeKind;
    alpha: number;
    beta: number;
    epsilon: number;
    kappa: number;
    betaAnneal: [number, number] | null;
  };
  maxPriority: number;
}

export interface TabularRecord {
  state: number;
  action: number;
  reward: number;
  nextState: number;
  terminal: boolean;
}

export interface Snapshot {
  header: SnapshotHeader;
  /** payload records (storage kind 1) */
  payloads: Uint8Array[];
  /** tabular records (storage kind 0) */
  transitions: TabularRecord[];
  priorities: number[];
}

function checkedNumber(value: bigint, what: string): number {
  if (value > BigInt(Number.MAX_SAFE_INTEGER) ||
      value < -BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new Error(`${what} exceeds the safe integer range`);
  }
  return Number(value);
}

export function parseSnapshot(data: Uint8Array): Snapshot {
  if (data.length < HEADER_SIZE) {
    throw new Error("snapshot truncated: missing header");
  }
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const magic = String.fromCharCode(data[0]!, data[1]!, data[2]!, data[3]!);
  if (magic !== SNAPSHOT_MAGIC) {
    throw new Error("not a PRPL snapshot (bad magic)");
  }
  const version = view.getUint32(4, true);
  if (version !== SNAPSHOT_VERSION) {
    throw new Error(`unsupported snapshot version ${version}`);
  }
  const storageKind = view.getUint8(8);
  const capacity = checkedNumber(view.getBigUint64(9, true), "capacity");
  const count = checkedNumber(view.getBigUint64(17, true), "count");
  const cursor = checkedNumber(view.getBigUint64(25, true), "cursor");
  const schemeTag = view.getUint8(33);
  const kind = SCHEME_KINDS[schemeTag];
  if (kind === undefined) {
    throw new Error(`unknown scheme tag ${schemeTag}`);
  }
  const alpha = view.getFloat64(34, true);
  const beta = view.getFloat64(42, true);
  const epsilon = view.getFloat64(50, true);
  const kappa = view.getFloat64(58, true);
  const annealFlag = view.getUint8(66);
  const annealBeta0 = view.getFloat64(67, true);
  const annealEnd = checkedNumber(view.getBigUint64(75, true), "anneal end");
  const maxPriority = view.getFloat64(83, true);

  let offset = HEADER_SIZE;
  const payloads: Uint8Array[] = [];
  const transitions: TabularRecord[] = [];
  for (let i = 0; i < count; i++) {
    if (storageKind === 1) {
      const length = view.getUint32(offset, true);
      offset += 4;
      payloads.push(data.slice(offset, offset + length));
      offset += length;
    } else if (storageKind === 0) {
      transitions.push({
        state: checkedNumber(view.getBigInt64(offset, true), "state"),
        action: checkedNumber(view.getBigInt64(offset + 8, true), "action"),
        reward: view.getFloat64(offset + 16, true),
        nextState: checkedNumber(view.getBigInt64(offset + 24, true),
          "next_state"),
        terminal: view.getUint8(offset + 32) !== 0,
      });
      offset += 33;
    } else {
      throw new Error(`unknown storage kind ${storageKind}`);
    }
  }
  const priorities: number[] = [];
  for (let i = 0; i < count; i++) {
    priorities.push(view.getFloat64(offset, true));
    offset += 8;
  }
  if (offset !== data.length) {
    throw new Error("snapshot has trailing bytes");
  }
  return {
    header: {
      version,
      storageKind,
      capacity,
      count,
      cursor,
      scheme: {
        kind,
        alpha,
        beta,
        epsilon,
        kappa,
        betaAnneal: annealFlag ? [annealBeta0, annealEnd] : null,
      },
      maxPriority,
    },
    payloads,
    transitions,
    priorities,
  };
}

export function writeSnapshot(snapshot: Snapshot): Uint8Array {
  const { header } = snapshot;
  let recordBytes = 0;
  if (header.storageKind === 1) {
    for (const p of snapshot.payloads) recordBytes += 4 + p.length;
  } else {
    recordBytes = 33 * snapshot.transitions.length;
  }
  const total = HEADER_SIZE + recordBytes + 8 * snapshot.priorities.length;
  const out = new Uint8Array(total);
  const view = new DataView(out.buffer);
  out.set([0x50, 0x52, 0x50, 0x4c], 0); // "PRPL"
  view.setUint32(4, header.version, true);
  view.setUint8(8, header.storageKind);
  view.setBigUint64(9, BigInt(header.capacity), true);
  view.setBigUint64(17, BigInt(header.count), true);
  view.setBigUint64(25, BigInt(header.cursor), true);
  view.setUint8(33, SCHEME_KINDS.indexOf(header.scheme.kind));
  view.setFloat64(34, header.scheme.alpha, true);
  view.setFloat64(42, header.scheme.beta, true);
  view.setFloat64(50, header.scheme.epsilon, true);
  view.setFloat64(58, header.scheme.kappa, true);
  view.setUint8(66, header.scheme.betaAnneal ? 1 : 0);
  view.setFloat64(67, header.scheme.betaAnneal?.[0] ?? 0.0, true);
  view.setBigUint64(75, BigInt(header.scheme.betaAnneal?.[1] ?? 0), true);
  view.setFloat64(83, header.maxPriority, true);
  let offset = HEADER_SIZE;
  if (header.storageKind === 1) {
    for (const p of snapshot.payloads) {
      view.setUint32(offset, p.length, true);
      offset += 4;
      out.set(p, offset);
      offset += p.length;
    }
  } else {
    for (const t of snapshot.transitions) {
      view.setBigInt64(offset, BigInt(t.state), true);
      view.setBigInt64(offset + 8, BigInt(t.action), true);
      view.setFloat64(offset + 16, t.reward, true);
      view.setBigInt64(offset + 24, BigInt(t.nextState), true);
      view.setUint8(offset + 32, t.terminal ? 1 : 0);
      offset += 33;
    }
  }
  for (const p of snapshot.priorities) {
    view.setFloat64(offset, p, true);
    offset += 8;
  }
  return out;
}
