"""Mirror driver for the binding parity tests.

Executes a scripted operation sequence directly against the in-process
replay core (no bridge involved) and writes the results as JSON. The
TypeScript suite runs the same script through the BoundBuffer bindings and
requires byte-identical outcomes.

Usage: python3 parity_driver.py <ops.json> <out.json>
"""

import base64
import json
import sys

from prpl.losses import DatasetStats, LossSpec, loss_grad, loss_value
from prpl.replay import PayloadBuffer, SchemeConfig
from prpl.rng import Xoshiro256StarStar


def b64(data):
    return base64.b64encode(data).decode("ascii")


def main(ops_path, out_path):
    with open(ops_path) as fh:
        script = json.load(fh)

    spec = script["buffer"]
    scheme = SchemeConfig(
        kind=spec["scheme"]["kind"],
        alpha=spec["scheme"].get("alpha", 0.0),
        beta=spec["scheme"].get("beta", 0.0),
        epsilon=spec["scheme"].get("epsilon", 0.0),
        kappa=spec["scheme"].get("kappa", 1.0),
    )
    buf = PayloadBuffer(spec["capacity"], scheme,
                        max_payload=spec.get("max_payload", 65536))

    results = []
    for op in script["ops"]:
        kind = op["op"]
        if kind == "add":
            slot = buf.add(base64.b64decode(op["payload_b64"]))
            results.append({"op": "add", "slot": slot})
        elif kind == "sample":
            batch = buf.sample(op["batch"], Xoshiro256StarStar(op["seed"]))
            results.append({
                "op": "sample",
                "indices": batch.indices,
                "payloads_b64": [b64(p) for p in batch.transitions],
                "probabilities": batch.probabilities,
                "is_weights": batch.is_weights,
            })
        elif kind == "update":
            buf.update_priorities(op["slots"], op["abs_deltas"])
            results.append({"op": "update",
                            "max_priority": buf.max_priority_seen})
        elif kind == "snapshot":
            results.append({"op": "snapshot", "data_b64": b64(buf.to_snapshot())})
        else:
            raise ValueError(f"unknown op {kind!r}")

    loss_results = []
    for call in script.get("losses", []):
        params = call.get("params", {})
        spec_ = LossSpec(kind=call["kind"],
                         kappa=params.get("kappa", 1.0),
                         alpha=params.get("alpha", 0.0),
                         tau=params.get("tau", 1.0),
                         beta=params.get("beta", 0.0))
        stats = None
        if "lam" in params or "eta" in params:
            stats = DatasetStats(n=params.get("n", 1),
                                 lam=params.get("lam"),
                                 eta=params.get("eta"))
        deltas = call["deltas"]
        loss_results.append({
            "values": [loss_value(spec_, d, stats) for d in deltas],
            "grads": [loss_grad(spec_, d, stats) for d in deltas],
        })

    with open(out_path, "w") as fh:
        json.dump({
            "results": results,
            "losses": loss_results,
            "final_snapshot_b64": b64(buf.to_snapshot()),
        }, fh)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
