"""Line-delimited JSON bridge exposing the replay core to foreign runtimes.

Reads one JSON request per line on stdin and writes one JSON response per
line on stdout. Every operation delegates directly to the in-process
implementations, so results over the bridge are bit-identical to direct
calls: floats survive the JSON round trip exactly (shortest-round-trip
encoding on both ends), byte payloads travel base64-encoded.

Requests:  {"id": int, "op": str, ...op-specific fields}
Responses: {"id": int, "ok": true, ...result} or
           {"id": int, "ok": false, "error": str}

Operations: create_buffer, add, sample, update_priorities, priority,
snapshot, load_snapshot, close_buffer, priority_of, pal_lambda, losses,
ping, shutdown. Buffers are addressed by the integer handle returned from
create_buffer/load_snapshot. Run with ``python -m prpl.bridge``.
"""

import base64
import json
import sys

from .losses import LossSpec, DatasetStats, loss_grad, loss_value, pal_lambda
from .replay import PayloadBuffer, SchemeConfig, from_snapshot, priority_of
from .rng import Xoshiro256StarStar


def _scheme_from_json(obj):
    anneal = obj.get("beta_anneal")
    return SchemeConfig(
        kind=obj["kind"],
        alpha=obj.get("alpha", 0.0),
        beta=obj.get("beta", 0.0),
        epsilon=obj.get("epsilon", 0.0),
        kappa=obj.get("kappa", 1.0),
        beta_anneal=tuple(anneal) if anneal is not None else None,
    )


def _loss_spec_from_json(kind, params):
    return LossSpec(
        kind=kind,
        kappa=params.get("kappa", 1.0),
        alpha=params.get("alpha", 0.0),
        tau=params.get("tau", 1.0),
        beta=params.get("beta", 0.0),
    )


def _stats_from_json(params):
    if "lam" not in params and "eta" not in params:
        return None
    return DatasetStats(n=params.get("n", 1), lam=params.get("lam"),
                        eta=params.get("eta"))


class Bridge:
    def __init__(self):
        self._buffers = {}
        self._next_handle = 1

    def _register(self, buf):
        handle = self._next_handle
        self._next_handle += 1
        self._buffers[handle] = buf
        return handle

    def _buffer(self, request):
        handle = request["buffer"]
        try:
            return self._buffers[handle]
        except KeyError:
            raise ValueError(f"unknown buffer handle {handle}") from None

    def handle(self, request):
        op = request["op"]
        if op == "ping":
            return {}
        if op == "create_buffer":
            buf = PayloadBuffer(request["capacity"],
                                _scheme_from_json(request["scheme"]),
                                max_payload=request.get("max_payload", 65536))
            return {"buffer": self._register(buf)}
        if op == "add":
            buf = self._buffer(request)
            payload = base64.b64decode(request["payload"])
            return {"slot": buf.add(payload)}
        if op == "sample":
            buf = self._buffer(request)
            rng = Xoshiro256StarStar(request["seed"])
            batch = buf.sample(request["batch"], rng,
                               stratified=request.get("stratified", False))
            return {
                "indices": batch.indices,
                "payloads": [base64.b64encode(p).decode("ascii")
                             for p in batch.transitions],
                "probabilities": batch.probabilities,
                "is_weights": batch.is_weights,
            }
        if op == "update_priorities":
            buf = self._buffer(request)
            buf.update_priorities(request["slots"], request["abs_deltas"])
            return {"max_priority": buf.max_priority_seen}
        if op == "priority":
            buf = self._buffer(request)
            return {"priority": buf.priority(request["slot"])}
        if op == "snapshot":
            buf = self._buffer(request)
            data = buf.to_snapshot()
            return {"data": base64.b64encode(data).decode("ascii")}
        if op == "load_snapshot":
            data = base64.b64decode(request["data"])
            buf = from_snapshot(data)
            scheme = buf.scheme
            return {
                "buffer": self._register(buf),
                "count": len(buf),
                "capacity": buf.capacity,
                "scheme": {
                    "kind": scheme.kind,
                    "alpha": scheme.alpha,
                    "beta": scheme.beta,
                    "epsilon": scheme.epsilon,
                    "kappa": scheme.kappa,
                    "beta_anneal": list(scheme.beta_anneal)
                                   if scheme.beta_anneal else None,
                },
            }
        if op == "close_buffer":
            self._buffers.pop(request["buffer"], None)
            return {}
        if op == "priority_of":
            scheme = _scheme_from_json(request["scheme"])
            return {"priority": priority_of(request["abs_delta"], scheme)}
        if op == "pal_lambda":
            return {"value": pal_lambda(request["deltas"], request["alpha"],
                                        request.get("kappa", 1.0))}
        if op == "losses":
            params = request.get("params", {})
            spec = _loss_spec_from_json(request["kind"], params)
            stats = _stats_from_json(params)
            deltas = request["deltas"]
            return {
                "values": [loss_value(spec, d, stats) for d in deltas],
                "grads": [loss_grad(spec, d, stats) for d in deltas],
            }
        raise ValueError(f"unknown op {op!r}")


def serve(stdin=None, stdout=None):
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    bridge = Bridge()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        if request.get("op") == "shutdown":
            stdout.write(json.dumps({"id": request.get("id"), "ok": True}))
            stdout.write("\n")
            stdout.flush()
            break
        try:
            result = bridge.handle(request)
            response = {"id": request.get("id"), "ok": True, **result}
        except (ValueError, TypeError, KeyError) as exc:
            response = {"id": request.get("id"), "ok": False,
                        "error": f"{type(exc).__name__}: {exc}"}
        stdout.write(json.dumps(response))
        stdout.write("\n")
        stdout.flush()


if __name__ == "__main__":
    serve()
