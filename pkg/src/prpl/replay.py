"""Experience replay with pluggable priority schemes.

A ring buffer of transitions backed by a :class:`~prpl.sumtree.SumTree`
holding one priority per slot. Three schemes:

* ``uniform``  every in-use slot has priority 1
* ``per``      priority |d|^alpha + epsilon, sampling corrected by
               importance weights (1 / (N p(i)))^beta normalized by the
               batch maximum
* ``lap``      priority max(|d|^alpha, kappa^alpha); the clip floor keeps
               every slot sampleable, so no importance weights are used

New transitions enter at the running maximum priority ever recorded so they
are sampled at least once before their error is known.

Buffers can be serialized to a little-endian binary snapshot (magic
``PRPL``) carrying the scheme, ring state, stored records, and leaf
priorities; see ``SNAPSHOT FORMAT`` below. The format is the interchange
used by checkpointing and by foreign-runtime bindings.

SNAPSHOT FORMAT (version 1, all little-endian)::

    magic            4 bytes  b"PRPL"
    version          u32      1
    storage_kind     u8       0 = tabular transitions, 1 = opaque payloads
    capacity         u64
    count            u64
    cursor           u64
    scheme_kind      u8       0 = uniform, 1 = per, 2 = lap
    alpha            f64
    beta             f64
    epsilon          f64
    kappa            f64
    anneal_flag      u8       1 if beta annealing configured
    anneal_beta0     f64
    anneal_end       u64
    max_priority     f64      running max priority ever recorded
    records          count * record (see below, slots 0..count-1)
    priorities       count * f64

    record, storage_kind 0:  state i64, action i64, reward f64,
                             next_state i64, terminal u8
    record, storage_kind 1:  length u32, then that many raw bytes

A buffer is owned by one writer at a time (same contract as the sum tree).
"""

import math
import struct
from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import EmptyStructureError
from .sumtree import SumTree

SNAPSHOT_MAGIC = b"PRPL"
SNAPSHOT_VERSION = 1

_SCHEME_TAGS = {"uniform": 0, "per": 1, "lap": 2}
_SCHEME_NAMES = {tag: name for name, tag in _SCHEME_TAGS.items()}

_HEADER = struct.Struct("<4sIBQQQBddddBdQd")
_TRANSITION_RECORD = struct.Struct("<qqdqB")
_PAYLOAD_LEN = struct.Struct("<I")
_F64 = struct.Struct("<d")


@dataclass(frozen=True)
class Transition:
    """One stored experience step (tabular: integer state/action ids)."""

    state: int
    action: int
    reward: float
    next_state: int
    terminal: bool

    def __post_init__(self):
        if not math.isfinite(self.reward):
            raise ValueError("reward must be finite")


@dataclass(frozen=True)
class SchemeConfig:
    """Priority scheme and its parameters.

    Defaults on the constructors are the standard settings: PER uses
    alpha=0.6, beta=0.4, epsilon=1e-10; LAP uses alpha=0.4 with kappa=1
    (pass alpha=0.6, kappa=0.01 for the low-error-scale preset).
    """

    kind: str
    alpha: float = 0.0
    beta: float = 0.0
    epsilon: float = 0.0
    kappa: float = 1.0
    beta_anneal: Optional[Tuple[float, int]] = None

    def __post_init__(self):
        if self.kind not in _SCHEME_TAGS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ValueError("epsilon must be finite and >= 0")
        if not (math.isfinite(self.kappa) and self.kappa > 0.0):
            raise ValueError("kappa must be a positive finite real")
        if self.beta_anneal is not None:
            beta0, end = self.beta_anneal
            if not 0.0 <= beta0 <= 1.0:
                raise ValueError("anneal start beta must lie in [0, 1]")
            if end <= 0:
                raise ValueError("anneal end step must be positive")

    @classmethod
    def uniform(cls):
        return cls(kind="uniform")

    @classmethod
    def per(cls, alpha=0.6, beta=0.4, epsilon=1e-10, beta_anneal=None):
        return cls(kind="per", alpha=alpha, beta=beta, epsilon=epsilon,
                   beta_anneal=beta_anneal)

    @classmethod
    def lap(cls, alpha=0.4, kappa=1.0):
        return cls(kind="lap", alpha=alpha, kappa=kappa)


def priority_of(abs_delta, scheme):
    """Priority assigned to an absolute TD error under a scheme."""
    if not (math.isfinite(abs_delta) and abs_delta >= 0.0):
        raise ValueError("abs_delta must be finite and >= 0")
    if scheme.kind == "per":
        return abs_delta ** scheme.alpha + scheme.epsilon
    if scheme.kind == "lap":
        return max(abs_delta ** scheme.alpha, scheme.kappa ** scheme.alpha)
    return 1.0


def effective_beta(scheme, step):
    """Importance-weight exponent at a training step.

    Constant without annealing; otherwise linear from the configured start
    value to 1 over the end step, clamped at 1.
    """
    if step < 0:
        raise ValueError("step must be >= 0")
    if scheme.beta_anneal is None:
        return scheme.beta
    beta0, end = scheme.beta_anneal
    frac = min(step / end, 1.0)
    return beta0 + (1.0 - beta0) * frac


@dataclass
class SampleBatch:
    """One sampled batch: slot ids, stored items, and sampling metadata.

    ``transitions`` holds :class:`Transition` objects for the tabular buffer
    and raw ``bytes`` payloads for the payload variant. ``probabilities``
    are the per-draw sampling probabilities p(i); ``is_weights`` are the
    importance weights (all 1 outside PER, batch maximum exactly 1 under
    PER).
    """

    indices: list
    transitions: list
    probabilities: list
    is_weights: list


class _RingBuffer:
    """Shared ring + priority machinery; subclasses fix the record codec."""

    storage_kind = None

    def __init__(self, capacity, scheme):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.scheme = scheme
        self.max_priority_seen = 1.0
        self._storage = [None] * capacity
        self._tree = SumTree(capacity)
        self._cursor = 0
        self._count = 0

    def __len__(self):
        return self._count

    @property
    def cursor(self):
        return self._cursor

    def add(self, item):
        """Store an item at the write cursor and return its slot id.

        The slot priority is the running maximum recorded so far (1 for the
        uniform scheme; never below the clip floor for LAP).
        """
        slot = self._cursor
        self._storage[slot] = item
        scheme = self.scheme
        if scheme.kind == "uniform":
            p = 1.0
        elif scheme.kind == "lap":
            p = max(self.max_priority_seen, scheme.kappa ** scheme.alpha)
        else:
            p = self.max_priority_seen
        self._tree.set(slot, p)
        self._cursor = (slot + 1) % self.capacity
        if self._count < self.capacity:
            self._count += 1
        return slot

    def sample(self, batch_size, rng, beta=None, stratified=False):
        """Draw a batch proportionally to stored priorities.

        ``beta`` overrides the scheme's importance-weight exponent (used by
        annealing schedules); it is ignored outside PER.
        """
        if self._count == 0:
            raise EmptyStructureError("cannot sample from an empty buffer")
        tree = self._tree
        indices = tree.sample_batch(batch_size, rng, stratified=stratified)
        total = tree.total()
        probs = [tree.get(i) / total for i in indices]
        if self.scheme.kind == "per":
            b = self.scheme.beta if beta is None else beta
            count = self._count
            hat = [(1.0 / (count * p)) ** b for p in probs]
            top = max(hat)
            weights = [h / top for h in hat]
        else:
            weights = [1.0] * batch_size
        items = [self._storage[i] for i in indices]
        return SampleBatch(indices, items, probs, weights)

    def update_priorities(self, slots, abs_deltas):
        """Reassign priorities from fresh absolute TD errors."""
        slots = list(slots)
        abs_deltas = list(abs_deltas)
        if len(slots) != len(abs_deltas):
            raise ValueError("slots and abs_deltas must have equal length")
        scheme = self.scheme
        kind = scheme.kind
        count = self._count
        tree_set = self._tree.set
        max_seen = self.max_priority_seen
        # hot path of the training loop: the per-kind branches below must
        # mirror priority_of exactly
        if kind == "per":
            alpha, eps = scheme.alpha, scheme.epsilon
            for slot, ad in zip(slots, abs_deltas):
                if not 0 <= slot < count:
                    raise ValueError(f"slot {slot} is not in use")
                if not (math.isfinite(ad) and ad >= 0.0):
                    raise ValueError("abs_delta must be finite and >= 0")
                p = ad ** alpha + eps
                tree_set(slot, p)
                if p > max_seen:
                    max_seen = p
        elif kind == "lap":
            alpha = scheme.alpha
            floor = scheme.kappa ** alpha
            for slot, ad in zip(slots, abs_deltas):
                if not 0 <= slot < count:
                    raise ValueError(f"slot {slot} is not in use")
                if not (math.isfinite(ad) and ad >= 0.0):
                    raise ValueError("abs_delta must be finite and >= 0")
                p = ad ** alpha
                if p < floor:
                    p = floor
                tree_set(slot, p)
                if p > max_seen:
                    max_seen = p
        else:
            for slot, ad in zip(slots, abs_deltas):
                if not 0 <= slot < count:
                    raise ValueError(f"slot {slot} is not in use")
                if not (math.isfinite(ad) and ad >= 0.0):
                    raise ValueError("abs_delta must be finite and >= 0")
                tree_set(slot, 1.0)
        self.max_priority_seen = max_seen

    def priority(self, slot):
        if not 0 <= slot < self._count:
            raise ValueError(f"slot {slot} is not in use")
        return self._tree.get(slot)

    def priorities(self):
        return [self._tree.get(i) for i in range(self._count)]

    def total_priority(self):
        return self._tree.total()

    # --- snapshot serialization ---

    def _encode_record(self, item):
        raise NotImplementedError

    def to_snapshot(self):
        """Serialize to the versioned binary snapshot format."""
        scheme = self.scheme
        anneal = scheme.beta_anneal
        header = _HEADER.pack(
            SNAPSHOT_MAGIC,
            SNAPSHOT_VERSION,
            self.storage_kind,
            self.capacity,
            self._count,
            self._cursor,
            _SCHEME_TAGS[scheme.kind],
            scheme.alpha,
            scheme.beta,
            scheme.epsilon,
            scheme.kappa,
            1 if anneal is not None else 0,
            anneal[0] if anneal is not None else 0.0,
            anneal[1] if anneal is not None else 0,
            self.max_priority_seen,
        )
        parts = [header]
        for slot in range(self._count):
            parts.append(self._encode_record(self._storage[slot]))
        for slot in range(self._count):
            parts.append(_F64.pack(self._tree.get(slot)))
        return b"".join(parts)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_snapshot())


class ReplayBuffer(_RingBuffer):
    """Replay buffer over tabular :class:`Transition` records."""

    storage_kind = 0

    def add(self, transition):
        if not isinstance(transition, Transition):
            raise TypeError("ReplayBuffer stores Transition items")
        return super().add(transition)

    def _encode_record(self, item):
        return _TRANSITION_RECORD.pack(item.state, item.action, item.reward,
                                       item.next_state, 1 if item.terminal else 0)


class PayloadBuffer(_RingBuffer):
    """Replay buffer over opaque byte payloads (bindings-facing variant)."""

    storage_kind = 1

    def __init__(self, capacity, scheme, max_payload=65536):
        super().__init__(capacity, scheme)
        if max_payload < 0:
            raise ValueError("max_payload must be >= 0")
        self.max_payload = max_payload

    def add(self, payload):
        if not isinstance(payload, (bytes, bytearray)):
            raise TypeError("PayloadBuffer stores bytes payloads")
        if len(payload) > self.max_payload:
            raise ValueError(f"payload of {len(payload)} bytes exceeds max "
                             f"{self.max_payload}")
        return super().add(bytes(payload))

    def _encode_record(self, item):
        return _PAYLOAD_LEN.pack(len(item)) + item


def _scheme_from_header(tag, alpha, beta, epsilon, kappa, anneal_flag,
                        anneal_beta0, anneal_end):
    kind = _SCHEME_NAMES.get(tag)
    if kind is None:
        raise ValueError(f"unknown scheme tag {tag}")
    anneal = (anneal_beta0, anneal_end) if anneal_flag else None
    return SchemeConfig(kind=kind, alpha=alpha, beta=beta, epsilon=epsilon,
                        kappa=kappa, beta_anneal=anneal)


def from_snapshot(data, max_payload=None):
    """Rebuild a buffer from snapshot bytes.

    Returns a :class:`ReplayBuffer` or :class:`PayloadBuffer` depending on
    the stored storage kind.
    """
    if len(data) < _HEADER.size:
        raise ValueError("snapshot truncated: missing header")
    (magic, version, storage_kind, capacity, count, cursor, scheme_tag,
     alpha, beta, epsilon, kappa, anneal_flag, anneal_beta0, anneal_end,
     max_priority) = _HEADER.unpack_from(data, 0)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError("not a PRPL snapshot (bad magic)")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    scheme = _scheme_from_header(scheme_tag, alpha, beta, epsilon, kappa,
                                 anneal_flag, anneal_beta0, anneal_end)
    offset = _HEADER.size
    items = []
    if storage_kind == 0:
        buf = ReplayBuffer(capacity, scheme)
        for _ in range(count):
            state, action, reward, next_state, terminal = \
                _TRANSITION_RECORD.unpack_from(data, offset)
            offset += _TRANSITION_RECORD.size
            items.append(Transition(state, action, reward, next_state,
                                    bool(terminal)))
    elif storage_kind == 1:
        kwargs = {} if max_payload is None else {"max_payload": max_payload}
        buf = PayloadBuffer(capacity, scheme, **kwargs)
        for _ in range(count):
            (length,) = _PAYLOAD_LEN.unpack_from(data, offset)
            offset += _PAYLOAD_LEN.size
            items.append(bytes(data[offset:offset + length]))
            offset += length
    else:
        raise ValueError(f"unknown storage kind {storage_kind}")
    priorities = []
    for _ in range(count):
        (p,) = _F64.unpack_from(data, offset)
        offset += _F64.size
        priorities.append(p)
    if offset != len(data):
        raise ValueError("snapshot has trailing bytes")
    for slot, item in enumerate(items):
        buf._storage[slot] = item
        buf._tree.set(slot, priorities[slot])
    buf._count = count
    buf._cursor = cursor
    buf.max_priority_seen = max_priority
    return buf


def load(path, max_payload=None):
    with open(path, "rb") as fh:
        return from_snapshot(fh.read(), max_payload=max_payload)
