"""Sum tree for proportional sampling in O(log n).

A complete binary tree stored as a flat heap array: leaves hold nonnegative
priorities, every internal node holds the sum of its two children, the root
holds the total. Updating a leaf rewrites the path to the root; drawing an
index for a prefix value descends from the root. Parent nodes are recomputed
from their children on every update, so the parent-sum invariant holds
exactly at all times (no drift accumulates, no periodic rebuild is needed).

Writers must be serialized against each other and against readers; purely
read-only use (``total``/``find_prefix``/``sample_batch``) may run
concurrently between writes.
"""

import math

from .errors import EmptyStructureError


class SumTree:
    """Priorities over ``capacity`` slots with prefix-sum descent.

    The leaf layer is padded to the next power of two; padding leaves stay
    at priority zero and are never returned by ``find_prefix`` (a descent
    with ``u < total`` cannot enter a zero-mass subtree).
    """

    __slots__ = ("capacity", "size", "node_touches", "_leaves", "_levels", "_nodes")

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        leaves = 1
        while leaves < capacity:
            leaves <<= 1
        self.capacity = capacity
        self.size = 0
        # cumulative count of tree nodes visited by set/find_prefix, for
        # complexity assertions: each op touches exactly levels + 1 nodes
        self.node_touches = 0
        self._leaves = leaves
        self._levels = leaves.bit_length() - 1
        self._nodes = [0.0] * (2 * leaves)

    @property
    def levels(self):
        return self._levels

    def set(self, index, priority):
        """Set ``leaf[index] = priority`` and refresh its ancestors."""
        if not 0 <= index < self.capacity:
            raise ValueError(f"index {index} out of range [0, {self.capacity})")
        if not (math.isfinite(priority) and priority >= 0.0):
            raise ValueError("priority must be finite and >= 0")
        nodes = self._nodes
        h = self._leaves + index
        nodes[h] = priority
        h >>= 1
        while h:
            left = h << 1
            nodes[h] = nodes[left] + nodes[left | 1]
            h >>= 1
        self.node_touches += self._levels + 1
        if index >= self.size:
            self.size = index + 1

    def get(self, index):
        if not 0 <= index < self.capacity:
            raise ValueError(f"index {index} out of range [0, {self.capacity})")
        return self._nodes[self._leaves + index]

    def total(self):
        return self._nodes[1]

    def find_prefix(self, u):
        """Smallest index i with ``sum(leaf[0..i]) > u``.

        Descends root to leaf: go left when ``u`` is below the left-child
        sum, otherwise subtract it and go right (ties go right). When a
        parent's stored sum rounded up, the residual after a right turn can
        reach the right child's own sum; it is clamped strictly below so
        the descent invariant (u < subtree sum) survives float rounding and
        zero-mass subtrees stay unreachable.
        """
        nodes = self._nodes
        total = nodes[1]
        if total <= 0.0:
            raise EmptyStructureError("cannot search an empty (zero-total) tree")
        if not 0.0 <= u < total:
            raise ValueError(f"u={u!r} outside [0, {total!r})")
        h = 1
        leaves = self._leaves
        while h < leaves:
            h <<= 1
            left = nodes[h]
            if u >= left:
                h |= 1
                u -= left
                limit = nodes[h]
                if u >= limit:
                    u = math.nextafter(limit, 0.0)
        self.node_touches += self._levels + 1
        return h - leaves

    def sample_batch(self, batch, rng, stratified=False):
        """Draw ``batch`` indices proportionally to the stored priorities.

        i.i.d. by default; with ``stratified`` the k-th draw is uniform on
        the k-th of ``batch`` equal slices of [0, total).
        """
        if batch < 1:
            raise ValueError("batch must be >= 1")
        total = self._nodes[1]
        if total <= 0.0:
            raise EmptyStructureError("cannot sample from an empty (zero-total) tree")
        find = self.find_prefix
        if not stratified:
            uniform = rng.uniform
            return [find(uniform() * total) for _ in range(batch)]
        top = math.nextafter(total, 0.0)
        segment = total / batch
        out = []
        for k in range(batch):
            u = (k + rng.uniform()) * segment
            out.append(find(u if u < total else top))
        return out

    def fill(self, priorities):
        """Bulk-load leaf priorities and rebuild internal sums bottom-up.

        O(n) total, versus O(n log n) for repeated ``set`` calls.
        """
        priorities = list(priorities)
        if len(priorities) > self.capacity:
            raise ValueError("more priorities than capacity")
        nodes = self._nodes
        leaves = self._leaves
        for i in range(leaves):
            p = priorities[i] if i < len(priorities) else 0.0
            if not (math.isfinite(p) and p >= 0.0):
                raise ValueError("priority must be finite and >= 0")
            nodes[leaves + i] = p
        for h in range(leaves - 1, 0, -1):
            left = h << 1
            nodes[h] = nodes[left] + nodes[left | 1]
        self.size = len(priorities)

    def audit(self):
        """Verify every internal node equals the sum of its children exactly."""
        nodes = self._nodes
        for h in range(1, self._leaves):
            left = h << 1
            if nodes[h] != nodes[left] + nodes[left | 1]:
                raise RuntimeError(f"parent-sum invariant violated at node {h}")

    def leaf_values(self):
        """Copy of the in-range leaf priorities."""
        base = self._leaves
        return list(self._nodes[base:base + self.capacity])
