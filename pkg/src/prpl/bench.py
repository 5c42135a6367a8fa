"""Scaling benchmark: sum-tree sampling vs a naive linear-scan sampler.

The workload mirrors how a replay buffer is exercised in training: draw a
batch of indices proportionally to the priorities, then rewrite the drawn
priorities with fresh values. The sum tree does both in O(log n) per
operation; the naive baseline rescans the whole priority array per draw.
Absolute times are host-dependent and not asserted anywhere; only the
relative scaling across capacities matters.

Timed sections run on one thread, warmup runs are excluded, and the
reported ns-per-op is the median over repetitions.
"""

import time
from dataclasses import dataclass

import numpy as np

from .errors import EmptyStructureError
from .rng import Xoshiro256StarStar, derive_seed
from .sumtree import SumTree

OPERATIONS = ("sample", "update", "mixed")
STRUCTURES = ("sumtree", "naive")


def naive_sample(priorities, u):
    """Reference O(n) sampler: smallest i with cumulative sum > u."""
    arr = np.asarray(priorities, dtype=np.float64)
    if arr.size == 0:
        raise EmptyStructureError("cannot sample from an empty array")
    cum = np.cumsum(arr)
    total = cum[-1]
    if total <= 0.0:
        raise EmptyStructureError("cannot sample when all priorities are zero")
    if not 0.0 <= u < total:
        raise ValueError(f"u={u!r} outside [0, {total!r})")
    return int(np.searchsorted(cum, u, side="right"))


@dataclass
class BenchResult:
    structure: str
    capacity: int
    operation: str
    batch: int
    iterations: int
    total_ns: int
    ns_per_op: float


class _TreeHarness:
    def __init__(self, capacity, rng):
        self.tree = SumTree(capacity)
        self.tree.fill([0.5 + rng.uniform() for _ in range(capacity)])

    def sample_batch(self, batch, rng):
        tree = self.tree
        find = tree.find_prefix
        total = tree.total()
        return [find(rng.uniform() * total) for _ in range(batch)]

    def update_batch(self, indices, rng):
        tree_set = self.tree.set
        for i in indices:
            tree_set(i, 0.5 + rng.uniform())

    def audit(self):
        self.tree.audit()


class _NaiveHarness:
    def __init__(self, capacity, rng):
        self.arr = np.empty(capacity, dtype=np.float64)
        for i in range(capacity):
            self.arr[i] = 0.5 + rng.uniform()

    def sample_batch(self, batch, rng):
        out = []
        arr = self.arr
        for _ in range(batch):
            cum = np.cumsum(arr)
            u = rng.uniform() * cum[-1]
            out.append(int(np.searchsorted(cum, u, side="right")))
        return out

    def update_batch(self, indices, rng):
        arr = self.arr
        for i in indices:
            arr[i] = 0.5 + rng.uniform()

    def audit(self):
        pass


_HARNESSES = {"sumtree": _TreeHarness, "naive": _NaiveHarness}


def _run_workload(harness, operation, batch, rng, capacity):
    if operation == "sample":
        harness.sample_batch(batch, rng)
    elif operation == "update":
        indices = [rng.randrange(capacity) for _ in range(batch)]
        harness.update_batch(indices, rng)
    else:  # mixed
        indices = harness.sample_batch(batch, rng)
        harness.update_batch(indices, rng)


def run_bench(capacities, batch_size=32, iterations=20, operations=("mixed",),
              structures=STRUCTURES, repetitions=5, seed=0):
    """Time each structure/capacity/operation cell; returns BenchResults.

    Per cell: priorities are seeded deterministically, 10% of the
    iterations run untimed as warmup, then ``repetitions`` timed blocks of
    ``iterations`` workloads each; the reported ns-per-op is the median
    block time divided by iterations * batch. The sum tree is audited after
    its timed runs.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    for op in operations:
        if op not in OPERATIONS:
            raise ValueError(f"unknown operation {op!r}")
    for structure in structures:
        if structure not in _HARNESSES:
            raise ValueError(f"unknown structure {structure!r}")
    for capacity in capacities:
        if capacity < batch_size:
            raise ValueError("capacity must be >= batch_size")

    results = []
    cell = 0
    for capacity in capacities:
        for structure in structures:
            for operation in operations:
                rng = Xoshiro256StarStar(derive_seed(seed, cell))
                cell += 1
                harness = _HARNESSES[structure](capacity, rng)
                warmup = max(1, iterations // 10)
                for _ in range(warmup):
                    _run_workload(harness, operation, batch_size, rng, capacity)
                block_ns = []
                for _ in range(repetitions):
                    t0 = time.perf_counter_ns()
                    for _ in range(iterations):
                        _run_workload(harness, operation, batch_size, rng,
                                      capacity)
                    block_ns.append(time.perf_counter_ns() - t0)
                harness.audit()
                block_ns.sort()
                median_ns = block_ns[len(block_ns) // 2]
                results.append(BenchResult(
                    structure=structure,
                    capacity=capacity,
                    operation=operation,
                    batch=batch_size,
                    iterations=iterations,
                    total_ns=median_ns,
                    ns_per_op=median_ns / (iterations * batch_size),
                ))
    return results


def results_to_csv(results, fh):
    fh.write("structure,capacity,operation,batch,iters,ns_per_op\n")
    for r in results:
        fh.write(f"{r.structure},{r.capacity},{r.operation},{r.batch},"
                 f"{r.iterations},{r.ns_per_op!r}\n")


def check_scaling(results, small, large, tree_factor=8.0, naive_factor=50.0,
                  operation="mixed"):
    """Evaluate the scaling assertions on a result set.

    Returns a list of (name, passed, detail) tuples covering: sum-tree
    ns-per-op at the large capacity within ``tree_factor`` of the small one,
    naive at least ``naive_factor`` over the same range, and the sum tree
    strictly faster than naive at the large capacity.
    """
    def lookup(structure, capacity):
        for r in results:
            if (r.structure == structure and r.capacity == capacity
                    and r.operation == operation):
                return r.ns_per_op
        raise ValueError(f"no result for {structure} at capacity {capacity} "
                         f"({operation})")

    tree_small, tree_large = lookup("sumtree", small), lookup("sumtree", large)
    naive_small, naive_large = lookup("naive", small), lookup("naive", large)
    tree_ratio = tree_large / tree_small
    naive_ratio = naive_large / naive_small
    return [
        ("sumtree_log_scaling", tree_ratio <= tree_factor,
         f"ratio {tree_ratio:.2f} (bound {tree_factor})"),
        ("naive_linear_scaling", naive_ratio >= naive_factor,
         f"ratio {naive_ratio:.2f} (bound {naive_factor})"),
        ("sumtree_beats_naive_at_large", tree_large < naive_large,
         f"{tree_large:.1f} vs {naive_large:.1f} ns/op"),
    ]
