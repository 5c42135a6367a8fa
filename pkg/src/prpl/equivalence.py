"""Numeric certification of the sampling/loss-function equivalences.

The identities verified here all have the same shape: the expected gradient
of one loss under uniform sampling over a finite error set equals the
expected gradient of another loss under priority-proportional sampling,
provided grad L1(d) = pr(d)/lam * grad L2(d) with lam the mean priority.
This module evaluates both sides by exact summation (math.fsum, which is
exactly rounded) and, separately, by Monte Carlo through a real replay
buffer, and reports the discrepancies.

Checks provided:

* ``check_lap_pal``               pal under uniform vs huber under clipped
                                  priorities
* ``check_mse_l1``                mse under uniform vs scaled l1 under
                                  |d|-proportional priorities
* ``check_per_equivalent_loss``   the per_tau power loss under uniform vs
                                  importance-weighted PER on |d|^tau / tau
* ``variance_sweep``              gradient variance across candidate
                                  priority/loss pairings sharing one
                                  expected gradient; the sign-gradient
                                  (l1) candidate should attain the minimum
* ``monte_carlo_expected_grad``   buffer-in-the-loop estimate with CLT
                                  standard error

Report objects serialize to JSON lines with fields
{check, params, lhs, rhs, abs_diff, rel_diff, pass}.
"""

import json
import math
from dataclasses import dataclass

from .errors import DegenerateDistributionError, SignMismatchError, ZeroDeltaError
from .losses import DatasetStats, LossSpec, loss_grad, sign
from .replay import ReplayBuffer, Transition

DEFAULT_ATOL = 1e-10
DEFAULT_RTOL = 1e-10


@dataclass(frozen=True)
class DeltaSet:
    """A finite set of current TD errors standing in for a replay buffer."""

    deltas: tuple

    def __post_init__(self):
        if len(self.deltas) == 0:
            raise ValueError("delta set must be non-empty")
        for d in self.deltas:
            if not math.isfinite(d):
                raise ValueError("deltas must be finite")

    @classmethod
    def of(cls, deltas):
        return cls(tuple(float(d) for d in deltas))

    @property
    def n(self):
        return len(self.deltas)

    def require_nonzero(self):
        if any(d == 0.0 for d in self.deltas):
            raise ZeroDeltaError("this check requires all deltas nonzero")


@dataclass
class EquivalenceReport:
    check: str
    params: dict
    lhs_expected_grad: float
    rhs_expected_grad: float
    abs_diff: float
    rel_diff: float
    passed: bool

    def to_json(self):
        return json.dumps({
            "check": self.check,
            "params": self.params,
            "lhs": self.lhs_expected_grad,
            "rhs": self.rhs_expected_grad,
            "abs_diff": self.abs_diff,
            "rel_diff": self.rel_diff,
            "pass": self.passed,
        })


@dataclass
class VarianceReport:
    check: str
    params: dict
    candidate: str
    uniform_variance: float
    prioritized_variance: float
    passed: bool

    def to_json(self):
        diff = abs(self.uniform_variance - self.prioritized_variance)
        scale = max(abs(self.uniform_variance), abs(self.prioritized_variance))
        return json.dumps({
            "check": self.check,
            "params": {**self.params, "candidate": self.candidate},
            "lhs": self.uniform_variance,
            "rhs": self.prioritized_variance,
            "abs_diff": diff,
            "rel_diff": diff / scale if scale > 0.0 else 0.0,
            "pass": self.passed,
        })


def _make_report(check, params, lhs, rhs, atol, rtol):
    abs_diff = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs))
    rel_diff = abs_diff / scale if scale > 0.0 else 0.0
    passed = abs_diff <= atol or rel_diff <= rtol
    return EquivalenceReport(check, params, lhs, rhs, abs_diff, rel_diff, passed)


def stats_for(ds, spec):
    """Dataset statistics a loss spec needs, computed from the delta set."""
    if spec.kind == "pal":
        return DatasetStats.for_pal(ds.deltas, spec.alpha, spec.kappa)
    if spec.kind == "per_tau":
        return DatasetStats.for_per_tau(ds.deltas, spec.alpha, spec.beta)
    return None


def expected_grad_uniform(ds, spec):
    """Exact mean gradient over the delta set (uniform sampling)."""
    stats = stats_for(ds, spec)
    return math.fsum(loss_grad(spec, d, stats) for d in ds.deltas) / ds.n


def expected_grad_prioritized(ds, spec, priorities):
    """Exact priority-weighted mean gradient over the delta set."""
    priorities = list(priorities)
    if len(priorities) != ds.n:
        raise ValueError("priorities length must match the delta set")
    for p in priorities:
        if not (math.isfinite(p) and p >= 0.0):
            raise ValueError("priorities must be finite and >= 0")
    total = math.fsum(priorities)
    if total <= 0.0:
        raise DegenerateDistributionError("all priorities are zero")
    stats = stats_for(ds, spec)
    weighted = math.fsum(p * loss_grad(spec, d, stats)
                         for p, d in zip(priorities, ds.deltas))
    return weighted / total


def lap_priorities(ds, alpha, kappa=1.0):
    """Clipped priorities max(|d|^alpha, kappa^alpha) for every delta."""
    floor = kappa ** alpha
    return [max(abs(d) ** alpha, floor) for d in ds.deltas]


def check_lap_pal(ds, alpha, kappa=1.0, atol=DEFAULT_ATOL, rtol=DEFAULT_RTOL):
    """Uniform pal gradient vs clipped-priority huber gradient."""
    # the pal scale lam is by definition the mean of the clipped priorities,
    # so compute them once and share
    priorities = lap_priorities(ds, alpha, kappa)
    stats = DatasetStats(n=ds.n, lam=math.fsum(priorities) / ds.n)
    pal = LossSpec.pal(alpha, kappa)
    lhs = math.fsum(loss_grad(pal, d, stats) for d in ds.deltas) / ds.n
    rhs = expected_grad_prioritized(ds, LossSpec.huber(kappa), priorities)
    return _make_report("lap_pal", {"n": ds.n, "alpha": alpha, "kappa": kappa},
                        lhs, rhs, atol, rtol)


def check_mse_l1(ds, atol=1e-12, rtol=1e-12):
    """Uniform mse gradient vs lam-scaled l1 gradient under |d| priorities."""
    lhs = expected_grad_uniform(ds, LossSpec.mse())
    priorities = [abs(d) for d in ds.deltas]
    lam = math.fsum(priorities) / ds.n
    if lam <= 0.0:
        raise DegenerateDistributionError("all deltas are zero")
    rhs = lam * expected_grad_prioritized(ds, LossSpec.l1(), priorities)
    return _make_report("mse_l1", {"n": ds.n}, lhs, rhs, atol, rtol)


def _per_weighted_sum(ds, taus, alpha, beta):
    """Exact sum_i w(i) p(i) grad(|d|^tau_i / tau_i) with PER probabilities.

    Weights use the global maximum of (1/(N p(j)))^beta over the whole set,
    i.e. the form the equivalence is stated in, not the per-batch surrogate
    used by buffer sampling.
    """
    n = ds.n
    powers = [abs(d) ** alpha for d in ds.deltas]
    total = math.fsum(powers)
    probs = [a / total for a in powers]
    hats = [(1.0 / (n * p)) ** beta for p in probs]
    top = max(hats)
    terms = []
    for d, p, hat, tau in zip(ds.deltas, probs, hats, taus):
        w = hat / top
        terms.append(w * p * sign(d) * abs(d) ** (tau - 1.0))
    return math.fsum(terms)


def check_per_equivalent_loss(ds, tau, alpha, beta, atol=DEFAULT_ATOL,
                              rtol=DEFAULT_RTOL, huber=False):
    """PER on a power loss vs its uniform-sampling equivalent.

    With ``huber`` the power dispatches per sample: 2 below unit error, 1
    above, mirroring the huber gradient with unit threshold.
    """
    ds.require_nonzero()
    if huber:
        taus = [2.0 if abs(d) <= 1.0 else 1.0 for d in ds.deltas]
    else:
        taus = [tau] * ds.n
    stats = DatasetStats.for_per_tau(ds.deltas, alpha, beta)
    lhs = math.fsum(
        loss_grad(LossSpec.per_tau(t, alpha, beta), d, stats)
        for t, d in zip(taus, ds.deltas)) / ds.n
    rhs = _per_weighted_sum(ds, taus, alpha, beta)
    params = {"n": ds.n, "tau": "huber" if huber else tau,
              "alpha": alpha, "beta": beta}
    return _make_report("per_equivalent_loss", params, lhs, rhs, atol, rtol)


def _variance(values, weights=None):
    """Exact Var(x) = E[x^2] - E[x]^2 under the given distribution."""
    n = len(values)
    if weights is None:
        mean = math.fsum(values) / n
        second = math.fsum(v * v for v in values) / n
    else:
        total = math.fsum(weights)
        if total <= 0.0:
            raise DegenerateDistributionError("all priorities are zero")
        mean = math.fsum(w * v for w, v in zip(weights, values)) / total
        second = math.fsum(w * v * v for w, v in zip(weights, values)) / total
    return second - mean * mean


def grad_variance(ds, spec, priorities=None, scale=1.0):
    """Variance of scale * grad under uniform or prioritized sampling."""
    stats = stats_for(ds, spec)
    values = [scale * loss_grad(spec, d, stats) for d in ds.deltas]
    if priorities is None:
        return _variance(values)
    priorities = list(priorities)
    if len(priorities) != ds.n:
        raise ValueError("priorities length must match the delta set")
    return _variance(values, priorities)


def variance_sweep(ds, base_spec, exponents, tol=1e-12):
    """Variance of candidate priority/loss pairings vs the uniform base loss.

    Each exponent c defines a candidate gradient sign(d)|d|^c; the matching
    priorities pr(i) = |grad_base(d_i)| / |d_i|^c keep the expected gradient
    equal to the uniform base-loss gradient. The sign-gradient candidate
    (c = 0, the l1 loss) should attain the minimum variance of the family
    and never exceed the uniform variance. Candidates with larger exponents
    may legitimately exceed the uniform variance (they overweight small
    errors), so their pass flag asserts only that they do not beat the
    sign-gradient candidate.
    """
    ds.require_nonzero()
    base_stats = stats_for(ds, base_spec)
    base_grads = [loss_grad(base_spec, d, base_stats) for d in ds.deltas]
    for g, d in zip(base_grads, ds.deltas):
        if g != 0.0 and sign(g) != sign(d):
            raise SignMismatchError(
                "base loss gradient opposes the error sign; priorities "
                "would be negative")
    uniform_var = _variance(base_grads)
    variances = []
    for c in exponents:
        grads = [sign(d) * abs(d) ** c for d in ds.deltas]
        priorities = [abs(g) / abs(d) ** c for g, d in zip(base_grads, ds.deltas)]
        lam = math.fsum(priorities) / ds.n
        values = [lam * g for g in grads]
        variances.append(_variance(values, priorities))
    floor = None
    for c, var in zip(exponents, variances):
        if c == 0.0:
            floor = var
    if floor is None:
        floor = min(variances)
    reports = []
    for c, var in zip(exponents, variances):
        if c == 0.0:
            passed = var <= uniform_var + tol * (1.0 + abs(uniform_var))
        else:
            passed = var >= floor - tol * (1.0 + abs(floor))
        reports.append(VarianceReport(
            check="variance_sweep",
            params={"n": ds.n, "base": base_spec.kind, "exponent": c},
            candidate=f"c={c:g}",
            uniform_variance=uniform_var,
            prioritized_variance=var,
            passed=passed,
        ))
    return reports


def _exact_priorities(ds, scheme):
    from .replay import priority_of
    return [priority_of(abs(d), scheme) for d in ds.deltas]


def monte_carlo_expected_grad(ds, scheme, spec, draws, rng, batch_size=32,
                              normalization="batch"):
    """Estimate the expected (weighted) gradient through real buffer sampling.

    Loads the delta set into a replay buffer with exact per-scheme
    priorities, draws i.i.d. batches, and averages the importance-weighted
    gradients. ``normalization`` selects how PER weights are normalized:
    ``"batch"`` uses the buffer's per-batch maximum (what training does),
    ``"global"`` uses the maximum over the whole set (the form the
    equivalence is stated in). Returns ``(estimate, standard_error)``.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    if normalization not in ("batch", "global"):
        raise ValueError("normalization must be 'batch' or 'global'")
    n = ds.n
    buf = ReplayBuffer(n, scheme)
    for _ in range(n):
        buf.add(Transition(0, 0, 0.0, 0, False))
    buf.update_priorities(range(n), [abs(d) for d in ds.deltas])

    stats = stats_for(ds, spec)
    grads = [loss_grad(spec, d, stats) for d in ds.deltas]

    global_top = None
    if scheme.kind == "per" and normalization == "global":
        priorities = _exact_priorities(ds, scheme)
        total = math.fsum(priorities)
        global_top = max((1.0 / (n * (p / total))) ** scheme.beta
                         for p in priorities)

    values = []
    remaining = draws
    while remaining > 0:
        b = min(batch_size, remaining)
        batch = buf.sample(b, rng)
        if scheme.kind == "per":
            if normalization == "global":
                weights = [(1.0 / (n * p)) ** scheme.beta / global_top
                           for p in batch.probabilities]
            else:
                weights = batch.is_weights
        else:
            weights = batch.is_weights
        for idx, w in zip(batch.indices, weights):
            values.append(w * grads[idx])
        remaining -= b

    k = len(values)
    estimate = math.fsum(values) / k
    if k > 1:
        var = math.fsum((v - estimate) ** 2 for v in values) / (k - 1)
        se = math.sqrt(var / k)
    else:
        se = math.inf
    return estimate, se


def enumerate_per_batch_expected_grad(ds, scheme, spec, batch_size):
    """Exact expectation of the per-batch-normalized PER gradient estimator.

    Enumerates every batch (index tuple) of the given size with its
    probability, computing the batch-maximum-normalized weighted mean
    gradient. Exponential in ``batch_size``; intended for small sets only.
    Serves as the oracle quantifying the bias of per-batch normalization
    against the global form.
    """
    from itertools import product

    n = ds.n
    priorities = _exact_priorities(ds, scheme)
    total = math.fsum(priorities)
    probs = [p / total for p in priorities]
    stats = stats_for(ds, spec)
    grads = [loss_grad(spec, d, stats) for d in ds.deltas]
    beta = scheme.beta
    hats = [(1.0 / (n * p)) ** beta for p in probs]
    terms = []
    for combo in product(range(n), repeat=batch_size):
        weight = 1.0
        for i in combo:
            weight *= probs[i]
        top = max(hats[i] for i in combo)
        est = math.fsum(hats[i] / top * grads[i] for i in combo) / batch_size
        terms.append(weight * est)
    return math.fsum(terms)


# --- randomized delta-set generation for property runs ---

def random_delta_set(rng, max_n=1024, kappa=1.0, force_n=None):
    """Heavy-tailed random error set stressing branch boundaries.

    Values are a mixture of unit normals, 10x normals, and points adjacent
    to (or exactly at) the huber knee ``kappa``; zero never occurs, so the
    set is valid for every check. Sizes are log-uniform up to ``max_n``.
    """
    if force_n is not None:
        n = force_n
    elif rng.uniform() < 0.03:
        n = max_n
    else:
        n = max(1, int(math.exp(rng.uniform() * math.log(max_n))))
    deltas = []
    for _ in range(n):
        u = rng.uniform()
        if u < 0.45:
            d = rng.normal()
        elif u < 0.75:
            d = 10.0 * rng.normal()
        elif u < 0.95:
            s = 1.0 if rng.uniform() < 0.5 else -1.0
            offset = 10.0 ** (-3.0 - 10.0 * rng.uniform())
            side = 1.0 if rng.uniform() < 0.5 else -1.0
            d = s * kappa * (1.0 + side * offset)
        else:
            d = kappa if rng.uniform() < 0.5 else -kappa
        if d == 0.0:
            d = kappa
        deltas.append(d)
    return DeltaSet.of(deltas)


def write_reports(reports, fh, fmt="jsonl"):
    """Write a report batch as JSON lines or CSV."""
    if fmt == "jsonl":
        for r in reports:
            fh.write(r.to_json())
            fh.write("\n")
        return
    if fmt != "csv":
        raise ValueError("fmt must be 'jsonl' or 'csv'")
    fh.write("check,params,lhs,rhs,abs_diff,rel_diff,pass\n")
    for r in reports:
        row = json.loads(r.to_json())
        params = json.dumps(row["params"]).replace('"', "'")
        fh.write(f"{row['check']},\"{params}\",{row['lhs']!r},{row['rhs']!r},"
                 f"{row['abs_diff']!r},{row['rel_diff']!r},{row['pass']}\n")
