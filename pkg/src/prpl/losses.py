"""Scalar loss functions over TD errors, with closed-form gradients.

Five kinds are supported:

* ``l1``      |d|
* ``mse``     0.5 d^2
* ``huber``   0.5 d^2 below the threshold kappa, kappa (|d| - 0.5 kappa) above
* ``pal``     the uniform-sampling equivalent of clipped-priority (LAP)
              sampling with a Huber loss:
              (1/lam) * [0.5 kappa^alpha d^2  if |d| <= kappa,
                         kappa |d|^(1+alpha) / (1+alpha)  otherwise]
* ``per_tau`` the uniform-sampling equivalent of PER applied to |d|^tau / tau:
              eta N / (tau + alpha - alpha beta) * |d|^(tau + alpha - alpha beta)

``pal`` and ``per_tau`` need dataset-level statistics (the mean clipped
priority ``lam``, or the coefficient ``eta`` together with the set size),
supplied through :class:`DatasetStats`.

All functions are pure and operate on Python floats.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

from .errors import ZeroDeltaError

KINDS = ("l1", "mse", "huber", "pal", "per_tau")


def sign(x):
    """Sign with sign(0) = 0, the subgradient choice used for l1/huber."""
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@dataclass(frozen=True)
class LossSpec:
    """Tagged description of one loss function.

    Fields irrelevant to ``kind`` are ignored by evaluation (they keep their
    defaults and never influence the result).
    """

    kind: str
    kappa: float = 1.0
    alpha: float = 0.0
    tau: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}, expected one of {KINDS}")
        if not (math.isfinite(self.kappa) and self.kappa > 0.0):
            raise ValueError("kappa must be a positive finite real")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise ValueError("tau must be a positive finite real")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")

    @classmethod
    def l1(cls):
        return cls(kind="l1")

    @classmethod
    def mse(cls):
        return cls(kind="mse")

    @classmethod
    def huber(cls, kappa=1.0):
        return cls(kind="huber", kappa=kappa)

    @classmethod
    def pal(cls, alpha, kappa=1.0):
        return cls(kind="pal", alpha=alpha, kappa=kappa)

    @classmethod
    def per_tau(cls, tau, alpha, beta):
        return cls(kind="per_tau", tau=tau, alpha=alpha, beta=beta)

    @property
    def needs_stats(self):
        return self.kind in ("pal", "per_tau")

    @cached_property
    def _kappa_pow_alpha(self):
        return self.kappa ** self.alpha


@dataclass(frozen=True)
class DatasetStats:
    """Statistics of the error set a surrogate loss is scaled against.

    ``lam`` is the mean clipped priority (used by ``pal``); ``eta`` is the
    min/sum power coefficient (used by ``per_tau``). Only the field relevant
    to the loss kind needs to be present.
    """

    n: int
    lam: Optional[float] = None
    eta: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dataset size must be >= 1")
        if self.lam is not None and not (math.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError("lam must be a positive finite real")
        if self.eta is not None and not (math.isfinite(self.eta) and self.eta > 0.0):
            raise ValueError("eta must be a positive finite real")

    @classmethod
    def for_pal(cls, deltas, alpha, kappa=1.0):
        deltas = list(deltas)
        return cls(n=len(deltas), lam=pal_lambda(deltas, alpha, kappa))

    @classmethod
    def for_per_tau(cls, deltas, alpha, beta):
        deltas = list(deltas)
        return cls(n=len(deltas), eta=per_eta(deltas, alpha, beta))


def pal_lambda(deltas, alpha, kappa=1.0):
    """Mean clipped priority of an error set: sum_j max(|d_j|^alpha, kappa^alpha) / N."""
    deltas = list(deltas)
    if not deltas:
        raise ValueError("deltas must be non-empty")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if not (math.isfinite(kappa) and kappa > 0.0):
        raise ValueError("kappa must be a positive finite real")
    floor = kappa ** alpha
    terms = []
    for d in deltas:
        if not math.isfinite(d):
            raise ValueError("deltas must be finite")
        terms.append(max(abs(d) ** alpha, floor))
    return math.fsum(terms) / len(deltas)


def per_eta(deltas, alpha, beta):
    """Coefficient min_j |d_j|^(alpha beta) / sum_j |d_j|^alpha.

    Undefined when any delta is zero (the epsilon-free regime assumed by the
    equivalence analysis); callers must filter or perturb zero errors first.
    """
    deltas = list(deltas)
    if not deltas:
        raise ValueError("deltas must be non-empty")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    ab = alpha * beta
    num = math.inf
    terms = []
    for d in deltas:
        if not math.isfinite(d):
            raise ValueError("deltas must be finite")
        ad = abs(d)
        if ad == 0.0:
            raise ZeroDeltaError("eta is undefined when some |delta| is zero")
        num = min(num, ad ** ab)
        terms.append(ad ** alpha)
    return num / math.fsum(terms)


def _require_pal_stats(stats):
    if stats is None or stats.lam is None:
        raise ValueError("pal loss needs DatasetStats with lam set")
    return stats.lam


def _require_per_stats(stats):
    if stats is None or stats.eta is None:
        raise ValueError("per_tau loss needs DatasetStats with eta set")
    return stats.eta, stats.n


def loss_value(spec, delta, stats=None):
    """Evaluate the loss at a single TD error."""
    if not math.isfinite(delta):
        raise ValueError("delta must be finite")
    kind = spec.kind
    if kind == "l1":
        return abs(delta)
    if kind == "mse":
        return 0.5 * delta * delta
    if kind == "huber":
        kappa = spec.kappa
        if abs(delta) <= kappa:
            return 0.5 * delta * delta
        return kappa * (abs(delta) - 0.5 * kappa)
    if kind == "pal":
        lam = _require_pal_stats(stats)
        kappa, alpha = spec.kappa, spec.alpha
        ad = abs(delta)
        if ad <= kappa:
            return 0.5 * spec._kappa_pow_alpha * delta * delta / lam
        return kappa * ad ** (1.0 + alpha) / (1.0 + alpha) / lam
    # per_tau
    eta, n = _require_per_stats(stats)
    exponent = spec.tau + spec.alpha - spec.alpha * spec.beta
    return eta * n / exponent * abs(delta) ** exponent


def loss_grad(spec, delta, stats=None):
    """Closed-form gradient of the loss with respect to the TD error."""
    if not math.isfinite(delta):
        raise ValueError("delta must be finite")
    kind = spec.kind
    if kind == "l1":
        return sign(delta)
    if kind == "mse":
        return delta
    if kind == "huber":
        kappa = spec.kappa
        if abs(delta) <= kappa:
            return delta
        return kappa * sign(delta)
    if kind == "pal":
        lam = _require_pal_stats(stats)
        kappa, alpha = spec.kappa, spec.alpha
        ad = abs(delta)
        if ad <= kappa:
            return spec._kappa_pow_alpha * delta / lam
        return kappa * ad ** alpha * sign(delta) / lam
    # per_tau
    eta, n = _require_per_stats(stats)
    if delta == 0.0:
        # sign(0) = 0 annihilates the term; also avoids 0 ** negative.
        return 0.0
    exponent = spec.tau + spec.alpha - spec.alpha * spec.beta - 1.0
    return eta * n * sign(delta) * abs(delta) ** exponent
