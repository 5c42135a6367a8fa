"""prpl: prioritized replay toolkit.

Priority schemes for experience replay (uniform, error-proportional PER,
clipped-error LAP), the uniform-sampling loss functions with the same
expected gradients (PAL and the PER power-loss equivalent), a sum-tree
sampler, a numeric engine certifying the gradient-equivalence and variance
properties, a tabular Q-learning testbed, and a scaling benchmark.
"""

from .equivalence import (DeltaSet, EquivalenceReport, VarianceReport,
                          check_lap_pal, check_mse_l1,
                          check_per_equivalent_loss, expected_grad_prioritized,
                          expected_grad_uniform, grad_variance,
                          monte_carlo_expected_grad, variance_sweep)
from .errors import (DegenerateDistributionError, EmptyStructureError,
                     SignMismatchError, ZeroDeltaError)
from .losses import (DatasetStats, LossSpec, loss_grad, loss_value,
                     pal_lambda, per_eta)
from .replay import (PayloadBuffer, ReplayBuffer, SampleBatch, SchemeConfig,
                     Transition, effective_beta, from_snapshot, priority_of)
from .rng import Xoshiro256StarStar, derive_seed
from .sumtree import SumTree
from .toyrl import (ChainMDP, EvalRecord, QTables, TrainConfig, greedy_eval,
                    td_error, train, value_iteration)

__version__ = "0.1.0"

__all__ = [
    "ChainMDP", "DatasetStats", "DegenerateDistributionError", "DeltaSet",
    "EmptyStructureError", "EquivalenceReport", "EvalRecord", "LossSpec",
    "PayloadBuffer", "QTables", "ReplayBuffer", "SampleBatch", "SchemeConfig",
    "SignMismatchError", "SumTree", "TrainConfig", "Transition",
    "VarianceReport", "Xoshiro256StarStar", "ZeroDeltaError",
    "check_lap_pal", "check_mse_l1", "check_per_equivalent_loss",
    "derive_seed", "effective_beta", "expected_grad_prioritized",
    "expected_grad_uniform", "from_snapshot", "grad_variance", "greedy_eval",
    "loss_grad", "loss_value", "monte_carlo_expected_grad", "pal_lambda",
    "per_eta", "priority_of", "td_error", "train", "value_iteration",
    "variance_sweep",
]
