import pytest

from prpl.equivalence import random_delta_set
from prpl.rng import Xoshiro256StarStar, derive_seed

ACCEPTANCE_SEED = 20260809
ACCEPTANCE_DATASETS = 10_000


def dataset_params(seed, index, max_n=1024):
    """Per-index generator settings; deterministic in (seed, index)."""
    rng = Xoshiro256StarStar(derive_seed(seed, index))
    pick = rng.uniform()
    if pick < 0.5:
        kappa = 1.0
    elif pick < 0.6:
        kappa = 0.01
    else:
        kappa = 10.0 ** (rng.uniform() * 2.0 - 2.0)
    alpha = rng.uniform()
    ds = random_delta_set(rng, max_n=max_n, kappa=kappa)
    return ds, alpha, kappa, rng


def build_corpus(count, seed=ACCEPTANCE_SEED, max_n=1024):
    return [dataset_params(seed, i, max_n) for i in range(count)]


@pytest.fixture(scope="session")
def dataset_corpus():
    """The randomized dataset corpus shared by the equivalence criteria."""
    return build_corpus(ACCEPTANCE_DATASETS)
