import numpy as np
import pytest

from lsrtglm import Dataset, LsrRank, generate, random_ground_truth
from lsrtglm.synth import SynthSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_problem(family="linear", seed=0, shape=(4, 5, 6), rank=(2, 2, 2), sep=2, n=50):
    """A small generated instance plus an independent evaluation point."""
    spec = SynthSpec(
        family=family, shape=shape, rank=LsrRank(rank, sep), n_train=n, n_test=10,
        seed=(seed, 555),
    )
    truth, train, test = generate(spec)
    point = random_ground_truth(shape, LsrRank(rank, sep), np.random.default_rng(seed + 99))
    return truth, point, train, test


def perfect_fit_dataset(truth, n=40, seed=3):
    """Noiseless linear data, so the truth is an exact stationary point."""
    rng = np.random.default_rng(seed)
    from lsrtglm import reconstruct

    covs = rng.standard_normal((n, *truth.shape))
    b = reconstruct(truth)
    y = covs.reshape(n, -1) @ b.ravel()
    return Dataset(covs, y)
