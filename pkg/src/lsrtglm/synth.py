"""Seeded synthetic data generation for the three tensor-GLM families.

Covariate tensors have i.i.d. standard-normal entries.  Responses follow

    linear    y ~ Normal(<B, X>, noise_var)        (0.1 is a variance)
    logistic  y ~ Bernoulli(sigmoid(<B, X>))
    poisson   y ~ Poisson(exp(<B, X>))

Reproducibility contract: the seed feeds a ``numpy.random.SeedSequence``
whose first three children drive, in order, the ground truth, the training
set, and the test set (PCG64 generators).  Changing ``n_test`` therefore
never alters the training set.

Poisson stability: if the realized training predictors would overflow the
exponential, the ground-truth core is rescaled so that
``max_i |<B, X_i>| <= ETA_CAP`` over the training set; the factor is logged
and the rescaled model is the ground truth from then on.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .glm import Dataset, get_family, linear_predictors, sigmoid
from .lsr import LsrParams, LsrRank, random_ground_truth, reconstruct

__all__ = ["SynthSpec", "generate", "ETA_CAP"]

logger = logging.getLogger(__name__)

ETA_CAP = 8.0


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic problem instance."""

    family: str = "linear"
    shape: tuple = (10, 15, 20)
    rank: LsrRank = field(default_factory=lambda: LsrRank((2, 2, 2), 2))
    n_train: int = 500
    n_test: int = 100
    noise_var: float = 0.1
    seed: object = 0

    def __post_init__(self):
        get_family(self.family)
        object.__setattr__(self, "shape", tuple(int(m) for m in self.shape))
        rank = self.rank if isinstance(self.rank, LsrRank) else LsrRank(*self.rank)
        object.__setattr__(self, "rank", rank)
        rank.validate_shape(self.shape)
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("sample counts must be positive")
        if self.noise_var < 0:
            raise ValueError("noise_var must be >= 0")


def _sample_responses(family_name, eta, rng, noise_var):
    if family_name == "linear":
        return eta + rng.normal(0.0, np.sqrt(noise_var), eta.shape[0])
    if family_name == "logistic":
        return (rng.random(eta.shape[0]) < sigmoid(eta)).astype(float)
    return rng.poisson(np.exp(eta)).astype(float)


def generate(spec):
    """Draw ``(truth, train, test)`` deterministically from ``spec.seed``."""
    family = get_family(spec.family)
    root = np.random.SeedSequence(spec.seed)
    rng_truth, rng_train, rng_test = (np.random.default_rng(s) for s in root.spawn(3))

    truth = random_ground_truth(spec.shape, spec.rank, rng_truth)
    x_train = rng_train.standard_normal((spec.n_train, *spec.shape))
    x_test = rng_test.standard_normal((spec.n_test, *spec.shape))

    b = reconstruct(truth)
    eta_train = linear_predictors(truth, x_train, b=b)
    if family.name == "poisson":
        peak = float(np.abs(eta_train).max())
        if peak > ETA_CAP:
            scale = ETA_CAP / peak
            logger.info("poisson core rescaled by %.6g to cap |eta| at %g", scale, ETA_CAP)
            truth = LsrParams(truth.core * scale, truth.factors)
            b = b * scale
            eta_train = eta_train * scale
    eta_test = linear_predictors(truth, x_test, b=b)

    y_train = _sample_responses(family.name, eta_train, rng_train, spec.noise_var)
    y_test = _sample_responses(family.name, eta_test, rng_test, spec.noise_var)
    return truth, Dataset(x_train, y_train), Dataset(x_test, y_test)
