"""Exponential-family losses and exact gradients for tensor GLMs.

The model links a scalar response ``y`` to a tensor covariate ``X`` through
the natural parameter ``eta = <B, X>`` where ``B`` carries an LSR
parameterization.  The empirical objective is

    L_n = (1/n) sum_i [ a(eta_i) - y_i * eta_i ]

with the log-partition ``a`` fixed by the family:

    linear    a(eta) = eta^2 / 2     mean  mu = eta
    logistic  a(eta) = log(1+e^eta)  mean  mu = 1 / (1 + e^-eta)
    poisson   a(eta) = e^eta         mean  mu = e^eta

Gradients follow the chain rule through the multilinear map: with
``R = (1/n) sum_i (mu_i - y_i) X_i`` the block gradients are

    grad B[s][k] = unfold(R contracted by the other factors of component s, k) @ unfold(G, k)^T
    grad G       = sum_s R x_1 B[s][1]^T ... x_K B[s][K]^T

Non-finite values (Poisson overflow) propagate rather than raise, so that
callers can flag divergence.
"""

from dataclasses import dataclass

import numpy as np

from .lsr import reconstruct
from .tensor_ops import inner, mode_product, unfold

__all__ = [
    "GlmFamily",
    "LINEAR",
    "LOGISTIC",
    "POISSON",
    "FAMILIES",
    "get_family",
    "Dataset",
    "BlockGradients",
    "predictor",
    "linear_predictors",
    "loss",
    "training_loss",
    "residuals",
    "full_gradient",
    "factor_gradient",
    "core_gradient",
    "block_gradients",
    "predict",
    "predict_many",
]


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class GlmFamily:
    """One exponential family: log-partition, mean map, response validation."""

    name = ""

    def log_partition(self, eta):
        raise NotImplementedError

    def mean(self, eta):
        raise NotImplementedError

    def validate_responses(self, y):
        if not np.all(np.isfinite(y)):
            raise ValueError(f"{self.name} responses must be finite")


class Linear(GlmFamily):
    name = "linear"

    def log_partition(self, eta):
        return 0.5 * eta**2

    def mean(self, eta):
        return np.asarray(eta, dtype=float)


class Logistic(GlmFamily):
    name = "logistic"

    def log_partition(self, eta):
        return np.logaddexp(0.0, eta)

    def mean(self, eta):
        return sigmoid(eta)

    def validate_responses(self, y):
        super().validate_responses(y)
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("logistic responses must lie in {0, 1}")


class Poisson(GlmFamily):
    name = "poisson"

    def log_partition(self, eta):
        with np.errstate(over="ignore"):
            return np.exp(eta)

    def mean(self, eta):
        with np.errstate(over="ignore"):
            return np.exp(eta)

    def validate_responses(self, y):
        super().validate_responses(y)
        if np.any(y < 0) or np.any(y != np.floor(y)):
            raise ValueError("poisson responses must be nonnegative integers")


LINEAR = Linear()
LOGISTIC = Logistic()
POISSON = Poisson()
FAMILIES = {f.name: f for f in (LINEAR, LOGISTIC, POISSON)}


def get_family(family):
    """Accept a family instance or its name."""
    if isinstance(family, GlmFamily):
        return family
    try:
        return FAMILIES[str(family).lower()]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}") from None


@dataclass
class Dataset:
    """Stacked covariate tensors of shape ``(n, m_1, ..., m_K)`` plus responses."""

    covariates: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        self.covariates = np.asarray(self.covariates, dtype=float)
        self.responses = np.asarray(self.responses, dtype=float).ravel()
        if self.covariates.ndim < 2:
            raise ValueError("covariates must stack at least one tensor mode")
        if self.covariates.shape[0] != self.responses.shape[0]:
            raise ValueError("covariates and responses disagree on sample count")
        if self.responses.shape[0] < 1:
            raise ValueError("need at least one sample")

    @property
    def n(self):
        return self.responses.shape[0]

    @property
    def shape(self):
        return self.covariates.shape[1:]


@dataclass
class BlockGradients:
    """Per-factor gradient grid (S x K) plus the core gradient."""

    per_factor: list
    core_grad: np.ndarray


def predictor(params, x):
    """Natural parameter ``eta = <B, x>`` for a single covariate tensor."""
    return inner(reconstruct(params), x)


def linear_predictors(params, covariates, b=None):
    """Vector of natural parameters for stacked covariates.

    ``b`` may pass a precomputed ``reconstruct(params)`` to avoid repeating it.
    """
    b = reconstruct(params) if b is None else b
    covariates = np.asarray(covariates, dtype=float)
    if covariates.shape[1:] != b.shape:
        raise ValueError(f"covariate shape {covariates.shape[1:]} != coefficient shape {b.shape}")
    return covariates.reshape(covariates.shape[0], -1) @ b.ravel()


def _loss_from_eta(family, eta, y):
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.mean(family.log_partition(eta) - y * eta))


def loss(family, params, data):
    """Exponential-family objective ``(1/n) sum a(eta_i) - y_i eta_i``."""
    family = get_family(family)
    family.validate_responses(data.responses)
    eta = linear_predictors(params, data.covariates)
    return _loss_from_eta(family, eta, data.responses)


def training_loss(family, params, data):
    """Objective value as logged on optimization curves.

    For the linear family this is the half mean squared error
    ``(1/2n) sum (y_i - eta_i)^2``, which exceeds the exponential-family form
    by the constant ``mean(y^2)/2``; other families coincide with
    :func:`loss`.
    """
    family = get_family(family)
    family.validate_responses(data.responses)
    eta = linear_predictors(params, data.covariates)
    return _training_loss_from_eta(family, eta, data.responses)


def _training_loss_from_eta(family, eta, y):
    if family.name == "linear":
        return float(0.5 * np.mean((y - eta) ** 2))
    return _loss_from_eta(family, eta, y)


def residuals(family, params, data):
    """Per-sample loss derivatives ``r_i = (mu_i - y_i) / n``."""
    family = get_family(family)
    family.validate_responses(data.responses)
    eta = linear_predictors(params, data.covariates)
    return _residuals_from_eta(family, eta, data.responses)


def _residuals_from_eta(family, eta, y):
    with np.errstate(over="ignore", invalid="ignore"):
        return (family.mean(eta) - y) / y.shape[0]


def full_gradient(family, params, data):
    """Gradient of the objective with respect to the full coefficient tensor."""
    r = residuals(family, params, data)
    return _gradient_from_residuals(data.covariates, r)


def _gradient_from_residuals(covariates, r):
    n = covariates.shape[0]
    with np.errstate(invalid="ignore"):
        flat = covariates.reshape(n, -1).T @ r
    return flat.reshape(covariates.shape[1:])


def factor_gradient(full_grad, params, s, k):
    """Gradient with respect to ``factors[s][k]``, contracted from ``full_grad``."""
    t = full_grad
    for j, f in enumerate(params.factors[s]):
        if j != k:
            t = mode_product(t, f.T, j)
    return unfold(t, k) @ unfold(params.core, k).T


def core_gradient(full_grad, params):
    """Gradient with respect to the shared core, contracted from ``full_grad``."""
    out = np.zeros(params.core.shape)
    for row in params.factors:
        t = full_grad
        for j, f in enumerate(row):
            t = mode_product(t, f.T, j)
        out += t
    return out


def block_gradients(family, params, data):
    """All factor-block gradients and the core gradient at ``params``.

    Every block is evaluated at the same point: the full-gradient tensor is
    materialized once and contracted per block.
    """
    R = full_gradient(family, params, data)
    per_factor = [
        [factor_gradient(R, params, s, k) for k in range(len(params.factors[0]))]
        for s in range(len(params.factors))
    ]
    return BlockGradients(per_factor, core_gradient(R, params))


def predict(family, params, x):
    """Mean response ``mu = a'(<B, x>)`` for one covariate tensor."""
    family = get_family(family)
    return float(family.mean(predictor(params, x)))


def predict_many(family, params, covariates):
    """Mean responses for stacked covariates."""
    family = get_family(family)
    return family.mean(linear_predictors(params, covariates))
