"""Block coordinate solvers for LSR tensor GLMs.

Two solvers share one outer-loop structure:

* ``lsrtr``   -- projected-gradient baseline: each factor block takes one
  gradient step and is pulled back to orthonormal columns by a thin QR; the
  core takes a plain gradient step.
* ``lsrtr-m`` -- Muon-accelerated variant: each factor block keeps a momentum
  matrix, orthogonalizes it with a few Newton-Schulz iterations and steps
  along that direction with weight decay; no projection is applied anywhere.
  The core update is identical to the baseline's.

Within one outer iteration the factor-block gradients are evaluated at the
iteration's starting point (``sweep_mode="jacobi"``, the default) or at the
current mixed iterate (``"gauss_seidel"``); the core gradient is always
evaluated at the freshly updated factors with the old core.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import glm
from .lsr import (
    LsrParams,
    load_params,
    max_orthonormality_residual,
    orthonormalize_qr,
    read_array,
    reconstruct,
    save_params,
)

__all__ = [
    "OptConfig",
    "MuonState",
    "IterateLog",
    "DivergenceError",
    "ALGORITHMS",
    "newton_schulz_orth",
    "orthonormalize_qr",
    "lsrtr_step",
    "lsrtr_m_step",
    "run",
    "save_checkpoint",
    "load_checkpoint",
]

ALGORITHMS = ("lsrtr", "lsrtr-m")


class DivergenceError(RuntimeError):
    """Raised by a step when non-finite values enter the iteration."""


@dataclass(frozen=True)
class OptConfig:
    """Solver hyperparameters.

    ``alpha`` drives the core step of both solvers and the baseline's factor
    steps; ``alpha_m``, ``beta`` and ``weight_decay`` only concern the Muon
    variant.  ``rel_tol = 0`` disables the relative-loss-change stopping rule.
    """

    max_iters: int
    alpha: float = 0.5
    alpha_m: float = 0.05
    beta: float = 0.1
    weight_decay: float = 1e-3
    ns_iters: int = 5
    rel_tol: float = 0.0
    sweep_mode: str = "jacobi"

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.alpha <= 0 or self.alpha_m <= 0:
            raise ValueError("stepsizes must be positive")
        if not 0 <= self.beta < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0 or self.rel_tol < 0:
            raise ValueError("weight_decay and rel_tol must be >= 0")
        if self.ns_iters < 1:
            raise ValueError("ns_iters must be >= 1")
        if self.sweep_mode not in ("jacobi", "gauss_seidel"):
            raise ValueError(f"unknown sweep_mode {self.sweep_mode!r}")


@dataclass
class MuonState:
    """Per-block momentum matrices, same grid layout as the factors."""

    momentum: list

    @classmethod
    def zeros(cls, params):
        return cls([[np.zeros_like(f) for f in row] for row in params.factors])

    def copy(self):
        return MuonState([[m.copy() for m in row] for row in self.momentum])


@dataclass
class IterateLog:
    """Per-iteration trajectory, including the starting iterate."""

    loss: list = field(default_factory=list)
    est_error: list = field(default_factory=list)
    elapsed_s: list = field(default_factory=list)
    ortho_residual: list = field(default_factory=list)
    diverged: bool = False

    def __len__(self):
        return len(self.loss)


def newton_schulz_orth(m, iters=5):
    """Approximate polar factor of a tall matrix via Newton-Schulz.

    Runs ``X <- 1.5 X - 0.5 X X^T X`` for ``iters`` steps from
    ``X_0 = m / ||m||_F``.  The Frobenius normalization keeps every singular
    value in (0, 1], so iterates satisfy ``||X||_2 <= 1`` and the
    orthogonality residual is non-increasing.  Convergence of the smallest
    singular value is linear (rate 1.5) until it nears 1, so poorly
    conditioned inputs need more iterations.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] < m.shape[1]:
        raise ValueError(f"expected a tall matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("non-finite entries in matrix")
    norm = np.linalg.norm(m)
    if norm == 0.0:
        raise ValueError("zero matrix has no polar factor")
    x = m / norm
    for _ in range(int(iters)):
        x = 1.5 * x - 0.5 * (x @ (x.T @ x))
    return x


def _check_finite_params(params):
    if not np.all(np.isfinite(params.core)):
        raise DivergenceError("non-finite core")
    for row in params.factors:
        for f in row:
            if not np.all(np.isfinite(f)):
                raise DivergenceError("non-finite factor")


def _full_gradient(family, params, data):
    R = glm.full_gradient(family, params, data)
    if not np.all(np.isfinite(R)):
        raise DivergenceError("non-finite gradient")
    return R


def _core_step(family, params, data, cfg):
    # core gradient is evaluated at the updated factors with the old core
    R = _full_gradient(family, params, data)
    core = params.core - cfg.alpha * glm.core_gradient(R, params)
    if not np.all(np.isfinite(core)):
        raise DivergenceError("non-finite core after step")
    return LsrParams(core, params.factors)


def lsrtr_step(family, params, data, cfg):
    """One outer iteration of the QR-projected baseline."""
    family = glm.get_family(family)
    _check_finite_params(params)
    S, K = len(params.factors), len(params.factors[0])
    factors = [[f for f in row] for row in params.factors]
    R = _full_gradient(family, params, data) if cfg.sweep_mode == "jacobi" else None
    for s in range(S):
        for k in range(K):
            if cfg.sweep_mode == "gauss_seidel":
                R = _full_gradient(family, LsrParams(params.core, factors), data)
            at = params.factors if cfg.sweep_mode == "jacobi" else factors
            g = glm.factor_gradient(R, LsrParams(params.core, at), s, k)
            try:
                factors[s][k] = orthonormalize_qr(at[s][k] - cfg.alpha * g)
            except np.linalg.LinAlgError as exc:
                raise DivergenceError(str(exc)) from exc
    return _core_step(family, LsrParams(params.core, factors), data, cfg)


def lsrtr_m_step(family, params, muon, data, cfg):
    """One outer iteration of the Muon-accelerated solver.

    Per block: momentum update ``M <- beta M + grad``, orthogonalized
    direction ``Q = newton_schulz_orth(M, ns_iters)``, then
    ``B <- B - alpha_m (Q + weight_decay * B)``.  A block whose momentum is
    numerically zero (``||M||_F <= 1e-14``) keeps its factor for this
    iteration, since the polar factor is undefined at zero.
    """
    family = glm.get_family(family)
    _check_finite_params(params)
    S, K = len(params.factors), len(params.factors[0])
    factors = [[f for f in row] for row in params.factors]
    momentum = [[m for m in row] for row in muon.momentum]
    R = _full_gradient(family, params, data) if cfg.sweep_mode == "jacobi" else None
    for s in range(S):
        for k in range(K):
            if cfg.sweep_mode == "gauss_seidel":
                R = _full_gradient(family, LsrParams(params.core, factors), data)
            at = params.factors if cfg.sweep_mode == "jacobi" else factors
            g = glm.factor_gradient(R, LsrParams(params.core, at), s, k)
            m_new = cfg.beta * momentum[s][k] + g
            if not np.all(np.isfinite(m_new)):
                raise DivergenceError("non-finite momentum")
            momentum[s][k] = m_new
            if np.linalg.norm(m_new) <= 1e-14:
                continue
            q = newton_schulz_orth(m_new, cfg.ns_iters)
            factors[s][k] = at[s][k] - cfg.alpha_m * (q + cfg.weight_decay * at[s][k])
    new_params = _core_step(family, LsrParams(params.core, factors), data, cfg)
    return new_params, MuonState(momentum)


def _normalize_algorithm(algorithm):
    name = str(algorithm).lower().replace("_", "-")
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    return name


def run(algorithm, family, init, data, cfg, truth=None, on_iterate=None):
    """Run a solver from ``init`` and log the trajectory.

    Stops at ``cfg.max_iters``, on a relative loss change below
    ``cfg.rel_tol`` (when positive), or on divergence.  On divergence the
    last finite iterate is returned with the log's ``diverged`` flag set; the
    offending loss value, when computable, is still recorded.  Wall-clock
    time covers the step (gradient work included) but not logging or the
    ``on_iterate`` callback, which receives ``(iteration, params)`` for every
    logged iterate.
    """
    algorithm = _normalize_algorithm(algorithm)
    family = glm.get_family(family)
    truth_tensor = None if truth is None else reconstruct(truth)
    truth_norm2 = None if truth is None else float(np.sum(truth_tensor**2))

    params = init
    muon = MuonState.zeros(init)
    log = IterateLog()

    def record(p, elapsed):
        value = glm.training_loss(family, p, data)
        log.loss.append(value)
        if truth_tensor is None:
            log.est_error.append(float("nan"))
        else:
            diff = reconstruct(p) - truth_tensor
            log.est_error.append(float(np.sum(diff**2)) / truth_norm2)
        log.elapsed_s.append(elapsed)
        log.ortho_residual.append(max_orthonormality_residual(p))
        return value

    prev_loss = record(params, 0.0)
    if on_iterate is not None:
        on_iterate(0, params)

    for t in range(1, cfg.max_iters + 1):
        tic = time.perf_counter()
        try:
            if algorithm == "lsrtr":
                candidate = lsrtr_step(family, params, data, cfg)
            else:
                candidate, muon = lsrtr_m_step(family, params, muon, data, cfg)
        except DivergenceError:
            log.diverged = True
            break
        elapsed = time.perf_counter() - tic
        value = record(candidate, elapsed)
        if not np.isfinite(value):
            log.diverged = True
            break
        params = candidate
        if on_iterate is not None:
            on_iterate(t, params)
        if cfg.rel_tol > 0 and abs(value - prev_loss) / max(abs(prev_loss), 1e-12) < cfg.rel_tol:
            break
        prev_loss = value
    return params, log


# Checkpoints extend the parameter blob with the momentum grid, stored in the
# same (s, k) order and encoding as the factors.

def save_checkpoint(path, params, muon):
    with open(path, "wb") as fh:
        save_params(params, fh)
        for row in muon.momentum:
            for m in row:
                fh.write(m.reshape(-1, order="F").astype("<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        params = load_params(fh)
        momentum = [[read_array(fh, f.shape) for f in row] for row in params.factors]
    return params, MuonState(momentum)
