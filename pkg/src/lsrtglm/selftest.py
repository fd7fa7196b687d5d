"""Built-in oracle checks runnable from the command line.

Two independent verification routes guard the numerical core: analytic block
gradients against central finite differences, and Newton-Schulz
orthogonalization against an exact polar factor computed by an
eigendecomposition of the Gram matrix.
"""

import numpy as np

from . import glm
from .lsr import LsrRank, orthonormalize_qr, random_ground_truth
from .optim import newton_schulz_orth
from .synth import SynthSpec, generate

__all__ = ["exact_polar", "finite_difference_block", "run_selftest"]


def exact_polar(m):
    """Polar factor ``m (m^T m)^{-1/2}`` via symmetric eigendecomposition."""
    w, v = np.linalg.eigh(m.T @ m)
    if np.min(w) <= 0:
        raise ValueError("rank-deficient matrix has no unique polar factor")
    return m @ (v * (1.0 / np.sqrt(w))) @ v.T


def finite_difference_block(family, params, data, s, k, step=1e-6):
    """Central finite differences of the objective in one factor block."""
    base = params.copy()
    out = np.zeros_like(base.factors[s][k])
    for idx in np.ndindex(*out.shape):
        saved = base.factors[s][k][idx]
        base.factors[s][k][idx] = saved + step
        up = glm.loss(family, base, data)
        base.factors[s][k][idx] = saved - step
        down = glm.loss(family, base, data)
        base.factors[s][k][idx] = saved
        out[idx] = (up - down) / (2 * step)
    return out


def finite_difference_core(family, params, data, step=1e-6):
    base = params.copy()
    out = np.zeros_like(base.core)
    for idx in np.ndindex(*out.shape):
        saved = base.core[idx]
        base.core[idx] = saved + step
        up = glm.loss(family, base, data)
        base.core[idx] = saved - step
        down = glm.loss(family, base, data)
        base.core[idx] = saved
        out[idx] = (up - down) / (2 * step)
    return out


def _gradient_check(seeds=(0, 1, 2), tol=1e-5):
    worst = 0.0
    for family in ("linear", "logistic", "poisson"):
        for seed in seeds:
            spec = SynthSpec(
                family=family, shape=(4, 5, 6), rank=LsrRank((2, 2, 2), 2),
                n_train=50, n_test=2, seed=(seed, 91),
            )
            truth, train, _ = generate(spec)
            rng = np.random.default_rng(seed + 17)
            point = random_ground_truth((4, 5, 6), LsrRank((2, 2, 2), 2), rng)
            grads = glm.block_gradients(family, point, train)
            for s in range(2):
                for k in range(3):
                    fd = finite_difference_block(family, point, train, s, k)
                    rel = np.linalg.norm(grads.per_factor[s][k] - fd) / np.linalg.norm(fd)
                    worst = max(worst, rel)
            fd_core = finite_difference_core(family, point, train)
            rel = np.linalg.norm(grads.core_grad - fd_core) / np.linalg.norm(fd_core)
            worst = max(worst, rel)
    return worst, worst <= tol


def _newton_schulz_check(n=25, tol=1e-4):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(n):
        cols = int(rng.integers(1, 6))
        rows = int(rng.integers(cols + 1, 21))
        while True:
            m = rng.standard_normal((rows, cols))
            if np.linalg.cond(m) <= 6:
                break
        q = newton_schulz_orth(m, iters=10)
        worst = max(worst, float(np.linalg.norm(q - exact_polar(m))))
    return worst, worst <= tol


def _qr_check(n=25, tol=1e-12):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(n):
        m = rng.standard_normal((12, 4))
        q = orthonormalize_qr(m)
        worst = max(worst, float(np.linalg.norm(q.T @ q - np.eye(4))))
        # span must be preserved: projecting m onto q leaves it unchanged
        worst = max(worst, float(np.linalg.norm(q @ (q.T @ m) - m)))
    return worst, worst <= tol


def run_selftest(verbose=True):
    """Run the oracle suites; returns True when every check passes."""
    checks = (
        ("finite-difference gradients (3 families, rel err <= 1e-5)", _gradient_check),
        ("newton-schulz vs exact polar (10 iters, err <= 1e-4)", _newton_schulz_check),
        ("qr retraction orthonormality and span (err <= 1e-12)", _qr_check),
    )
    all_ok = True
    for label, check in checks:
        worst, ok = check()
        all_ok &= ok
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {label}: worst {worst:.3e}")
    return all_ok
