"""Dense multilinear algebra primitives.

Tensors are plain ``numpy.ndarray`` values in double precision.  All
vectorization and unfolding in this package uses the column-major
(first-index-fastest) convention, so ``vec`` agrees with
``reshape(-1, order="F")`` and the standard identity

    vec(G x_1 A_1 x_2 ... x_K A_K) = (A_K kron ... kron A_1) vec(G)

holds with the Kronecker factors in descending mode order.  Mode indices
are 0-based.
"""

import numpy as np

__all__ = [
    "unfold",
    "fold",
    "mode_product",
    "multi_mode_product",
    "kron",
    "vec",
    "inner",
]


def _check_mode(t, mode):
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for a {t.ndim}-mode tensor")


def unfold(t, mode):
    """Mode-``mode`` matricization of ``t``.

    Fibers along ``mode`` become columns; the remaining indices vary with the
    smallest mode fastest.  The result has shape
    ``(t.shape[mode], prod of the other dims)``.
    """
    t = np.asarray(t, dtype=float)
    _check_mode(t, mode)
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def fold(m, mode, shape):
    """Inverse of :func:`unfold` for a target ``shape``."""
    m = np.asarray(m, dtype=float)
    shape = tuple(int(d) for d in shape)
    if not 0 <= mode < len(shape):
        raise ValueError(f"mode {mode} out of range for shape {shape}")
    rest = [d for i, d in enumerate(shape) if i != mode]
    expected = (shape[mode], int(np.prod(rest, dtype=np.int64)) if rest else 1)
    if m.shape != expected:
        raise ValueError(f"matrix shape {m.shape} does not match unfolding {expected}")
    return np.moveaxis(m.reshape([shape[mode]] + rest, order="F"), 0, mode)


def mode_product(t, m, mode):
    """Mode-``mode`` product ``t x_mode m``; ``m.shape[1]`` must equal ``t.shape[mode]``."""
    t = np.asarray(t, dtype=float)
    m = np.asarray(m, dtype=float)
    _check_mode(t, mode)
    if m.ndim != 2 or m.shape[1] != t.shape[mode]:
        raise ValueError(
            f"matrix of shape {m.shape} cannot multiply mode {mode} of size {t.shape[mode]}"
        )
    return np.moveaxis(np.tensordot(m, t, axes=(1, mode)), 0, mode)


def multi_mode_product(t, matrices, transpose=False):
    """Apply ``t x_0 M_0 x_1 M_1 ...`` for one matrix per mode.

    With ``transpose=True`` each matrix enters as its transpose, which is the
    adjoint map used by gradient contractions.
    """
    if len(matrices) != np.ndim(t):
        raise ValueError("need exactly one matrix per tensor mode")
    out = t
    for k, m in enumerate(matrices):
        out = mode_product(out, m.T if transpose else m, k)
    return out


def kron(a, b):
    """Kronecker product of two matrices (materialized)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.kron(a, b)


def vec(t):
    """Column-major vectorization of ``t``."""
    return np.asarray(t, dtype=float).reshape(-1, order="F")


def inner(a, b):
    """Sum of elementwise products of two same-shaped tensors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))
