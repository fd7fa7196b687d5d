"""Low separation rank (LSR) parameterization of a coefficient tensor.

A coefficient tensor ``B`` of shape ``(m_1, ..., m_K)`` is represented as a
sum of ``S`` Tucker-type components that share one core tensor::

    B = sum_s  G x_1 B[s][1] x_2 ... x_K B[s][K]

with ``G`` of shape ``(r_1, ..., r_K)`` and factor matrices ``B[s][k]`` of
shape ``(m_k, r_k)``.  ``S = 1`` recovers the Tucker decomposition.  Factor
matrices are orthonormal for ground truths and for QR-projected iterates;
Muon iterates carry no such guarantee, so orthonormality is exposed as a
queryable diagnostic rather than enforced here.
"""

import io
from dataclasses import dataclass

import numpy as np

from .tensor_ops import mode_product

__all__ = [
    "LsrRank",
    "LsrParams",
    "orthonormalize_qr",
    "reconstruct",
    "random_ground_truth",
    "perturbed_init",
    "max_orthonormality_residual",
    "save_params",
    "load_params",
]


@dataclass(frozen=True)
class LsrRank:
    """Multilinear rank ``(r_1, ..., r_K)`` together with the separation rank ``S``."""

    multilinear_rank: tuple
    sep_rank: int

    def __post_init__(self):
        object.__setattr__(self, "multilinear_rank", tuple(int(r) for r in self.multilinear_rank))
        if len(self.multilinear_rank) < 1 or any(r < 1 for r in self.multilinear_rank):
            raise ValueError(f"invalid multilinear rank {self.multilinear_rank}")
        if self.sep_rank < 1:
            raise ValueError(f"separation rank must be >= 1, got {self.sep_rank}")

    def validate_shape(self, shape):
        if len(shape) != len(self.multilinear_rank):
            raise ValueError(f"rank order {len(self.multilinear_rank)} != tensor order {len(shape)}")
        for k, (m, r) in enumerate(zip(shape, self.multilinear_rank)):
            if r > m:
                raise ValueError(f"rank {r} exceeds dimension {m} in mode {k}")


@dataclass
class LsrParams:
    """Core tensor plus the S x K grid of factor matrices.

    ``factors[s][k]`` has shape ``(m_k, r_k)``.  Instances are treated as
    immutable values; operations return new instances.
    """

    core: np.ndarray
    factors: list

    def __post_init__(self):
        self.core = np.asarray(self.core, dtype=float)
        self.factors = [[np.asarray(f, dtype=float) for f in row] for row in self.factors]
        if not self.factors:
            raise ValueError("at least one component is required")
        K = self.core.ndim
        for row in self.factors:
            if len(row) != K:
                raise ValueError("every component needs one factor per mode")
            for k, f in enumerate(row):
                if f.ndim != 2 or f.shape[1] != self.core.shape[k]:
                    raise ValueError(
                        f"factor for mode {k} has shape {f.shape}, expected (*, {self.core.shape[k]})"
                    )
                if f.shape[0] != self.factors[0][k].shape[0]:
                    raise ValueError("ambient dimension differs between components")

    @property
    def shape(self):
        return tuple(f.shape[0] for f in self.factors[0])

    @property
    def rank(self):
        return LsrRank(self.core.shape, len(self.factors))

    @property
    def n_params(self):
        """Number of free parameters: S * sum_k m_k r_k + prod_k r_k."""
        per_component = sum(f.size for f in self.factors[0])
        return len(self.factors) * per_component + self.core.size

    def copy(self):
        return LsrParams(self.core.copy(), [[f.copy() for f in row] for row in self.factors])


def orthonormalize_qr(m):
    """Thin QR orthonormalization with nonnegative R diagonal.

    Requires a tall (rows >= cols) matrix of full column rank; raises
    ``numpy.linalg.LinAlgError`` otherwise.  The sign convention makes the
    result deterministic and leaves an already-orthonormal input unchanged.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] < m.shape[1]:
        raise np.linalg.LinAlgError(f"expected a tall matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise np.linalg.LinAlgError("non-finite entries in matrix")
    q, r = np.linalg.qr(m)
    diag = np.diagonal(r)
    scale = np.max(np.abs(diag)) if diag.size else 0.0
    if scale == 0.0 or np.min(np.abs(diag)) <= 1e-12 * scale:
        raise np.linalg.LinAlgError("rank-deficient matrix")
    signs = np.where(diag < 0, -1.0, 1.0)
    return q * signs


def reconstruct(params):
    """Evaluate the represented coefficient tensor ``B``."""
    out = np.zeros(params.shape)
    for row in params.factors:
        t = params.core
        for k, f in enumerate(row):
            t = mode_product(t, f, k)
        out += t
    return out


def random_ground_truth(shape, rank, rng):
    """Draw a random ground-truth model.

    Core entries are i.i.d. standard normal; each factor is the Q of a thin
    QR factorization of an ``m_k x r_k`` standard-normal matrix (sign-fixed,
    hence deterministic given ``rng``).  Consumption order: core first, then
    factors in (s, k) order.
    """
    rank = rank if isinstance(rank, LsrRank) else LsrRank(*rank)
    rank.validate_shape(shape)
    core = rng.standard_normal(rank.multilinear_rank)
    factors = [
        [orthonormalize_qr(rng.standard_normal((m, r))) for m, r in zip(shape, rank.multilinear_rank)]
        for _ in range(rank.sep_rank)
    ]
    return LsrParams(core, factors)


def perturbed_init(truth, noise_scale, rng):
    """Gaussian perturbation of a ground truth, factors re-orthonormalized.

    ``noise_scale = 0`` reproduces the truth exactly up to the QR sign
    convention (exactly, when the truth already follows it).  RNG consumption
    order matches :func:`random_ground_truth`.
    """
    if noise_scale < 0:
        raise ValueError("noise_scale must be >= 0")
    core = truth.core + noise_scale * rng.standard_normal(truth.core.shape)
    factors = [
        [orthonormalize_qr(f + noise_scale * rng.standard_normal(f.shape)) for f in row]
        for row in truth.factors
    ]
    return LsrParams(core, factors)


def max_orthonormality_residual(params):
    """Max over factor blocks of ``||B^T B - I||_F`` (diagnostic)."""
    worst = 0.0
    for row in params.factors:
        for f in row:
            g = f.T @ f
            worst = max(worst, float(np.linalg.norm(g - np.eye(g.shape[0]))))
    return worst


# Binary blob layout: int64 little-endian header [K, S, m_1..m_K, r_1..r_K],
# then the core and the factors in (s, k) order, each as little-endian
# doubles in column-major order.

def save_params(params, path_or_file):
    if hasattr(path_or_file, "write"):
        _write_params(params, path_or_file)
    else:
        with open(path_or_file, "wb") as fh:
            _write_params(params, fh)


def _write_params(params, fh):
    shape = params.shape
    rank = params.rank
    header = np.array(
        [len(shape), rank.sep_rank, *shape, *rank.multilinear_rank], dtype="<i8"
    )
    fh.write(header.tobytes())
    fh.write(params.core.reshape(-1, order="F").astype("<f8").tobytes())
    for row in params.factors:
        for f in row:
            fh.write(f.reshape(-1, order="F").astype("<f8").tobytes())


def load_params(path_or_file):
    if hasattr(path_or_file, "read"):
        return _read_params(path_or_file)
    with open(path_or_file, "rb") as fh:
        return _read_params(fh)


def _read_header(fh):
    head = fh.read(16)
    if len(head) != 16:
        raise ValueError("truncated header")
    K, S = np.frombuffer(head, dtype="<i8")
    dims_ranks = fh.read(16 * K)
    if len(dims_ranks) != 16 * K:
        raise ValueError("truncated header")
    ints = np.frombuffer(dims_ranks, dtype="<i8")
    return int(K), int(S), tuple(int(d) for d in ints[:K]), tuple(int(r) for r in ints[K:])


def read_array(fh, shape):
    """Read a column-major little-endian double array of the given shape."""
    count = int(np.prod(shape, dtype=np.int64))
    raw = fh.read(8 * count)
    if len(raw) != 8 * count:
        raise ValueError("truncated payload")
    return np.frombuffer(raw, dtype="<f8").reshape(shape, order="F").copy()


def _read_params(fh):
    K, S, dims, ranks = _read_header(fh)
    core = read_array(fh, ranks)
    factors = [[read_array(fh, (dims[k], ranks[k])) for k in range(K)] for _ in range(S)]
    return LsrParams(core, factors)


def params_to_bytes(params):
    buf = io.BytesIO()
    _write_params(params, buf)
    return buf.getvalue()
