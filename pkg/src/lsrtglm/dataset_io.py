"""NPY/NPZ ingestion and the 3D vessel-volume dataset.

The dataset ships as a zip archive of NPY-format arrays with keys
``train_images``, ``train_labels``, ``val_images``, ``val_labels``,
``test_images`` and ``test_labels``.  Volumes are ``28 x 28 x 28`` unsigned
bytes with binary labels (1 = aneurysm, 0 = healthy).  The archive is parsed
at the byte level here so that malformed inputs fail with precise errors:
bad magic, unsupported dtype and truncated payload are distinct exception
types.  Only the ``|u1`` and ``<f8`` dtypes are supported.

A minimal writer for the same subset exists for fixtures and dataset dumps;
its output is byte-identical to the reference NumPy serialization for
supported arrays.
"""

import ast
import struct
import warnings
import zipfile
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NpyFormatError",
    "BadMagicError",
    "UnsupportedDtypeError",
    "TruncatedPayloadError",
    "read_npy_bytes",
    "write_npy_bytes",
    "load_npz",
    "write_npz",
    "VolumeDataset",
    "VESSEL_SHAPE",
    "EXPECTED_COUNTS",
    "load_vessel",
    "balanced_subsample",
]

MAGIC = b"\x93NUMPY"
SUPPORTED_DESCRS = {"|u1": np.uint8, "<f8": np.float64}
VESSEL_SHAPE = (28, 28, 28)

# expected sizes of the published train/test splits: (total, positives)
EXPECTED_COUNTS = {"train": (1335, 150), "test": (382, 43)}


class NpyFormatError(ValueError):
    """Malformed NPY payload."""


class BadMagicError(NpyFormatError):
    pass


class UnsupportedDtypeError(NpyFormatError):
    pass


class TruncatedPayloadError(NpyFormatError):
    pass


def read_npy_bytes(raw, name="<buffer>"):
    """Parse one NPY v1.0/v2.0 buffer into an array."""
    if len(raw) < 8 or raw[:6] != MAGIC:
        raise BadMagicError(f"{name}: bad magic {raw[:6]!r}")
    major, minor = raw[6], raw[7]
    if (major, minor) == (1, 0):
        if len(raw) < 10:
            raise TruncatedPayloadError(f"{name}: missing header length")
        (header_len,) = struct.unpack("<H", raw[8:10])
        offset = 10
    elif (major, minor) == (2, 0):
        if len(raw) < 12:
            raise TruncatedPayloadError(f"{name}: missing header length")
        (header_len,) = struct.unpack("<I", raw[8:12])
        offset = 12
    else:
        raise NpyFormatError(f"{name}: unsupported version {(major, minor)}")
    header_end = offset + header_len
    if len(raw) < header_end:
        raise TruncatedPayloadError(f"{name}: truncated header")
    try:
        header = ast.literal_eval(raw[offset:header_end].decode("latin1"))
        descr = header["descr"]
        fortran_order = bool(header["fortran_order"])
        shape = tuple(int(d) for d in header["shape"])
    except (ValueError, KeyError, SyntaxError, TypeError) as exc:
        raise NpyFormatError(f"{name}: malformed header") from exc
    if descr not in SUPPORTED_DESCRS:
        raise UnsupportedDtypeError(f"{name}: unsupported dtype {descr!r}")
    dtype = np.dtype(SUPPORTED_DESCRS[descr])
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    payload = raw[header_end:]
    if len(payload) != count * dtype.itemsize:
        raise TruncatedPayloadError(
            f"{name}: expected {count * dtype.itemsize} payload bytes, got {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype=dtype)
    return arr.reshape(shape, order="F" if fortran_order else "C").copy()


def write_npy_bytes(arr):
    """Serialize an array to NPY v1.0 bytes (supported dtypes only)."""
    arr = np.asarray(arr)
    descr = arr.dtype.str
    if descr not in SUPPORTED_DESCRS:
        raise UnsupportedDtypeError(f"cannot write dtype {arr.dtype}")
    fortran = arr.flags.f_contiguous and not arr.flags.c_contiguous
    header = (
        f"{{'descr': '{descr}', 'fortran_order': {fortran}, "
        f"'shape': {arr.shape!r}, }}"
    )
    pad = 64 - ((len(MAGIC) + 2 + 2 + len(header) + 1) % 64)
    pad = 0 if pad == 64 else pad
    header = header + " " * pad + "\n"
    out = bytearray()
    out += MAGIC
    out += bytes((1, 0))
    out += struct.pack("<H", len(header))
    out += header.encode("latin1")
    out += arr.tobytes(order="F" if fortran else "C")
    return bytes(out)


def load_npz(path):
    """Read every NPY entry of a zip archive; keys drop the ``.npy`` suffix."""
    arrays = {}
    with zipfile.ZipFile(path, "r") as zf:
        for info in zf.infolist():
            name = info.filename
            key = name[:-4] if name.endswith(".npy") else name
            arrays[key] = read_npy_bytes(zf.read(name), name=name)
    if not arrays:
        raise NpyFormatError(f"{path}: no arrays in archive")
    return arrays


def write_npz(path, arrays):
    """Write arrays to a stored (uncompressed) zip of NPY entries.

    Entry timestamps are pinned so identical inputs give identical bytes.
    """
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, write_npy_bytes(arr))


@dataclass
class VolumeDataset:
    """Stacked volumes in [0, 1] with aligned binary labels."""

    volumes: np.ndarray
    labels: np.ndarray
    split: str

    def __post_init__(self):
        self.volumes = np.asarray(self.volumes, dtype=float)
        self.labels = np.asarray(self.labels).ravel().astype(np.int64)
        if self.volumes.shape[0] != self.labels.shape[0]:
            raise ValueError("volumes and labels disagree on sample count")

    @property
    def n(self):
        return self.labels.shape[0]


def _as_volumes(images, labels, split):
    images = np.asarray(images)
    if images.ndim != 4 or images.shape[1:] != VESSEL_SHAPE:
        raise ValueError(f"{split}: expected shape (N, 28, 28, 28), got {images.shape}")
    if images.dtype == np.uint8:
        volumes = images.astype(float) / 255.0
    else:
        volumes = images.astype(float)
    if volumes.size and (volumes.min() < 0.0 or volumes.max() > 1.0):
        raise ValueError(f"{split}: volume values outside [0, 1]")
    labels = np.asarray(labels).ravel()
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError(f"{split}: labels must be binary")
    return VolumeDataset(volumes, labels, split)


def load_vessel(path):
    """Load the predefined train/test splits of a vessel-volume archive.

    Split sizes are checked against the published counts and mismatches are
    reported as warnings, not errors.  A validation split, when present, is
    ignored.
    """
    arrays = load_npz(path)
    for key in ("train_images", "train_labels", "test_images", "test_labels"):
        if key not in arrays:
            raise ValueError(f"{path}: missing key {key!r}")
    out = {}
    for split in ("train", "test"):
        d = _as_volumes(arrays[f"{split}_images"], arrays[f"{split}_labels"], split)
        expected_n, expected_pos = EXPECTED_COUNTS[split]
        n_pos = int(d.labels.sum())
        if (d.n, n_pos) != (expected_n, expected_pos):
            warnings.warn(
                f"{split} split has {d.n} samples ({n_pos} positive); "
                f"published counts are {expected_n} ({expected_pos} positive)",
                stacklevel=2,
            )
        out[split] = d
    return out["train"], out["test"]


def balanced_subsample(dataset, per_class, rng):
    """Uniform without-replacement sample of ``per_class`` items per class."""
    idx_neg = np.flatnonzero(dataset.labels == 0)
    idx_pos = np.flatnonzero(dataset.labels == 1)
    if per_class > min(idx_neg.size, idx_pos.size):
        raise ValueError(
            f"per_class={per_class} exceeds minority count {min(idx_neg.size, idx_pos.size)}"
        )
    take_neg = rng.choice(idx_neg, size=per_class, replace=False)
    take_pos = rng.choice(idx_pos, size=per_class, replace=False)
    sel = np.sort(np.concatenate([take_neg, take_pos]))
    return VolumeDataset(dataset.volumes[sel], dataset.labels[sel], dataset.split)
