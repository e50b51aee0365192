"""In-memory image datasets: IDX loading, preprocessing, mini-batching.

IDX layout (all integers big-endian 32-bit):
  images: magic 2051, count, rows, cols, then count*rows*cols unsigned bytes
  labels: magic 2049, count, then count unsigned bytes
"""

import struct

import numpy as np

from .errors import FormatError, InvalidStateError
from .math import Rng

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049

MODE_RAW = "raw"
MODE_BINARIZED = "binarized"
MODE_STANDARDIZED = "standardized"


class DatasetHandle:
    """A sample matrix with optional labels and preprocessing state.

    Args:
        samples: float64 matrix, one row per sample.
        labels: optional integer vector, one entry per sample.
        feature_shape: (rows, cols) image provenance; rows*cols must equal
            the feature count.
        mode: one of "raw" (values in [0, 1]), "binarized" (values in
            {0, 1}), "standardized" (zero-mean unit-variance features).

    Instances are immutable: the arrays are marked read-only and every
    preprocessing operation returns a new handle.
    """

    def __init__(self, samples, labels=None, feature_shape=None, mode=MODE_RAW):
        samples = np.ascontiguousarray(samples, dtype=np.float64)
        if samples.ndim != 2:
            raise ValueError("samples must be a 2-d matrix")
        if feature_shape is None:
            feature_shape = (1, samples.shape[1])
        rows, cols = feature_shape
        if rows * cols != samples.shape[1]:
            raise ValueError(
                f"feature_shape {feature_shape} does not match "
                f"{samples.shape[1]} features"
            )
        if mode == MODE_BINARIZED:
            if samples.size and not np.isin(samples, (0.0, 1.0)).all():
                raise ValueError("binarized mode requires values in {0, 1}")
        elif mode == MODE_RAW:
            if samples.size and (samples.min() < 0.0 or samples.max() > 1.0):
                raise ValueError("raw mode requires values in [0, 1]")
        elif mode != MODE_STANDARDIZED:
            raise ValueError(f"unknown mode {mode!r}")
        if labels is not None:
            labels = np.ascontiguousarray(labels, dtype=np.int64)
            if labels.shape != (samples.shape[0],):
                raise ValueError(
                    f"got {labels.shape[0] if labels.ndim else 0} labels "
                    f"for {samples.shape[0]} samples"
                )
            labels.setflags(write=False)
        samples.setflags(write=False)
        self.samples = samples
        self.labels = labels
        self.feature_shape = (int(rows), int(cols))
        self.mode = mode
        # Standardization statistics, populated by standardize().
        self.feature_mean = None
        self.feature_std = None

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def num_features(self) -> int:
        return self.samples.shape[1]

    def with_labels(self, labels) -> "DatasetHandle":
        """Zip a separately loaded label vector onto this handle by index."""
        out = DatasetHandle(self.samples, labels, self.feature_shape, self.mode)
        out.feature_mean = self.feature_mean
        out.feature_std = self.feature_std
        return out

    def batches(self, batch_size: int, shuffle: bool = False, rng: Rng = None):
        """Yield (samples, labels-or-None) covering every sample once.

        The last batch may be smaller. With shuffle=True the sample order is
        permuted by a Fisher-Yates pass over ``rng``.
        """
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        n = self.num_samples
        order = np.arange(n)
        if shuffle:
            if rng is None:
                raise ValueError("shuffle=True requires an rng")
            for i in range(n - 1, 0, -1):
                j = rng.below(i + 1)
                order[i], order[j] = order[j], order[i]
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            yield (
                self.samples[idx],
                self.labels[idx] if self.labels is not None else None,
            )


def _read_be_u32(buf: bytes, offset: int, path) -> int:
    if offset + 4 > len(buf):
        raise FormatError(f"{path}: truncated header")
    return struct.unpack_from(">I", buf, offset)[0]


def load_idx_images(path) -> DatasetHandle:
    """Load an IDX3 image file as a raw-mode handle (pixels / 255)."""
    with open(path, "rb") as f:
        buf = f.read()
    magic = _read_be_u32(buf, 0, path)
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(f"{path}: bad image magic {magic}, expected {IDX_IMAGE_MAGIC}")
    count = _read_be_u32(buf, 4, path)
    rows = _read_be_u32(buf, 8, path)
    cols = _read_be_u32(buf, 12, path)
    expected = 16 + count * rows * cols
    if len(buf) != expected:
        raise FormatError(
            f"{path}: payload is {len(buf) - 16} bytes, expected {count * rows * cols}"
        )
    pixels = np.frombuffer(buf, dtype=np.uint8, offset=16)
    samples = pixels.astype(np.float64).reshape(count, rows * cols) / 255.0
    return DatasetHandle(samples, feature_shape=(rows, cols), mode=MODE_RAW)


def load_idx_labels(path) -> np.ndarray:
    """Load an IDX1 label file as an int64 vector with values in [0, 255]."""
    with open(path, "rb") as f:
        buf = f.read()
    magic = _read_be_u32(buf, 0, path)
    if magic != IDX_LABEL_MAGIC:
        raise FormatError(f"{path}: bad label magic {magic}, expected {IDX_LABEL_MAGIC}")
    count = _read_be_u32(buf, 4, path)
    if len(buf) != 8 + count:
        raise FormatError(f"{path}: payload is {len(buf) - 8} bytes, expected {count}")
    return np.frombuffer(buf, dtype=np.uint8, offset=8).astype(np.int64)


def write_idx_images(samples_u8, path) -> None:
    """Write a (count, rows, cols) uint8 array as an IDX3 file."""
    arr = np.ascontiguousarray(samples_u8, dtype=np.uint8)
    count, rows, cols = arr.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, count, rows, cols))
        f.write(arr.tobytes())


def write_idx_labels(labels, path) -> None:
    """Write an integer vector as an IDX1 file."""
    arr = np.ascontiguousarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABEL_MAGIC, arr.shape[0]))
        f.write(arr.tobytes())


def binarize(d: DatasetHandle, threshold: float = 0.5) -> DatasetHandle:
    """Threshold a raw-mode handle: value > threshold becomes 1, else 0.

    The threshold comparison is strict, so a pixel exactly at the threshold
    maps to 0. Thresholding is deterministic by design; stochastic
    binarization is out of scope.
    """
    if d.mode != MODE_RAW:
        raise InvalidStateError(f"binarize requires raw mode, got {d.mode!r}")
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    values = (d.samples > threshold).astype(np.float64)
    return DatasetHandle(values, d.labels, d.feature_shape, MODE_BINARIZED)


def standardize(d: DatasetHandle):
    """Shift/scale each feature to zero mean, unit variance.

    Returns (handle, mean, std) where std is the population standard
    deviation floored at 1e-6; reuse the statistics to transform test data.
    """
    if d.mode != MODE_RAW:
        raise InvalidStateError(f"standardize requires raw mode, got {d.mode!r}")
    if d.num_samples == 0:
        raise ValueError("cannot standardize an empty dataset")
    mean = d.samples.mean(axis=0)
    std = np.maximum(d.samples.std(axis=0), 1e-6)
    values = (d.samples - mean) / std
    out = DatasetHandle(values, d.labels, d.feature_shape, MODE_STANDARDIZED)
    out.feature_mean = mean.copy()
    out.feature_std = std.copy()
    return out, mean, std


def standardize_with(d: DatasetHandle, mean, std) -> DatasetHandle:
    """Apply previously computed standardization statistics to raw data."""
    if d.mode != MODE_RAW:
        raise InvalidStateError(f"standardize requires raw mode, got {d.mode!r}")
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    values = (d.samples - mean) / np.maximum(std, 1e-6)
    out = DatasetHandle(values, d.labels, d.feature_shape, MODE_STANDARDIZED)
    out.feature_mean = mean.copy()
    out.feature_std = np.maximum(std, 1e-6)
    return out
