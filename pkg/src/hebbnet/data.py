"""MNIST ingestion: IDX parsing, normalization, one-hot encoding, and
per-digit subset selection (images per digit, "IPD").

The IDX readers accept raw or gzip-compressed byte streams (sniffed by the
gzip magic) and are strict about the 28x28 grayscale layout: wrong magic
numbers, truncation, or unexpected dimensions raise IdxFormatError with
the offending byte offset.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, IdxFormatError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
IMAGE_SIDE = 28
PIXELS = IMAGE_SIDE * IMAGE_SIDE
DIGITS = 10

_GZIP_MAGIC = b"\x1f\x8b"

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"

# the standard 60k training file is conventionally split 50k/10k into
# train/validation; generalized as a fixed 1/6 validation fraction
VALIDATION_DENOMINATOR = 6


@dataclass(frozen=True)
class LabeledExample:
    pixels: np.ndarray
    label: int


@dataclass(frozen=True)
class Dataset:
    """Array-backed list of labeled examples.

    ``images`` is (n, 784) float64 in [0, 1]; ``labels`` is (n,) int64.
    """

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise DataError(
                f"image count {self.images.shape[0]} does not match "
                f"label count {self.labels.shape[0]}"
            )

    def __len__(self) -> int:
        return self.images.shape[0]

    def __getitem__(self, index: int) -> LabeledExample:
        return LabeledExample(self.images[index], int(self.labels[index]))

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(
            np.ascontiguousarray(self.images[indices]), self.labels[indices]
        )


@dataclass(frozen=True)
class DatasetSplits:
    train: Dataset
    test: Dataset
    validation: Dataset


def _ensure_raw(data: bytes) -> bytes:
    if data[:2] == _GZIP_MAGIC:
        return gzip.decompress(data)
    return data


def _read_bytes(source) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    if hasattr(source, "read"):
        return source.read()
    return Path(source).read_bytes()


def load_idx_images(source) -> np.ndarray:
    """Parse an IDX image stream into an (n, 784) float64 array in [0, 1].

    Accepts bytes, a binary file object, or a path; gzip input is
    transparently decompressed. Pixels are bytes divided by 255.0 exactly.
    """
    data = _ensure_raw(_read_bytes(source))
    if len(data) < 16:
        raise IdxFormatError("image stream truncated before header", offset=len(data))
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(
            f"bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}", offset=0
        )
    if rows != IMAGE_SIDE or cols != IMAGE_SIDE:
        raise IdxFormatError(
            f"expected {IMAGE_SIDE}x{IMAGE_SIDE} images, got {rows}x{cols}", offset=8
        )
    expected = 16 + count * PIXELS
    if len(data) < expected:
        raise IdxFormatError(
            f"image stream truncated: header promises {count} images "
            f"({expected} bytes), got {len(data)} bytes",
            offset=len(data),
        )
    raw = np.frombuffer(data, dtype=np.uint8, offset=16, count=count * PIXELS)
    return raw.reshape(count, PIXELS) / 255.0


def load_idx_labels(source) -> np.ndarray:
    """Parse an IDX label stream into an (n,) int64 array of digits 0-9."""
    data = _ensure_raw(_read_bytes(source))
    if len(data) < 8:
        raise IdxFormatError("label stream truncated before header", offset=len(data))
    magic, count = struct.unpack(">II", data[:8])
    if magic != LABEL_MAGIC:
        raise IdxFormatError(
            f"bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}", offset=0
        )
    if len(data) < 8 + count:
        raise IdxFormatError(
            f"label stream truncated: header promises {count} labels, "
            f"got {len(data) - 8} bytes",
            offset=len(data),
        )
    raw = np.frombuffer(data, dtype=np.uint8, offset=8, count=count)
    bad = np.flatnonzero(raw > 9)
    if bad.size:
        raise IdxFormatError(
            f"label value {raw[bad[0]]} out of range 0-9", offset=8 + int(bad[0])
        )
    return raw.astype(np.int64)


def load_dataset(image_source, label_source) -> Dataset:
    """Load and pair an image stream with a label stream."""
    images = load_idx_images(image_source)
    labels = load_idx_labels(label_source)
    if images.shape[0] != labels.shape[0]:
        raise DataError(
            f"image count {images.shape[0]} does not match label count "
            f"{labels.shape[0]}"
        )
    return Dataset(images, labels)


def _find_file(data_dir: Path, stem: str) -> Path:
    for candidate in (data_dir / stem, data_dir / f"{stem}.gz"):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"missing {stem}[.gz] under {data_dir}")


def load_splits(data_dir) -> DatasetSplits:
    """Load the standard MNIST files from a directory.

    The training file is split train/validation at the conventional
    50k/10k proportion (the last sixth becomes validation); the t10k file
    is the test split. Files may be raw or gzipped.
    """
    data_dir = Path(data_dir)
    full_train = load_dataset(
        _find_file(data_dir, TRAIN_IMAGES), _find_file(data_dir, TRAIN_LABELS)
    )
    test = load_dataset(
        _find_file(data_dir, TEST_IMAGES), _find_file(data_dir, TEST_LABELS)
    )
    n_validation = len(full_train) // VALIDATION_DENOMINATOR
    n_train = len(full_train) - n_validation
    train = Dataset(full_train.images[:n_train], full_train.labels[:n_train])
    validation = Dataset(full_train.images[n_train:], full_train.labels[n_train:])
    return DatasetSplits(train=train, test=test, validation=validation)


def one_hot(label: int) -> np.ndarray:
    """Unit vector with a 1.0 at the digit's index."""
    label = int(label)
    if not 0 <= label < DIGITS:
        raise ValueError(f"label must lie in 0..9, got {label}")
    vec = np.zeros(DIGITS)
    vec[label] = 1.0
    return vec


def select_ipd(examples: Dataset, ipd: int, seed: int = 0) -> Dataset:
    """Pick exactly ``ipd`` examples of each digit, interleaved round-robin.

    With seed 0 the first ``ipd`` occurrences of each digit in file order
    are taken; any other seed draws uniformly per digit without
    replacement. The output orders examples digit 0..9, then the next
    example of each digit, and so on, so a single-epoch pass never sees
    one digit massed together.
    """
    if ipd < 1:
        raise ValueError(f"ipd must be >= 1, got {ipd}")
    rng = np.random.default_rng(seed) if seed != 0 else None
    per_digit = []
    for digit in range(DIGITS):
        candidates = np.flatnonzero(examples.labels == digit)
        if candidates.size < ipd:
            raise DataError(
                f"digit {digit} has only {candidates.size} examples, need {ipd}"
            )
        if rng is None:
            chosen = candidates[:ipd]
        else:
            chosen = np.sort(rng.choice(candidates, size=ipd, replace=False))
        per_digit.append(chosen)
    order = np.stack(per_digit, axis=1).reshape(-1)  # round-robin interleave
    return examples.subset(order)
