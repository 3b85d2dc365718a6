"""
MNIST loader for the IDX binary format.

IDX layout (all integers big-endian):
    images: magic 2051, count, rows, cols, then count*rows*cols unsigned bytes
    labels: magic 2049, count, then count unsigned bytes
Files ending in ``.gz`` are decompressed transparently.
"""

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from tensor_core.tensor import Tensor
from utils.errors import DataMissingError, FormatError

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049
CLASS_COUNT = 10

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass
class ClassificationDataset:
    """Features [n x d], one class index per row."""

    features: Tensor
    labels: List[int]
    class_count: int

    def __post_init__(self):
        n = self.features.shape[0]
        if len(self.labels) != n:
            raise FormatError(f"{len(self.labels)} labels for {n} feature rows")
        if any(not 0 <= label < self.class_count for label in self.labels):
            raise FormatError(f"labels must lie in [0, {self.class_count})")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, n: int) -> "ClassificationDataset":
        """The first n rows."""
        return ClassificationDataset(Tensor(self.features.array[:n]), self.labels[:n], self.class_count)


def _read_bytes(path: Path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _header(data: bytes, magic: int, dims: int) -> Tuple[int, ...]:
    size = 4 * (dims + 1)
    if len(data) < size:
        raise FormatError(f"truncated IDX header: need {size} bytes, file has {len(data)}", offset=len(data))
    values = struct.unpack(f">{dims + 1}I", data[:size])
    if values[0] != magic:
        raise FormatError(f"bad IDX magic {values[0]}, expected {magic}", offset=0)
    return values[1:]


def parse_idx_images(data: bytes) -> np.ndarray:
    """Images as uint8 [count x rows x cols]."""
    count, rows, cols = _header(data, IMAGE_MAGIC, 3)
    expected = 16 + count * rows * cols
    if len(data) < expected:
        raise FormatError(f"truncated image data: need {expected} bytes, file has {len(data)}", offset=len(data))
    return np.frombuffer(data, dtype=np.uint8, count=count * rows * cols, offset=16).reshape(count, rows, cols)


def parse_idx_labels(data: bytes) -> np.ndarray:
    (count,) = _header(data, LABEL_MAGIC, 1)
    expected = 8 + count
    if len(data) < expected:
        raise FormatError(f"truncated label data: need {expected} bytes, file has {len(data)}", offset=len(data))
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=8)


def encode_idx_images(images: np.ndarray) -> bytes:
    images = np.asarray(images, dtype=np.uint8)
    count, rows, cols = images.shape
    return struct.pack(">4I", IMAGE_MAGIC, count, rows, cols) + images.tobytes()


def encode_idx_labels(labels: Sequence[int]) -> bytes:
    values = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">2I", LABEL_MAGIC, values.size) + values.tobytes()


def dataset_from_idx(image_bytes: bytes, label_bytes: bytes) -> ClassificationDataset:
    images = parse_idx_images(image_bytes)
    labels = parse_idx_labels(label_bytes)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(f"{images.shape[0]} images but {labels.shape[0]} labels", offset=4)
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return ClassificationDataset(Tensor.wrap(features), labels.astype(int).tolist(), CLASS_COUNT)


def load_mnist(images_path: Path, labels_path: Path) -> ClassificationDataset:
    """
    Load an IDX image/label pair, pixels scaled to [0, 1].

    Raises:
        DataMissingError: If either file is absent
        FormatError: On bad magic, truncation or count mismatch
    """
    missing = [str(p) for p in (images_path, labels_path) if not Path(p).exists()]
    if missing:
        raise DataMissingError(missing)
    return dataset_from_idx(_read_bytes(images_path), _read_bytes(labels_path))


def mnist_paths(data_dir: Path) -> Dict[str, Path]:
    """Expected MNIST file paths, preferring uncompressed files."""
    paths = {}
    for key, name in MNIST_FILES.items():
        plain = Path(data_dir) / name
        compressed = plain.with_name(name + ".gz")
        paths[key] = compressed if not plain.exists() and compressed.exists() else plain
    return paths


def load_mnist_splits(data_dir: Path) -> Tuple[ClassificationDataset, ClassificationDataset]:
    """(train, test) from a directory holding the four standard files."""
    paths = mnist_paths(data_dir)
    missing = [str(p) for p in paths.values() if not p.exists()]
    if missing:
        raise DataMissingError(missing)
    train = load_mnist(paths["train_images"], paths["train_labels"])
    test = load_mnist(paths["test_images"], paths["test_labels"])
    return train, test
