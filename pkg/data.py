#!/usr/bin/env python3
"""
DATA LAYER - SYNTHETIC CLASSES, IDX INGESTION, NON-IID PARTITIONING
===================================================================

PURPOSE:
--------
Produces every Dataset the simulator trains or evaluates on:
1. generate_synthetic  - isotropic Gaussian classes around simplex vertices
2. load_idx            - MNIST / Fashion-MNIST IDX pairs (plain or .gz)
3. partition_noniid    - cluster-biased split of a dataset across N clients
4. flip_labels         - label-flipping poisoning (y -> M - y - 1)
5. poison_with_trigger - backdoor trigger stamping for the Scaling attack

IDX LAYOUT (big endian):
------------------------
    images: u32 magic 0x00000803 | u32 count | u32 rows | u32 cols | u8 pixels...
    labels: u32 magic 0x00000801 | u32 count | u8 labels...

Pixels are scaled to [0, 1] and flattened row-major.
"""
import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from errors import ConfigError, ConsistencyError, IdxFormatError, IdxTruncatedError
from models import PartitionConfig

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

PathLike = Union[str, Path]


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (samples x feature_dim) with integer labels in [0, M)"""
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ConsistencyError(f"features must be 2-D, got shape {self.features.shape}")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ConsistencyError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )
        if not np.all(np.isfinite(self.features)):
            raise ConsistencyError("features contain NaN or Inf")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: Sequence[int]) -> 'Dataset':
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx])


def _check_labels(labels: np.ndarray, num_classes: int) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ConsistencyError(
            f"labels must lie in [0, {num_classes}), found range [{labels.min()}, {labels.max()}]"
        )


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def class_means(feature_dim: int, num_classes: int, class_separation: float,
                rng: np.random.Generator) -> np.ndarray:
    """Regular simplex vertices with pairwise distance `class_separation`, embedded in feature space"""
    vertices = np.eye(num_classes) - 1.0 / num_classes
    vertices *= class_separation / np.sqrt(2.0)
    if feature_dim >= num_classes:
        means = np.zeros((num_classes, feature_dim))
        means[:, :num_classes] = vertices
        return means
    # Fewer features than classes: project onto a random orthonormal frame
    basis, _ = np.linalg.qr(rng.standard_normal((num_classes, feature_dim)))
    return vertices @ basis


def generate_synthetic(num_samples: int, feature_dim: int, num_classes: int,
                       class_separation: float, seed: int) -> Dataset:
    if num_samples < 1 or feature_dim < 1 or num_classes < 1:
        raise ConfigError(
            f"synthetic sizes must be positive (samples={num_samples}, dim={feature_dim}, classes={num_classes})"
        )
    if class_separation < 0:
        raise ConfigError(f"class_separation must be >= 0, got {class_separation}")

    rng = np.random.default_rng(seed)
    means = class_means(feature_dim, num_classes, class_separation, rng)
    labels = np.arange(num_samples, dtype=np.int64) % num_classes
    rng.shuffle(labels)
    features = means[labels] + rng.standard_normal((num_samples, feature_dim))
    return Dataset(features, labels)


def train_test_split(data: Dataset, train_fraction: float = 0.8,
                     seed: int = 0) -> Tuple[Dataset, Dataset]:
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    order = np.random.default_rng(seed).permutation(len(data))
    cut = int(np.floor(train_fraction * len(data)))
    return data.subset(order[:cut]), data.subset(order[cut:])


# ---------------------------------------------------------------------------
# IDX files
# ---------------------------------------------------------------------------

def _open_idx(path: PathLike):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(handle, size: int, path: PathLike) -> bytes:
    chunk = handle.read(size)
    if len(chunk) != size:
        raise IdxTruncatedError(f"{path}: expected {size} bytes, file ends after {len(chunk)}")
    return chunk


def _read_idx(path: PathLike, expected_magic: int) -> np.ndarray:
    with _open_idx(path) as handle:
        magic, = struct.unpack(">I", _read_exact(handle, 4, path))
        if magic != expected_magic:
            raise IdxFormatError(
                f"{path}: magic number 0x{magic:08X}, expected 0x{expected_magic:08X}"
            )
        ndim = magic & 0xFF
        dims = struct.unpack(f">{ndim}I", _read_exact(handle, 4 * ndim, path))
        size = int(np.prod(dims))
        payload = _read_exact(handle, size, path)
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def load_idx(images_path: PathLike, labels_path: PathLike) -> Dataset:
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise ConsistencyError(
            f"{images_path} holds {images.shape[0]} images but {labels_path} holds {labels.shape[0]} labels"
        )
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    logger.info(f"Loaded {features.shape[0]} samples of dim {features.shape[1]} from {images_path}")
    return Dataset(features, labels.astype(np.int64))


def write_idx_pair(images: np.ndarray, labels: np.ndarray,
                   images_path: PathLike, labels_path: PathLike) -> None:
    """Write uint8 images (n, rows, cols) and labels (n,) as an IDX pair"""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    if images.ndim != 3 or labels.ndim != 1:
        raise ConsistencyError(f"expected images (n, rows, cols) and labels (n,), got {images.shape}, {labels.shape}")
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape))
        f.write(images.tobytes(order="C"))
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())


# ---------------------------------------------------------------------------
# Non-iid partitioning
# ---------------------------------------------------------------------------

def cluster_of(client_id: int, num_classes: int) -> int:
    """Clients are dealt round-robin into M clusters"""
    return client_id % num_classes


def partition_indices(labels: np.ndarray, cfg: PartitionConfig) -> List[np.ndarray]:
    """Sample indices held by each client, in ascending order"""
    num_clients, num_classes = cfg.num_clients, cfg.num_classes
    if num_clients < num_classes:
        raise ConfigError(
            f"{num_clients} clients cannot fill {num_classes} clusters (a cluster would be empty)"
        )
    labels = np.asarray(labels, dtype=np.int64)
    _check_labels(labels, num_classes)

    rng = np.random.default_rng(cfg.seed)
    count = labels.shape[0]
    stays_home = rng.random(count) < cfg.bias
    if num_classes > 1:
        offsets = 1 + rng.integers(0, num_classes - 1, size=count)
        cluster = np.where(stays_home, labels, (labels + offsets) % num_classes)
    else:
        cluster = labels.copy()

    # Cluster c holds clients c, c + M, c + 2M, ...
    sizes = np.array([len(range(c, num_clients, num_classes)) for c in range(num_classes)])
    slot = rng.integers(0, sizes[cluster])
    owner = cluster + num_classes * slot

    order = np.argsort(owner, kind="stable")
    bounds = np.searchsorted(owner[order], np.arange(num_clients + 1))
    return [order[bounds[i]:bounds[i + 1]] for i in range(num_clients)]


def partition_noniid(data: Dataset, cfg: PartitionConfig) -> List[Dataset]:
    shards = partition_indices(data.labels, cfg)
    empty = [i for i, shard in enumerate(shards) if shard.size == 0]
    if empty:
        logger.warning(f"Partition left {len(empty)} client(s) without samples: {empty[:10]}")
    return [data.subset(shard) for shard in shards]


# ---------------------------------------------------------------------------
# Data-level poisoning
# ---------------------------------------------------------------------------

def flip_labels(data: Dataset, num_classes: int) -> Dataset:
    _check_labels(data.labels, num_classes)
    return Dataset(data.features, num_classes - data.labels - 1)


def stamp_trigger(features: np.ndarray, trigger_width: int) -> np.ndarray:
    stamped = np.array(features, dtype=np.float64, copy=True)
    stamped[:, :trigger_width] = 1.0
    return stamped


def poison_with_trigger(data: Dataset, trigger_width: int, target_class: int,
                        fraction: float, seed: Union[int, Sequence[int]]) -> Dataset:
    """Stamp the trigger on a seeded `fraction` of samples and relabel them to target_class"""
    if trigger_width >= data.feature_dim:
        raise ConfigError(f"trigger_width {trigger_width} must be below feature_dim {data.feature_dim}")
    rng = np.random.default_rng(seed)
    chosen = rng.permutation(len(data))[:int(round(fraction * len(data)))]
    features = np.array(data.features, copy=True)
    labels = np.array(data.labels, copy=True)
    features[chosen] = stamp_trigger(features[chosen], trigger_width)
    labels[chosen] = target_class
    return Dataset(features, labels)


def trigger_test_set(test: Dataset, trigger_width: int, target_class: int) -> Dataset:
    """Triggered copies of the test samples whose true label is not the target"""
    keep = np.flatnonzero(test.labels != target_class)
    source = test.subset(keep)
    return Dataset(stamp_trigger(source.features, trigger_width),
                   np.full(len(source), target_class, dtype=np.int64))
