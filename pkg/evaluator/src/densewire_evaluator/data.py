"""CIFAR-10 loading in its standard pickled-batch distribution format,
plus the seeded stratified subset used for fractional training budgets.

Fetch step (once):
    curl -O https://www.cs.toronto.edu/~kriz/cifar-10-python.tar.gz
    tar xzf cifar-10-python.tar.gz -C <data-dir>
"""

from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np

from .errors import DataUnavailable

BATCH_DIR = "cifar-10-batches-py"
TRAIN_FILES = tuple(f"data_batch_{i}" for i in range(1, 6))
TEST_FILE = "test_batch"
NUM_CLASSES = 10

# standard per-channel statistics of the train split
CHANNEL_MEAN = np.array([0.4914, 0.4822, 0.4465], dtype=np.float32)
CHANNEL_STD = np.array([0.2470, 0.2435, 0.2616], dtype=np.float32)


def _batch_root(data_dir: str | Path) -> Path:
    root = Path(data_dir)
    if (root / BATCH_DIR).is_dir():
        return root / BATCH_DIR
    return root


def _read_batch(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "rb") as fh:
        raw = pickle.load(fh, encoding="bytes")
    data = np.asarray(raw[b"data"], dtype=np.uint8).reshape(-1, 3, 32, 32)
    labels = np.asarray(raw[b"labels"], dtype=np.int64)
    return data, labels


def load_cifar10(data_dir: str | Path):
    """Returns (train_x, train_y, test_x, test_y); images are uint8 NCHW.

    Loads every train batch present (the full set has five); at least one
    train batch and the test batch are required.
    """
    root = _batch_root(data_dir)
    train_paths = [root / name for name in TRAIN_FILES if (root / name).exists()]
    test_path = root / TEST_FILE
    if not train_paths or not test_path.exists():
        raise DataUnavailable(
            f"no CIFAR-10 batches under {root}; see data.py for the fetch step"
        )
    xs, ys = zip(*(_read_batch(p) for p in train_paths))
    test_x, test_y = _read_batch(test_path)
    return np.concatenate(xs), np.concatenate(ys), test_x, test_y


def stratified_subset(labels: np.ndarray, fraction: float, seed) -> np.ndarray:
    """Seeded per-class subsample; every class keeps at least one example."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction {fraction} outside (0, 1]")
    rng = np.random.default_rng(seed)
    picked = []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        take = max(1, round(fraction * len(idx)))
        picked.append(rng.permutation(idx)[:take])
    return np.sort(np.concatenate(picked))


def normalize(images: np.ndarray) -> np.ndarray:
    """uint8 NCHW -> float32 NCHW with standard channel statistics."""
    x = images.astype(np.float32) / 255.0
    return (x - CHANNEL_MEAN[:, None, None]) / CHANNEL_STD[:, None, None]


def write_synthetic_dataset(
    data_dir: str | Path, n_train: int = 400, n_test: int = 200, seed: int = 0
) -> Path:
    """Writes class-balanced random batches in the standard format.

    Hermetic stand-in for tests and demos; not a substitute for real data.
    """
    root = Path(data_dir) / BATCH_DIR
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    def emit(path: Path, n: int) -> None:
        data = rng.integers(0, 256, size=(n, 3072), dtype=np.uint8)
        labels = np.tile(np.arange(NUM_CLASSES), (n + NUM_CLASSES - 1) // NUM_CLASSES)[:n]
        with open(path, "wb") as fh:
            pickle.dump({b"data": data, b"labels": labels.tolist()}, fh)

    emit(root / TRAIN_FILES[0], n_train)
    emit(root / TEST_FILE, n_test)
    return root
