"""Desk-scale learning tasks for the distributed sign-vote training loop.

Every task bundles a train/test split, a flat parameter vector, and
mean-over-batch gradients of its sample loss. The default task is a
small synthetic binary logistic regression; a two-layer MLP over a
digit-image subset stored in IDX files is available when a dataset
path is supplied. A quadratic toy task exists for convergence tests.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from . import rng as rng_mod
from .rng import substream


class LearningTask:
    """Shared behavior: shard partitioning and test-set accuracy."""

    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    q: int

    def init_params(self) -> np.ndarray:
        return np.zeros(self.q)

    def gradient(self, w: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def loss(self, w: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def accuracy(self, w: np.ndarray) -> float:
        raise NotImplementedError

    def shards(self, k: int) -> list[tuple[np.ndarray, np.ndarray]]:
        """K disjoint equal shards of size floor(n/k); the tail remainder
        is dropped so every device holds the same amount of data."""
        n = self.train_x.shape[0]
        d = n // k
        if d < 1:
            raise ValueError(f"cannot split {n} samples into {k} shards")
        return [
            (self.train_x[i * d:(i + 1) * d], self.train_y[i * d:(i + 1) * d])
            for i in range(k)
        ]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class SyntheticLogisticTask(LearningTask):
    """Binary logistic regression on linearly separable Gaussian features.

    Labels come from a random +/-1 hyperplane through the origin and
    points closer than `margin` to the boundary are rejected, so the
    Bayes accuracy is 1 and small direction errors are not penalized.
    Parameters are the weight vector plus a bias (q = n_features + 1).
    """

    def __init__(
        self,
        seed: int,
        n_features: int = 20,
        n_train: int = 2000,
        n_test: int = 500,
        margin: float = 0.15,
    ):
        rng = substream(seed, rng_mod.TASK, 0)
        self.n_features = n_features
        self.q = n_features + 1
        self.w_true = rng.choice([-1.0, 1.0], size=n_features)

        def sample(n: int) -> tuple[np.ndarray, np.ndarray]:
            xs = np.empty((0, n_features))
            while xs.shape[0] < n:
                cand = rng.standard_normal((2 * n, n_features))
                keep = np.abs(cand @ self.w_true) / np.sqrt(n_features) >= margin
                xs = np.vstack([xs, cand[keep]])
            xs = xs[:n]
            return xs, (xs @ self.w_true > 0).astype(float)

        self.train_x, self.train_y = sample(n_train)
        self.test_x, self.test_y = sample(n_test)

    def _scores(self, w: np.ndarray, x: np.ndarray) -> np.ndarray:
        return x @ w[:-1] + w[-1]

    def gradient(self, w, x, y):
        err = _sigmoid(self._scores(w, x)) - y
        return np.concatenate([x.T @ err, [err.sum()]]) / x.shape[0]

    def loss(self, w, x, y):
        z = self._scores(w, x)
        # log(1 + exp(-|z|)) + relu(-yz) form, stable for large |z|
        return float(np.mean(np.logaddexp(0.0, z) - y * z))

    def accuracy(self, w):
        pred = self._scores(w, self.test_x) > 0
        return float(np.mean(pred == (self.test_y > 0.5)))


class QuadraticTask(LearningTask):
    """Separable quadratic bowl; gradient w - w_star regardless of batch.

    Data is a dummy index set so the sharding/batching machinery works;
    accuracy reports the negative sup-norm distance to the optimum.
    """

    def __init__(self, w_star: np.ndarray, n_train: int = 2000):
        self.w_star = np.asarray(w_star, dtype=float)
        self.q = self.w_star.size
        self.train_x = np.zeros((n_train, 1))
        self.train_y = np.zeros(n_train)
        self.test_x = np.zeros((1, 1))
        self.test_y = np.zeros(1)

    def gradient(self, w, x, y):
        return w - self.w_star

    def loss(self, w, x, y):
        return float(0.5 * np.sum((w - self.w_star) ** 2))

    def accuracy(self, w):
        return float(-np.max(np.abs(w - self.w_star)))

    def distance(self, w) -> float:
        return float(np.max(np.abs(w - self.w_star)))


IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def read_idx(path: str | Path) -> np.ndarray:
    """Read an IDX file (big-endian magic, uint32 dims, ubyte payload)."""
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise ValueError(f"{path}: truncated IDX header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic not in (IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC):
        raise ValueError(f"{path}: unsupported IDX magic 0x{magic:08x}")
    ndim = magic & 0xFF
    dims = struct.unpack(f">{ndim}I", raw[4:4 + 4 * ndim])
    data = np.frombuffer(raw, dtype=np.uint8, offset=4 + 4 * ndim)
    if data.size != int(np.prod(dims)):
        raise ValueError(f"{path}: payload size {data.size} does not match dims {dims}")
    return data.reshape(dims)


def write_idx_images(path: str | Path, images: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    header = struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape)
    Path(path).write_bytes(header + images.tobytes())


def write_idx_labels(path: str | Path, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    header = struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0])
    Path(path).write_bytes(header + labels.tobytes())


class MnistMlpTask(LearningTask):
    """Two-layer MLP (relu + softmax) over an IDX-format image subset.

    Expects train-images/train-labels/test-images/test-labels IDX files
    under dataset_path. Parameters are packed flat: W1, b1, W2, b2.
    """

    def __init__(self, dataset_path: str | Path, seed: int, hidden: int = 12, n_classes: int = 10):
        base = Path(dataset_path)
        self.train_x = self._flatten(read_idx(base / "train-images-idx3-ubyte"))
        self.train_y = read_idx(base / "train-labels-idx1-ubyte").astype(np.int64)
        self.test_x = self._flatten(read_idx(base / "test-images-idx3-ubyte"))
        self.test_y = read_idx(base / "test-labels-idx1-ubyte").astype(np.int64)
        if self.train_x.shape[0] != self.train_y.shape[0]:
            raise ValueError("train image/label counts differ")
        if self.test_x.shape[0] != self.test_y.shape[0]:
            raise ValueError("test image/label counts differ")
        self.n_in = self.train_x.shape[1]
        self.hidden = hidden
        self.n_classes = n_classes
        self.q = self.n_in * hidden + hidden + hidden * n_classes + n_classes
        self._init_rng = substream(seed, rng_mod.TASK, 1)

    @staticmethod
    def _flatten(images: np.ndarray) -> np.ndarray:
        return images.reshape(images.shape[0], -1).astype(np.float64) / 255.0

    def _unpack(self, w: np.ndarray):
        i, h, c = self.n_in, self.hidden, self.n_classes
        o1 = i * h
        w1 = w[:o1].reshape(i, h)
        b1 = w[o1:o1 + h]
        w2 = w[o1 + h:o1 + h + h * c].reshape(h, c)
        b2 = w[o1 + h + h * c:]
        return w1, b1, w2, b2

    def init_params(self):
        i, h, c = self.n_in, self.hidden, self.n_classes
        w1 = self._init_rng.standard_normal((i, h)) * np.sqrt(2.0 / i)
        w2 = self._init_rng.standard_normal((h, c)) * np.sqrt(2.0 / h)
        return np.concatenate([w1.ravel(), np.zeros(h), w2.ravel(), np.zeros(c)])

    def _forward(self, w, x):
        w1, b1, w2, b2 = self._unpack(w)
        a1 = np.maximum(x @ w1 + b1, 0.0)
        logits = a1 @ w2 + b2
        logits -= logits.max(axis=1, keepdims=True)
        ez = np.exp(logits)
        return a1, ez / ez.sum(axis=1, keepdims=True)

    def gradient(self, w, x, y):
        w1, b1, w2, b2 = self._unpack(w)
        a1, probs = self._forward(w, x)
        n = x.shape[0]
        dlogits = probs.copy()
        dlogits[np.arange(n), y] -= 1.0
        dlogits /= n
        dw2 = a1.T @ dlogits
        db2 = dlogits.sum(axis=0)
        da1 = dlogits @ w2.T
        da1[a1 <= 0] = 0.0
        dw1 = x.T @ da1
        db1 = da1.sum(axis=0)
        return np.concatenate([dw1.ravel(), db1, dw2.ravel(), db2])

    def loss(self, w, x, y):
        _, probs = self._forward(w, x)
        picked = probs[np.arange(x.shape[0]), y]
        return float(-np.mean(np.log(np.maximum(picked, 1e-300))))

    def accuracy(self, w):
        _, probs = self._forward(w, self.test_x)
        return float(np.mean(probs.argmax(axis=1) == self.test_y))


def make_task(name: str, seed: int, dataset_path: str | None = None) -> LearningTask:
    if name == "synthetic-logistic":
        return SyntheticLogisticTask(seed)
    if name == "mnist-subset-mlp":
        if not dataset_path:
            raise ValueError("task mnist-subset-mlp requires train.dataset_path")
        return MnistMlpTask(dataset_path, seed)
    raise ValueError(f"unknown task {name!r}")
