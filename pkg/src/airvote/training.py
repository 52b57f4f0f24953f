"""Distributed sign-vote training loop with pluggable aggregation.

Each round every device computes the sign vector of a mini-batch
gradient on its own shard; a transport (ideal exchange, the
energy-detected PPM link, or the coherent QPSK baseline) turns the K
sign vectors into one majority-vote vector, and all devices take the
same sign step. The loop is deterministic for a given master seed at
any thread count: every random draw comes from a stream named by
(purpose, round, device).
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .rng import substream
from .tasks import LearningTask


@dataclass(frozen=True)
class TrainConfig:
    eta: float = 0.01
    n_b: int = 64
    rounds: int = 300
    k: int = 10

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.n_b < 1 or self.rounds < 1 or self.k < 1:
            raise ValueError("n_b, rounds and k must be >= 1")


@dataclass
class RoundRecord:
    round: int
    test_accuracy: float
    mv_error_rate: float
    wall_ms: float
    e_plus_mean: float = 0.0
    e_minus_mean: float = 0.0


def sign_with_ties(values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Elementwise sign over {+1,-1}; zeros resolve uniformly at random."""
    values = np.asarray(values)
    out = np.where(values > 0, 1, -1).astype(np.int8)
    zero = values == 0
    if np.any(zero):
        out[zero] = rng.choice(np.array([-1, 1], dtype=np.int8), size=int(zero.sum()))
    return out


def local_gradient(
    task: LearningTask,
    w: np.ndarray,
    shard_x: np.ndarray,
    shard_y: np.ndarray,
    n_b: int | None = None,
    rng: np.random.Generator | None = None,
    indices: np.ndarray | None = None,
) -> np.ndarray:
    """Mini-batch mean gradient on one shard.

    The batch is `indices` when given, otherwise n_b samples drawn
    without replacement from `rng` (the whole shard when n_b matches
    its size).
    """
    d = shard_x.shape[0]
    if d == 0:
        raise ValueError("shard is empty")
    if indices is None:
        if n_b is None:
            raise ValueError("need either indices or n_b")
        if n_b > d:
            raise ValueError(f"batch size {n_b} exceeds shard size {d}")
        if n_b == d:
            indices = np.arange(d)
        else:
            if rng is None:
                raise ValueError("need an rng to draw a batch")
            indices = rng.choice(d, size=n_b, replace=False)
    return task.gradient(w, shard_x[indices], shard_y[indices])


def epoch_batch_indices(d: int, n_b: int, round_idx: int, master_seed: int, ed: int) -> np.ndarray:
    """Without-replacement batch for one round, reshuffled every epoch.

    An epoch is floor(d/n_b) rounds; each epoch gets a fresh shard
    permutation from the (device, epoch) stream, and rounds walk it in
    n_b-sized slots.
    """
    batches_per_epoch = max(d // n_b, 1)
    epoch, slot = divmod(round_idx, batches_per_epoch)
    perm = substream(master_seed, rng_mod.BATCH, ed, epoch).permutation(d)
    return perm[slot * n_b:(slot + 1) * n_b]


def ideal_mv(sign_vectors: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per-coordinate sign of the sum of the K sign vectors; ties random."""
    sign_vectors = np.asarray(sign_vectors)
    if sign_vectors.ndim != 2:
        raise ValueError("expected a (K, q) array of sign vectors")
    return sign_with_ties(sign_vectors.sum(axis=0), rng)


def apply_update(w: np.ndarray, mv: np.ndarray, eta: float) -> np.ndarray:
    return w - eta * np.asarray(mv, dtype=float)


def run_training(
    task: LearningTask,
    cfg: TrainConfig,
    transport,
    master_seed: int,
    threads: int = 1,
) -> list[RoundRecord]:
    """Full training run; returns one record per communication round.

    The recorded mv_error_rate is the disagreement between the
    transported majority vote and the ideal (error-free) one computed
    from the same local signs.
    """
    shards = task.shards(cfg.k)
    d = shards[0][0].shape[0]
    if cfg.n_b > d:
        raise ValueError(f"batch size {cfg.n_b} exceeds shard size {d}")

    w = task.init_params()
    records: list[RoundRecord] = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for rnd in range(cfg.rounds):
            start = time.perf_counter()

            def local_signs(ed: int) -> np.ndarray:
                idx = epoch_batch_indices(d, cfg.n_b, rnd, master_seed, ed)
                grad = local_gradient(task, w, *shards[ed], indices=idx)
                return sign_with_ties(grad, substream(master_seed, rng_mod.GRAD_SIGN, rnd, ed))

            if pool is not None:
                signs = np.stack(list(pool.map(local_signs, range(cfg.k))))
            else:
                signs = np.stack([local_signs(ed) for ed in range(cfg.k)])

            mv, diag = transport.aggregate(signs, master_seed, rnd, pool)
            reference = ideal_mv(signs, substream(master_seed, rng_mod.MV_TIE, rnd))
            w = apply_update(w, mv, cfg.eta)

            records.append(
                RoundRecord(
                    round=rnd,
                    test_accuracy=task.accuracy(w),
                    mv_error_rate=float(np.mean(mv != reference)),
                    wall_ms=(time.perf_counter() - start) * 1e3,
                    e_plus_mean=diag.get("e_plus_mean", 0.0),
                    e_minus_mean=diag.get("e_minus_mean", 0.0),
                )
            )
    finally:
        if pool is not None:
            pool.shutdown()
    return records
