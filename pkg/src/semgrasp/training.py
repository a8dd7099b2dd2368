"""Mini-batch gradient-descent training of the two-channel network.

Determinism contract: one config seed feeds two named sub-streams
(weight init and epoch shuffling), batches are visited in shuffle order,
and per-epoch train/test statistics are recomputed on the full sets at
epoch end, so identical inputs and seed reproduce identical logs bit for
bit on the same machine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LABEL_TO_INDEX, index_to_label
from .errors import TrainingDivergedError
from .features import FeatureVector
from .metrics import EpochStats
from .network import (
    NetworkSpec,
    NetworkState,
    cross_entropy,
    forward,
    init_network,
    loss_and_gradients,
)

_EVAL_CHUNK = 256

# sub-seed tags so split/init/shuffle streams can be reproduced in isolation
INIT_STREAM = 1
SHUFFLE_STREAM = 2


@dataclass
class TrainConfig:
    epochs: int = 300
    batch_size: int = 32
    learning_rate: float = 0.01
    optimizer: str = "sgd_momentum"  # sgd | sgd_momentum
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.optimizer not in ("sgd", "sgd_momentum"):
            raise ValueError(f"optimizer must be 'sgd' or 'sgd_momentum', got {self.optimizer!r}")


def features_to_arrays(features: list[FeatureVector]):
    """Stack feature vectors into (x1, x2, labels) training arrays."""
    x1 = np.stack([f.channel1_features for f in features])
    x2 = np.stack([f.channel2_features for f in features])
    y = np.array([LABEL_TO_INDEX[f.label] for f in features], dtype=np.int64)
    return x1, x2, y


def evaluate(state: NetworkState, x1: np.ndarray, x2: np.ndarray, y: np.ndarray):
    """Loss and accuracy over a full set, evaluated in fixed-size chunks."""
    n = len(y)
    losses = []
    correct = 0
    for start in range(0, n, _EVAL_CHUNK):
        sl = slice(start, min(start + _EVAL_CHUNK, n))
        probs, _ = forward(state, x1[sl], x2[sl])
        losses.append(cross_entropy(probs, y[sl]) * (sl.stop - sl.start))
        correct += int((probs.argmax(axis=1) == y[sl]).sum())
    return sum(losses) / n, correct / n


def train(
    spec: NetworkSpec,
    train_features: list[FeatureVector],
    test_features: list[FeatureVector],
    cfg: TrainConfig,
    progress=None,
) -> tuple[NetworkState, list[EpochStats]]:
    """Run cfg.epochs of mini-batch SGD; returns final state and epoch log.

    train/test sets must be non-empty and disjoint. progress, if given, is
    called as progress(epoch, EpochStats) after every epoch. Raises
    TrainingDivergedError naming the epoch if any loss goes non-finite.
    """
    if not train_features or not test_features:
        raise ValueError("train and test sets must both be non-empty")
    x1_tr, x2_tr, y_tr = features_to_arrays(train_features)
    x1_te, x2_te, y_te = features_to_arrays(test_features)
    if x1_tr.shape[1] != spec.input_bins:
        raise ValueError(
            f"features have {x1_tr.shape[1]} bins but the network expects {spec.input_bins}"
        )

    rng_init = np.random.default_rng([cfg.seed, INIT_STREAM])
    rng_shuffle = np.random.default_rng([cfg.seed, SHUFFLE_STREAM])
    state = init_network(spec, rng_init)

    use_momentum = cfg.optimizer == "sgd_momentum"
    velocity = {name: np.zeros_like(arr) for name, arr in state.parameters()} if use_momentum else None

    n = len(y_tr)
    log: list[EpochStats] = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng_shuffle.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads = loss_and_gradients(state, x1_tr[batch], x2_tr[batch], y_tr[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, f"batch loss = {loss}")
            for name, arr in state.parameters():
                g = grads[name]
                if use_momentum:
                    v = velocity[name]
                    v *= cfg.momentum
                    v -= cfg.learning_rate * g
                    arr += v
                else:
                    arr -= cfg.learning_rate * g
        train_loss, train_acc = evaluate(state, x1_tr, x2_tr, y_tr)
        test_loss, test_acc = evaluate(state, x1_te, x2_te, y_te)
        if not (np.isfinite(train_loss) and np.isfinite(test_loss)):
            raise TrainingDivergedError(epoch, "epoch evaluation loss non-finite")
        stats = EpochStats(train_loss, train_acc, test_loss, test_acc)
        log.append(stats)
        if progress is not None:
            progress(epoch, stats)
    return state, log


def predict(state: NetworkState, fv: FeatureVector) -> tuple[str, np.ndarray]:
    """Predicted label and the six class probabilities for one feature vector.

    Ties in the probabilities resolve to the lowest class index.
    """
    x1 = fv.channel1_features[None, :]
    x2 = fv.channel2_features[None, :]
    probs, _ = forward(state, x1, x2)
    idx = int(probs[0].argmax())
    return index_to_label(idx), probs[0]


def predict_batch(state: NetworkState, features: list[FeatureVector]):
    """Predicted class indices and probabilities for a list of feature vectors."""
    x1, x2, _ = features_to_arrays(features)
    preds = []
    probs_all = []
    for start in range(0, len(features), _EVAL_CHUNK):
        sl = slice(start, min(start + _EVAL_CHUNK, len(features)))
        probs, _ = forward(state, x1[sl], x2[sl])
        preds.append(probs.argmax(axis=1))
        probs_all.append(probs)
    return np.concatenate(preds), np.vstack(probs_all)
