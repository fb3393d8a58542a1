"""1-D deep convolutional binary damage classifier.

Reuses the GAN critic topology with the dropout layer removed and a final
sigmoid, trained with binary cross-entropy. Scores near 1 mean damaged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DivergedError, InsufficientDataError
from .gan import GanConfig, build_critic
from .layers import LayerSpec, NetworkSpec, forward, init_params
from .metrics import PredictionSet
from .optim import AdamW

_LOG_EPS = 1e-12


@dataclass
class ClassifierConfig:
    learning_rate: float = 8e-4
    batch_size: int = 30
    epochs: int = 300
    seed: int = 0
    weight_decay: float = 1e-2

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")


def default_learning_rate(scenario_id):
    """8e-4 for scenarios 0-2, 3.5e-3 for 3-5."""
    return 8e-4 if scenario_id <= 2 else 3.5e-3


def build_classifier(window_len):
    """Critic topology, no dropout, sigmoid output: one score per window."""
    base = build_critic(window_len, GanConfig(), with_dropout=False)
    return NetworkSpec(base.layers + [LayerSpec("sigmoid")])


def _batch(windows):
    return np.stack([w.samples for w in windows])[:, None, :]


def _bce(scores, labels):
    # scores come from a sigmoid; the epsilon keeps log finite at the rails
    p = scores
    pos = ad.log(p + _LOG_EPS) * Tensor(labels)
    negt = ad.log((1.0 - p) + _LOG_EPS) * Tensor(1.0 - labels)
    return ad.neg(ad.tmean(pos + negt))


def train_classifier(cfg, train_windows, window_len=None):
    """Minibatch AdamW training with binary cross-entropy.

    Labels come from each window's condition. Returns (net, store,
    loss_history). A single-class training set only warns; an empty one
    is an error.
    """
    if not train_windows:
        raise InsufficientDataError("classifier training set is empty")
    labels = np.array([w.label for w in train_windows], dtype=np.float64)
    if len(set(labels.tolist())) < 2:
        warnings.warn("classifier training set contains a single class", stacklevel=2)
    data = _batch(train_windows)
    if window_len is None:
        window_len = data.shape[2]
    net = build_classifier(window_len)
    rng = np.random.default_rng(cfg.seed)
    store = init_params(net, rng)
    opt = AdamW(cfg.learning_rate, weight_decay=cfg.weight_decay)
    n = data.shape[0]
    batch_size = min(cfg.batch_size, n)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            leaves = store.leaf_tensors()
            out = forward(net, store, Tensor(data[idx]), mode="train", rng=rng,
                          params=leaves)
            loss = _bce(ad.reshape(out, (len(idx),)), labels[idx])
            if not np.isfinite(loss.data):
                raise DivergedError(epoch, f"classifier loss diverged at epoch {epoch}")
            names = list(leaves)
            grads = ad.grad(loss, [leaves[nm] for nm in names])
            opt.step(store.params, {nm: g.data for nm, g in zip(names, grads)})
            losses.append(loss.item())
        history.append(float(np.mean(losses)))
    return net, store, history


def predict(net, store, windows, threshold=0.5):
    """Eval-mode scores with ground-truth labels attached."""
    out = forward(net, store, Tensor(_batch(windows)), mode="eval")
    scores = out.data.reshape(len(windows))
    labels = np.array([w.label for w in windows], dtype=np.int64)
    return PredictionSet(scores=scores, labels=labels, threshold=threshold)
