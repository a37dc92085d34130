"""Two-layer GCN (and an MLP head over fixed aggregated features) in numpy.

Both models are trained full-batch with softmax cross-entropy on the labeled
nodes, Adam with L2 weight decay folded into the gradient, for a fixed
number of epochs. There is no dropout, bias, validation or early stopping.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-2
    weight_decay: float = 5e-4
    epochs: int = 300
    hidden: int = 16
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def first_hop(s, x, max_density: float = 0.25):
    """S @ X, kept as CSR when sparse enough that the training products
    (S X) W1 and (S X)^T G are cheaper that way."""
    sx = s @ x
    dense = sx.toarray() if sp.issparse(sx) else np.asarray(sx)
    if np.count_nonzero(dense) <= max_density * dense.size:
        return sp.csr_matrix(dense)
    return dense


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. ``logits``."""
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    rows = np.arange(len(y))
    loss = -logp[rows, y].mean()
    grad = np.exp(logp)
    grad[rows, y] -= 1.0
    return float(loss), grad / len(y)


@dataclass(frozen=True, eq=False)
class GcnModel:
    w1: np.ndarray
    w2: np.ndarray
    seed: int = 0
    losses: tuple = field(default=(), repr=False)

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    def embed(self, s, x, sx=None) -> np.ndarray:
        """Last hidden layer ReLU(S X W1)."""
        sx = s @ x if sx is None else sx
        return np.maximum(np.asarray(sx @ self.w1), 0.0)

    def forward(self, s, x, sx=None) -> np.ndarray:
        logits = np.asarray(s @ (self.embed(s, x, sx) @ self.w2))
        if not np.all(np.isfinite(logits)):
            raise FloatingPointError("non-finite GCN output")
        return logits

    def predict(self, s, x, sx=None) -> np.ndarray:
        return self.forward(s, x, sx).argmax(axis=1)

    def to_json(self) -> dict:
        return {"w1": self.w1.tolist(), "w2": self.w2.tolist(), "hidden": self.hidden, "seed": self.seed}

    @classmethod
    def from_json(cls, obj: dict) -> "GcnModel":
        return cls(np.asarray(obj["w1"], dtype=np.float64), np.asarray(obj["w2"], dtype=np.float64),
                   int(obj.get("seed", 0)))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "GcnModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def gcn_forward(model: GcnModel, s, x) -> np.ndarray:
    """Logits S ReLU(S X W1) W2."""
    return model.forward(s, x)


def gcn_loss_and_grads(w1, w2, s, sx, train_ids, y, weight_decay=0.0):
    """Training loss (cross-entropy plus wd/2 * squared norms) and its
    gradients with respect to W1 and W2."""
    z1 = np.asarray(sx @ w1)
    h = np.maximum(z1, 0.0)
    sh = np.asarray(s @ h)
    logits = sh @ w2
    ce, dlog_train = cross_entropy(logits[train_ids], y)
    dlogits = np.zeros_like(logits)
    np.add.at(dlogits, train_ids, dlog_train)
    g2 = sh.T @ dlogits
    dh = np.asarray(s.T @ (dlogits @ w2.T))
    dz1 = dh * (z1 > 0)
    g1 = np.asarray(sx.T @ dz1)
    loss = ce + 0.5 * weight_decay * (np.sum(w1 * w1) + np.sum(w2 * w2))
    return loss, g1 + weight_decay * w1, g2 + weight_decay * w2


def mlp_loss_and_grads(w1, w2, feats, train_ids, y, weight_decay=0.0):
    """Same objective for the head ReLU(G W1) W2 evaluated on the labeled rows."""
    g = feats[train_ids]
    z1 = g @ w1
    h = np.maximum(z1, 0.0)
    logits = h @ w2
    ce, dlogits = cross_entropy(logits, y)
    g2 = h.T @ dlogits
    g1 = g.T @ ((dlogits @ w2.T) * (z1 > 0))
    loss = ce + 0.5 * weight_decay * (np.sum(w1 * w1) + np.sum(w2 * w2))
    return loss, g1 + weight_decay * w1, g2 + weight_decay * w2


def _adam(params, loss_and_grads, cfg: TrainConfig):
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    losses = []
    for epoch in range(1, cfg.epochs + 1):
        loss, *grads = loss_and_grads(*params)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss at epoch {epoch}")
        losses.append(loss)
        bc1 = 1.0 - cfg.beta1 ** epoch
        bc2 = 1.0 - cfg.beta2 ** epoch
        for p, g, mi, vi in zip(params, grads, m, v):
            mi *= cfg.beta1
            mi += (1.0 - cfg.beta1) * g
            vi *= cfg.beta2
            vi += (1.0 - cfg.beta2) * g * g
            p -= cfg.lr * (mi / bc1) / (np.sqrt(vi / bc2) + cfg.eps)
    return params, losses


def _check_train(train_ids, labels):
    train_ids = np.asarray(train_ids, dtype=np.int64)
    if train_ids.size == 0:
        raise ValueError("training set is empty")
    y = np.asarray(labels)[train_ids]
    if np.any(y < 0):
        raise ValueError("labels unknown on some training nodes")
    return train_ids, y


def gcn_train(s, x, train_ids, labels, num_classes: int, cfg: TrainConfig = TrainConfig(),
              seed: int = 0, sx=None) -> GcnModel:
    """Fit a 2-layer GCN on ``train_ids``; deterministic given ``seed``.

    ``sx`` may carry a precomputed S @ X to skip one sparse product.
    """
    train_ids, y = _check_train(train_ids, labels)
    x = np.asarray(x, dtype=np.float64)
    sx = first_hop(s, x) if sx is None else sx
    rng = np.random.default_rng(seed)
    w1 = glorot_uniform(rng, x.shape[1], cfg.hidden)
    w2 = glorot_uniform(rng, cfg.hidden, num_classes)
    (w1, w2), losses = _adam(
        [w1, w2], lambda a, b: gcn_loss_and_grads(a, b, s, sx, train_ids, y, cfg.weight_decay), cfg)
    return GcnModel(w1, w2, seed, tuple(losses))


@dataclass(frozen=True, eq=False)
class MlpHead:
    """h(e) = ReLU(e W1) W2, applied to precomputed aggregated features."""

    w1: np.ndarray
    w2: np.ndarray
    seed: int = 0
    losses: tuple = field(default=(), repr=False)

    @property
    def weights(self) -> list[np.ndarray]:
        return [self.w1, self.w2]

    def __call__(self, feats: np.ndarray) -> np.ndarray:
        return np.maximum(np.asarray(feats) @ self.w1, 0.0) @ self.w2


def head_train(feats, train_ids, labels, num_classes: int, cfg: TrainConfig = TrainConfig(),
               seed: int = 0) -> MlpHead:
    train_ids, y = _check_train(train_ids, labels)
    feats = np.asarray(feats, dtype=np.float64)
    rng = np.random.default_rng(seed)
    w1 = glorot_uniform(rng, feats.shape[1], cfg.hidden)
    w2 = glorot_uniform(rng, cfg.hidden, num_classes)
    (w1, w2), losses = _adam(
        [w1, w2], lambda a, b: mlp_loss_and_grads(a, b, feats, train_ids, y, cfg.weight_decay), cfg)
    return MlpHead(w1, w2, seed, tuple(losses))
