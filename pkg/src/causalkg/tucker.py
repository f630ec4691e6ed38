"""TuckER factorization of the adjacency tensor.

A single entity matrix ``E`` serves both subject and object positions, a
relation matrix ``R`` holds one row ``w_r`` per relation and the core tensor
``W`` (``d_e x d_r x d_e``) mixes them. A triple is scored by the full
trilinear contraction passed through the logistic sigmoid.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit, log_expit

from .errors import ConfigError, Degenerate, DimMismatch, NumericalFailure, OutOfBounds
from .kg import AdjacencyTensor
from .rng import stream

log = logging.getLogger(__name__)

INIT_SCALE = 0.1


def mode_n_product(T: np.ndarray, M: np.ndarray, mode: int) -> np.ndarray:
    """n-mode product of a third-order tensor with a matrix or vector.

    ``mode`` is 1-based. A matrix of shape ``(J, I_n)`` replaces axis n
    (size ``I_n``) by ``J``; a vector of length ``I_n`` contracts it away.
    """
    T = np.asarray(T, dtype=float)
    M = np.asarray(M, dtype=float)
    if T.ndim != 3 or mode not in (1, 2, 3):
        raise DimMismatch(f"need a 3rd-order tensor and mode in 1..3, got ndim={T.ndim}, mode={mode}")
    axis = mode - 1
    if M.ndim == 1:
        if M.shape[0] != T.shape[axis]:
            raise DimMismatch(f"vector length {M.shape[0]} != tensor size {T.shape[axis]} along mode {mode}")
        return np.tensordot(T, M, axes=([axis], [0]))
    if M.ndim != 2 or M.shape[1] != T.shape[axis]:
        raise DimMismatch(f"matrix shape {M.shape} incompatible with tensor size {T.shape[axis]} along mode {mode}")
    out = np.tensordot(T, M, axes=([axis], [1]))
    return np.moveaxis(out, -1, axis)


@dataclass
class TrainConfig:
    d_e: int = 5
    d_r: int = 5
    epochs: int = 50
    learning_rate: float = 0.01
    negatives_per_positive: int = 1
    seed: int = 0
    l2: float = 0.0
    batch_size: int = 128
    optimizer: str = "adam"

    def __post_init__(self):
        if self.d_e < 1 or self.d_r < 1:
            raise ConfigError("d_e and d_r must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.negatives_per_positive < 1:
            raise ConfigError("negatives_per_positive must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.epochs < 0 or self.l2 < 0 or self.batch_size < 1 or self.seed < 0:
            raise ConfigError("epochs, l2, seed must be non-negative and batch_size positive")


@dataclass
class TuckerModel:
    E: np.ndarray
    R: np.ndarray
    W: np.ndarray
    seed: int = 0
    epochs: int = 0
    history: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.E = np.asarray(self.E, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.W = np.asarray(self.W, dtype=float)
        d_e, d_r = self.E.shape[1], self.R.shape[1]
        if self.W.shape != (d_e, d_r, d_e):
            raise DimMismatch(f"core shape {self.W.shape} != ({d_e}, {d_r}, {d_e})")

    @property
    def d_e(self) -> int:
        return self.E.shape[1]

    @property
    def d_r(self) -> int:
        return self.R.shape[1]

    @property
    def n_e(self) -> int:
        return self.E.shape[0]

    @property
    def n_r(self) -> int:
        return self.R.shape[0]

    def copy(self) -> "TuckerModel":
        return TuckerModel(self.E.copy(), self.R.copy(), self.W.copy(), self.seed, self.epochs, list(self.history))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.E).all() and np.isfinite(self.R).all() and np.isfinite(self.W).all())

    def to_json(self) -> str:
        return (
            "{"
            f'"d_e": {self.d_e}, "d_r": {self.d_r}, '
            f'"E": {_fmt(self.E)}, "R": {_fmt(self.R)}, "W": {_fmt(self.W)}, '
            f'"seed": {int(self.seed)}, "epochs": {int(self.epochs)}, '
            f'"loss_history": {_fmt(np.asarray(self.history, dtype=float))}'
            "}"
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "TuckerModel":
        doc = json.loads(text)
        d_e, d_r = int(doc["d_e"]), int(doc["d_r"])
        E = np.asarray(doc["E"], dtype=float).reshape(-1, d_e)
        R = np.asarray(doc["R"], dtype=float).reshape(-1, d_r)
        W = np.asarray(doc["W"], dtype=float).reshape(d_e, d_r, d_e)
        return cls(E, R, W, int(doc.get("seed", 0)), int(doc.get("epochs", 0)), list(doc.get("loss_history", [])))

    @classmethod
    def load(cls, path: str | Path) -> "TuckerModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _fmt(a: np.ndarray) -> str:
    """Nested JSON arrays, floats at 17 significant digits (lossless)."""
    if a.ndim == 1:
        return "[" + ", ".join(f"{v:.17g}" for v in a.tolist()) + "]"
    return "[" + ", ".join(_fmt(sub) for sub in a) + "]"


def init_model(n_e: int, n_r: int, cfg: TrainConfig) -> TuckerModel:
    rng = stream(cfg.seed, "train")
    u = lambda *shape: rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)  # noqa: E731
    return TuckerModel(u(n_e, cfg.d_e), u(n_r, cfg.d_r), u(cfg.d_e, cfg.d_r, cfg.d_e), seed=cfg.seed)


def _check_ids(model: TuckerModel, s, r, o) -> None:
    s, r, o = np.asarray(s), np.asarray(r), np.asarray(o)
    if (
        (s < 0).any() or (o < 0).any() or (r < 0).any()
        or (s >= model.n_e).any() or (o >= model.n_e).any() or (r >= model.n_r).any()
    ):
        raise OutOfBounds("entity or relation id outside the model")


def logits(model: TuckerModel, s, r, o) -> np.ndarray:
    """Raw trilinear scores for aligned id arrays."""
    _check_ids(model, s, r, o)
    es, wr, eo = model.E[np.asarray(s)], model.R[np.asarray(r)], model.E[np.asarray(o)]
    return np.einsum("abc,...a,...b,...c->...", model.W, es, wr, eo)


def score(model: TuckerModel, s: int, r: int, o: int) -> float:
    return float(expit(logits(model, s, r, o)))


@dataclass
class Gradients:
    entity_ids: np.ndarray
    dE: np.ndarray
    relation_ids: np.ndarray
    dR: np.ndarray
    dW: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt((self.dE**2).sum() + (self.dR**2).sum() + (self.dW**2).sum()))


def loss_and_grad(model: TuckerModel, s, r, o, labels, l2: float = 0.0) -> tuple[float, Gradients]:
    """Mean binary cross-entropy of ``sigmoid(phi)`` against ``labels`` plus an L2 term.

    The penalty ``l2/2 * ||.||^2`` covers the core tensor and each distinct
    entity/relation row touched by the batch, so gradients stay sparse in
    ``E`` and ``R``.
    """
    s, r, o = (np.asarray(v, dtype=np.int64).ravel() for v in (s, r, o))
    y = np.asarray(labels, dtype=float).ravel()
    _check_ids(model, s, r, o)
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    n = len(y)
    es, wr, eo = model.E[s], model.R[r], model.E[o]
    sw = np.einsum("na,abc->nbc", es, model.W)
    swr = np.einsum("nbc,nb->nc", sw, wr)
    phi = np.einsum("nc,nc->n", swr, eo)
    # softplus(phi) - y*phi, written stably
    loss = float(np.mean(-log_expit(-phi) - y * phi))
    g = (expit(phi) - y) / n

    ro = np.einsum("nb,nc->nbc", wr, eo)
    d_es = np.einsum("abc,nbc->na", model.W, ro) * g[:, None]
    d_wr = np.einsum("nbc,nc->nb", sw, eo) * g[:, None]
    d_eo = swr * g[:, None]
    dW = np.einsum("n,na,nbc->abc", g, es, ro)

    ent_ids, inv = np.unique(np.concatenate([s, o]), return_inverse=True)
    dE = np.zeros((len(ent_ids), model.d_e))
    np.add.at(dE, inv, np.concatenate([d_es, d_eo]))
    rel_ids, rinv = np.unique(r, return_inverse=True)
    dR = np.zeros((len(rel_ids), model.d_r))
    np.add.at(dR, rinv, d_wr)

    if l2:
        E_rows, R_rows = model.E[ent_ids], model.R[rel_ids]
        loss += 0.5 * l2 * float((E_rows**2).sum() + (R_rows**2).sum() + (model.W**2).sum())
        dE += l2 * E_rows
        dR += l2 * R_rows
        dW = dW + l2 * model.W
    return loss, Gradients(ent_ids, dE, rel_ids, dR, dW)


def sample_negatives(
    tensor: AdjacencyTensor, coords: np.ndarray, k: int, rng: np.random.Generator, retries: int = 10
) -> np.ndarray:
    """Corrupt head or tail (probability 1/2 each) uniformly, ``k`` per positive.

    Corruptions that land on a known positive are redrawn up to ``retries``
    times and dropped if still positive.
    """
    neg = np.repeat(coords, k, axis=0)
    slot = np.where(rng.random(len(neg)) < 0.5, 0, 2)
    todo = np.arange(len(neg))
    for _ in range(retries + 1):
        if not len(todo):
            break
        neg[todo, slot[todo]] = rng.integers(0, tensor.n_e, size=len(todo))
        bad = tensor.contains(neg[todo, 0], neg[todo, 1], neg[todo, 2])
        todo = todo[bad]
    if len(todo):
        keep = np.ones(len(neg), dtype=bool)
        keep[todo] = False
        neg = neg[keep]
    return neg


def batch_loss(model: TuckerModel, batch: np.ndarray, labels: np.ndarray, l2: float = 0.0) -> float:
    return loss_and_grad(model, batch[:, 0], batch[:, 1], batch[:, 2], labels, l2)[0]


def _eval_set(tensor: AdjacencyTensor, cfg: TrainConfig, cap: int = 20000) -> tuple[np.ndarray, np.ndarray]:
    rng = stream(cfg.seed, "negatives", 1)
    pos = tensor.coords
    if len(pos) > cap:
        pos = pos[np.sort(rng.choice(len(pos), size=cap, replace=False))]
    neg = sample_negatives(tensor, pos, cfg.negatives_per_positive, rng)
    batch = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    return batch, labels


def _sgd(model: TuckerModel, lr: float):
    def step(grad: Gradients) -> None:
        model.E[grad.entity_ids] -= lr * grad.dE
        model.R[grad.relation_ids] -= lr * grad.dR
        model.W -= lr * grad.dW

    return step


class _Adam:
    """Adam with lazy row updates: only rows present in the batch move."""

    def __init__(self, model: TuckerModel, lr: float, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.model, self.lr, self.b1, self.b2, self.eps = model, lr, b1, b2, eps
        self.m = [np.zeros_like(model.E), np.zeros_like(model.R), np.zeros_like(model.W)]
        self.v = [np.zeros_like(model.E), np.zeros_like(model.R), np.zeros_like(model.W)]
        self.t = 0

    def _update(self, k: int, param: np.ndarray, rows, g: np.ndarray) -> None:
        m, v = self.m[k], self.v[k]
        m[rows] = self.b1 * m[rows] + (1 - self.b1) * g
        v[rows] = self.b2 * v[rows] + (1 - self.b2) * g * g
        mhat = m[rows] / (1 - self.b1**self.t)
        vhat = v[rows] / (1 - self.b2**self.t)
        param[rows] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def __call__(self, grad: Gradients) -> None:
        self.t += 1
        self._update(0, self.model.E, grad.entity_ids, grad.dE)
        self._update(1, self.model.R, grad.relation_ids, grad.dR)
        self._update(2, self.model.W, slice(None), grad.dW)


def train(tensor: AdjacencyTensor, cfg: TrainConfig, model: TuckerModel | None = None) -> TuckerModel:
    """Fit the factorization by minibatch gradient descent on positives plus sampled negatives.

    ``model.history`` holds the loss on a fixed evaluation set (every
    positive, up to a cap, with one seeded draw of negatives) before
    training and after every epoch.
    """
    if len(tensor) == 0 or tensor.n_r < 1 or tensor.n_entities_used() < 2:
        raise Degenerate("need a non-empty tensor with at least 2 entities and 1 relation")
    if model is None:
        model = init_model(tensor.n_e, tensor.n_r, cfg)
    else:
        model = model.copy()
    eval_batch, eval_labels = _eval_set(tensor, cfg)
    model.history = [batch_loss(model, eval_batch, eval_labels)]
    order_rng = stream(cfg.seed, "train", 1)
    neg_rng = stream(cfg.seed, "negatives")
    step = _Adam(model, cfg.learning_rate) if cfg.optimizer == "adam" else _sgd(model, cfg.learning_rate)
    pos = tensor.coords
    for epoch in range(cfg.epochs):
        perm = order_rng.permutation(len(pos))
        for start in range(0, len(pos), cfg.batch_size):
            p = pos[perm[start : start + cfg.batch_size]]
            neg = sample_negatives(tensor, p, cfg.negatives_per_positive, neg_rng)
            batch = np.concatenate([p, neg])
            labels = np.concatenate([np.ones(len(p)), np.zeros(len(neg))])
            _, grad = loss_and_grad(model, batch[:, 0], batch[:, 1], batch[:, 2], labels, cfg.l2)
            step(grad)
        model.epochs += 1
        model.history.append(batch_loss(model, eval_batch, eval_labels))
        if not model.is_finite():
            raise NumericalFailure(f"non-finite parameters after epoch {epoch + 1}; lower the learning rate")
        log.debug("epoch %d eval loss %.6f", epoch + 1, model.history[-1])
    return model
