"""Projection of a trained factorization into a relations-by-features matrix.

For relation ``r`` the core is first contracted with the entity matrix and
the relation row, ``M_r = W x1 E x2 w_r`` (``n_e x d_e``), and then folded
back onto the entity axis, ``S_r = E.T @ M_r`` (``d_e x d_e``). Row ``i`` of
``Q`` is the row-major flattening of ``S_r`` for the ``i``-th selected
relation, so feature ``a * d_e + c`` is entry ``(a, c)`` and is labelled
``f_a_c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DuplicateRelation, OutOfBounds, TooMany
from .kg import AdjacencyTensor, KgIndex
from .tucker import TuckerModel, mode_n_product


def feature_labels(d_e: int) -> list[str]:
    return [f"f_{a}_{c}" for a in range(d_e) for c in range(d_e)]


@dataclass
class ProjectionMatrix:
    Q: np.ndarray
    relation_ids: list[int]
    d_e: int

    @property
    def labels(self) -> list[str]:
        return feature_labels(self.d_e)

    def slice(self, i: int) -> np.ndarray:
        return self.Q[i].reshape(self.d_e, self.d_e)

    def centered(self) -> np.ndarray:
        return self.Q - self.Q.mean(axis=0, keepdims=True)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(["rel_id", *self.labels]) + "\n")
            for rid, row in zip(self.relation_ids, self.Q.tolist()):
                fh.write(",".join([str(rid), *(f"{v:.17g}" for v in row)]) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "ProjectionMatrix":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split(",")
            rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
        if header[0] != "rel_id":
            raise ValueError(f"{path}: first column must be rel_id")
        d_e = int(round(np.sqrt(len(header) - 1)))
        if d_e * d_e != len(header) - 1:
            raise ValueError(f"{path}: {len(header) - 1} feature columns is not a square")
        ids = [int(r[0]) for r in rows]
        Q = np.array([[float(v) for v in r[1:]] for r in rows], dtype=float).reshape(len(rows), d_e * d_e)
        return cls(Q, ids, d_e)


def project(model: TuckerModel, relation_ids: list[int]) -> ProjectionMatrix:
    ids = [int(r) for r in relation_ids]
    if not ids:
        raise OutOfBounds("no relations selected")
    if len(set(ids)) != len(ids):
        raise DuplicateRelation(f"repeated relation ids in {ids}")
    if min(ids) < 0 or max(ids) >= model.n_r:
        raise OutOfBounds(f"relation id outside [0, {model.n_r})")
    entity_core = mode_n_product(model.W, model.E, 1)  # n_e x d_r x d_e, shared by all relations
    rows = []
    for r in ids:
        M_r = np.tensordot(entity_core, model.R[r], axes=([1], [0]))  # n_e x d_e
        rows.append((model.E.T @ M_r).ravel())
    return ProjectionMatrix(np.array(rows), ids, model.d_e)


def select_relations(
    index: KgIndex | None, w_r_count: int, policy: str = "first", tensor: AdjacencyTensor | None = None
) -> list[int]:
    """Pick ``w_r_count`` relation ids.

    ``"first"`` takes ids ``0..w_r_count-1``; ``"most-frequent"`` ranks by
    triple count (descending, ties to the lower id) and needs ``tensor``.
    """
    n_r = index.n_r if index is not None else tensor.n_r
    if w_r_count < 1:
        raise TooMany(f"w_r_count must be >= 1, got {w_r_count}")
    if w_r_count > n_r:
        raise TooMany(f"w_r_count={w_r_count} exceeds the {n_r} relations available")
    if policy == "first":
        return list(range(w_r_count))
    if policy == "most-frequent":
        if tensor is None:
            raise ValueError("most-frequent policy needs the adjacency tensor")
        counts = tensor.relation_counts()[:n_r]
        ranked = sorted(range(n_r), key=lambda r: (-int(counts[r]), r))
        return ranked[:w_r_count]
    raise ValueError(f"unknown relation policy {policy!r}")
