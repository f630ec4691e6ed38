"""Data and result containers shared by the LiNGAM estimators, plus DOT/JSON export."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InputError


@dataclass
class DataMatrix:
    """Variables as rows (``p x n``), each row centered."""

    X: np.ndarray
    labels: list[str] | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise InputError(f"data matrix must be 2-d, got shape {X.shape}")
        p, n = X.shape
        if p < 2 or n < 3:
            raise InputError(f"need p >= 2 variables and n >= 3 samples, got p={p}, n={n}")
        if not np.isfinite(X).all():
            raise InputError("data matrix contains non-finite values")
        self.X = X - X.mean(axis=1, keepdims=True)
        if self.labels is None:
            self.labels = [f"x{i}" for i in range(p)]
        self.labels = [str(v) for v in self.labels]
        if len(self.labels) != p:
            raise InputError(f"{len(self.labels)} labels for {p} variables")

    @classmethod
    def from_samples(cls, samples: np.ndarray, labels: list[str] | None = None) -> "DataMatrix":
        """Build from an ``n x p`` array (samples as rows)."""
        return cls(np.asarray(samples, dtype=float).T, labels)

    @property
    def p(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]


@dataclass
class CausalModel:
    """Causal order, strictly lower-triangular (under the order) strengths and residuals.

    ``B[i, j]`` is the effect of variable ``j`` on variable ``i``.
    """

    order: list[int]
    B: np.ndarray
    residuals: np.ndarray
    labels: list[str]
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def edges(self, threshold: float = 0.0) -> list[tuple[int, int, float]]:
        """``(cause, effect, strength)`` for ``|B[effect, cause]| > threshold``, sorted by order position."""
        pos = {v: k for k, v in enumerate(self.order)}
        out = []
        for i in sorted(range(len(self.order)), key=pos.__getitem__):
            for j in sorted(range(len(self.order)), key=pos.__getitem__):
                b = float(self.B[i, j])
                if abs(b) > threshold:
                    out.append((j, i, b))
        return out

    def to_dict(self, **extra: Any) -> dict[str, Any]:
        doc = {
            "order": [int(v) for v in self.order],
            "B": np.asarray(self.B, dtype=float).tolist(),
            "labels": list(self.labels),
            "diagnostics": _plain(self.diagnostics),
        }
        doc.update(_plain(extra))
        return doc

    def write_json(self, path: str | Path, **extra: Any) -> None:
        Path(path).write_text(json.dumps(self.to_dict(**extra), indent=1) + "\n", encoding="utf-8")

    def to_dot(self, edge_threshold: float = 0.05) -> str:
        lines = ["digraph G {"]
        for label in self.labels:
            lines.append(f'  "{label}";')
        for j, i, b in self.edges(edge_threshold):
            lines.append(f'  "{self.labels[j]}" -> "{self.labels[i]}" [label="{b:.3f}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def write_dot(self, path: str | Path, edge_threshold: float = 0.05) -> None:
        Path(path).write_text(self.to_dot(edge_threshold), encoding="utf-8")


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def is_topological_order(order: list[int], B: np.ndarray, tol: float = 0.0) -> bool:
    """True if every edge ``j -> i`` (``|B[i, j]| > tol``) has ``j`` before ``i``."""
    pos = {v: k for k, v in enumerate(order)}
    if sorted(pos) != list(range(B.shape[0])):
        return False
    rows, cols = np.nonzero(np.abs(B) > tol)
    return all(pos[j] < pos[i] for i, j in zip(rows.tolist(), cols.tolist()))


def mask_to_order(B: np.ndarray, order: list[int]) -> np.ndarray:
    """Zero every entry that is not strictly lower-triangular under ``order``."""
    pos = np.empty(len(order), dtype=int)
    pos[np.asarray(order)] = np.arange(len(order))
    keep = pos[:, None] > pos[None, :]
    return np.where(keep, B, 0.0)
