"""RBF Gram matrices for one-dimensional samples."""

from functools import lru_cache

import numpy as np

VAR_EPS = 1e-12


def pairwise_sq_dists(y: np.ndarray) -> np.ndarray:
    """Squared distances along the last axis; ``(..., n) -> (..., n, n)``."""
    y = np.asarray(y, dtype=float)
    return (y[..., :, None] - y[..., None, :]) ** 2


@lru_cache(maxsize=8)
def _upper(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=1)


def _median_from_sq(d2: np.ndarray) -> float:
    tri = d2[_upper(d2.shape[-1])]
    tri = tri[tri > 0]
    # median of distances, not of squared distances: they differ for an even count
    return float(np.median(np.sqrt(tri))) if tri.size else 1.0


def median_width(y: np.ndarray) -> float:
    """Median of the non-zero pairwise distances of a 1-d sample (1.0 if none)."""
    return _median_from_sq(pairwise_sq_dists(y))


def rbf_gram(y: np.ndarray, width: float | np.ndarray) -> np.ndarray:
    """``exp(-|a-b|^2 / (2 width^2))``; ``width`` may be one value per batch row."""
    d2 = pairwise_sq_dists(y)
    w = np.asarray(width, dtype=float)[..., None, None]
    return np.exp(-d2 / (2.0 * w**2))


def centered_grams(Y: np.ndarray, width: float | None = None) -> np.ndarray:
    """Centered RBF Gram matrix for each row of ``Y`` (median-heuristic width if ``width`` is None)."""
    d2 = pairwise_sq_dists(np.atleast_2d(Y))
    if width is None:
        w = np.array([_median_from_sq(d) for d in d2])
    else:
        w = np.full(len(d2), float(width))
    return center_gram(np.exp(-d2 / (2.0 * w[:, None, None] ** 2)))


def center_gram(K: np.ndarray) -> np.ndarray:
    """``H K H`` with ``H = I - 11'/n``, batched over leading axes."""
    return (
        K
        - K.mean(axis=-1, keepdims=True)
        - K.mean(axis=-2, keepdims=True)
        + K.mean(axis=(-2, -1), keepdims=True)
    )


def standardize(y: np.ndarray) -> np.ndarray | None:
    """Center and scale to unit variance; ``None`` for a (numerically) constant vector."""
    y = np.asarray(y, dtype=float)
    y = y - y.mean()
    var = float(np.mean(y * y))
    if var < VAR_EPS:
        return None
    return y / np.sqrt(var)
