"""ICA-LiNGAM baseline: symmetric FastICA followed by permutation and scaling.

Non-convergence of the fixed-point iteration is a result, not an error;
it is returned as a flag together with the last iterate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dag import CausalModel, DataMatrix, mask_to_order
from .errors import RankDeficientWarning, SingularWhitening, ZeroDiagonal
from .rng import stream

DIAG_EPS = 1e-8
EXHAUSTIVE_MAX_P = 8
_RCOND = 1e-10


@dataclass
class IcaResult:
    """``S = W_unmix @ X`` are the estimated sources; rows of ``W_unmix`` have unit norm."""

    W_unmix: np.ndarray
    converged: bool
    iterations: int
    rotation: np.ndarray
    whitening: np.ndarray


def whiten(X: np.ndarray) -> np.ndarray:
    """Whitening matrix ``K`` with ``cov(K X) = I`` on the covariance range.

    Eigenvalues below ``1e-10 * max`` are floored there, which keeps ``K``
    square when the covariance is rank-deficient.
    """
    p, n = X.shape
    d, U = np.linalg.eigh(X @ X.T / n)
    top = float(d.max())
    if not np.isfinite(top) or top <= 1e-12:
        raise SingularWhitening(f"covariance has no usable spectrum (largest eigenvalue {top:.3g})")
    small = d < _RCOND * top
    if small.any():
        warnings.warn(f"{int(small.sum())} covariance eigenvalue(s) floored in whitening", RankDeficientWarning)
        d = np.where(small, _RCOND * top, d)
    return (U / np.sqrt(d)).T


def _sym_decorrelate(W: np.ndarray) -> np.ndarray:
    s, u = np.linalg.eigh(W @ W.T)
    s = np.maximum(s, np.finfo(float).tiny)
    return (u / np.sqrt(s)) @ u.T @ W


def fast_ica(X: DataMatrix | np.ndarray, max_iter: int = 200, tol: float = 1e-4, seed: int = 0) -> IcaResult:
    """Symmetric FastICA with the log-cosh contrast (``g = tanh``)."""
    data = X.X if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    data = data - data.mean(axis=1, keepdims=True)
    p, n = data.shape
    if max_iter < 0:
        raise ValueError("max_iter must be >= 0")
    K = whiten(data)
    Z = K @ data
    rng = stream(seed, "ica")
    W = _sym_decorrelate(rng.standard_normal((p, p)))
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        G = np.tanh(W @ Z)
        W1 = _sym_decorrelate((G @ Z.T) / n - np.mean(1.0 - G * G, axis=1)[:, None] * W)
        lim = float(np.max(np.abs(np.abs(np.sum(W1 * W, axis=1)) - 1.0)))
        W = W1
        if lim < tol:
            converged = True
            break
    U = W @ K
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    return IcaResult(U, converged, it, W, K)


def _all_perms(p: int) -> np.ndarray:
    return np.array(list(permutations(range(p))), dtype=np.intp)


def diag_permutation(W: np.ndarray) -> np.ndarray:
    """Row permutation ``perm`` maximizing ``sum_i |W[perm[i], i]|`` with no ``|diag| < 1e-8``.

    Exhaustive up to ``p = 8``; beyond that an optimal assignment solver
    (same objective, with sub-threshold entries forbidden).
    """
    A = np.abs(np.asarray(W, dtype=float))
    p = len(A)
    if p <= EXHAUSTIVE_MAX_P:
        perms = _all_perms(p)
        vals = A[perms, np.arange(p)]  # vals[k, i] = |W[perm_k[i], i]|
        ok = (vals >= DIAG_EPS).all(axis=1)
        if not ok.any():
            raise ZeroDiagonal("every row permutation leaves a diagonal entry below 1e-8")
        total = np.where(ok, vals.sum(axis=1), -np.inf)
        return perms[int(np.argmax(total))]
    big = A.sum() + 1.0
    cost = np.where(A >= DIAG_EPS, -A, big)  # cost[row, col]
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(p, dtype=np.intp)
    perm[cols] = rows
    if (A[perm, np.arange(p)] < DIAG_EPS).any():
        raise ZeroDiagonal("every row permutation leaves a diagonal entry below 1e-8")
    return perm


def upper_sse(B: np.ndarray, order) -> float:
    """Sum of squares of the strict upper triangle of ``B[order][:, order]``."""
    P = B[np.ix_(order, order)]
    return float(np.sum(np.triu(P, k=1) ** 2))


def best_order(B: np.ndarray) -> list[int]:
    """Order minimizing :func:`upper_sse`; exhaustive up to ``p = 8``, greedy beyond."""
    p = len(B)
    B2 = np.asarray(B, dtype=float) ** 2
    if p <= EXHAUSTIVE_MAX_P:
        perms = _all_perms(p)
        a, b = np.triu_indices(p, k=1)
        cost = B2[perms[:, a], perms[:, b]].sum(axis=1)
        return perms[int(np.argmin(cost))].tolist()
    # greedy: repeatedly take the variable least explained by those still unplaced
    remaining = list(range(p))
    order = []
    while remaining:
        sub = B2[np.ix_(remaining, remaining)]
        incoming = sub.sum(axis=1) - np.diag(sub)
        k = int(np.argmin(incoming))
        order.append(remaining.pop(k))
    return order


def ica_lingam(
    X: DataMatrix, max_iter: int = 200, tol: float = 1e-4, seed: int = 0
) -> tuple[CausalModel, bool]:
    res = fast_ica(X, max_iter, tol, seed)
    perm = diag_permutation(res.W_unmix)
    Wp = res.W_unmix[perm]
    Wp = Wp / np.diag(Wp)[:, None]
    B_hat = np.eye(len(Wp)) - Wp
    order = best_order(B_hat)
    B = mask_to_order(B_hat, order)
    diagnostics = {
        "converged": res.converged,
        "iterations": res.iterations,
        "max_iter": max_iter,
        "tol": tol,
        "row_permutation": perm.tolist(),
        "upper_sse": upper_sse(B_hat, order),
    }
    return CausalModel(order, B, X.X - B @ X.X, list(X.labels), diagnostics), res.converged
