"""DirectLiNGAM with the kernel mutual-information independence measure.

Each round regresses every remaining variable on every candidate, scores
the candidate by the summed kernel mutual information between itself and
those residuals, and removes the minimizer (the most exogenous variable)
by replacing the others with their residuals on it. After ``p - 1``
rounds the order is complete and the strengths are fitted by least
squares of each variable on all of its predecessors.
"""

from __future__ import annotations

import logging
import math
import warnings

import numpy as np
from scipy.linalg import cho_solve

from .dag import CausalModel, DataMatrix
from .errors import ConstantRegressor, NumericalFailure, RankDeficientWarning
from .kernels import VAR_EPS, centered_grams, standardize
from .rng import stream

log = logging.getLogger(__name__)

DEFAULT_SAMPLE_CAP = 500
# bytes of n x n blocks per batched log-det call
_BATCH_BYTES = 64 * 2**20


def default_tau(n: int) -> float:
    return 2e-3 if n >= 1000 else 2e-2


def residualize(x_i: np.ndarray, x_j: np.ndarray) -> np.ndarray:
    """Residual of ``x_i`` after least-squares regression on ``x_j`` (both centered)."""
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    if x_i.shape != x_j.shape or x_i.ndim != 1 or len(x_i) < 2:
        raise ValueError("residualize needs two 1-d vectors of equal length >= 2")
    xi = x_i - x_i.mean()
    xj = x_j - x_j.mean()
    var = float(np.mean(xj * xj))
    if var < VAR_EPS:
        raise ConstantRegressor(f"regressor variance {var:.3g} below {VAR_EPS:g}")
    return xi - (float(np.mean(xi * xj)) / var) * xj


def subsample_index(n: int, cap: int | None, seed: int = 0) -> np.ndarray | None:
    """Sorted column subset of size ``cap`` (``None`` when no subsampling is needed)."""
    if cap is None or n <= cap:
        return None
    rng = stream(seed, "subsample")
    return np.sort(rng.choice(n, size=cap, replace=False))


def _cholesky(A: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        size = A.shape[-1]
        jitter = 1e-10 * np.trace(A, axis1=-2, axis2=-1) / size
        try:
            return np.linalg.cholesky(A + jitter[..., None, None] * np.eye(size))
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("Cholesky factorization failed after jitter") from exc


def _logdet_pd(A: np.ndarray) -> np.ndarray:
    """Batched log-determinant of symmetric positive-definite matrices."""
    out = 2.0 * np.log(np.diagonal(_cholesky(A), axis1=-2, axis2=-1)).sum(axis=-1)
    if not np.isfinite(out).all():
        raise NumericalFailure("non-finite log-determinant")
    return out


def _mi_one_vs_many(y1: np.ndarray, Y2: np.ndarray, tau: float, sigma: float | None) -> np.ndarray:
    """Kernel MI between standardized ``y1`` and each standardized row of ``Y2``.

    With ``c = n tau / 2`` and ``A_i = K_i + c I`` the block matrix is
    ``[[A1^2, K1 K2], [K2 K1, A2^2]]``. Its log-determinant comes from a
    block LDL' factorization, ``log det A1^2 + log det S`` with Schur
    complement ``S = A2^2 - K2 (K1 A1^-1)^2 K2 = K2 M K2 + 2c K2 + c^2 I``
    where ``M = I - (K1 A1^-1)^2 = c A1^-1 (2 K1 + c I) A1^-1``. The
    factored form of ``M`` avoids the cancellation in ``I - (.)^2``.
    ``log det A1^2`` cancels against the block-diagonal denominator,
    leaving ``-1/2 (log det S - 2 log det A2)``.
    """
    n = y1.shape[0]
    c = n * tau / 2.0
    eye = np.eye(n)
    K1 = centered_grams(y1, sigma)[0]
    # M = L L' with L = sqrt(c) A1^-1 chol(2 K1 + c I)
    L = np.sqrt(c) * cho_solve((_cholesky(K1 + c * eye), True), _cholesky(2.0 * K1 + c * eye))
    out = np.empty(len(Y2))
    chunk = max(1, _BATCH_BYTES // (8 * 2 * n * n))
    for start in range(0, len(Y2), chunk):
        Y = Y2[start : start + chunk]
        K2 = centered_grams(Y, sigma)
        G = K2 @ L
        S = G @ np.swapaxes(G, -1, -2) + 2.0 * c * K2 + c * c * eye
        mi = -0.5 * (_logdet_pd(S) - 2.0 * _logdet_pd(K2 + c * eye))
        out[start : start + len(Y)] = np.maximum(0.0, mi)
    return out


def kernel_mi(
    y1: np.ndarray,
    y2: np.ndarray,
    tau: float | None = None,
    sigma: float | None = None,
    sample_cap: int | None = DEFAULT_SAMPLE_CAP,
    seed: int = 0,
) -> float:
    """Kernel mutual information ``-1/2 log(det K_tau / det D_tau)``, clamped at 0.

    Inputs are standardized first; ``sigma=None`` picks each kernel width
    by the median heuristic. A constant input is independent of anything,
    so the estimate is 0. At most ``sample_cap`` columns (a seeded subset)
    enter the Gram matrices.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if y1.shape != y2.shape or y1.ndim != 1 or len(y1) < 3:
        raise ValueError("kernel_mi needs two 1-d vectors of equal length >= 3")
    if tau is None:
        tau = default_tau(len(y1))
    idx = subsample_index(len(y1), sample_cap, seed)
    if idx is not None:
        y1, y2 = y1[idx], y2[idx]
    z1, z2 = standardize(y1), standardize(y2)
    if z1 is None or z2 is None:
        return 0.0
    return float(_mi_one_vs_many(z1, z2[None, :], tau, sigma)[0])


def t_kernel(
    X: DataMatrix | np.ndarray,
    j: int,
    active,
    tau: float | None = None,
    sigma: float | None = None,
    sample_cap: int | None = DEFAULT_SAMPLE_CAP,
    seed: int = 0,
) -> float:
    """Sum of ``kernel_mi(x_j, r_i^(j))`` over ``i`` in ``active`` minus ``j``."""
    data = X.X if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    active = sorted(set(int(a) for a in active))
    if j not in active or len(active) < 2:
        raise ValueError("j must be in active and |active| >= 2")
    terms = []
    for i in active:
        if i == j:
            continue
        try:
            r = residualize(data[i], data[j])
            terms.append(kernel_mi(data[j], r, tau, sigma, sample_cap, seed))
        except (ConstantRegressor, NumericalFailure) as exc:
            raise type(exc)(f"pair (j={j}, i={i}): {exc}") from exc
    return math.fsum(terms)


def _round_scores(Z: np.ndarray, active: list[int], idx, tau: float, sigma) -> dict[int, float]:
    """T_kernel for every candidate in ``active`` on the current residual matrix ``Z``."""
    var = np.mean(Z * Z, axis=1)
    scores = {}
    for j in active:
        if var[j] < VAR_EPS:
            # a constant candidate is independent of every residual
            scores[j] = 0.0
            continue
        others = [i for i in active if i != j]
        slopes = (Z[others] @ Z[j]) / len(Z[j]) / var[j]
        resid = Z[others] - slopes[:, None] * Z[j][None, :]
        zj = Z[j] if idx is None else Z[j][idx]
        R = resid if idx is None else resid[:, idx]
        zj = standardize(zj)
        if zj is None:
            scores[j] = 0.0
            continue
        keep = [zr for zr in map(standardize, R) if zr is not None]
        terms = list(_mi_one_vs_many(zj, np.array(keep), tau, sigma)) if keep else []
        scores[j] = math.fsum(terms)
    return scores


def discover(
    X: DataMatrix,
    tau: float | None = None,
    sigma: float | None = None,
    sample_cap: int | None = DEFAULT_SAMPLE_CAP,
    seed: int = 0,
) -> CausalModel:
    """Estimate the causal order and connection strengths of ``X``.

    Runs exactly ``p - 1`` selection rounds. Ties in the independence
    measure go to the lowest variable index. With fewer samples than
    variables the final regressions use minimum-norm least squares and a
    ``RankDeficientWarning`` is issued.
    """
    data = X.X
    p, n = data.shape
    if tau is None:
        tau = default_tau(n)
    if n < p:
        warnings.warn(f"n={n} samples < p={p} variables; regressions are rank-deficient", RankDeficientWarning)
    idx = subsample_index(n, sample_cap, seed)

    std = np.sqrt(np.mean(data * data, axis=1))
    Z = np.divide(data, std[:, None], out=np.zeros_like(data), where=std[:, None] > 0)

    active = list(range(p))
    order: list[int] = []
    chosen_scores: list[float] = []
    degenerate: list[int] = []
    for _ in range(p - 1):
        scores = _round_scores(Z, active, idx, tau, sigma)
        m = min(active, key=lambda j: (scores[j], j))
        order.append(m)
        chosen_scores.append(scores[m])
        active.remove(m)
        zm = Z[m]
        var_m = float(np.mean(zm * zm))
        if var_m < VAR_EPS:
            degenerate.append(m)
            continue
        for i in active:
            Z[i] = Z[i] - (float(np.mean(Z[i] * zm)) / var_m) * zm
    order.append(active[0])
    if float(np.mean(Z[active[0]] ** 2)) < VAR_EPS:
        degenerate.append(active[0])
    if degenerate:
        log.info("%d variable(s) were fully explained by their predecessors", len(degenerate))

    B = estimate_strengths(data, order)
    diagnostics = {
        "t_kernel": chosen_scores,
        "tau": tau,
        "sigma": "median" if sigma is None else sigma,
        "sample_cap": sample_cap,
        "n_used": n if idx is None else len(idx),
        "rank_deficient": n < p,
        "degenerate": degenerate,
        "rounds": p - 1,
    }
    return CausalModel(order, B, data - B @ data, list(X.labels), diagnostics)


def estimate_strengths(data: np.ndarray, order: list[int]) -> np.ndarray:
    """Least squares of each variable on all earlier variables in ``order``."""
    p = data.shape[0]
    B = np.zeros((p, p))
    for k in range(1, p):
        i, preds = order[k], order[:k]
        coef, *_ = np.linalg.lstsq(data[preds].T, data[i], rcond=None)
        B[i, preds] = coef
    return B
