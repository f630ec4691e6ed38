"""Distribution diagnostics, residual independence tests and a synthetic LiNGAM generator."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import stats as sps

from .dag import CausalModel, DataMatrix
from .errors import ConfigError, ConstantVariable, InputError, NearGaussianPredictor
from .kernels import VAR_EPS, center_gram, median_width, rbf_gram
from .rng import stream

DEFAULT_ALPHA = 0.01


def excess_kurtosis(x: np.ndarray) -> float:
    """Fourth central sample moment over the squared second, minus 3."""
    x = np.asarray(x, dtype=float).ravel()
    if len(x) < 4:
        raise InputError("excess kurtosis needs at least 4 samples")
    d = x - x.mean()
    m2 = float(np.mean(d * d))
    if m2 < VAR_EPS:
        raise ConstantVariable(f"variance {m2:.3g} is numerically zero")
    return float(np.mean(d**4)) / m2**2 - 3.0


@dataclass
class KurtosisReport:
    mean: list[float]
    std: list[float]
    excess_kurtosis: list[float]
    z: list[float]
    p_value: list[float]
    alpha: float
    non_gaussian: bool
    labels: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "bonferroni_alpha": self.alpha / max(len(self.p_value), 1),
            "non_gaussian": self.non_gaussian,
            "variables": [
                {"label": lab, "mean": m, "std": s, "excess_kurtosis": k, "z": z, "p_value": p}
                for lab, m, s, k, z, p in zip(
                    self.labels, self.mean, self.std, self.excess_kurtosis, self.z, self.p_value
                )
            ],
        }


def gaussianity_test(X: DataMatrix | np.ndarray, alpha: float = DEFAULT_ALPHA) -> KurtosisReport:
    """Asymptotic kurtosis z-test per variable with a Bonferroni-corrected verdict.

    ``z = excess / sqrt(24 / n)`` with a two-sided normal p-value; the data
    count as non-Gaussian if any variable rejects at ``alpha / p``.
    """
    data = X.X if isinstance(X, DataMatrix) else np.atleast_2d(np.asarray(X, dtype=float))
    labels = list(X.labels) if isinstance(X, DataMatrix) else [f"x{i}" for i in range(len(data))]
    p, n = data.shape
    if n < 20:
        raise InputError(f"kurtosis test needs n >= 20 samples, got {n}")
    kurt = [excess_kurtosis(row) for row in data]
    z = [k / np.sqrt(24.0 / n) for k in kurt]
    pv = [float(2.0 * sps.norm.sf(abs(v))) for v in z]
    return KurtosisReport(
        mean=[float(v) for v in data.mean(axis=1)],
        std=[float(v) for v in data.std(axis=1)],
        excess_kurtosis=kurt,
        z=[float(v) for v in z],
        p_value=pv,
        alpha=alpha,
        non_gaussian=any(v < alpha / p for v in pv),
        labels=labels,
    )


def kurtosis_ratio_check(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Fourth power of the correlation next to ``excess(y) / excess(x)``.

    For ``y = b x + e`` with zero-excess noise the two agree; the ratio is
    undefined when the predictor is close to Gaussian.
    """
    kx = excess_kurtosis(x)
    ky = excess_kurtosis(y)
    if abs(kx) <= 0.1:
        raise NearGaussianPredictor(f"predictor excess kurtosis {kx:.3f} is within 0.1 of zero")
    rho = float(np.corrcoef(x, y)[0, 1])
    return rho**4, ky / kx


def hsic_gamma(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """HSIC test statistic and gamma-approximation p-value (median-heuristic widths)."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = len(x)
    if len(y) != n:
        raise InputError("hsic_gamma needs equal-length samples")
    if n < 6:
        raise InputError("hsic_gamma needs at least 6 samples")
    for v in (x, y):
        if np.var(v) < VAR_EPS:
            raise ConstantVariable("constant sample in independence test")
    K = rbf_gram(x, median_width(x))
    L = rbf_gram(y, median_width(y))
    Kc, Lc = center_gram(K), center_gram(L)
    stat = float(np.sum(Kc * Lc)) / n

    var = (Kc * Lc / 6.0) ** 2
    var = (var.sum() - np.trace(var)) / n / (n - 1)
    var *= 72.0 * (n - 4) * (n - 5) / n / (n - 1) / (n - 2) / (n - 3)

    mu_x = (K.sum() - np.trace(K)) / n / (n - 1)
    mu_y = (L.sum() - np.trace(L)) / n / (n - 1)
    mean = (1.0 + mu_x * mu_y - mu_x - mu_y) / n
    if var <= 0 or mean <= 0:
        return stat, 1.0
    shape = mean**2 / var
    scale = var * n / mean
    return stat, float(sps.gamma.sf(stat, shape, scale=scale))


@dataclass
class IndependenceReport:
    pairs: list[tuple[int, int]]
    p_values: list[float]
    statistics: list[float]
    alpha: float = DEFAULT_ALPHA

    @property
    def mean_p(self) -> float:
        return float(np.mean(self.p_values))

    @property
    def passes(self) -> bool:
        """True when the mean p-value exceeds alpha (independence not rejected)."""
        return self.mean_p > self.alpha

    def p_matrix(self, p: int) -> np.ndarray:
        out = np.full((p, p), np.nan)
        for (i, j), v in zip(self.pairs, self.p_values):
            out[i, j] = out[j, i] = v
        return out

    def pair_p(self, i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        return self.p_values[self.pairs.index(key)]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "mean_p": self.mean_p,
            "passes": self.passes,
            "pairs": [
                {"i": i, "j": j, "statistic": s, "p_value": v}
                for (i, j), s, v in zip(self.pairs, self.statistics, self.p_values)
            ],
        }


def residual_independence(residuals: np.ndarray, alpha: float = DEFAULT_ALPHA) -> IndependenceReport:
    """Pairwise HSIC tests over the rows of a ``p x n`` residual matrix."""
    residuals = np.asarray(residuals, dtype=float)
    p, n = residuals.shape
    if p < 2 or n < 20:
        raise InputError(f"independence test needs p >= 2 and n >= 20, got p={p}, n={n}")
    pairs, pv, st = [], [], []
    for i, j in combinations(range(p), 2):
        s, v = hsic_gamma(residuals[i], residuals[j])
        pairs.append((i, j))
        pv.append(v)
        st.append(s)
    return IndependenceReport(pairs, pv, st, alpha)


@dataclass
class SynthSpec:
    B_true: np.ndarray
    n: int = 1000
    noise_family: str = "uniform"
    noise_scale: float = 1.0
    seed: int = 0
    permute: bool = True

    def __post_init__(self):
        self.B_true = np.asarray(self.B_true, dtype=float)
        if self.B_true.ndim != 2 or self.B_true.shape[0] != self.B_true.shape[1]:
            raise ConfigError("B_true must be square")
        if np.any(np.triu(self.B_true) != 0):
            raise ConfigError("B_true must be strictly lower triangular")
        if self.noise_family not in ("uniform", "laplace"):
            raise ConfigError(f"noise family must be uniform or laplace, got {self.noise_family!r}")
        if not self.noise_scale > 0 or self.n < 1:
            raise ConfigError("noise_scale must be positive and n >= 1")

    @property
    def p(self) -> int:
        return self.B_true.shape[0]


def random_lower_b(
    p: int, rng: np.random.Generator, edge_prob: float = 0.5, low: float = 0.5, high: float = 1.5
) -> np.ndarray:
    """Strictly lower-triangular strengths with ``|b|`` uniform on ``[low, high]`` and random signs."""
    B = np.zeros((p, p))
    rows, cols = np.tril_indices(p, k=-1)
    on = rng.random(len(rows)) < edge_prob
    mag = rng.uniform(low, high, size=len(rows))
    sign = rng.choice([-1.0, 1.0], size=len(rows))
    B[rows[on], cols[on]] = (mag * sign)[on]
    return B


def draw_noise(family: str, scale: float, shape, rng: np.random.Generator) -> np.ndarray:
    if family == "uniform":
        return scale * rng.uniform(-1.0, 1.0, size=shape)
    return rng.laplace(0.0, scale, size=shape)


def synth_lingam(spec: SynthSpec) -> tuple[DataMatrix, CausalModel]:
    """Sample data from ``x = B x + e`` and return it with the (relabelled) truth.

    Variables are shuffled by a seeded permutation so the true order is not
    simply the index order; ``truth.diagnostics["permutation"][new] = old``.
    """
    rng = stream(spec.seed, "synth")
    p, n = spec.p, spec.n
    e = draw_noise(spec.noise_family, spec.noise_scale, (p, n), rng)
    X = np.linalg.solve(np.eye(p) - spec.B_true, e)
    perm = rng.permutation(p) if spec.permute else np.arange(p)
    inv = np.argsort(perm)
    B = spec.B_true[np.ix_(perm, perm)]
    order = [int(inv[old]) for old in range(p)]
    data = DataMatrix(X[perm])
    truth = CausalModel(order, B, e[perm], data.labels, {"permutation": perm.tolist()})
    return data, truth
