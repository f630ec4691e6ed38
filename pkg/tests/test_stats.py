import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from causalkg.dag import DataMatrix
from causalkg.errors import ConfigError, ConstantVariable, InputError, NearGaussianPredictor
from causalkg.rng import stream
from causalkg.stats import (
    SynthSpec,
    excess_kurtosis,
    gaussianity_test,
    hsic_gamma,
    kurtosis_ratio_check,
    random_lower_b,
    residual_independence,
    synth_lingam,
)


def test_kurtosis_analytic_values():
    rng = np.random.default_rng(0)
    assert excess_kurtosis(rng.uniform(size=100_000)) == pytest.approx(-1.2, abs=0.05)
    assert excess_kurtosis(rng.laplace(size=100_000)) == pytest.approx(3.0, abs=0.3)
    assert excess_kurtosis(rng.normal(size=100_000)) == pytest.approx(0.0, abs=0.05)


def test_kurtosis_against_moments():
    x = np.array([0.0, 1.0, 1.0, 4.0, 9.0])
    d = x - x.mean()
    assert excess_kurtosis(x) == pytest.approx(np.mean(d**4) / np.mean(d**2) ** 2 - 3, rel=1e-14)


def test_kurtosis_errors():
    with pytest.raises(ConstantVariable):
        excess_kurtosis(np.ones(10))
    with pytest.raises(InputError):
        excess_kurtosis(np.arange(3.0))


@given(st.integers(0, 2**32 - 1), st.floats(-100, 100).filter(lambda a: abs(a) > 1e-3), st.floats(-1e3, 1e3))
def test_kurtosis_affine_invariant(seed, a, b):
    x = np.random.default_rng(seed).standard_t(5, size=200)
    assert excess_kurtosis(a * x + b) == pytest.approx(excess_kurtosis(x), abs=1e-9)


@given(st.integers(0, 2**32 - 1), st.integers(4, 60))
def test_kurtosis_lower_bound(seed, n):
    x = np.random.default_rng(seed).normal(size=n)
    assert excess_kurtosis(x) >= -2.0 - 1e-12


def test_gaussianity_power_and_size():
    power = size = 0
    for trial in range(100):
        rng = stream(trial, "bench")
        power += gaussianity_test(rng.uniform(size=(10, 5000))).non_gaussian
        size += not gaussianity_test(rng.normal(size=(10, 5000))).non_gaussian
    assert power == 100
    assert size >= 95


def test_gaussianity_report_fields():
    rng = np.random.default_rng(1)
    rep = gaussianity_test(DataMatrix(rng.laplace(size=(3, 400))))
    assert rep.non_gaussian and rep.alpha == 0.01
    assert all(0 <= p <= 1 for p in rep.p_value) and all(k >= -2 for k in rep.excess_kurtosis)
    doc = rep.to_dict()
    assert doc["bonferroni_alpha"] == pytest.approx(0.01 / 3) and len(doc["variables"]) == 3


def test_gaussianity_needs_20_samples():
    with pytest.raises(InputError):
        gaussianity_test(np.random.default_rng(0).uniform(size=(2, 19)))


def test_ratio_identity():
    x = np.random.default_rng(2).uniform(size=500)
    rho4, ratio = kurtosis_ratio_check(x, x)
    assert rho4 == pytest.approx(1.0) and ratio == pytest.approx(1.0)


def test_ratio_with_gaussian_noise():
    rng = np.random.default_rng(3)
    x = rng.uniform(-1, 1, 100_000)
    y = 0.8 * x + rng.normal(0, 0.8 * x.std(), 100_000)
    rho4, ratio = kurtosis_ratio_check(x, y)
    assert rho4 == pytest.approx(ratio, abs=0.05)


def test_ratio_gaussian_predictor():
    rng = np.random.default_rng(4)
    with pytest.raises(NearGaussianPredictor):
        kurtosis_ratio_check(rng.normal(size=100_000), rng.uniform(size=100_000))


def test_independence_null_and_alternative():
    passes = detects = 0
    for trial in range(100):
        rng = stream(trial, "bench")
        R = rng.uniform(size=(3, 500))
        rep = residual_independence(R)
        passes += rep.passes
        R[1] = R[0]
        detects += residual_independence(R).pair_p(0, 1) < 0.01
    assert passes >= 95 and detects >= 95


def test_independence_report():
    R = np.random.default_rng(5).uniform(size=(4, 100))
    rep = residual_independence(R)
    assert rep.alpha == 0.01 and rep.pairs == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    P = rep.p_matrix(4)
    np.testing.assert_array_equal(P, P.T)
    assert rep.mean_p == pytest.approx(np.mean(rep.p_values))
    with pytest.raises(InputError):
        residual_independence(R[:, :19])
    R[2] = 1.0
    with pytest.raises(ConstantVariable):
        residual_independence(R)


def test_hsic_statistic_by_definition():
    rng = np.random.default_rng(6)
    x, y = rng.uniform(size=40), rng.uniform(size=40)

    def gram(v):
        d = np.abs(v[:, None] - v[None, :])
        w = np.median(d[np.triu_indices(40, 1)])
        return np.exp(-(d**2) / (2 * w**2))

    H = np.eye(40) - 1 / 40
    stat = np.trace(gram(x) @ H @ gram(y) @ H) / 40
    assert hsic_gamma(x, y)[0] == pytest.approx(stat, rel=1e-10)


def test_synth_empty_graph():
    X, truth = synth_lingam(SynthSpec(np.zeros((3, 3)), n=50, seed=1, permute=False))
    np.testing.assert_allclose(X.X, truth.residuals - truth.residuals.mean(axis=1, keepdims=True))
    assert not truth.B.any()


def test_synth_moments():
    X, truth = synth_lingam(SynthSpec(np.array([[0, 0], [3.0, 0]]), n=1000, seed=0))
    i1, i2 = truth.order
    v1, v2 = X.X[i1].var(), X.X[i2].var()
    assert v2 == pytest.approx(9 * v1 + truth.residuals[i2].var(), rel=0.1)
    assert truth.B[i2, i1] == 3.0


def test_synth_deterministic_and_permuted():
    B = random_lower_b(5, np.random.default_rng(0))
    a, ta = synth_lingam(SynthSpec(B, n=30, seed=4))
    b, _ = synth_lingam(SynthSpec(B, n=30, seed=4))
    np.testing.assert_array_equal(a.X, b.X)
    perm = np.array(ta.diagnostics["permutation"])
    np.testing.assert_array_equal(ta.B, B[np.ix_(perm, perm)])
    pos = {v: k for k, v in enumerate(ta.order)}
    rows, cols = np.nonzero(ta.B)
    assert all(pos[j] < pos[i] for i, j in zip(rows, cols))


def test_synth_laplace_is_super_gaussian():
    X, _ = synth_lingam(SynthSpec(np.zeros((2, 2)), n=20000, noise_family="laplace", seed=2))
    assert excess_kurtosis(X.X[0]) > 2


def test_random_lower_b():
    B = random_lower_b(6, np.random.default_rng(3), edge_prob=1.0)
    low = B[np.tril_indices(6, -1)]
    assert not np.triu(B).any() and ((np.abs(low) >= 0.5) & (np.abs(low) <= 1.5)).all()


@pytest.mark.parametrize(
    "kw",
    [
        {"B_true": np.ones((2, 2))},
        {"B_true": np.zeros((2, 3))},
        {"B_true": np.zeros((2, 2)), "noise_family": "gaussian"},
        {"B_true": np.zeros((2, 2)), "noise_scale": 0.0},
    ],
)
def test_spec_validation(kw):
    with pytest.raises(ConfigError):
        SynthSpec(**kw)
