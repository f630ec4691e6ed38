import warnings
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from causalkg.dag import DataMatrix, is_topological_order
from causalkg.direct import discover
from causalkg.errors import SingularWhitening, ZeroDiagonal
from causalkg.ica import best_order, diag_permutation, fast_ica, ica_lingam, upper_sse, whiten
from causalkg.stats import SynthSpec, synth_lingam


def _mixed(n=2000, seed=0):
    rng = np.random.default_rng(seed)
    S = rng.uniform(-1, 1, (2, n))
    A = np.array([[1.0, 0.5], [0.2, 1.0]])
    return S, A @ S


def test_recovers_known_mixing():
    S, X = _mixed()
    res = fast_ica(DataMatrix(X))
    assert res.converged
    C = np.abs(np.corrcoef(np.vstack([res.W_unmix @ X, S]))[:2, 2:])
    # each estimated source matches one true source
    assert sorted(C.max(axis=1)) == sorted(C.max(axis=0))
    assert C.max(axis=1).min() > 0.95 and C.max(axis=0).min() > 0.95
    np.testing.assert_allclose(np.linalg.norm(res.W_unmix, axis=1), 1.0, atol=1e-12)


def test_zero_iterations():
    _, X = _mixed()
    res = fast_ica(DataMatrix(X), max_iter=0)
    assert (res.converged, res.iterations) == (False, 0)


def test_gaussian_sources_report_a_flag():
    rng = np.random.default_rng(3)
    X = DataMatrix(rng.normal(size=(3, 500)))
    res = fast_ica(X, max_iter=50)
    assert isinstance(res.converged, bool)
    assert res.iterations == 50 or res.converged


def test_whitening():
    _, X = _mixed()
    X = X - X.mean(axis=1, keepdims=True)
    Z = whiten(X) @ X
    np.testing.assert_allclose(Z @ Z.T / X.shape[1], np.eye(2), atol=1e-10)
    with pytest.raises(SingularWhitening):
        whiten(np.zeros((2, 10)))


def test_rank_deficient_whitening_warns():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(5, 3))
    with pytest.warns(UserWarning, match="floored"):
        K = whiten(X - X.mean(axis=1, keepdims=True))
    assert np.isfinite(K).all()


def test_matches_direct_on_pair():
    rng = np.random.default_rng(0)
    e = rng.uniform(-1, 1, (2, 1000))
    X = DataMatrix(np.vstack([e[0], 3 * e[0] + e[1]]))
    m, conv = ica_lingam(X)
    assert conv
    assert m.order == discover(X).order == [0, 1]
    assert m.B[1, 0] == pytest.approx(3.0, abs=0.2)
    assert m.diagnostics["converged"] is True


def test_null_model_has_small_strengths():
    rng = np.random.default_rng(1)
    m, _ = ica_lingam(DataMatrix(rng.uniform(-1, 1, (3, 2000))))
    assert np.abs(m.B).max() < 0.1


def test_permutation_matrix_pattern():
    W = np.array([[0.01, 1.0, 0.02], [0.03, 0.0, 0.9], [1.1, 0.02, 0.01]])
    perm = diag_permutation(W)
    assert perm.tolist() == [2, 0, 1]
    assert (np.abs(np.diag(W[perm])) > 0.8).all()


def test_zero_diagonal():
    W = np.array([[1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ZeroDiagonal):
        diag_permutation(W)


def _brute_diag(W):
    A = np.abs(W)
    best, arg = -1.0, None
    for perm in permutations(range(len(W))):
        vals = A[list(perm), range(len(W))]
        if (vals >= 1e-8).all() and vals.sum() > best:
            best, arg = vals.sum(), list(perm)
    return arg


@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_diag_permutation_matches_brute_force(seed, p):
    W = np.random.default_rng(seed).normal(size=(p, p))
    assert diag_permutation(W).tolist() == _brute_diag(W)


@given(st.integers(0, 2**32 - 1))
def test_assignment_path_agrees_with_exhaustive(seed):
    from causalkg import ica

    W = np.random.default_rng(seed).normal(size=(8, 8))
    exhaustive = diag_permutation(W)
    old = ica.EXHAUSTIVE_MAX_P
    try:
        ica.EXHAUSTIVE_MAX_P = 0
        fast = diag_permutation(W)
    finally:
        ica.EXHAUSTIVE_MAX_P = old
    A = np.abs(W)
    assert A[fast, np.arange(8)].sum() == pytest.approx(A[exhaustive, np.arange(8)].sum(), rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_best_order_is_minimal(seed, p):
    B = np.random.default_rng(seed).normal(size=(p, p))
    order = best_order(B)
    assert upper_sse(B, order) <= min(upper_sse(B, list(q)) for q in permutations(range(p))) + 1e-12


def test_greedy_order_on_triangular_input():
    rng = np.random.default_rng(4)
    p = 10
    true = rng.permutation(p)
    B = np.zeros((p, p))
    for a in range(p):
        for b in range(a):
            B[true[a], true[b]] = rng.uniform(0.5, 1.5)
    order = best_order(B)
    assert upper_sse(B, order) == 0.0 and is_topological_order(order, B)


def test_order_agreement_small_graphs():
    ok = 0
    for trial in range(20):
        rng = np.random.default_rng(trial)
        p = 3
        B = np.tril(rng.uniform(0.5, 1.5, (p, p)) * rng.choice([-1, 1], (p, p)), -1)
        X, truth = synth_lingam(SynthSpec(B, n=2000, seed=trial))
        m, conv = ica_lingam(X, seed=trial)
        ok += conv and is_topological_order(m.order, truth.B)
    assert ok >= 16
