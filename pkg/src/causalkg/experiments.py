"""Seeded synthetic trials shared by the acceptance suite and the scripts."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dag import CausalModel, DataMatrix, is_topological_order
from .direct import discover
from .ica import ica_lingam
from .rng import stream
from .stats import SynthSpec, draw_noise, random_lower_b, residual_independence, synth_lingam


@dataclass
class TrialConfig:
    p_min: int = 3
    p_max: int = 6
    n: int = 1000
    edge_prob: float = 0.5
    low: float = 0.5
    high: float = 1.5
    noise_family: str = "uniform"


def trial_spec(trial: int, cfg: TrialConfig = TrialConfig()) -> SynthSpec:
    rng = stream(trial, "bench")
    p = int(rng.integers(cfg.p_min, cfg.p_max + 1))
    B = random_lower_b(p, rng, cfg.edge_prob, cfg.low, cfg.high)
    return SynthSpec(B, n=cfg.n, noise_family=cfg.noise_family, seed=trial)


def edge_mae(est: np.ndarray, true: np.ndarray) -> float | None:
    mask = true != 0
    if not mask.any():
        return None
    return float(np.mean(np.abs(est[mask] - true[mask])))


@dataclass
class TrialResult:
    trial: int
    p: int
    valid_order: bool
    abs_errors: list[float]
    mean_p: float
    seconds: float
    model: CausalModel
    truth: CausalModel


def run_direct_trial(trial: int, cfg: TrialConfig = TrialConfig(), **kw) -> TrialResult:
    X, truth = synth_lingam(trial_spec(trial, cfg))
    t0 = time.perf_counter()
    model = discover(X, **kw)
    dt = time.perf_counter() - t0
    mask = truth.B != 0
    errs = np.abs(model.B[mask] - truth.B[mask]).tolist()
    mean_p = residual_independence(model.residuals).mean_p
    return TrialResult(trial, X.p, is_topological_order(model.order, truth.B), errs, mean_p, dt, model, truth)


def confounded_instance(trial: int, cfg: TrialConfig = TrialConfig(), strength: float = 1.0):
    """A trial instance with one extra noise source shared by two variables.

    Returns ``(X, truth, (a, b))`` where ``a < b`` index the confounded pair.
    """
    spec = trial_spec(trial, cfg)
    rng = stream(trial, "synth", 1)
    p, n = spec.p, spec.n
    a, b = sorted(rng.choice(p, size=2, replace=False).tolist())
    e = draw_noise(spec.noise_family, spec.noise_scale, (p, n), rng)
    c = draw_noise(spec.noise_family, strength * spec.noise_scale, n, rng)
    e[a] += c
    e[b] += c
    X = np.linalg.solve(np.eye(p) - spec.B_true, e)
    truth = CausalModel(list(range(p)), spec.B_true, e, [f"x{i}" for i in range(p)])
    return DataMatrix(X), truth, (a, b)


def run_confounded_trial(trial: int, cfg: TrialConfig = TrialConfig(), **kw) -> float:
    """p-value of the confounded pair's residual-independence test."""
    X, _, (a, b) = confounded_instance(trial, cfg)
    model = discover(X, **kw)
    return residual_independence(model.residuals).pair_p(a, b)


def time_algorithms(p: int, n: int, trial: int) -> dict[str, float]:
    """Wall-clock seconds of both estimators on one synthetic instance at ``p``."""
    rng = stream(trial, "bench", p)
    spec = SynthSpec(random_lower_b(p, rng), n=n, seed=trial)
    X, _ = synth_lingam(spec)
    out = {}
    t0 = time.perf_counter()
    discover(X)
    out["direct"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    _, converged = ica_lingam(X, seed=trial)
    out["ica"] = time.perf_counter() - t0
    out["ica_converged"] = float(converged)
    return out
