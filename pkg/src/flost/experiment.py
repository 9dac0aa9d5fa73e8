"""One replicate of the simulation study: generate, sample, tune, fit, score."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .estimator import FlostModel, fit, parameter_count, reconstruct, theorem_lambda_schedule
from .metrics import IndexSet, rmse
from .synthesis import SamplingSpec, SynthesisSpec, generate_flost_truth, sample_observations
from .tensor import half_length
from .tuning import TuningSpec, grid_search

DEFAULT_GRID = (-1.5, 0.5, 5)


@dataclass
class ReplicateResult:
    method: str
    K: int
    p: float
    seed: int
    test_rmse: float
    train_rmse: float
    fit_seconds: float
    parameters: int
    scales: tuple[float, float]
    model: FlostModel | None = None

    def row(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "model"}


def panel_data(T: int, p: float, seed: int, M: int = 100, N: int = 100, r: int = 5,
               k_frac: int = 10, sigma: float = 0.1):
    """Truth tensor and its noisy Bernoulli sample for one replicate."""
    spec = SynthesisSpec.panel(T, M, N, r, k_frac, seed)
    truth = generate_flost_truth(spec)
    obs = sample_observations(truth, SamplingSpec(p, sigma, seed + 10_000))
    return spec, truth, obs


def run_method(truth, obs, K: int, method: str, seed: int = 0, grid=DEFAULT_GRID,
               sigma_gamma: float = 1.0, threads: int | None = 1, keep_model: bool = False):
    """Tune the two penalty scales on a 10% hold-out, refit on all entries, score on the truth."""
    M, N, T = obs.dims
    base = theorem_lambda_schedule(M, N, T, obs.effective_p, sigma_gamma, K=K)
    tuned = grid_search(obs, base, TuningSpec.log_grid(*grid, seed=seed), threads)
    start = time.perf_counter()
    model = fit(obs, tuned.best, threads)
    est = reconstruct(model)
    seconds = time.perf_counter() - start
    return ReplicateResult(
        method, K, float(obs.p), seed,
        rmse(est, truth, IndexSet.missing(obs)).value,
        rmse(est, truth, IndexSet.observed(obs)).value,
        seconds, parameter_count(model), tuned.best_scales, model if keep_model else None,
    )


def run_replicate(T: int, p: float, seed: int, k_frac: int = 10, grid=DEFAULT_GRID, **kw):
    """FLoST-1 (true K) and FLoST-2 (K = half) on one generated problem."""
    spec, truth, obs = panel_data(T, p, seed, k_frac=k_frac)
    return [
        run_method(truth, obs, spec.K, "FLoST-1", seed, grid, **kw),
        run_method(truth, obs, half_length(T), "FLoST-2", seed, grid, **kw),
    ]


def summarize(results) -> dict:
    out = {}
    for method in sorted({r.method for r in results}):
        rows = [r for r in results if r.method == method]
        for key in ("test_rmse", "train_rmse", "fit_seconds"):
            vals = np.array([getattr(r, key) for r in rows])
            out[(method, key)] = (float(vals.mean()), float(vals.std(ddof=1)) if len(vals) > 1 else 0.0)
    return out
