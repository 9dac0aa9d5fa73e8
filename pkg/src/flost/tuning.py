"""Hold-out grid search over the two penalty scales."""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

from .estimator import P_GIVEN, ObservationSet, RegularizationConfig, fit, reconstruct
from .tensor import half_length


@dataclass(frozen=True)
class TuningSpec:
    grid: tuple[tuple[float, float], ...]
    holdout_fraction: float = 0.10
    seed: int = 0

    def __post_init__(self):
        grid = tuple((float(a), float(b)) for a, b in self.grid)
        if not grid:
            raise ValueError("tuning grid is empty")
        if any(a <= 0 or b <= 0 for a, b in grid):
            raise ValueError("grid multipliers must be positive")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError(f"holdout fraction must lie in (0, 1), got {self.holdout_fraction}")
        object.__setattr__(self, "grid", grid)

    @classmethod
    def log_grid(cls, log_min: float, log_max: float, steps: int,
                 holdout_fraction: float = 0.10, seed: int = 0) -> "TuningSpec":
        """Cartesian product of ``steps`` base-10 log-spaced multipliers for each scale."""
        scales = np.logspace(log_min, log_max, steps)
        return cls(tuple(itertools.product(scales, scales)), holdout_fraction, seed)


@dataclass(frozen=True)
class TuningResult:
    best: RegularizationConfig
    best_scales: tuple[float, float]
    table: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def best_rmse(self) -> float:
        return min(row[2] for row in self.table)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["scale1", "scale2", "validation_rmse"])
            for s1, s2, v in self.table:
                w.writerow([repr(s1), repr(s2), repr(v)])


def split_validation(obs: ObservationSet, fraction: float, seed: int = 0):
    """Randomly hold out ``round(fraction * n)`` entries; returns ``(train, val)``.

    The training set keeps the thinned sampling rate ``p * (1 - fraction)`` so
    its rescaling stays unbiased.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    n = len(obs)
    n_val = int(round(fraction * n))
    if n_val == 0 or n_val == n:
        raise ValueError(f"cannot hold out {fraction:g} of {n} entries")
    perm = np.random.default_rng(seed).permutation(n)
    val_sel = np.sort(perm[:n_val])
    train_sel = np.sort(perm[n_val:])
    if obs.p_source == P_GIVEN:
        return obs.subset(train_sel, obs.p * (1 - fraction)), obs.subset(val_sel, obs.p * fraction)
    return obs.subset(train_sel), obs.subset(val_sel)


def validation_rmse(est: np.ndarray, val: ObservationSet) -> float:
    d = est[val.i, val.j, val.t] - val.values
    return float(np.sqrt(np.mean(d * d)))


def grid_search(obs: ObservationSet, base: RegularizationConfig, spec: TuningSpec,
                threads: int | None = 1) -> TuningResult:
    """Fit on the training split at every grid point and keep the best validation RMSE.

    Ties go to the lexicographically smallest ``(scale1, scale2)``.
    """
    train, val = split_validation(obs, spec.holdout_fraction, spec.seed)
    no_tail = base.K == half_length(obs.dims[2])
    cache: dict[tuple, float] = {}
    table = []
    for s1, s2 in spec.grid:
        cfg = base.scaled(s1, s2)
        key = (cfg.lambda1, None if no_tail else cfg.lambda2)
        if key not in cache:
            try:
                cache[key] = validation_rmse(reconstruct(fit(train, cfg, threads)), val)
            except Exception as exc:
                raise RuntimeError(f"grid point ({s1:g}, {s2:g}): {exc}") from exc
        table.append((s1, s2, cache[key]))
    s1, s2, _ = min(table, key=lambda row: (row[2], row[0], row[1]))
    return TuningResult(base.scaled(s1, s2), (s1, s2), table)
