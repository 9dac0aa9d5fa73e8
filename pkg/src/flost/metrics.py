"""RMSE over index sets, percentile-filtered RMSE and per-chunk RMSE series."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .estimator import ObservationSet


@dataclass(frozen=True)
class RmseReport:
    label: str
    count: int
    value: float

    @property
    def absent(self) -> bool:
        return self.count == 0

    def to_json(self) -> dict:
        d = asdict(self)
        if self.absent:
            d["value"] = None
        return d


@dataclass(frozen=True, eq=False)
class IndexSet:
    """A subset of the M x N x T index grid, stored as a boolean mask."""

    mask: np.ndarray
    label: str = "explicit"

    @property
    def dims(self):
        return self.mask.shape

    def __len__(self) -> int:
        return int(np.count_nonzero(self.mask))

    @classmethod
    def all(cls, dims) -> "IndexSet":
        return cls(np.ones(tuple(dims), dtype=bool), "all")

    @classmethod
    def observed(cls, obs: ObservationSet) -> "IndexSet":
        return cls(obs.mask(), "observed")

    @classmethod
    def missing(cls, obs: ObservationSet) -> "IndexSet":
        return cls(~obs.mask(), "missing")

    @classmethod
    def explicit(cls, dims, indices, label: str = "explicit") -> "IndexSet":
        mask = np.zeros(tuple(dims), dtype=bool)
        idx = np.asarray(indices, dtype=np.int64).reshape(-1, 3)
        for axis, bound in enumerate(dims):
            if idx.size and (idx[:, axis].min() < 0 or idx[:, axis].max() >= bound):
                raise IndexError("explicit index out of range")
        mask[idx[:, 0], idx[:, 1], idx[:, 2]] = True
        return cls(mask, label)


def _check(est, truth, delta: IndexSet):
    est = np.asarray(est, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est.shape != truth.shape or delta.mask.shape != truth.shape:
        raise ValueError(f"shape mismatch: {est.shape}, {truth.shape}, {delta.mask.shape}")
    return est, truth


def _rmse_on(est, truth, mask, label) -> RmseReport:
    n = int(np.count_nonzero(mask))
    if n == 0:
        return RmseReport(label, 0, math.nan)
    d = est[mask] - truth[mask]
    return RmseReport(label, n, float(np.sqrt(np.dot(d, d) / n)))


def rmse(est, truth, delta: IndexSet, label: str | None = None) -> RmseReport:
    """``||P_delta(est - truth)||_F / sqrt(|delta|)``."""
    est, truth = _check(est, truth, delta)
    if len(delta) == 0:
        raise ValueError("RMSE over an empty index set")
    return _rmse_on(est, truth, delta.mask, label or delta.label)


def percentile_threshold(truth, q: float) -> float:
    """Nearest-rank empirical ``q`` quantile of the whole tensor; ``-inf`` for q = 0."""
    if not 0.0 <= q < 1.0:
        raise ValueError(f"quantile must lie in [0, 1), got {q}")
    flat = np.sort(np.asarray(truth, dtype=np.float64).ravel())
    rank = math.ceil(q * flat.size)
    return -math.inf if rank == 0 else float(flat[rank - 1])


def percentile_rmse(est, truth, delta: IndexSet, quantiles) -> list[RmseReport]:
    """RMSE over entries of ``delta`` whose true value is strictly above each quantile.

    Thresholds come from the full truth tensor. An empty filtered set yields
    a report with count 0 and value NaN.
    """
    est, truth = _check(est, truth, delta)
    out = []
    for q in quantiles:
        thr = percentile_threshold(truth, q)
        mask = delta.mask & (truth > thr)
        out.append(_rmse_on(est, truth, mask, f"{delta.label}>q{q:g}"))
    return out


def chunked_rmse(est, truth, delta: IndexSet, chunk_len: int) -> list[RmseReport]:
    """One RMSE per time window ``[c * chunk_len, (c + 1) * chunk_len)``."""
    if chunk_len < 1:
        raise ValueError(f"chunk_len must be positive, got {chunk_len}")
    est, truth = _check(est, truth, delta)
    T = truth.shape[2]
    out = []
    for c, start in enumerate(range(0, T, chunk_len)):
        sl = slice(start, min(start + chunk_len, T))
        out.append(_rmse_on(est[:, :, sl], truth[:, :, sl], delta.mask[:, :, sl],
                            f"{delta.label}[chunk {c}]"))
    return out


def localtime_shift(x, offsets) -> np.ndarray:
    """Circularly shift the columns of each frame: column ``j`` of frame ``t`` moves to ``j + offsets[t]``."""
    x = np.asarray(x)
    offsets = np.asarray(offsets, dtype=np.int64)
    M, N, T = x.shape
    if offsets.shape != (T,):
        raise ValueError(f"need {T} offsets, got {offsets.shape}")
    src = (np.arange(N)[:, None] - offsets[None, :]) % N
    return np.take_along_axis(x, np.broadcast_to(src[None], (M, N, T)), axis=1)
