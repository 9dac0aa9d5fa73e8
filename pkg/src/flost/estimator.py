"""The closed-form FLoST completion estimator.

Observed entries are rescaled by ``1/p`` and moved to the frequency domain.
The first ``K`` frequency slices are shrunk by singular value
soft-thresholding and the remaining non-redundant slices are shrunk
entrywise. Every slice problem is independent, so :func:`fit` maps them over
a thread pool and assembles the results by slice index.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .prox import SvdFactors, complex_l1, complex_soft_threshold, nuclear_norm, svt_factors
from .tensor import (
    SliceIndexPlan, as_dense, conjugate_symmetrize, half_length, mode3_idft, mode3_rdft,
)

P_GIVEN = "given"
P_ESTIMATED = "estimated"


class SliceSolveError(RuntimeError):
    def __init__(self, slice_index: int, cause: Exception):
        super().__init__(f"frequency slice {slice_index}: {cause}")
        self.slice_index = slice_index


def _dims(dims) -> tuple[int, int, int]:
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"dims must be three positive integers, got {dims}")
    return dims


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Sparse observed entries ``(i, j, t) -> value`` of an M x N x T tensor.

    ``p`` is the Bernoulli sampling rate. With ``p_source='estimated'`` the
    rate is taken as the observed fraction of entries.
    """

    dims: tuple[int, int, int]
    i: np.ndarray
    j: np.ndarray
    t: np.ndarray
    values: np.ndarray
    p: float | None = None
    p_source: str = P_GIVEN

    def __post_init__(self):
        dims = _dims(self.dims)
        object.__setattr__(self, "dims", dims)
        for name in ("i", "j", "t"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64).ravel())
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64).ravel())
        n = self.values.size
        if not (self.i.size == self.j.size == self.t.size == n):
            raise ValueError("index and value arrays differ in length")
        for name, idx, bound in zip("ijt", (self.i, self.j, self.t), dims):
            if n and (idx.min() < 0 or idx.max() >= bound):
                raise IndexError(f"index {name} out of range 0..{bound - 1}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("observed values must be finite")
        if n and np.unique(self.linear_index()).size != n:
            raise ValueError("duplicate observation index")
        if self.p_source not in (P_GIVEN, P_ESTIMATED):
            raise ValueError(f"p_source must be '{P_GIVEN}' or '{P_ESTIMATED}'")
        if self.p_source == P_GIVEN:
            if self.p is None or not 0.0 < float(self.p) <= 1.0:
                raise ValueError(f"sampling probability must lie in (0, 1], got {self.p}")
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            object.__setattr__(self, "p", float(self.p))

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def size(self) -> int:
        M, N, T = self.dims
        return M * N * T

    @property
    def effective_p(self) -> float:
        if self.p_source == P_ESTIMATED:
            if len(self) == 0:
                raise ValueError("cannot estimate p from an empty observation set")
            return len(self) / self.size
        return self.p

    def linear_index(self) -> np.ndarray:
        return np.ravel_multi_index((self.i, self.j, self.t), self.dims)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.dims, dtype=bool)
        m[self.i, self.j, self.t] = True
        return m

    def subset(self, sel, p: float | None = None) -> "ObservationSet":
        return ObservationSet(self.dims, self.i[sel], self.j[sel], self.t[sel],
                              self.values[sel], self.p if p is None else p, self.p_source)

    def with_values(self, values) -> "ObservationSet":
        return replace(self, values=np.asarray(values, dtype=np.float64))

    @classmethod
    def from_mask(cls, x, mask, p: float | None, p_source: str = P_GIVEN) -> "ObservationSet":
        i, j, t = np.nonzero(mask)
        return cls(np.shape(x), i, j, t, np.asarray(x)[i, j, t], p, p_source)


def rescaled_projection(obs: ObservationSet) -> np.ndarray:
    """Dense tensor holding ``value / p`` at observed entries and zero elsewhere."""
    p = obs.effective_p
    if not 0.0 < p <= 1.0:
        raise ValueError(f"sampling probability must lie in (0, 1], got {p}")
    y = np.zeros(obs.dims)
    y[obs.i, obs.j, obs.t] = obs.values / p
    return y


@dataclass(frozen=True)
class RegularizationConfig:
    """Penalty weights: one nuclear-norm weight per low-rank slice plus the l1 weight."""

    K: int
    lambda1: tuple[float, ...]
    lambda2: float = 0.0
    C1: float = 1.0
    C2: float = 1.0
    sigma_gamma: float = 1.0

    def __post_init__(self):
        lam1 = tuple(float(v) for v in np.atleast_1d(self.lambda1))
        if len(lam1) == 1 and self.K > 1:
            lam1 = lam1 * self.K
        object.__setattr__(self, "lambda1", lam1)
        object.__setattr__(self, "lambda2", float(self.lambda2))
        if self.K < 1:
            raise ValueError(f"K must be at least 1, got {self.K}")
        if len(lam1) != self.K:
            raise ValueError(f"expected {self.K} lambda1 values, got {len(lam1)}")
        if min(lam1) < 0 or self.lambda2 < 0:
            raise ValueError("regularization weights must be nonnegative")

    def check_dims(self, T: int) -> None:
        SliceIndexPlan(T, self.K)

    def scaled(self, scale1: float, scale2: float) -> "RegularizationConfig":
        return replace(self, lambda1=tuple(scale1 * v for v in self.lambda1),
                       lambda2=scale2 * self.lambda2)


@dataclass(frozen=True, eq=False)
class FlostModel:
    """Fitted frequency-domain representation.

    ``lowrank_slices[l - 1]`` holds the shrunk SVD of frequency slice ``l``.
    The sparse tail is stored as 1-based slice indices ``tail_l`` (in
    ``K + 1 .. half``) with row/column indices and complex values.
    """

    dims: tuple[int, int, int]
    K: int
    lowrank_slices: tuple[SvdFactors, ...]
    tail_l: np.ndarray
    tail_i: np.ndarray
    tail_j: np.ndarray
    tail_values: np.ndarray
    config: RegularizationConfig
    p: float = 1.0
    fit_seconds: float | None = field(default=None, compare=False)

    @property
    def ranks(self) -> list[int]:
        return [f.rank for f in self.lowrank_slices]

    @property
    def tail_nnz(self) -> int:
        return int(self.tail_values.size)

    def frequency_half(self) -> np.ndarray:
        """Dense (M, N, half) stack of the estimated frequency slices."""
        M, N, T = self.dims
        out = np.zeros((M, N, half_length(T)), dtype=np.complex128)
        for l, f in enumerate(self.lowrank_slices, start=1):
            if f.rank:
                out[:, :, l - 1] = f.to_matrix()
        out[self.tail_i, self.tail_j, self.tail_l - 1] = self.tail_values
        return out

    def tail_slices(self) -> np.ndarray:
        return self.frequency_half()[:, :, self.K:]


def _solve_lowrank(stack: np.ndarray, l: int, lam: float) -> SvdFactors:
    try:
        return svt_factors(stack[:, :, l - 1], lam)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SliceSolveError(l, exc) from exc


def _solve_tail(stack: np.ndarray, K: int, lam: float):
    tail = complex_soft_threshold(stack[:, :, K:], lam)
    i, j, k = np.nonzero(tail)
    return k + K + 1, i, j, tail[i, j, k]


def fit(obs: ObservationSet, cfg: RegularizationConfig, threads: int | None = 1) -> FlostModel:
    """Solve the K + 1 decoupled frequency-domain problems.

    ``threads`` sets the pool size (``None`` means one per CPU). The result
    does not depend on it: slices are solved independently and gathered by
    index.
    """
    import time

    start = time.perf_counter()
    M, N, T = obs.dims
    cfg.check_dims(T)
    K = cfg.K
    half = half_length(T)
    p = obs.effective_p
    stack = mode3_rdft(rescaled_projection(obs))

    def task(l):
        if l <= K:
            return _solve_lowrank(stack, l, cfg.lambda1[l - 1])
        return _solve_tail(stack, K, cfg.lambda2)

    jobs = list(range(1, K + 1)) + ([K + 1] if K < half else [])
    if threads == 1:
        results = [task(l) for l in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(task, jobs))

    if K < half:
        tail_l, tail_i, tail_j, tail_v = results[K]
    else:
        tail_l = tail_i = tail_j = np.zeros(0, dtype=np.int64)
        tail_v = np.zeros(0, dtype=np.complex128)
    return FlostModel((M, N, T), K, tuple(results[:K]), tail_l, tail_i, tail_j, tail_v,
                      cfg, p, time.perf_counter() - start)


def reconstruct(model: FlostModel) -> np.ndarray:
    """Symmetrize the fitted half spectrum and transform back to a real tensor."""
    return mode3_idft(conjugate_symmetrize(model.frequency_half(), model.dims[2]))


def fit_transform(obs: ObservationSet, cfg: RegularizationConfig, threads: int | None = 1):
    model = fit(obs, cfg, threads)
    return model, reconstruct(model)


def objective(x, obs: ObservationSet, cfg: RegularizationConfig) -> float:
    """Sum of the decoupled slice objectives at a real tensor ``x``.

    Each non-redundant frequency slice ``l = 1 .. half`` contributes
    ``0.5 * ||X_l - Y_l||_F^2`` plus its penalty, where ``Y`` is the rescaled
    projection. Mirrored slices are not counted again, so :func:`fit` returns
    the exact minimizer of this quantity.
    """
    x = as_dense(x)
    K = cfg.K
    diff = mode3_rdft(x - rescaled_projection(obs))
    stack = mode3_rdft(x)
    loss = 0.5 * float(np.sum(np.abs(diff) ** 2))
    loss += sum(lam * nuclear_norm(stack[:, :, l]) for l, lam in enumerate(cfg.lambda1))
    if K < stack.shape[2]:
        loss += cfg.lambda2 * complex_l1(stack[:, :, K:])
    return loss


def theorem_lambda_schedule(M: int, N: int, T: int, p: float, sigma_gamma: float,
                            C1: float = 1.0, C2: float = 1.0, K: int = 1) -> RegularizationConfig:
    """Smallest admissible weights from the error bound, with natural logs.

    lambda1 = C1 s (sqrt(max(M,N) log max(M,N) / p) + sqrt(log^3 max(M,N)) / (p sqrt T))
    lambda2 = C2 s (sqrt(log max(M,N,T) / p) + log max(M,N,T) / (p sqrt T))
    where ``s = sigma_gamma`` stands in for max(noise level, sup norm of the truth).
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    mn = max(M, N)
    mnt = max(M, N, T)
    log_mn = math.log(mn)
    log_mnt = math.log(mnt)
    lam1 = C1 * sigma_gamma * (math.sqrt(mn * log_mn) / math.sqrt(p)
                               + math.sqrt(log_mn ** 3) / (p * math.sqrt(T)))
    lam2 = C2 * sigma_gamma * (math.sqrt(log_mnt) / math.sqrt(p)
                               + log_mnt / (math.sqrt(T) * p))
    return RegularizationConfig(K, (lam1,) * K, lam2, C1, C2, sigma_gamma)


@dataclass(frozen=True)
class BoundReport:
    bound_value: float
    lowrank_terms: tuple[float, ...]
    sparse_term: float


def error_bound(cfg: RegularizationConfig, ranks, s: int) -> BoundReport:
    """``16 (sum_l lambda1_l^2 r_l + lambda2^2 s)`` with its per-term breakdown."""
    ranks = list(ranks)
    if len(ranks) != cfg.K:
        raise ValueError(f"expected {cfg.K} ranks, got {len(ranks)}")
    terms = tuple(16.0 * lam ** 2 * r for lam, r in zip(cfg.lambda1, ranks))
    sparse = 16.0 * cfg.lambda2 ** 2 * s
    return BoundReport(sum(terms) + sparse, terms, sparse)


def parameter_count(model: FlostModel) -> int:
    M, N, _ = model.dims
    return sum(r * (M + N + 1) for r in model.ranks) + 2 * model.tail_nnz
