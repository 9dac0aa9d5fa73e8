"""Synthetic (r, K, s)-FLoST tensors and Bernoulli-sampled noisy observations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import P_GIVEN, ObservationSet
from .tensor import as_dense, conjugate_symmetrize, half_length, mode3_idft, mode3_rdft


@dataclass(frozen=True)
class SynthesisSpec:
    dims: tuple[int, int, int]
    r: int
    K: int
    s: int
    seed: int = 0

    def __post_init__(self):
        check_flost_params(self.dims, self.r, self.K, self.s)

    @classmethod
    def panel(cls, T: int, M: int = 100, N: int = 100, r: int = 5,
              k_frac: int = 10, seed: int = 0) -> "SynthesisSpec":
        """Simulation settings with K = T / k_frac and 10% of tail entries kept."""
        K = T // k_frac
        s = int(round(0.1 * (half_length(T) - K) * M * N))
        return cls((M, N, T), r, K, s, seed)


@dataclass(frozen=True)
class SamplingSpec:
    p: float
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")


def check_flost_params(dims, r: int, K: int, s: int) -> None:
    M, N, T = dims
    half = half_length(T)
    if min(M, N, T) < 1:
        raise ValueError(f"dims must be positive, got {dims}")
    if not 0 <= r <= min(M, N):
        raise ValueError(f"rank {r} must lie in [0, {min(M, N)}]")
    if not 1 <= K <= half:
        raise ValueError(f"K must lie in [1, {half}], got {K}")
    if not 0 <= s <= (half - K) * M * N:
        raise ValueError(f"s must lie in [0, {(half - K) * M * N}], got {s}")


def tail_support(x, K: int, s: int) -> np.ndarray:
    """Boolean (M, N, half - K) mask of the ``s`` largest-modulus tail entries.

    Ties are broken towards the smallest ``(l, i, j)``.
    """
    tail = mode3_rdft(x)[:, :, K:]
    return _top_s(tail, s)


def _top_s(tail: np.ndarray, s: int) -> np.ndarray:
    M, N, L = tail.shape
    mask = np.zeros(tail.shape, dtype=bool)
    if s == 0 or L == 0:
        return mask
    i, j, l = np.indices(tail.shape).reshape(3, -1)
    mod = np.abs(tail).ravel()
    order = np.lexsort((j, i, l, -mod))[:s]
    mask[i[order], j[order], l[order]] = True
    return mask


def _truncate_rank(m: np.ndarray, r: int) -> np.ndarray:
    if r >= min(m.shape):
        return m
    u, sv, vh = np.linalg.svd(m, full_matrices=False)
    return (u[:, :r] * sv[:r]) @ vh[:r]


def flost_truncate(x, r: int, K: int, s: int, support=None) -> np.ndarray:
    """Project a real tensor onto (r, K, s)-FLoST tensors.

    Frequency slices 1..K keep their top ``r`` singular triplets; the slices
    K+1..half keep their ``s`` largest entries jointly (or exactly the entries
    in ``support`` when given); the mirror half is regenerated by conjugation.
    """
    x = as_dense(x)
    M, N, T = x.shape
    check_flost_params(x.shape, r, K, s)
    half = mode3_rdft(x)
    for l in range(K):
        sl = half[:, :, l]
        half[:, :, l] = _truncate_rank(sl.real if l == 0 else sl, r)
    tail = half[:, :, K:]
    keep = _top_s(tail, s) if support is None else np.asarray(support, dtype=bool)
    if keep.shape != tail.shape:
        raise ValueError(f"support shape {keep.shape} does not match tail {tail.shape}")
    tail[~keep] = 0.0
    return mode3_idft(conjugate_symmetrize(half, T))


def generate_flost_truth(spec: SynthesisSpec) -> np.ndarray:
    """Truncate an i.i.d. standard normal tensor to the requested FLoST structure."""
    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal(spec.dims)
    return flost_truncate(noise, spec.r, spec.K, spec.s)


def sample_observations(x, spec: SamplingSpec) -> ObservationSet:
    """Keep each entry with probability ``p`` and add N(0, sigma^2) noise to it.

    Mask and noise come from independent child streams of one seed, and both
    are drawn for the full tensor so every position has a fixed draw.
    """
    x = as_dense(x)
    mask_seq, noise_seq = np.random.SeedSequence(spec.seed).spawn(2)
    mask = np.random.default_rng(mask_seq).random(x.shape) < spec.p
    y = x
    if spec.sigma > 0:
        y = x + spec.sigma * np.random.default_rng(noise_seq).standard_normal(x.shape)
    return ObservationSet.from_mask(y, mask, spec.p, P_GIVEN)


def dft_matrix(T: int) -> np.ndarray:
    k = np.arange(T)
    return np.exp(-2j * np.pi * np.outer(k, k) / T) / np.sqrt(T)


def is_flost(x, r: int, K: int, s: int, tol: float = 1e-8) -> bool:
    """Check the FLoST structure with an explicit DFT matrix (no FFT).

    Singular values and tail moduli count as nonzero when they exceed
    ``tol * ||x||_F``, so exactly-zero slices are not misread as rank one.
    """
    x = np.asarray(x, dtype=np.float64)
    T = x.shape[2]
    half = half_length(T)
    cutoff = tol * float(np.linalg.norm(x))
    freq = x @ dft_matrix(T)[:half].T
    for l in range(K):
        sv = np.linalg.svd(freq[:, :, l], compute_uv=False)
        if np.count_nonzero(sv > cutoff) > r:
            return False
    return int(np.count_nonzero(np.abs(freq[:, :, K:]) > cutoff)) <= s
