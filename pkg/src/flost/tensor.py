"""Real/complex third-order tensors and the unitary DFT along the time mode.

Tensors are plain ``numpy`` arrays of shape ``(M, N, T)`` in C order, so the
time index varies fastest and every tube ``x[i, j, :]`` is contiguous.
Frequency slices are 1-based in the public API (slice 1 is the DC slice).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IDFT_IMAG_RTOL = 1e-8


class SymmetryViolation(ValueError):
    """A frequency stack is not the transform of any real tensor."""


def half_length(T: int) -> int:
    """Number of non-redundant frequency slices, ceil((T + 1) / 2)."""
    return (T + 2) // 2


def mirror_index(l: int, T: int) -> int:
    return T + 2 - l


@dataclass(frozen=True)
class SliceIndexPlan:
    """Partition of the 1-based frequency slices into low-rank, sparse and mirror ranges."""

    T: int
    K: int

    def __post_init__(self):
        if self.T < 1:
            raise ValueError(f"T must be positive, got {self.T}")
        if not 1 <= self.K <= self.half:
            raise ValueError(f"K must lie in [1, {self.half}], got {self.K}")

    @property
    def half(self) -> int:
        return half_length(self.T)

    @property
    def lowrank_range(self) -> range:
        return range(1, self.K + 1)

    @property
    def sparse_range(self) -> range:
        return range(self.K + 1, self.half + 1)

    @property
    def mirror_range(self) -> range:
        return range(self.half + 1, self.T + 1)

    def mirror(self, l: int) -> int:
        return mirror_index(l, self.T)


def as_dense(x, name: str = "tensor") -> np.ndarray:
    """Validate and return a real (M, N, T) float64 array."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ValueError(f"{name} must be a non-empty 3-way array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _self_conjugate_slices(T: int) -> list[int]:
    # 0-based indices of the slices that must be real for a real tensor
    return [0, T // 2] if T % 2 == 0 and T > 1 else [0]


def mode3_dft(x) -> np.ndarray:
    """Unitary DFT of every tube: ``out[:, :, k] = sum_t x[:, :, t] w^(k t) / sqrt(T)``."""
    x = as_dense(x)
    out = np.fft.fft(x, axis=2, norm="ortho")
    for k in _self_conjugate_slices(x.shape[2]):
        out[:, :, k].imag = 0.0
    return out


def mode3_rdft(x) -> np.ndarray:
    """The first ``half_length(T)`` slices of :func:`mode3_dft`."""
    x = as_dense(x)
    out = np.fft.rfft(x, axis=2, norm="ortho")
    for k in _self_conjugate_slices(x.shape[2]):
        out[:, :, k].imag = 0.0
    return out


def mode3_idft(y, check: bool = True) -> np.ndarray:
    """Inverse of :func:`mode3_dft`; the discarded imaginary part must be roundoff."""
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 3:
        raise ValueError(f"frequency stack must be 3-way, got shape {y.shape}")
    z = np.fft.ifft(y, axis=2, norm="ortho")
    if check and z.size:
        resid = float(np.max(np.abs(z.imag)))
        tol = IDFT_IMAG_RTOL * (1.0 + float(np.linalg.norm(y)))
        if resid > tol:
            raise SymmetryViolation(
                f"imaginary residual {resid:.3e} exceeds tolerance {tol:.3e}")
    return np.ascontiguousarray(z.real)


def dft_row(l: int, T: int) -> np.ndarray:
    """Row ``f_l`` of the unitary DFT matrix (1-based ``l``)."""
    if not 1 <= l <= T:
        raise IndexError(f"slice index {l} outside 1..{T}")
    t = np.arange(T)
    return np.exp(-2j * np.pi * ((l - 1) * t % T) / T) / np.sqrt(T)


def extract_slice(y, l: int) -> np.ndarray:
    """Frequency slice ``l`` (1-based) as an M x N complex matrix.

    For a complex frequency stack this is a plain index. For a real tensor the
    single DFT row is applied to each tube without forming the whole stack.
    """
    y = np.asarray(y)
    if y.ndim != 3:
        raise ValueError(f"expected a 3-way array, got shape {y.shape}")
    T = y.shape[2]
    if not 1 <= l <= T:
        raise IndexError(f"slice index {l} outside 1..{T}")
    if np.iscomplexobj(y):
        return y[:, :, l - 1].copy()
    out = as_dense(y) @ dft_row(l, T)
    if l - 1 in _self_conjugate_slices(T):
        out.imag = 0.0
    return out


def conjugate_symmetrize(front, T: int) -> np.ndarray:
    """Expand the first ``half_length(T)`` slices into a full conjugate-symmetric stack.

    ``front`` is either a sequence of M x N matrices or an (M, N, half) array.
    The DC slice (and the Nyquist slice for even T) is made real.
    """
    if isinstance(front, np.ndarray) and front.ndim == 3:
        stack = np.asarray(front, dtype=np.complex128)
    else:
        front = list(front)
        if not front:
            raise ValueError("no slices given")
        stack = np.stack([np.asarray(f, dtype=np.complex128) for f in front], axis=2)
    half = half_length(T)
    if stack.shape[2] != half:
        raise ValueError(f"need exactly {half} slices for T={T}, got {stack.shape[2]}")
    M, N = stack.shape[:2]
    out = np.empty((M, N, T), dtype=np.complex128)
    out[:, :, :half] = stack
    for k in _self_conjugate_slices(T):
        out[:, :, k].imag = 0.0
    # 0-based: slice k mirrors slice T - k
    for k in range(half, T):
        out[:, :, k] = np.conj(out[:, :, T - k])
    return out


def is_conjugate_symmetric(y, rtol: float = 1e-10) -> bool:
    y = np.asarray(y)
    T = y.shape[2]
    for k in range(half_length(T), T):
        a, b = y[:, :, k], np.conj(y[:, :, T - k])
        if np.linalg.norm(a - b) > rtol * (np.linalg.norm(a) + 1.0):
            return False
    for k in _self_conjugate_slices(T):
        s = y[:, :, k]
        if s.size and np.max(np.abs(s.imag)) > rtol * (np.linalg.norm(s) + 1.0):
            return False
    return True


def frobenius_norm(x) -> float:
    return float(np.linalg.norm(np.asarray(x).ravel()))
