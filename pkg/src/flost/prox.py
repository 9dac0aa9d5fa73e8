"""Closed-form proximal maps: nuclear norm (SVT) and the complex l1 norm."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``U @ diag(sigma) @ V^*`` with ``sigma`` nonincreasing."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.sigma.size)

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape[0], self.V.shape[0]

    def to_matrix(self) -> np.ndarray:
        if self.rank == 0:
            return np.zeros(self.shape, dtype=np.result_type(self.U, self.V, np.float64))
        return (self.U * self.sigma) @ self.V.conj().T

    @classmethod
    def empty(cls, M: int, N: int, dtype=np.complex128) -> "SvdFactors":
        return cls(np.zeros((M, 0), dtype), np.zeros(0), np.zeros((N, 0), dtype))


def _is_real(m: np.ndarray) -> bool:
    return not np.iscomplexobj(m) or not np.any(m.imag)


def svt_factors(m, tau: float) -> SvdFactors:
    """Singular value soft-thresholding, returned in factored form.

    Only singular values strictly above ``tau`` survive, so the factor count
    equals the rank of the shrunk matrix.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise np.linalg.LinAlgError("SVD of a matrix with non-finite entries")
    M, N = m.shape
    if _is_real(m):
        # real input keeps real factors so the output is exactly real
        u, s, vh = np.linalg.svd(np.real(m).astype(np.float64), full_matrices=False)
    else:
        u, s, vh = np.linalg.svd(m.astype(np.complex128), full_matrices=False)
    keep = int(np.count_nonzero(s > tau))
    if keep == 0:
        return SvdFactors.empty(M, N, dtype=u.dtype)
    return SvdFactors(
        np.ascontiguousarray(u[:, :keep]),
        s[:keep] - tau,
        np.ascontiguousarray(vh[:keep].conj().T),
    )


def svt(m, tau: float) -> tuple[np.ndarray, int]:
    """Return ``(D_tau(m), effective_rank)``.

    ``D_tau(m)`` is the minimizer of ``0.5 * ||X - m||_F^2 + tau * ||X||_*``.
    """
    f = svt_factors(m, tau)
    return f.to_matrix(), f.rank


def nuclear_norm(m) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(m), compute_uv=False)))


def _shrink(a, tau):
    return np.sign(a) * np.maximum(np.abs(a) - tau, 0.0)


def complex_soft_threshold(x, tau: float):
    """Prox of ``tau * (|Re y| + |Im y|)``: shrink real and imaginary parts separately.

    Works on scalars and arrays. Real input gives real output.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    if not np.iscomplexobj(x):
        out = _shrink(np.asarray(x, dtype=np.float64), tau)
        return float(out) if np.ndim(out) == 0 else out
    x = np.asarray(x)
    out = _shrink(x.real, tau) + 1j * _shrink(x.imag, tau)
    return complex(out) if out.ndim == 0 else out


def threshold_stack(slices, tau: float) -> list[np.ndarray]:
    """Apply :func:`complex_soft_threshold` entrywise to every slice."""
    return [np.asarray(complex_soft_threshold(np.asarray(s, dtype=np.complex128), tau))
            for s in slices]


def complex_l1(x) -> float:
    x = np.asarray(x)
    return float(np.sum(np.abs(x.real)) + np.sum(np.abs(x.imag)))
