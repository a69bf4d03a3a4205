"""Dense complex linear algebra and FFT helpers shared by every other module."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

# eigenvector condition beyond which diagonalization is not trusted
DEFECTIVE_COND = 1e8


class SingularMatrixError(np.linalg.LinAlgError):
    pass


def as_complex_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite 2D complex128 array."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class LuFactorization:
    lu: np.ndarray
    piv: np.ndarray

    @property
    def dim(self) -> int:
        return self.lu.shape[0]


def lu_factor(a, rtol: float = 1e-14) -> LuFactorization:
    a = as_complex_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"LU needs a square matrix, got {a.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    diag = np.abs(np.diag(lu))
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    if diag.size and diag.min() <= rtol * scale:
        raise SingularMatrixError(
            f"matrix is singular to working precision (min pivot {diag.min():.3e})")
    return LuFactorization(lu, piv)


def lu_solve(fact: LuFactorization, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=np.complex128)
    if rhs.shape[0] != fact.dim:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, factorization has {fact.dim}")
    return scipy.linalg.lu_solve((fact.lu, fact.piv), rhs, check_finite=False)


@dataclass(frozen=True)
class EigenDecomposition:
    """M = P diag(eigenvalues) P^{-1}."""

    eigenvalues: np.ndarray
    P: np.ndarray
    Pinv: np.ndarray
    cond: float

    @property
    def defective(self) -> bool:
        return not np.isfinite(self.cond) or self.cond > DEFECTIVE_COND

    def reconstruct(self) -> np.ndarray:
        return (self.P * self.eigenvalues) @ self.Pinv

    def apply(self, values) -> np.ndarray:
        """P diag(values) P^{-1} for scalar values attached to each eigenvalue."""
        return (self.P * np.asarray(values)) @ self.Pinv


def _eig2(m: np.ndarray):
    a, b = m[0, 0], m[0, 1]
    c, d = m[1, 0], m[1, 1]
    half_tr = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    # pick the root without cancellation, recover the other from the determinant
    l1 = half_tr + disc if abs(half_tr + disc) >= abs(half_tr - disc) else half_tr - disc
    det = a * d - b * c
    l2 = det / l1 if l1 != 0 else 2 * half_tr - l1
    lam = np.array([l1, l2], dtype=np.complex128)
    if b == 0 and c == 0:
        # already diagonal: keep the natural order
        lam = np.array([a, d], dtype=np.complex128)
        return lam, np.eye(2, dtype=np.complex128)
    scale = max(abs(a), abs(b), abs(c), abs(d))
    vecs = np.empty((2, 2), dtype=np.complex128)
    for k, lk in enumerate(lam):
        # both are null vectors of M - lk I; the longer one is better conditioned
        v1 = np.array([b, lk - a])
        v2 = np.array([lk - d, c])
        v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
        nv = np.linalg.norm(v)
        if nv <= 1e-300 + 1e-15 * scale:
            v = np.eye(2)[k]
            nv = 1.0
        vecs[:, k] = v / nv
    return lam, vecs


def eig_small(m) -> EigenDecomposition:
    """Eigendecomposition of a 1x1, 2x2 or 3x3 complex matrix.

    Closed form for dimension <= 2, LAPACK (shifted QR) for dimension 3.
    Check ``.defective`` before trusting the result.
    """
    m = as_complex_matrix(m)
    n = m.shape[0]
    if m.shape != (n, n) or n not in (1, 2, 3):
        raise ValueError(f"eig_small supports 1x1..3x3 matrices, got {m.shape}")
    if n == 1:
        one = np.ones((1, 1), dtype=np.complex128)
        return EigenDecomposition(m[0].copy(), one, one.copy(), 1.0)
    if n == 2:
        lam, vecs = _eig2(m)
    else:
        lam, vecs = np.linalg.eig(m)
        vecs = vecs / np.linalg.norm(vecs, axis=0)
    cond = np.linalg.cond(vecs)
    if not np.isfinite(cond) or cond > 1e15:
        return EigenDecomposition(lam, vecs, np.full_like(vecs, np.nan), np.inf)
    return EigenDecomposition(lam, vecs, np.linalg.inv(vecs), float(max(cond, 1.0)))


def fft_inverse_scaled(samples, lam: float, n: int | None = None):
    """Scaled inverse DFT of contour samples.

    Returns ``lam**-j / (Q+1) * sum_l samples[l] * zeta**(l*j)`` with
    ``zeta = exp(2 pi i / (Q+1))`` for j = 0..Q, the transform taken along
    axis 0 so that vector- or matrix-valued samples are handled entrywise.
    With ``n`` given only that coefficient is returned.
    """
    if lam <= 0:
        raise ValueError("contour radius must be positive")
    samples = np.asarray(samples, dtype=np.complex128)
    length = samples.shape[0]
    coeffs = np.fft.ifft(samples, axis=0)
    scale = float(lam) ** -np.arange(length, dtype=float)
    coeffs *= scale.reshape((-1,) + (1,) * (samples.ndim - 1))
    if n is None:
        return coeffs
    return coeffs[n]
