"""Dense complex linear algebra: Hermitian eigendecomposition, PSD functions,
tensor product, partial trace, and polar decomposition."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NotPSDError


@dataclass(frozen=True)
class Tolerances:
    """Numerical context: absolute tolerance eps plus a relative rank cutoff."""

    eps: float = 1e-9
    rank_tol_factor: float = 1e-9

    def rank_cutoff(self, lam_max: float) -> float:
        """Absolute eigenvalue cutoff for rank decisions, scaled to lam_max."""
        return self.rank_tol_factor * max(float(lam_max), 0.0)


DEFAULT_TOL = Tolerances()


def require_matrix(a) -> np.ndarray:
    """Coerce to a 2-D complex array with finite entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if m.size == 0:
        raise ValueError("empty matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf entries")
    return m


def require_square(a) -> np.ndarray:
    m = require_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def dagger(a) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a).conj().T


def freeze(a) -> np.ndarray:
    """Read-only complex copy, safe to share between immutable values."""
    out = np.array(a, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


def hermitian_part(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    return (m + m.conj().T) / 2


def is_hermitian(a, eps: float) -> bool:
    m = np.asarray(a)
    return bool(np.max(np.abs(m - m.conj().T)) <= eps)


def frob_norm(a) -> float:
    return float(np.linalg.norm(a))


def trace_norm(a) -> float:
    """Trace norm ||A||_1 = sum of singular values."""
    return float(np.sum(np.linalg.svd(np.asarray(a, dtype=complex), compute_uv=False)))


class HermitianDecomposition(NamedTuple):
    """Eigenvalues sorted descending with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _phase_fixed(v: np.ndarray, eps: float) -> np.ndarray:
    """Rotate the global phase so the first significant component is positive real."""
    idx = np.flatnonzero(np.abs(v) > eps)
    anchor = int(idx[0]) if idx.size else int(np.argmax(np.abs(v)))
    z = v[anchor]
    if abs(z) == 0.0:
        return v
    return v * (z.conjugate() / abs(z))


def eigh_desc(a, tol: Tolerances = DEFAULT_TOL) -> HermitianDecomposition:
    """Hermitian eigendecomposition with a reproducible ordering.

    Eigenvalues come out descending; near-ties are broken by comparing the
    phase-fixed eigenvector entries, so repeated runs order degenerate
    subspaces the same way.
    """
    m = require_square(a)
    w, v = np.linalg.eigh(hermitian_part(m))
    cols = [_phase_fixed(v[:, k], tol.eps) for k in range(v.shape[1])]

    def sort_key(k: int):
        ent = np.round(cols[k], 12)
        return (-round(float(w[k]), 12),
                tuple(zip((-ent.real).tolist(), (-ent.imag).tolist())))

    order = sorted(range(len(w)), key=sort_key)
    values = np.array([float(w[k]) for k in order])
    vectors = np.column_stack([cols[k] for k in order])
    return HermitianDecomposition(values, vectors)


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product; composite row index is i_a * rows_b + i_b."""
    return np.kron(require_matrix(a), require_matrix(b))


def partial_trace(m, dims, keep: int) -> np.ndarray:
    """Partial trace of an operator on A (x) B with dims = (d_A, d_B).

    keep=0 returns the A marginal, keep=1 the B marginal.
    """
    d_a, d_b = int(dims[0]), int(dims[1])
    mat = require_square(m)
    if mat.shape[0] != d_a * d_b:
        raise ValueError(f"matrix dimension {mat.shape[0]} does not equal {d_a}*{d_b}")
    if keep not in (0, 1):
        raise ValueError("keep must be 0 (first factor) or 1 (second factor)")
    t = mat.reshape(d_a, d_b, d_a, d_b)
    if keep == 0:
        return np.einsum("akbk->ab", t)
    return np.einsum("kakb->ab", t)


def psd_sqrt(a, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Principal square root of a PSD matrix.

    Eigenvalues in [-eps, 0) are treated as rounding noise and clamped to
    zero; anything below -eps raises NotPSDError.  Positive eigenvalues under
    the rank cutoff are zeroed as well, so the root's kernel agrees with
    psd_support's (a sqrt would otherwise amplify 1e-16 assembly noise into
    1e-8 kernel components).
    """
    m = require_square(a)
    if not is_hermitian(m, tol.eps):
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = eigh_desc(m, tol)
    low = float(w.min())
    if low < -tol.eps:
        raise NotPSDError(f"eigenvalue {low:.3e} is below -eps = {-tol.eps:.1e}")
    w = np.where(w > tol.rank_cutoff(float(w.max())), w, 0.0)
    return hermitian_part((v * np.sqrt(w)) @ dagger(v))


class SupportDecomposition(NamedTuple):
    """Support projector, kernel projector, and sqrt of the support-restricted inverse."""

    support: np.ndarray
    kernel: np.ndarray
    pinv_sqrt: np.ndarray


def psd_support(a, rank_tol: float | None = None,
                tol: Tolerances = DEFAULT_TOL) -> SupportDecomposition:
    """Split a PSD matrix into its support and kernel sectors.

    pinv_sqrt vanishes on the kernel and satisfies
    pinv_sqrt @ a @ pinv_sqrt == support projector.
    """
    m = require_square(a)
    if not is_hermitian(m, tol.eps):
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = eigh_desc(m, tol)
    low = float(w.min())
    if low < -tol.eps:
        raise NotPSDError(f"eigenvalue {low:.3e} is below -eps = {-tol.eps:.1e}")
    cutoff = tol.rank_cutoff(float(w.max())) if rank_tol is None else float(rank_tol)
    mask = w > cutoff
    vs = v[:, mask]
    support = vs @ dagger(vs)
    kernel = np.eye(m.shape[0], dtype=complex) - support
    inv_sqrt = np.zeros_like(w)
    inv_sqrt[mask] = 1.0 / np.sqrt(w[mask])
    pinv_sqrt = (v * inv_sqrt) @ dagger(v)
    return SupportDecomposition(hermitian_part(support), hermitian_part(kernel),
                                hermitian_part(pinv_sqrt))


def polar_decompose(m) -> tuple[np.ndarray, np.ndarray]:
    """Left polar decomposition m = V @ P with V unitary and P = sqrt(m† m).

    V pairs left with right singular vectors, which keeps it unitary (and
    deterministic) even when m is singular.
    """
    mat = require_square(m)
    u, s, vh = np.linalg.svd(mat)
    v_unitary = u @ vh
    p = dagger(vh) @ (s[:, None] * vh)
    return v_unitary, hermitian_part(p)
