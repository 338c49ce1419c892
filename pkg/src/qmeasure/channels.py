"""Linear maps on operators in three interconvertible forms (Kraus, Choi,
superoperator), with composition, the trace-pairing adjoint, and POVM
pullback through a channel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matkit
from .errors import NonPositiveEffectError, NotCPError
from .matkit import DEFAULT_TOL, Tolerances, dagger


def vec(m) -> np.ndarray:
    """Column-stacking vectorization: vec(M)[i + j*d] = M[i, j]."""
    return np.asarray(m, dtype=complex).T.reshape(-1)


def unvec(v) -> np.ndarray:
    """Inverse of vec for square matrices."""
    arr = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(arr.size)))
    if d * d != arr.size:
        raise ValueError(f"vector of length {arr.size} is not a vectorized square matrix")
    return arr.reshape(d, d).T


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Completely positive map rho -> sum_k K rho K† with d_out x d_in operators."""

    kraus: tuple[np.ndarray, ...]
    d_in: int
    d_out: int

    def __post_init__(self):
        if not self.kraus:
            raise ValueError("at least one Kraus operator is required")
        ops = []
        for k in self.kraus:
            m = matkit.require_matrix(k)
            if m.shape != (self.d_out, self.d_in):
                raise ValueError(f"Kraus operator shape {m.shape} != ({self.d_out}, {self.d_in})")
            ops.append(matkit.freeze(m))
        object.__setattr__(self, "kraus", tuple(ops))

    @classmethod
    def from_ops(cls, ops) -> "KrausChannel":
        mats = [matkit.require_matrix(k) for k in ops]
        if not mats:
            raise ValueError("at least one Kraus operator is required")
        d_out, d_in = mats[0].shape
        return cls(tuple(mats), d_in=d_in, d_out=d_out)

    def completeness(self) -> np.ndarray:
        """Sum of K† K; equals the identity for trace-preserving channels."""
        acc = np.zeros((self.d_in, self.d_in), dtype=complex)
        for k in self.kraus:
            acc += dagger(k) @ k
        return acc

    def is_trace_preserving(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return bool(np.max(np.abs(self.completeness() - np.eye(self.d_in))) <= tol.eps * self.d_in)

    def is_trace_nonincreasing(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        deficit = np.eye(self.d_in) - self.completeness()
        low = float(np.linalg.eigvalsh(matkit.hermitian_part(deficit)).min())
        return low >= -tol.eps


@dataclass(frozen=True, eq=False)
class Superoperator:
    """General linear map as a matrix acting on column-stacked operators."""

    mat: np.ndarray
    d_in: int
    d_out: int

    def __post_init__(self):
        m = matkit.require_matrix(self.mat)
        if m.shape != (self.d_out ** 2, self.d_in ** 2):
            raise ValueError(
                f"superoperator shape {m.shape} != ({self.d_out ** 2}, {self.d_in ** 2})")
        object.__setattr__(self, "mat", matkit.freeze(m))

    @classmethod
    def from_matrix(cls, mat, d_in: int | None = None, d_out: int | None = None) -> "Superoperator":
        m = matkit.require_matrix(mat)
        if d_in is None:
            d_in = int(round(np.sqrt(m.shape[1])))
        if d_out is None:
            d_out = int(round(np.sqrt(m.shape[0])))
        return cls(m, d_in=int(d_in), d_out=int(d_out))

    @classmethod
    def from_sandwich_pairs(cls, pairs, d_in: int, d_out: int) -> "Superoperator":
        """Superoperator of rho -> sum_i N_i rho M_i, given (N_i, M_i) pairs."""
        acc = np.zeros((d_out ** 2, d_in ** 2), dtype=complex)
        for left, right in pairs:
            n = matkit.require_matrix(left)
            m_right = matkit.require_matrix(right)
            acc += np.kron(m_right.T, n)
        return cls(acc, d_in=d_in, d_out=d_out)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Choi operator C = sum_ij |i><j| (x) E(|i><j|) on input (x) output."""

    mat: np.ndarray
    d_in: int
    d_out: int

    def __post_init__(self):
        m = matkit.require_square(self.mat)
        if m.shape[0] != self.d_in * self.d_out:
            raise ValueError(f"Choi dimension {m.shape[0]} != {self.d_in}*{self.d_out}")
        object.__setattr__(self, "mat", matkit.freeze(m))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(matkit.hermitian_part(self.mat)).min())

    def is_hermitian_preserving(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return matkit.is_hermitian(self.mat, tol.eps)

    def is_cp(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return self.is_hermitian_preserving(tol) and self.min_eigenvalue() >= -tol.eps


def apply_map(m, rho) -> np.ndarray:
    """Evaluate a map (in any form) on a matrix."""
    r = matkit.require_square(rho)
    if isinstance(m, KrausChannel):
        if r.shape[0] != m.d_in:
            raise ValueError(f"operand dimension {r.shape[0]} != map input {m.d_in}")
        out = np.zeros((m.d_out, m.d_out), dtype=complex)
        for k in m.kraus:
            out += k @ r @ dagger(k)
        return out
    if isinstance(m, Superoperator):
        if r.shape[0] != m.d_in:
            raise ValueError(f"operand dimension {r.shape[0]} != map input {m.d_in}")
        return unvec(m.mat @ vec(r))
    if isinstance(m, ChoiMatrix):
        if r.shape[0] != m.d_in:
            raise ValueError(f"operand dimension {r.shape[0]} != map input {m.d_in}")
        d_out = m.d_out
        out = np.zeros((d_out, d_out), dtype=complex)
        for i in range(m.d_in):
            for j in range(m.d_in):
                block = m.mat[i * d_out:(i + 1) * d_out, j * d_out:(j + 1) * d_out]
                out += r[i, j] * block
        return out
    raise TypeError(f"not a map form: {type(m).__name__}")


def superop_from_map(m) -> Superoperator:
    """Matrix form of a map given in any representation."""
    if isinstance(m, Superoperator):
        return m
    if isinstance(m, KrausChannel):
        acc = np.zeros((m.d_out ** 2, m.d_in ** 2), dtype=complex)
        for k in m.kraus:
            acc += np.kron(k.conj(), k)
        return Superoperator(acc, d_in=m.d_in, d_out=m.d_out)
    if isinstance(m, ChoiMatrix):
        cols = []
        for j in range(m.d_in):
            for i in range(m.d_in):
                unit = np.zeros((m.d_in, m.d_in), dtype=complex)
                unit[i, j] = 1.0
                cols.append(vec(apply_map(m, unit)))
        return Superoperator(np.column_stack(cols), d_in=m.d_in, d_out=m.d_out)
    raise TypeError(f"not a map form: {type(m).__name__}")


def choi_from_map(m) -> ChoiMatrix:
    """Choi operator of a map in the fixed input (x) output convention."""
    if isinstance(m, ChoiMatrix):
        return m
    if isinstance(m, KrausChannel):
        c = np.zeros((m.d_in * m.d_out,) * 2, dtype=complex)
        for k in m.kraus:
            w = k.T.reshape(-1)
            c += np.outer(w, w.conj())
        return ChoiMatrix(c, d_in=m.d_in, d_out=m.d_out)
    if isinstance(m, Superoperator):
        d_in, d_out = m.d_in, m.d_out
        c = np.zeros((d_in * d_out,) * 2, dtype=complex)
        for i in range(d_in):
            for j in range(d_in):
                unit = np.zeros((d_in, d_in), dtype=complex)
                unit[i, j] = 1.0
                c[i * d_out:(i + 1) * d_out, j * d_out:(j + 1) * d_out] = apply_map(m, unit)
        return ChoiMatrix(c, d_in=d_in, d_out=d_out)
    raise TypeError(f"not a map form: {type(m).__name__}")


def kraus_from_choi(c: ChoiMatrix, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Kraus form of a CP map from the spectral decomposition of its Choi operator.

    Operators are ordered by descending Choi eigenvalue; raises NotCPError
    when the Choi operator is not PSD.
    """
    if not matkit.is_hermitian(c.mat, tol.eps):
        raise NotCPError("Choi matrix is not Hermitian: map is not CP")
    w, v = matkit.eigh_desc(c.mat, tol)
    low = float(w.min())
    if low < -tol.eps:
        raise NotCPError(f"Choi eigenvalue {low:.3e} < 0: map is not CP")
    cutoff = tol.rank_cutoff(float(w.max()))
    ops = []
    for k in range(w.size):
        if w[k] > cutoff:
            ops.append(np.sqrt(w[k]) * v[:, k].reshape(c.d_in, c.d_out).T)
    if not ops:
        ops.append(np.zeros((c.d_out, c.d_in), dtype=complex))
    return KrausChannel(tuple(ops), d_in=c.d_in, d_out=c.d_out)


def compose(f, g):
    """The map that applies g first, then f."""
    if f.d_in != g.d_out:
        raise ValueError(
            f"cannot compose: outer map takes dimension {f.d_in}, inner produces {g.d_out}")
    if isinstance(f, KrausChannel) and isinstance(g, KrausChannel):
        ops = tuple(kf @ kg for kf in f.kraus for kg in g.kraus)
        return KrausChannel(ops, d_in=g.d_in, d_out=f.d_out)
    sf, sg = superop_from_map(f), superop_from_map(g)
    return Superoperator(sf.mat @ sg.mat, d_in=g.d_in, d_out=f.d_out)


def adjoint(m):
    """Trace-pairing dual: tr(apply(m, rho) F) == tr(rho apply(adjoint(m), F)) for all rho, F."""
    if isinstance(m, KrausChannel):
        return KrausChannel(tuple(dagger(k) for k in m.kraus), d_in=m.d_out, d_out=m.d_in)
    s = superop_from_map(m)
    cols = []
    for j in range(s.d_out):
        for i in range(s.d_out):
            unit = np.zeros((s.d_out, s.d_out), dtype=complex)
            unit[i, j] = 1.0
            dual = unvec(s.mat.T @ vec(unit.T)).T
            cols.append(vec(dual))
    return Superoperator(np.column_stack(cols), d_in=s.d_out, d_out=s.d_in)


def pullback_povm(m, p, tol: Tolerances = DEFAULT_TOL):
    """Effects of measuring p after evolving through the trace-preserving map m.

    Raises NonPositiveEffectError when a pulled-back element fails the
    spectral positivity check (such a map cannot precede a measurement).
    """
    from .measure import Effect, Povm

    dual = adjoint(m)
    preserved = apply_map(dual, np.eye(m.d_out, dtype=complex))
    if np.max(np.abs(preserved - np.eye(m.d_in))) > tol.eps * m.d_in:
        raise ValueError("map is not trace preserving; a POVM cannot be pulled back through it")
    if p.dim != m.d_out:
        raise ValueError(f"POVM dimension {p.dim} != map output dimension {m.d_out}")
    pulled = []
    for label, eff in p.outcomes:
        mat = apply_map(dual, eff.mat)
        herm = matkit.hermitian_part(mat)
        if np.max(np.abs(mat - herm)) > tol.eps:
            raise NonPositiveEffectError(f"pulled-back effect {label!r} is not Hermitian")
        low = float(np.linalg.eigvalsh(herm).min())
        if low < -tol.eps:
            raise NonPositiveEffectError(
                f"pulled-back effect {label!r} has eigenvalue {low:.3e}")
        pulled.append((label, Effect(herm, tol)))
    return Povm(tuple(pulled), tol)


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel((np.eye(d, dtype=complex),), d_in=d, d_out=d)


def unitary_channel(u, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Conjugation by a unitary, validated as such."""
    m = matkit.require_square(u)
    d = m.shape[0]
    if np.max(np.abs(dagger(m) @ m - np.eye(d))) > tol.eps * d:
        raise ValueError("operator is not unitary within tolerance")
    return KrausChannel((m,), d_in=d, d_out=d)


def transpose_superoperator(d: int) -> Superoperator:
    """The positive but not completely positive map rho -> rho^T."""
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[i + j * d, j + i * d] = 1.0
    return Superoperator(s, d_in=d, d_out=d)


def completely_depolarizing(d: int) -> KrausChannel:
    """rho -> tr(rho) I/d."""
    ops = []
    for a in range(d):
        for ell in range(d):
            k = np.zeros((d, d), dtype=complex)
            k[a, ell] = 1.0 / np.sqrt(d)
            ops.append(k)
    return KrausChannel(tuple(ops), d_in=d, d_out=d)
