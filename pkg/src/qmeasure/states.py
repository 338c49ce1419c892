"""Density operators, ensembles of states, purification, and remote steering
of ensemble decompositions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matkit
from .errors import TargetMismatchError, UnsupportedMemberError
from .matkit import DEFAULT_TOL, Tolerances, dagger


def density_matrix_from(state) -> np.ndarray:
    """Accept a ket (1-D, normalized here) or a square matrix; return a density matrix."""
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        nrm = float(np.linalg.norm(arr))
        if nrm == 0.0:
            raise ValueError("zero state vector")
        ket = arr / nrm
        return np.outer(ket, ket.conj())
    return matkit.require_square(arr)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, PSD, unit-trace operator; invariants are checked on construction."""

    mat: np.ndarray
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        m = matkit.require_square(self.mat)
        eps = self.tol.eps
        if not matkit.is_hermitian(m, eps):
            raise ValueError("density operator is not Hermitian within tolerance")
        m = matkit.hermitian_part(m)
        low = float(np.linalg.eigvalsh(m).min())
        if low < -eps:
            raise ValueError(f"density operator has negative eigenvalue {low:.3e}")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > eps:
            raise ValueError(f"density operator trace {tr.real:.12g} differs from 1")
        object.__setattr__(self, "mat", matkit.freeze(m))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def from_vector(cls, psi, tol: Tolerances = DEFAULT_TOL) -> "DensityOperator":
        return cls(density_matrix_from(np.asarray(psi, dtype=complex).reshape(-1)), tol)

    def purity(self) -> float:
        return float(np.trace(self.mat @ self.mat).real)

    def is_pure(self) -> bool:
        return abs(self.purity() - 1.0) <= 10 * self.tol.eps


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Weighted list of states whose weights form a probability distribution."""

    members: tuple[tuple[float, DensityOperator], ...]
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        dims = {s.dim for _, s in self.members}
        if len(dims) != 1:
            raise ValueError(f"ensemble members live on different dimensions: {sorted(dims)}")
        weights = np.array([w for w, _ in self.members], dtype=float)
        if np.any(weights < -self.tol.eps):
            raise ValueError("ensemble weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > self.tol.eps:
            raise ValueError(f"ensemble weights sum to {weights.sum():.12g}, not 1")
        object.__setattr__(self, "members",
                           tuple((float(w), s) for w, s in self.members))

    @classmethod
    def of(cls, *members, tol: Tolerances = DEFAULT_TOL) -> "Ensemble":
        """Build from (weight, state) pairs; states may be kets, matrices, or DensityOperators."""
        coerced = []
        for w, s in members:
            state = s if isinstance(s, DensityOperator) else DensityOperator(density_matrix_from(s), tol)
            coerced.append((float(w), state))
        return cls(tuple(coerced), tol)

    @property
    def dim(self) -> int:
        return self.members[0][1].dim


def mix(e: Ensemble) -> DensityOperator:
    """Weighted average of the ensemble members."""
    acc = np.zeros((e.dim, e.dim), dtype=complex)
    for w, s in e.members:
        acc += w * s.mat
    return DensityOperator(acc, e.tol)


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """Density operator on a two-factor tensor space, dims = (d_first, d_second)."""

    dims: tuple[int, int]
    state: DensityOperator

    def __post_init__(self):
        d_a, d_b = int(self.dims[0]), int(self.dims[1])
        if d_a < 1 or d_b < 1:
            raise ValueError("factor dimensions must be positive")
        if self.state.dim != d_a * d_b:
            raise ValueError(f"state dimension {self.state.dim} != {d_a}*{d_b}")
        object.__setattr__(self, "dims", (d_a, d_b))

    @classmethod
    def from_vector(cls, psi, dims, tol: Tolerances = DEFAULT_TOL) -> "BipartiteState":
        return cls(tuple(int(d) for d in dims), DensityOperator.from_vector(psi, tol))

    def reduced(self, keep: int) -> DensityOperator:
        return DensityOperator(matkit.partial_trace(self.state.mat, self.dims, keep),
                               self.state.tol)


def pure_ket(rho: DensityOperator) -> np.ndarray:
    """State vector of a pure density operator (phase-fixed)."""
    if not rho.is_pure():
        raise ValueError(f"state is not pure (purity {rho.purity():.6g})")
    _, v = matkit.eigh_desc(rho.mat, rho.tol)
    return v[:, 0]


def purify(rho: DensityOperator) -> BipartiteState:
    """Pure state on ancilla (x) system whose second-factor marginal is rho.

    The ancilla copies the system dimension and the Schmidt vectors follow
    the descending eigenvalue order, so the output is reproducible.
    """
    w, v = matkit.eigh_desc(rho.mat, rho.tol)
    d = rho.dim
    psi = np.zeros(d * d, dtype=complex)
    for k in range(d):
        lam = max(float(w[k]), 0.0)
        if lam == 0.0:
            continue
        anc = np.zeros(d, dtype=complex)
        anc[k] = 1.0
        psi += np.sqrt(lam) * np.kron(anc, v[:, k])
    psi /= np.linalg.norm(psi)
    return BipartiteState.from_vector(psi, (d, d), rho.tol)


def steering_povm(psi: BipartiteState, target: Ensemble):
    """POVM on the first factor that remotely prepares `target` on the second.

    Outcome i leaves the second factor holding the unnormalized state
    q_i |phi_i><phi_i|.  Construction: compress each weighted target member
    by the inverse square root of the second marginal, transpose, and carry
    it to the first factor through the Schmidt-basis identification; the
    projector onto the first factor's unused subspace is folded into the
    highest-weight outcome.  The advertised action is re-verified before the
    POVM is returned.
    """
    from .measure import Povm

    tol = psi.state.tol
    d_a, d_b = psi.dims
    if not psi.state.is_pure():
        raise ValueError("steering needs a pure bipartite state")
    if target.dim != d_b:
        raise ValueError(f"target dimension {target.dim} != second factor dimension {d_b}")

    rho_b = psi.reduced(1)
    avg = mix(target)
    mismatch = float(np.max(np.abs(avg.mat - rho_b.mat)))
    if mismatch > tol.eps:
        raise TargetMismatchError(f"target ensemble misses the reduced state by {mismatch:.3e}")

    supp = matkit.psd_support(rho_b.mat, tol=tol)
    for idx, (_, member) in enumerate(target.members):
        leak = float(np.trace(supp.kernel @ member.mat).real)
        if leak > tol.eps:
            raise UnsupportedMemberError(f"member {idx} leaves the support (leak {leak:.3e})")

    ket = pure_ket(psi.state)
    coeff = ket.reshape(d_a, d_b)
    u, s, vh = np.linalg.svd(coeff)
    lam_max = float((s ** 2).max())
    rank = int(np.sum(s ** 2 > tol.rank_cutoff(lam_max)))
    alice_basis = u[:, :rank]
    bob_rows = vh[:rank, :]

    effects = []
    for weight, member in target.members:
        compressed = supp.pinv_sqrt @ (weight * member.mat) @ supp.pinv_sqrt
        tilde = bob_rows.conj() @ compressed @ bob_rows.T
        effects.append(matkit.hermitian_part(alice_basis @ tilde.T @ dagger(alice_basis)))

    leftover = np.eye(d_a, dtype=complex) - alice_basis @ dagger(alice_basis)
    top = max(range(len(target.members)), key=lambda i: target.members[i][0])
    effects[top] = matkit.hermitian_part(effects[top] + leftover)

    povm = Povm.from_effects(effects, tol=tol)
    psi_mat = psi.state.mat
    for eff, (weight, member) in zip(povm.effects, target.members):
        steered = matkit.partial_trace(
            matkit.tensor_product(eff.mat, np.eye(d_b)) @ psi_mat, (d_a, d_b), keep=1)
        err = float(np.max(np.abs(steered - weight * member.mat)))
        if err > tol.eps:
            raise RuntimeError(f"steering construction failed verification ({err:.3e})")
    return povm
