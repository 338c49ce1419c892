"""Splitting a measurement-outcome map into the ideal square-root update
followed by a trace-preserving channel.

Given a CP map B and an effect F locked together by tr(B(rho)) = tr(rho F),
`decompose` constructs a CPTP map E with B(rho) = E(sqrt(F) rho sqrt(F)):
compress B's Kraus operators by the support-restricted inverse root of F and
route F's kernel through a fixed depolarizing channel.  The kernel never
contributes to reconstructed outputs, so any trace-preserving choice there
works; fixing one keeps the output deterministic.  E is therefore not unique,
and callers should compare reconstructions, never the channels themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matkit
from .channels import KrausChannel, apply_map, choi_from_map
from .errors import PremiseViolatedError
from .matkit import DEFAULT_TOL, Tolerances, dagger
from .measure import Effect

PREMISE_SLACK = 10.0
"""Premise residuals may exceed eps by this factor before raising; two
spectral decompositions feed the construction."""


@dataclass(frozen=True)
class PremiseReport:
    """Residuals of the trace pairing and of the two vanishing-term identities."""

    trace_residual: float
    kernel_residual: float
    cross_residual: float
    support_rank: int
    borderline_eigenvalues: tuple[float, ...]
    trials: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "trace_residual": self.trace_residual,
            "kernel_residual": self.kernel_residual,
            "cross_residual": self.cross_residual,
            "support_rank": self.support_rank,
            "borderline_eigenvalues": list(self.borderline_eigenvalues),
            "trials": self.trials,
            "seed": self.seed,
        }


def _random_density_matrix(d: int, rng) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ dagger(g)
    return rho / float(np.trace(rho).real)


def verify_premise(b: KrausChannel, f: Effect, trials: int = 20, seed: int = 7,
                   tol: Tolerances = DEFAULT_TOL) -> PremiseReport:
    """Check tr(B(rho)) = tr(rho F) plus the kernel and cross-term identities.

    The trace pairing is checked exactly on the matrix-unit basis, where it
    reduces to sum K†K == F; the kernel term B(P_ker rho P_ker) and the cross
    term B(P_sup rho P_ker + P_ker rho P_sup) are evaluated on random states.
    Raises PremiseViolatedError when the pairing fails; the vanishing terms
    are reported, not enforced.
    """
    if b.d_in != f.dim:
        raise ValueError(f"map input dimension {b.d_in} != effect dimension {f.dim}")
    trace_residual = float(np.max(np.abs(b.completeness() - f.mat)))
    if trace_residual > PREMISE_SLACK * tol.eps:
        raise PremiseViolatedError(
            f"tr(B(rho)) != tr(rho F): basis residual {trace_residual:.3e}")

    w, _ = matkit.eigh_desc(f.mat, tol)
    cutoff = tol.rank_cutoff(float(w.max()))
    support_rank = int(np.sum(w > cutoff))
    borderline = tuple(float(x) for x in w if cutoff / 10.0 < x <= cutoff * 10.0)

    supp = matkit.psd_support(f.mat, tol=tol)
    rng = np.random.default_rng(seed)
    kernel_residual = 0.0
    cross_residual = 0.0
    for _ in range(trials):
        rho = _random_density_matrix(f.dim, rng)
        kern = supp.kernel @ rho @ supp.kernel
        cross = supp.support @ rho @ supp.kernel + supp.kernel @ rho @ supp.support
        kernel_residual = max(kernel_residual, matkit.frob_norm(apply_map(b, kern)))
        cross_residual = max(cross_residual, matkit.frob_norm(apply_map(b, cross)))
    return PremiseReport(trace_residual, kernel_residual, cross_residual,
                         support_rank, borderline, trials, seed)


def reconstruction_residual(b: KrausChannel, f: Effect, e: KrausChannel,
                            trials: int = 20, seed: int = 11,
                            tol: Tolerances = DEFAULT_TOL) -> float:
    """Largest trace-norm gap between B(rho) and E(sqrt(F) rho sqrt(F)) on random states."""
    root = matkit.psd_sqrt(f.mat, tol)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        rho = _random_density_matrix(f.dim, rng)
        delta = apply_map(b, rho) - apply_map(e, root @ rho @ root)
        worst = max(worst, matkit.trace_norm(delta))
    return worst


def decompose(b: KrausChannel, f: Effect, check: bool = True,
              tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Trace-preserving channel E with B(rho) = E(sqrt(F) rho sqrt(F)).

    Kraus set: each of B's operators compressed by the support-restricted
    inverse root of F, plus a depolarize-to-maximally-mixed block on F's
    kernel.  With check=True (default) the reconstruction and trace
    preservation are re-verified on random states before returning.
    """
    verify_premise(b, f, tol=tol)
    supp = matkit.psd_support(f.mat, tol=tol)
    d, d_out = f.dim, b.d_out
    ops = [k @ supp.pinv_sqrt for k in b.kraus]
    kernel_w, kernel_v = matkit.eigh_desc(supp.kernel, tol)
    for idx in range(d):
        if kernel_w[idx] > 0.5:  # projector spectrum is {0, 1}
            bra = kernel_v[:, idx].conj()
            for a in range(d_out):
                k = np.zeros((d_out, d), dtype=complex)
                k[a, :] = bra / np.sqrt(d_out)
                ops.append(k)
    result = KrausChannel(tuple(ops), d_in=d, d_out=d_out)
    if check:
        tp_residual = float(np.max(np.abs(result.completeness() - np.eye(d))))
        if tp_residual > tol.eps * d:
            raise ArithmeticError(
                f"decomposition is not trace preserving: residual {tp_residual:.3e}")
        bound = tol.eps * d
        worst = reconstruction_residual(b, f, result, tol=tol)
        if worst > bound:
            raise ArithmeticError(
                f"reconstruction residual {worst:.3e} exceeds {bound:.1e}")
    return result


def kraus_rank(b: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> int:
    """Number of significant Choi eigenvalues; 1 exactly for single-operator maps."""
    choi = choi_from_map(b)
    w = np.linalg.eigvalsh(matkit.hermitian_part(choi.mat))
    cutoff = tol.rank_cutoff(float(w.max()))
    return int(np.sum(w > cutoff))
