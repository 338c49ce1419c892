"""Effects, POVMs, and instruments: outcome probabilities, post-measurement
states, and fusion of successive measurements into a single one."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels, matkit
from .channels import KrausChannel, apply_map
from .matkit import DEFAULT_TOL, Tolerances, dagger
from .states import DensityOperator

P_FLOOR = 1e-12
"""Outcome probabilities at or below this floor are reported without a post-state."""

LABEL_SEPARATOR = "·"
"""Joiner for outcome labels of fused measurements."""


@dataclass(frozen=True, eq=False)
class Effect:
    """Positive operator with spectrum inside [0, 1] (up to eps slack)."""

    mat: np.ndarray
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        m = matkit.require_square(self.mat)
        eps = self.tol.eps
        if not matkit.is_hermitian(m, eps):
            raise ValueError("effect is not Hermitian within tolerance")
        m = matkit.hermitian_part(m)
        w = np.linalg.eigvalsh(m)
        if float(w.min()) < -eps or float(w.max()) > 1.0 + eps:
            raise ValueError(f"effect spectrum [{w.min():.6g}, {w.max():.6g}] leaves [0, 1]")
        object.__setattr__(self, "mat", matkit.freeze(m))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True, eq=False)
class Povm:
    """Labelled effects summing to the identity."""

    outcomes: tuple[tuple[str, Effect], ...]
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        if not self.outcomes:
            raise ValueError("POVM needs at least one outcome")
        labels = [label for label, _ in self.outcomes]
        if len(set(labels)) != len(labels):
            raise ValueError("POVM outcome labels must be unique")
        dims = {eff.dim for _, eff in self.outcomes}
        if len(dims) != 1:
            raise ValueError("POVM effects live on different dimensions")
        d = dims.pop()
        total = np.zeros((d, d), dtype=complex)
        for _, eff in self.outcomes:
            total = total + eff.mat
        residual = float(np.max(np.abs(total - np.eye(d))))
        if residual > self.tol.eps * d:
            raise ValueError(
                f"POVM completeness residual {residual:.3e} exceeds {self.tol.eps * d:.1e}")
        object.__setattr__(self, "outcomes",
                           tuple((str(label), eff) for label, eff in self.outcomes))

    @classmethod
    def from_effects(cls, mats, labels=None, tol: Tolerances = DEFAULT_TOL) -> "Povm":
        if labels is None:
            labels = [str(i) for i in range(len(mats))]
        built = tuple(
            (str(label), m if isinstance(m, Effect) else Effect(m, tol))
            for label, m in zip(labels, mats))
        return cls(built, tol)

    @property
    def dim(self) -> int:
        return self.outcomes[0][1].dim

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.outcomes)

    @property
    def effects(self) -> tuple[Effect, ...]:
        return tuple(eff for _, eff in self.outcomes)

    def effect(self, label: str) -> Effect:
        for name, eff in self.outcomes:
            if name == label:
                return eff
        raise KeyError(f"no outcome labelled {label!r}")


@dataclass(frozen=True, eq=False)
class Instrument:
    """Outcome-labelled CP maps whose total is trace preserving."""

    outcomes: tuple[tuple[str, KrausChannel], ...]
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        if not self.outcomes:
            raise ValueError("instrument needs at least one outcome")
        labels = [label for label, _ in self.outcomes]
        if len(set(labels)) != len(labels):
            raise ValueError("instrument outcome labels must be unique")
        d_ins = {ch.d_in for _, ch in self.outcomes}
        d_outs = {ch.d_out for _, ch in self.outcomes}
        if len(d_ins) != 1 or len(d_outs) != 1:
            raise ValueError("instrument outcome maps must share input and output dimensions")
        d_in = d_ins.pop()
        total = np.zeros((d_in, d_in), dtype=complex)
        for _, ch in self.outcomes:
            total = total + ch.completeness()
        residual = float(np.max(np.abs(total - np.eye(d_in))))
        if residual > self.tol.eps:
            raise ValueError(
                f"instrument total-trace residual {residual:.3e} exceeds {self.tol.eps:.1e}")
        object.__setattr__(self, "outcomes",
                           tuple((str(label), ch) for label, ch in self.outcomes))

    @property
    def d_in(self) -> int:
        return self.outcomes[0][1].d_in

    @property
    def d_out(self) -> int:
        return self.outcomes[0][1].d_out

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.outcomes)

    def channel(self, label: str) -> KrausChannel:
        for name, ch in self.outcomes:
            if name == label:
                return ch
        raise KeyError(f"no outcome labelled {label!r}")


def probabilities(rho: DensityOperator, p: Povm) -> list[tuple[str, float]]:
    """Outcome distribution tr(rho F) over the POVM, clamped into [0, 1]."""
    if rho.dim != p.dim:
        raise ValueError(f"state dimension {rho.dim} != POVM dimension {p.dim}")
    out = []
    for label, eff in p.outcomes:
        val = float(np.trace(rho.mat @ eff.mat).real)
        out.append((label, min(max(val, 0.0), 1.0)))
    total = sum(pr for _, pr in out)
    if abs(total - 1.0) > p.tol.eps * p.dim:
        raise ArithmeticError(f"probabilities sum to {total:.12g}, not 1")
    return out


def induced_povm(inst: Instrument) -> Povm:
    """The POVM the instrument implements: per outcome, F = sum K† K."""
    effects = tuple((label, Effect(ch.completeness(), inst.tol))
                    for label, ch in inst.outcomes)
    return Povm(effects, inst.tol)


def luders_from_povm(p: Povm) -> Instrument:
    """Ideal instrument for a POVM: outcome maps rho -> sqrt(F) rho sqrt(F)."""
    outs = []
    for label, eff in p.outcomes:
        root = matkit.psd_sqrt(eff.mat, p.tol)
        outs.append((label, KrausChannel((root,), d_in=p.dim, d_out=p.dim)))
    return Instrument(tuple(outs), p.tol)


def from_generalized(ms, labels=None, tol: Tolerances = DEFAULT_TOL) -> Instrument:
    """Instrument of measurement operators {M}: outcome maps rho -> M rho M†.

    Requires the completeness relation sum M† M = I.
    """
    mats = [matkit.require_matrix(m) for m in ms]
    if not mats:
        raise ValueError("at least one measurement operator is required")
    d_in = mats[0].shape[1]
    total = np.zeros((d_in, d_in), dtype=complex)
    for m in mats:
        total = total + dagger(m) @ m
    residual = float(np.max(np.abs(total - np.eye(d_in))))
    if residual > tol.eps * d_in:
        raise ValueError(f"measurement operators are incomplete: residual {residual:.3e}")
    if labels is None:
        labels = [str(i) for i in range(len(mats))]
    outs = tuple(
        (str(label), KrausChannel((m,), d_in=m.shape[1], d_out=m.shape[0]))
        for label, m in zip(labels, mats))
    return Instrument(outs, tol)


def from_effect_channel_pairs(pairs, labels=None, tol: Tolerances = DEFAULT_TOL) -> Instrument:
    """Instrument with outcome maps E(sqrt(F) rho sqrt(F)) from (effect, channel) pairs.

    The effects must form a POVM and every conditional channel must be trace
    preserving; the induced POVM of the result reproduces the input effects.
    """
    forged = []
    for eff, ch in pairs:
        effect = eff if isinstance(eff, Effect) else Effect(matkit.require_square(eff), tol)
        if not isinstance(ch, KrausChannel):
            raise TypeError("outcome channels must be KrausChannel instances")
        forged.append((effect, ch))
    Povm.from_effects([e for e, _ in forged], tol=tol)
    if labels is None:
        labels = [str(i) for i in range(len(forged))]
    outs = []
    for label, (effect, ch) in zip(labels, forged):
        if ch.d_in != effect.dim:
            raise ValueError(f"channel input {ch.d_in} does not match effect dimension {effect.dim}")
        if not ch.is_trace_preserving(tol):
            raise ValueError(f"conditional channel for outcome {label!r} is not trace preserving")
        root = matkit.psd_sqrt(effect.mat, tol)
        outs.append((str(label),
                     KrausChannel(tuple(k @ root for k in ch.kraus),
                                  d_in=effect.dim, d_out=ch.d_out)))
    return Instrument(tuple(outs), tol)


@dataclass(frozen=True)
class OutcomeResult:
    """One measurement branch; state is None when the probability is below P_FLOOR."""

    label: str
    probability: float
    state: DensityOperator | None


def branch_state(unnormalized, probability: float,
                 tol: Tolerances = DEFAULT_TOL) -> DensityOperator:
    """Normalize an unnormalized branch output into a DensityOperator.

    Dividing by a small probability amplifies the absolute roundoff in the
    branch output, so eigenvalues inside the amplified-noise window are
    clipped to zero before validation; anything more negative is genuine and
    still raises.
    """
    mat = matkit.hermitian_part(unnormalized) / probability
    noise = 100.0 * np.finfo(float).eps / probability
    w = np.linalg.eigvalsh(mat)
    low = float(w.min())
    if -(tol.eps + noise) <= low < 0.0:
        w2, v = np.linalg.eigh(mat)
        mat = (v * np.clip(w2, 0.0, None)) @ v.conj().T
        mat = mat / float(np.trace(mat).real)
    return DensityOperator(mat, tol)


def apply_instrument(inst: Instrument, rho: DensityOperator) -> list[OutcomeResult]:
    """All measurement branches: probability tr(B(rho)) and normalized post-state."""
    if rho.dim != inst.d_in:
        raise ValueError(f"state dimension {rho.dim} != instrument input {inst.d_in}")
    results = []
    for label, ch in inst.outcomes:
        out = apply_map(ch, rho.mat)
        prob = min(max(float(np.trace(out).real), 0.0), 1.0)
        if prob <= P_FLOOR:
            results.append(OutcomeResult(label, prob, None))
        else:
            results.append(OutcomeResult(label, prob, branch_state(out, prob, inst.tol)))
    return results


def fuse_sequential(first: Instrument, second: Instrument) -> Instrument:
    """One instrument equivalent to running `first` and then `second`.

    Outcome (mu, nu) is labelled "mu·nu" and carries the composed map
    B_nu ∘ B_mu; the induced effects are the second-stage effects pulled
    back through the first-stage maps.
    """
    if second.d_in != first.d_out:
        raise ValueError(
            f"cannot chain: first stage outputs {first.d_out}, second expects {second.d_in}")
    outs = []
    for mu, b_mu in first.outcomes:
        for nu, b_nu in second.outcomes:
            outs.append((f"{mu}{LABEL_SEPARATOR}{nu}", channels.compose(b_nu, b_mu)))
    return Instrument(tuple(outs), first.tol)
