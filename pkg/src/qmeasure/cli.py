"""Command-line surface: validate object files, fuse and decompose
instruments, evaluate probabilities and channels, and run property suites.

Machine-readable JSON goes to stdout, human-readable notes to stderr.
Exit codes: 0 ok, 1 parse error, 2 invariant/dimension/premise failure,
3 suite failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import decomposition, harness, matkit, serialize
from .channels import KrausChannel, Superoperator, choi_from_map
from .errors import PremiseViolatedError
from .matkit import Tolerances
from .measure import Instrument, Povm, fuse_sequential, induced_povm, probabilities
from .states import DensityOperator

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INVARIANT = 2
EXIT_SUITE = 3


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _report(payload: dict) -> None:
    print(json.dumps(payload))


def _tolerances(args) -> Tolerances:
    return Tolerances(eps=args.tol, rank_tol_factor=args.rank_tol)


def _load(path: str, tol: Tolerances):
    """Returns (object, exit_code, error_message); object is None on failure."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        return None, EXIT_PARSE, f"cannot read {path}: {exc}"
    try:
        parsed = serialize.parse_text(text)
    except serialize.ParseError as exc:
        return None, EXIT_PARSE, f"parse error in {path}: {exc}"
    try:
        return serialize.build(parsed, tol), EXIT_OK, ""
    except ValueError as exc:
        return None, EXIT_INVARIANT, f"invariant violation in {path}: {exc}"


def _load_as(path: str, wanted, tol: Tolerances):
    obj, code, msg = _load(path, tol)
    if obj is None:
        return None, code, msg
    if not isinstance(obj, wanted):
        names = wanted.__name__ if isinstance(wanted, type) else \
            "/".join(w.__name__ for w in wanted)
        return None, EXIT_PARSE, f"{path}: expected a {names} file, got {type(obj).__name__}"
    return obj, EXIT_OK, ""


def cmd_verify(args) -> int:
    tol = _tolerances(args)
    obj, code, msg = _load(args.path, tol)
    if obj is None:
        _say(msg)
        _report({"command": "verify", "path": args.path, "ok": False, "error": msg})
        return code
    flags: dict = {}
    if isinstance(obj, Superoperator):
        choi = choi_from_map(obj)
        tp_gap = float(np.max(np.abs(
            matkit.partial_trace(choi.mat, (obj.d_in, obj.d_out), keep=0)
            - np.eye(obj.d_in))))
        flags = {"cp": choi.is_cp(tol),
                 "hermiticity_preserving": choi.is_hermitian_preserving(tol),
                 "trace_preserving": tp_gap <= tol.eps * obj.d_in,
                 "min_choi_eigenvalue": choi.min_eigenvalue()}
    elif isinstance(obj, KrausChannel):
        flags = {"cp": True,
                 "trace_preserving": obj.is_trace_preserving(tol),
                 "trace_nonincreasing": obj.is_trace_nonincreasing(tol)}
        if not flags["trace_nonincreasing"]:
            msg = f"invariant violation in {args.path}: Kraus map increases trace"
            _say(msg)
            _report({"command": "verify", "path": args.path, "ok": False,
                     "error": msg, "flags": flags})
            return EXIT_INVARIANT
    kind = serialize.to_payload(obj)["kind"]
    _report({"command": "verify", "path": args.path, "ok": True, "kind": kind,
             "flags": flags})
    _say(f"{args.path}: valid {kind}")
    return EXIT_OK


def cmd_fuse(args) -> int:
    tol = _tolerances(args)
    first, code, msg = _load_as(args.first, Instrument, tol)
    if first is None:
        _say(msg)
        return code
    second, code, msg = _load_as(args.second, Instrument, tol)
    if second is None:
        _say(msg)
        return code
    try:
        fused = fuse_sequential(first, second)
    except ValueError as exc:
        _say(f"cannot fuse: {exc}")
        return EXIT_INVARIANT
    serialize.write_file(args.out, fused)
    omega = induced_povm(fused)
    _report({"command": "fuse", "out": args.out,
             "effects": [{"label": label, "mat": serialize.matrix_payload(eff.mat)}
                         for label, eff in omega.outcomes]})
    _say(f"wrote fused instrument with outcomes {list(fused.labels)} to {args.out}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    tol = _tolerances(args)
    inst, code, msg = _load_as(args.instrument, Instrument, tol)
    if inst is None:
        _say(msg)
        return code
    try:
        channel = inst.channel(args.label)
        effect = induced_povm(inst).effect(args.label)
    except KeyError as exc:
        _say(str(exc))
        return EXIT_INVARIANT
    try:
        premise = decomposition.verify_premise(channel, effect, tol=tol)
        conditional = decomposition.decompose(channel, effect, tol=tol)
    except PremiseViolatedError as exc:
        _say(f"premise violated: {exc}")
        return EXIT_INVARIANT
    recon = decomposition.reconstruction_residual(channel, effect, conditional, tol=tol)
    _report({"command": "decompose", "label": args.label,
             "effect": serialize.matrix_payload(effect.mat),
             "conditional_kraus": [serialize.matrix_payload(k) for k in conditional.kraus],
             "premise": premise.to_dict(),
             "reconstruction_residual": recon,
             "kraus_rank": decomposition.kraus_rank(channel, tol)})
    _say(f"outcome {args.label!r}: reconstruction residual {recon:.3e}")
    return EXIT_OK


def cmd_probs(args) -> int:
    tol = _tolerances(args)
    rho, code, msg = _load_as(args.state, DensityOperator, tol)
    if rho is None:
        _say(msg)
        return code
    povm, code, msg = _load_as(args.povm, Povm, tol)
    if povm is None:
        _say(msg)
        return code
    try:
        dist = probabilities(rho, povm)
    except ValueError as exc:
        _say(str(exc))
        return EXIT_INVARIANT
    _report({"command": "probs",
             "probabilities": [{"label": label, "p": p} for label, p in dist]})
    for label, p in dist:
        _say(f"  {label}: {p:.6f}")
    return EXIT_OK


def cmd_evolve(args) -> int:
    tol = _tolerances(args)
    channel, code, msg = _load_as(args.channel, (KrausChannel, Superoperator), tol)
    if channel is None:
        _say(msg)
        return code
    rho, code, msg = _load_as(args.state, DensityOperator, tol)
    if rho is None:
        _say(msg)
        return code
    from .channels import apply_map
    try:
        out = apply_map(channel, rho.mat)
        evolved = DensityOperator(out, tol)
    except ValueError as exc:
        _say(f"evolution failed: {exc}")
        return EXIT_INVARIANT
    if args.out:
        serialize.write_file(args.out, evolved)
        _say(f"wrote evolved state to {args.out}")
    _report({"command": "evolve", "out": args.out,
             "state": serialize.matrix_payload(evolved.mat)})
    return EXIT_OK


def _parse_dims(raw: str | None, default: tuple[int, ...]) -> tuple[int, ...]:
    if raw is None:
        return default
    try:
        dims = tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --dims value {raw!r}") from None
    if not dims or any(d < 2 for d in dims):
        raise argparse.ArgumentTypeError("--dims needs integers >= 2")
    return dims


def cmd_suite(args) -> int:
    tol = _tolerances(args)
    seed = args.seed
    names = ["nosignal", "linearity", "lemma"] if args.name == "all" else [args.name]
    reports = []
    for name in names:
        if name == "nosignal":
            rep = harness.run_nosignal_suite(
                trials=args.trials or 200, seed=seed,
                dims=_parse_dims(args.dims, (2, 3)), tol=tol)
        elif name == "linearity":
            nonlinear = harness.nonlinear_square_map if args.demo_nonlinear else None
            rep = harness.run_linearity_suite(
                trials=args.trials or 100, seed=seed,
                dims=_parse_dims(args.dims, (2, 3)), nonlinear=nonlinear, tol=tol)
        else:
            rep = harness.run_lemma_suite(
                trials=args.trials or 200, seed=seed,
                dims=_parse_dims(args.dims, (2, 3, 4, 5)), tol=tol)
        reports.append(rep)
        _report(rep.to_dict())
        status = "pass" if rep.passed else f"FAIL ({len(rep.witnesses)} witnesses)"
        _say(f"suite {rep.suite}: {status}, max residual {rep.max_residual:.3e}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_SUITE


def cmd_demo(args) -> int:
    tol = _tolerances(args)
    if args.which == "correlated-env":
        rep = harness.correlated_env_demo(tol)
        _report({"command": "demo", "which": args.which,
                 "initial_system": serialize.matrix_payload(rep.initial_system),
                 "initial_environment": serialize.matrix_payload(rep.initial_environment),
                 "post_system_first": serialize.matrix_payload(rep.post_system_first),
                 "post_system_second": serialize.matrix_payload(rep.post_system_second),
                 "initial_residual": rep.initial_residual,
                 "distinguishability": rep.distinguishability,
                 "note": rep.note})
        _say("identical marginals evolve to distinct system states "
             f"(trace distance {rep.distinguishability / 2:.3f})")
        _say(rep.note)
        return EXIT_OK
    if args.which == "stern-gerlach":
        inst = harness.stern_gerlach_demo(tol=tol)
    else:
        inst = harness.atom_demo(tol)
    povm = induced_povm(inst)
    outcome_info = []
    for label, channel in inst.outcomes:
        effect = povm.effect(label)
        conditional = decomposition.decompose(channel, effect, tol=tol)
        outcome_info.append({
            "label": label,
            "effect": serialize.matrix_payload(effect.mat),
            "kraus_rank": decomposition.kraus_rank(channel, tol),
            "reconstruction_residual":
                decomposition.reconstruction_residual(channel, effect, conditional, tol=tol),
        })
    _report({"command": "demo", "which": args.which, "outcomes": outcome_info})
    for info in outcome_info:
        _say(f"outcome {info['label']}: kraus rank {info['kraus_rank']}, "
             f"reconstruction residual {info['reconstruction_residual']:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9,
                        help="absolute comparison tolerance (default 1e-9)")
    common.add_argument("--rank-tol", type=float, default=1e-9,
                        help="relative rank cutoff factor (default 1e-9)")

    parser = argparse.ArgumentParser(
        prog="qmeasure",
        description="Quantum instruments: validate, fuse, decompose, and test.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common],
                       help="validate an object file against its invariants")
    p.add_argument("path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fuse", parents=[common],
                       help="fuse two instrument files into one measurement")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--out", required=True, help="output path for the fused instrument")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("decompose", parents=[common],
                       help="split one instrument outcome into sqrt-effect update "
                            "plus a trace-preserving channel")
    p.add_argument("instrument")
    p.add_argument("label")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("probs", parents=[common],
                       help="outcome probabilities of a POVM on a state")
    p.add_argument("state")
    p.add_argument("povm")
    p.set_defaults(func=cmd_probs)

    p = sub.add_parser("evolve", parents=[common],
                       help="apply a channel file to a state file")
    p.add_argument("channel")
    p.add_argument("state")
    p.add_argument("--out", default=None, help="optional output path for the evolved state")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("suite", parents=[common], help="run a property suite")
    p.add_argument("name", choices=["nosignal", "linearity", "lemma", "all"])
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--dims", default=None, help="comma-separated dimensions, e.g. 2,3")
    p.add_argument("--demo-nonlinear", action="store_true",
                   help="inject the rho -> rho^2/tr(rho^2) black box into the "
                        "linearity suite; it must produce a witness")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("demo", parents=[common], help="run a fixed demonstration")
    p.add_argument("which", choices=["stern-gerlach", "atom", "correlated-env"])
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
