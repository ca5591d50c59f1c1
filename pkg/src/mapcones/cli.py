"""Batch front end: JSON instance files in, verdict reports out.

Instance schema::

    {
      "d": 2, "h": 2,
      "target": [[[re, im], ...], ...],          // Choi matrix, row-major
      "sequence": [
        {"kind": "identity"},
        {"kind": "transpose"},
        {"kind": "unitary_conjugation", "matrix": [[[re, im], ...], ...]},
        {"kind": "custom", "coeffs": [[[re, im], ...], ...]}
      ],
      "weights": [1.0, 0.5],                     // optional, per entry
      "tail_bound": 0.0,                         // optional; > 0 marks a
                                                 // truncated vanishing sequence
      "options": {"max_iter": 50000, "psd_tol": 1e-8,
                  "feas_tol_rel": 1e-7, "seed": 0}
    }

Exit codes: 0 feasible, 1 infeasible, 2 undetermined, 3 parse/validation
error, 4 usage error. The default seed can be set through MAPCONES_SEED.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .decomp import (
    FEASIBLE,
    INFEASIBLE,
    UNDETERMINED,
    DecompositionCertificate,
    FeasibilityProblem,
    InfeasibilityWitness,
    feasibility,
    verify_certificate,
    verify_witness,
)
from .dilation import block_dilation
from .gamma import NoneFound, criterion_violation_search, gamma_membership
from .linalg import hermitian_defect
from .sdpa import read_sdpa, solve_sdpa, write_sdpa
from .seq import MapSequence, TRUNCATED_VANISHING
from .superop import SuperOperator

EXIT_FEASIBLE = 0
EXIT_INFEASIBLE = 1
EXIT_UNDETERMINED = 2
EXIT_PARSE = 3
EXIT_USAGE = 4


class InstanceError(ValueError):
    """Raised on malformed instance files; message carries the field path."""


# -- complex matrix (de)serialization ---------------------------------------


def matrix_to_json(m: np.ndarray) -> list:
    """Nested lists of [re, im] pairs, full double precision."""
    return [[[float(np.real(v)), float(np.imag(v))] for v in row] for row in np.asarray(m)]


def matrix_from_json(data, field: str) -> np.ndarray:
    try:
        rows = [[complex(pair[0], pair[1]) for pair in row] for row in data]
    except (TypeError, IndexError) as err:
        raise InstanceError(f"{field}: expected nested [re, im] pairs ({err})") from err
    m = np.array(rows, dtype=complex)
    if m.ndim != 2:
        raise InstanceError(f"{field}: not a matrix")
    return m


# -- instance parsing --------------------------------------------------------


def _sequence_entry(spec: dict, d: int, idx: int) -> SuperOperator:
    kind = spec.get("kind")
    if kind == "identity":
        return SuperOperator.identity(d)
    if kind == "transpose":
        return SuperOperator.transpose(d)
    if kind == "unitary_conjugation":
        u = matrix_from_json(spec.get("matrix"), f"sequence[{idx}].matrix")
        if u.shape != (d, d):
            raise InstanceError(f"sequence[{idx}].matrix: shape {u.shape} != {(d, d)}")
        if np.linalg.norm(u.conj().T @ u - np.eye(d)) > 1e-8:
            raise InstanceError(f"sequence[{idx}].matrix: not unitary")
        return SuperOperator.conjugation(u)
    if kind == "custom":
        coeffs = matrix_from_json(spec.get("coeffs"), f"sequence[{idx}].coeffs")
        if coeffs.shape != (d * d, d * d):
            raise InstanceError(f"sequence[{idx}].coeffs: shape {coeffs.shape} != {(d * d, d * d)}")
        phi = SuperOperator(d, d, coeffs)
        if not phi.is_star_map():
            raise InstanceError(
                f"sequence[{idx}]: not a *-map (Choi defect {phi.star_defect():.3e})"
            )
        return phi
    raise InstanceError(f"sequence[{idx}].kind: unknown kind {kind!r}")


def load_instance(path) -> tuple[FeasibilityProblem, dict]:
    """Parse an instance file into a problem; returns (problem, options)."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise InstanceError(f"cannot read instance: {err}") from err
    try:
        d, h = int(data["d"]), int(data["h"])
    except (KeyError, TypeError, ValueError) as err:
        raise InstanceError(f"d/h: missing or non-integer ({err})") from err
    target = matrix_from_json(data.get("target"), "target")
    if target.shape != (d * h, d * h):
        raise InstanceError(f"target: shape {target.shape} != {(d * h, d * h)}")
    defect = hermitian_defect(target)
    if defect > 1e-10:
        raise InstanceError(f"target: Choi matrix not Hermitian (defect {defect:.3e})")
    seq_spec = data.get("sequence")
    if not seq_spec:
        raise InstanceError("sequence: missing or empty")
    entries = [_sequence_entry(s, d, i) for i, s in enumerate(seq_spec)]
    weights = data.get("weights")
    if weights is not None:
        if len(weights) != len(entries):
            raise InstanceError("weights: length mismatch with sequence")
        entries = [float(w) * e for w, e in zip(weights, entries)]
    tail = float(data.get("tail_bound", 0.0))
    seq = MapSequence(
        tuple(entries),
        kind=TRUNCATED_VANISHING if tail > 0 else "finite_tuple",
        tail_bound=tail,
    )
    options = dict(data.get("options", {}))
    prob = FeasibilityProblem(
        SuperOperator.from_choi(target, d, h),
        seq,
        max_iter=int(options.get("max_iter", 50_000)),
        psd_tol=float(options.get("psd_tol", 1e-8)),
        feas_tol_rel=float(options.get("feas_tol_rel", 1e-7)),
    )
    return prob, options


def instance_to_json(prob: FeasibilityProblem, options: dict | None = None) -> dict:
    """Inverse of :func:`load_instance` for canonically built sequences."""
    entries = []
    for phi in prob.seq:
        entries.append({"kind": "custom", "coeffs": matrix_to_json(phi.coeffs)})
    out = {
        "d": prob.d,
        "h": prob.h,
        "target": matrix_to_json(prob.target.choi),
        "sequence": entries,
    }
    if prob.seq.tail_bound > 0:
        out["tail_bound"] = prob.seq.tail_bound
    if options:
        out["options"] = options
    return out


# -- verdict reports ---------------------------------------------------------


def report_to_json(result, prob: FeasibilityProblem, seed: int) -> dict:
    payload: dict = {
        "verdict": result.status,
        "seed": seed,
        "tool_version": __version__,
        "iterations": result.diagnostics.get("iterations", 0),
        "residual": result.diagnostics.get("residual"),
        "tail_slack": result.tail_slack,
        "wall_time": result.diagnostics.get("wall_time"),
    }
    if result.certificate is not None:
        payload["certificate"] = {
            "xs": [matrix_to_json(x) for x in result.certificate.xs],
            "residual": result.certificate.residual,
        }
    if result.witness is not None:
        payload["witness"] = {
            "w": matrix_to_json(result.witness.w),
            "gap": result.witness.gap,
            "dual_margins": list(result.witness.dual_margins),
        }
    return payload


def reverify_report(payload: dict, prob: FeasibilityProblem) -> bool:
    """Re-run the verifiers on a reloaded report payload."""
    verdict = payload.get("verdict")
    if verdict == FEASIBLE:
        cert = DecompositionCertificate(
            tuple(matrix_from_json(x, "certificate.xs") for x in payload["certificate"]["xs"]),
            float(payload["certificate"]["residual"]),
        )
        return verify_certificate(cert, prob)
    if verdict == INFEASIBLE:
        witness = InfeasibilityWitness(
            matrix_from_json(payload["witness"]["w"], "witness.w"),
            float(payload["witness"]["gap"]),
            tuple(payload["witness"]["dual_margins"]),
        )
        return verify_witness(witness, prob)
    return verdict == UNDETERMINED


# -- subcommands -------------------------------------------------------------


def _default_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(os.environ.get("MAPCONES_SEED", "0"))


def cmd_check(args) -> int:
    try:
        prob, options = load_instance(args.instance)
    except InstanceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    seed = _default_seed(args)
    if args.tol is not None and args.tol <= 0:
        print("error: tolerance must be positive", file=sys.stderr)
        return EXIT_USAGE
    if args.max_iter is not None or args.tol is not None:
        prob = FeasibilityProblem(
            prob.target,
            prob.seq,
            args.max_iter if args.max_iter is not None else prob.max_iter,
            prob.psd_tol,
            args.tol if args.tol is not None else prob.feas_tol_rel,
        )
    result = feasibility(prob)
    payload = report_to_json(result, prob, seed)
    if not reverify_report(payload, prob):
        # Contract: only verified payloads are reported as decisive.
        payload["verdict"] = UNDETERMINED
        payload.pop("certificate", None)
        payload.pop("witness", None)
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(payload, indent=2) + "\n")
    print(f"verdict: {payload['verdict']}")
    if payload.get("residual") is not None:
        print(f"residual: {payload['residual']:.3e}  iterations: {payload['iterations']}")
    if "witness" in payload:
        print(f"witness gap: {payload['witness']['gap']:.3e}")
    return {FEASIBLE: EXIT_FEASIBLE, INFEASIBLE: EXIT_INFEASIBLE}.get(
        payload["verdict"], EXIT_UNDETERMINED
    )


def cmd_witness_search(args) -> int:
    try:
        prob, _ = load_instance(args.instance)
    except InstanceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    if not prob.seq.all_hs_isometries():
        print("warning: non-isometry sequence; falling back to rejection sampling", file=sys.stderr)
    rng = np.random.default_rng(_default_seed(args))
    outcome = criterion_violation_search(
        prob.target, prob.seq, n=args.n, restarts=args.restarts, rng=rng
    )
    if isinstance(outcome, NoneFound):
        print(f"none_found: best value {outcome.best_value:.6e}")
        return EXIT_UNDETERMINED
    # Independent re-verification before printing.
    member = gamma_membership(outcome.a, prob.seq, args.n)
    from .gamma import blockwise_apply
    from .linalg import eigh_checked

    img = blockwise_apply(prob.target, outcome.a, args.n)
    value = float(np.real(np.vdot(outcome.v, img @ outcome.v)))
    if not member.ok or value > -1e-6:
        print(f"none_found: candidate failed re-verification (value {value:.3e})")
        return EXIT_UNDETERMINED
    print(f"violation: value {value:.6e}, membership margins {member.margins}")
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps(
                {
                    "violation_value": value,
                    "membership_margins": member.margins,
                    "a": matrix_to_json(outcome.a),
                    "v": matrix_to_json(outcome.v.reshape(-1, 1)),
                },
                indent=2,
            )
            + "\n"
        )
    return EXIT_FEASIBLE


def cmd_dilate(args) -> int:
    try:
        prob, _ = load_instance(args.instance)
    except InstanceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    result = feasibility(prob)
    if result.status != FEASIBLE:
        print(f"error: instance is {result.status}; nothing to dilate", file=sys.stderr)
        return EXIT_INFEASIBLE if result.status == INFEASIBLE else EXIT_UNDETERMINED
    dil = block_dilation(result.certificate, prob.seq, prob)
    rng = np.random.default_rng(_default_seed(args))
    worst = 0.0
    for _ in range(20):
        a = rng.standard_normal((prob.d, prob.d)) + 1j * rng.standard_normal((prob.d, prob.d))
        worst = max(worst, float(np.linalg.norm(dil.reconstruct(a) - prob.target.apply(a))))
    print(f"dilation dimension: {dil.total_dim}")
    print(f"kraus ranks: {[p.rank for p in dil.parts]}")
    print(f"reconstruction residual (20 random inputs): {worst:.3e}")
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps(
                {
                    "dilation_dim": dil.total_dim,
                    "v": matrix_to_json(dil.v),
                    "kraus": [[matrix_to_json(k) for k in p.kraus] for p in dil.parts],
                    "reconstruction_residual": worst,
                },
                indent=2,
            )
            + "\n"
        )
    return EXIT_FEASIBLE


def cmd_export_sdpa(args) -> int:
    try:
        prob, _ = load_instance(args.instance)
    except InstanceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    write_sdpa(prob, args.out)
    print(f"wrote {args.out}")
    if args.solve:
        verdict = solve_sdpa(read_sdpa(args.out))
        print(f"external solve: {verdict.status} (violation {verdict.max_violation:.3e}, {verdict.solver})")
    return EXIT_FEASIBLE


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    if args.tol is not None and args.tol <= 0:
        print("error: tolerance must be positive", file=sys.stderr)
        return EXIT_USAGE
    ok = run_selftest(quick=not args.full, seed=_default_seed(args), tol=args.tol)
    return EXIT_FEASIBLE if ok else EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mapcones",
        description="Decomposability of linear maps between matrix algebras: "
        "feasibility checks, witness search, dilations, SDP export.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide decomposability of an instance")
    p.add_argument("instance")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json-out", dest="json_out", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("witness-search", help="search for a cone-criterion violation")
    p.add_argument("instance")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json-out", dest="json_out", default=None)
    p.set_defaults(func=cmd_witness_search)

    p = sub.add_parser("dilate", help="build the block dilation of a feasible instance")
    p.add_argument("instance")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json-out", dest="json_out", default=None)
    p.set_defaults(func=cmd_dilate)

    p = sub.add_parser("export-sdpa", help="export the feasibility problem in sparse SDPA form")
    p.add_argument("instance")
    p.add_argument("out")
    p.add_argument("--solve", action="store_true", help="also solve the exported file externally")
    p.set_defaults(func=cmd_export_sdpa)

    p = sub.add_parser("selftest", help="run the property suites")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--quick", action="store_true", default=True)
    group.add_argument("--full", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
