"""Command line interface.

Every subcommand emits one canonical JSON report (sorted keys, 2-space
indent) to stdout or --out; wall time goes to stderr so reports stay
byte-identical for identical parameters and seed.  Exit codes: 0 success
and claim confirmed, 1 claim refuted, 2 usage or input errors.
"""

import argparse
import json
import random
import sys
import time

from . import __version__
from .cones import (
    failing_relation,
    in_grassmann_cone,
    in_isotropic_cone,
    integer_terms,
)
from .counterexamples import (
    EXPECTED_DIMS,
    check_counterexample,
    lagrangian_counterexample,
)
from .exterior import MultiVector
from .ideal_lab import (
    Quadric,
    VarietyContext,
    run_rank4_pipeline,
)
from .igcp import (
    SamplingExhausted,
    find_witness,
    reduce_to_base,
    verify_main_theorem,
)
from .quadratic import space_from_name


class UsageError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from exc


def _load_multivector(path, space=None):
    data = _load_json(path)
    try:
        mv = MultiVector.from_json_dict(data)
    except ValueError as exc:
        raise UsageError(f"bad multivector in {path}: {exc}") from exc
    if space is not None:
        if mv.dim != space.dim or mv.kind != space.kind:
            raise UsageError(
                f"multivector is ({mv.dim}, {mv.kind}) but the space is "
                f"({space.dim}, {space.kind})"
            )
    return mv


def _space(name):
    try:
        return space_from_name(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(report, out_path):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(command, parameters, outcome):
    return {
        "command": command,
        "parameters": parameters,
        "outcome": outcome,
        "version": __version__,
    }


def cmd_membership(args):
    space = _space(args.space)
    omega = _load_multivector(args.input, space)
    grassmann = in_grassmann_cone(omega)
    witness_rel = None
    if not grassmann:
        rel = failing_relation(omega)
        witness_rel = rel.to_json_dict()
        witness_rel["value"] = str(rel.evaluate_int(integer_terms(omega)))
    isotropic = in_isotropic_cone(space, omega)
    outcome = {
        "grassmann": grassmann,
        "isotropic": isotropic,
        "witness_relation": witness_rel,
    }
    params = {"space": args.space, "input": args.input, "expect": args.expect}
    _emit(_report("membership", params, outcome), args.out)
    if args.expect:
        verdict = isotropic if args.isotropic else grassmann
        want = args.expect == "in"
        return 0 if verdict == want else 1
    return 0


def cmd_witness(args):
    space = _space(args.space)
    omega = _load_multivector(args.input, space)
    rng = random.Random(f"witness:{args.seed}")
    res = find_witness(space, omega, budget=args.budget, rng=rng)
    if res is None:
        outcome = {"found": False, "v": None, "certificate": None}
    else:
        outcome = res.to_json_dict()
    params = {
        "space": args.space,
        "input": args.input,
        "budget": args.budget,
        "seed": args.seed,
    }
    _emit(_report("witness", params, outcome), args.out)
    return 0


def cmd_verify_main_theorem(args):
    if args.dim < 9:
        raise UsageError(
            "verify-main-theorem requires --dim >= 9 (the statement assumes "
            "dim V > 8; see the dimension 7 and 8 counterexamples)"
        )
    outcome = verify_main_theorem(
        args.dim, trials=args.trials, budget=args.budget, seed=args.seed
    )
    params = {
        "dim": args.dim,
        "trials": args.trials,
        "budget": args.budget,
        "seed": args.seed,
    }
    _emit(_report("verify-main-theorem", params, outcome), args.out)
    ok = outcome["all_noncone_refuted"] and outcome["all_frames_preserved"]
    return 0 if ok else 1


def cmd_counterexample(args):
    if args.lagrangian is not None:
        if args.lagrangian < 2:
            raise UsageError("--lagrangian needs m >= 2")
        _omega, outcome = lagrangian_counterexample(
            args.lagrangian, samples=args.samples, seed=args.seed
        )
        params = {
            "lagrangian": args.lagrangian,
            "samples": args.samples,
            "seed": args.seed,
        }
        _emit(_report("counterexample", params, outcome), args.out)
        ok = outcome["omega_wedge_omega_nonzero"] and outcome["all_phi_images_zero"]
        return 0 if ok else 1
    if args.which is None:
        raise UsageError("pass --which 7, --which 8, or --lagrangian m")
    report = check_counterexample(args.which, samples=args.samples, seed=args.seed)
    outcome = report.to_json_dict()
    params = {"which": args.which, "samples": args.samples, "seed": args.seed}
    _emit(_report("counterexample", params, outcome), args.out)
    expected = EXPECTED_DIMS[args.which]
    ok = (
        not report.in_grassmann
        and report.all_images_isotropic
        and (report.dim_g, report.dim_stab_v0, report.orbit_dim) == expected
    )
    return 0 if ok else 1


def cmd_ideal(args):
    if args.variety not in ("iso37", "iso48", "iso48_component"):
        raise UsageError("--variety must be iso37 or iso48")
    outcome = run_rank4_pipeline(args.variety, seed=args.seed)
    params = {"variety": args.variety, "seed": args.seed}
    _emit(_report("ideal", params, outcome), args.out)
    return 0 if outcome["certified"] else 1


def cmd_ranks(args):
    data = _load_json(args.input)
    outcome_src = data.get("outcome", data)
    gens = outcome_src.get("generators")
    if gens is None:
        raise UsageError("input file has no 'generators' field")
    variety = outcome_src.get("variety", data.get("parameters", {}).get("variety"))
    if variety is None:
        raise UsageError("input file does not name its variety")
    ctx = VarietyContext.make(variety)
    rows = []
    all_ok = True
    for i, g in enumerate(gens):
        try:
            q = Quadric.from_json_dict(ctx, g)
        except ValueError as exc:
            raise UsageError(f"bad quadric {i}: {exc}") from exc
        recomputed = q.rank()
        stored = g.get("rank")
        ok = recomputed <= 4 and (stored is None or stored == recomputed)
        all_ok = all_ok and ok
        rows.append(
            {"index": i, "stored_rank": stored, "rank": recomputed, "ok": ok}
        )
    outcome = {
        "variety": variety,
        "quadrics": rows,
        "max_rank": max((r["rank"] for r in rows), default=0),
        "all_ok": all_ok,
    }
    _emit(_report("ranks", {"input": args.input}, outcome), args.out)
    return 0 if all_ok else 1


def cmd_reduce(args):
    space = _space(args.space)
    if space.dim <= 8:
        raise UsageError("reduce needs a space of dimension > 8")
    omega = _load_multivector(args.input, space)
    rng = random.Random(f"reduce:{args.seed}")
    started_in_cone = in_isotropic_cone(space, omega)
    try:
        final_space, final, chain = reduce_to_base(
            space, omega, budget=args.budget, rng=rng
        )
    except SamplingExhausted as exc:
        _emit(
            _report(
                "reduce",
                {"space": args.space, "input": args.input, "seed": args.seed},
                {"error": str(exc)},
            ),
            args.out,
        )
        return 1
    final_in_cone = in_isotropic_cone(final_space, final)
    outcome = {
        "chain": chain,
        "final_dim": final_space.dim,
        "final": final.to_json_dict(),
        "started_in_cone": started_in_cone,
        "final_in_cone": final_in_cone,
    }
    params = {
        "space": args.space,
        "input": args.input,
        "budget": args.budget,
        "seed": args.seed,
    }
    _emit(_report("reduce", params, outcome), args.out)
    if started_in_cone and not final_in_cone:
        return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="isograss",
        description=(
            "Exact tools for maximal isotropic Grassmannians: cone "
            "membership, quotient-map witness search, counterexample "
            "verification, and low-rank defining quadrics."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("membership", help="Grassmann/isotropic cone membership")
    p.add_argument("--space", required=True, help="std:<n>, j7, or j8")
    p.add_argument("--input", required=True, help="multivector JSON file")
    p.add_argument("--isotropic", action="store_true",
                   help="apply --expect to the isotropic verdict")
    p.add_argument("--expect", choices=["in", "out"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_membership)

    p = sub.add_parser("witness", help="search for a cone-violating quotient map")
    p.add_argument("--space", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser(
        "verify-main-theorem",
        help="empirical witness-search verification at one dimension",
    )
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_main_theorem)

    p = sub.add_parser("counterexample", help="verify a small-dimension counterexample")
    p.add_argument("--which", type=int, choices=[7, 8])
    p.add_argument("--lagrangian", type=int, metavar="M",
                   help="check the skew-form example on dimension 4M")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("ideal", help="rank-4 generating quadrics pipeline")
    p.add_argument("--variety", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ideal)

    p = sub.add_parser("ranks", help="re-certify quadric ranks from a report")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ranks)

    p = sub.add_parser("reduce", help="iterate quotient maps down to dim 7 or 8")
    p.add_argument("--space", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors already
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    wall_ms = (time.perf_counter() - t0) * 1000.0
    print(f"[isograss] {args.command} finished in {wall_ms:.0f} ms", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
