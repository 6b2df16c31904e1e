"""capture-lab command line."""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from .capturing import CaptureQuery, check_delta_system, extract_delta_system, find_capture, read_family
from .cohen import force_capture, parse_goal, read_condition, run_generic, standardize
from .core_types import PartitionSchedule, generate_type, largest_type, parse_ordinal, parse_schedule, render_ordinal
from .errors import CaptureLabError
from .knaster import (
    PnCondition,
    PnCounterexample,
    build_colorings,
    coloring_bridge,
    p1_amalgam_check,
    pn_is_condition,
    pn_standard_family,
    pn_union_check,
    random_p1_scenario,
    verify_colorings,
)
from .report import CheckResult, Report, render_report
from .scheme import build_scheme, load_scheme, verify_all

DEFAULT_SEED = 20240601


class UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"expected integers, got {text!r}") from None


def _arity(text: str):
    if text == "full":
        return "full"
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"--arity takes an integer or 'full', got {text!r}") from None


def _load(path: str, verify: bool):
    if not Path(path).is_file():
        raise UsageError(f"no scheme file at {path}; create one with 'capture-lab build'")
    return load_scheme(Path(path), verify=verify)


def _partition(args, K: int):
    if args.block is None:
        return None
    if args.blocks is None:
        raise UsageError("--block needs --blocks (number of blocks, levels assigned cyclically)")
    return PartitionSchedule.cyclic(args.blocks, K)


def _emit(report: Report, args) -> int:
    text, jsonl = render_report(report)
    sys.stdout.write(text)
    if getattr(args, "report", None):
        Path(args.report).write_text(jsonl, encoding="utf-8")
    return 0 if report.passed else 1


# -- subcommands --------------------------------------------------------------


def cmd_build(args) -> int:
    try:
        n, r = parse_schedule(args.n), parse_schedule(args.r)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    typ = generate_type(n, r, args.K) if args.K is not None else largest_type(n, r, args.max_size)
    S = build_scheme(typ, check=not args.no_verify)
    S.save(args.out)
    report = Report("build", [CheckResult("written", True, S.member_count())],
                    [{"kind": "scheme", "m": list(typ.m), "K": typ.K, "out": args.out}])
    return _emit(report, args)


def cmd_verify(args) -> int:
    S = _load(args.scheme, verify=False)
    return _emit(verify_all(S), args)


def cmd_capture(args) -> int:
    S = _load(args.scheme, verify=not args.no_verify)
    sets = read_family(Path(args.family))
    fam = extract_delta_system(sets) if args.extract else check_delta_system(sets)
    query = CaptureQuery(_arity(args.arity), args.min_level, any_pieces=args.any_pieces)
    w = find_capture(S, fam, query)
    report = Report("capture", [CheckResult("capture found", w is not None, len(fam))])
    if w is not None:
        report.records.append(w.to_record())
    return _emit(report, args)


def cmd_color(args) -> int:
    S = _load(args.scheme, verify=not args.no_verify)
    ct = build_colorings(S)
    if args.out:
        Path(args.out).write_text(ct.to_text(), encoding="utf-8")
    report = verify_colorings(ct).extend(coloring_bridge(ct, _ints(args.arities)))
    report.title = "colorings"
    report.records.append({"kind": "bounds", "N": list(ct.N)})
    return _emit(report, args)


def _pn_record(res) -> dict:
    if isinstance(res, PnCounterexample):
        return {"kind": "counterexample", "tuple": list(res.tuple), "F": list(res.witness.F), "level": res.witness.k}
    return {"kind": "condition", "P": list(res.P) if isinstance(res, PnCondition) else None}


def cmd_pn(args) -> int:
    S = _load(args.scheme, verify=not args.no_verify)
    report = Report("pn")
    if args.p1:
        rng = random.Random(args.seed)
        ok = made = 0
        for _ in range(args.trials):
            sc = random_p1_scenario(S, rng)
            if sc is None:
                continue
            made += 1
            ok += p1_amalgam_check(S, *sc)
        report.checks.append(CheckResult("p1 amalgamation", made > 0 and ok == made, made,
                                         None if ok == made else f"{made - ok} scenarios fail"))
        return _emit(report, args)
    if args.set is None:
        raise UsageError("pn needs --set (or --p1)")
    P = _ints(args.set)
    if args.standard is None:
        res = pn_is_condition(S, P, args.n)
        report.checks.append(CheckResult(f"P_{args.n} condition", res is True, 1))
        if res is not True:
            report.records.append(_pn_record(res))
        return _emit(report, args)
    k, t = args.standard
    fam = pn_standard_family(S, PnCondition(tuple(P), args.n), k, t)
    report.records.extend({"kind": "member", "P": list(c.P)} for c in fam)
    res = pn_union_check(S, fam, args.n)
    report.checks.append(CheckResult("union is a condition", isinstance(res, PnCondition), len(fam)))
    report.records.append(_pn_record(res))
    return _emit(report, args)


def cmd_force(args) -> int:
    S = _load(args.scheme, verify=not args.no_verify)
    conds = [read_condition(S, Path(c), args.M) for c in args.conditions]
    try:
        targets = [parse_ordinal(t) for t in args.targets.split(",")]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    fam = standardize(S, conds, targets)
    res = force_capture(S, fam, _arity(args.arity), args.block, _partition(args, S.K), args.min_level)
    if args.out:
        Path(args.out).write_text(res.q.to_text(), encoding="utf-8")
    report = res.report
    report.records.append(res.to_record())
    return _emit(report, args)


def cmd_generic(args) -> int:
    S = _load(args.scheme, verify=not args.no_verify)
    text = Path(args.goals).read_text(encoding="utf-8") if Path(args.goals).is_file() else args.goals
    try:
        goals = [parse_goal(g) for g in text.split()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    run = run_generic(S, goals, args.fuel, args.M, _partition(args, S.K))
    if args.out:
        Path(args.out).write_text(run.chain[-1].to_text(), encoding="utf-8")
    report = run.report
    report.records.extend(run.records)
    report.records.append({"kind": "fragment", "members": len(run.fragment), "chain": len(run.chain)})
    return _emit(report, args)


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="capture-lab", description="Finite construction schemes and capturing.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scheme=True):
        if scheme:
            p.add_argument("scheme", help="scheme file written by 'build'")
            p.add_argument("--no-verify", action="store_true", help="skip the axiom check when loading")
        p.add_argument("--report", help="write JSON lines here")
        return p

    p = common(sub.add_parser("build", help="generate a canonical scheme"), scheme=False)
    p.add_argument("--n", required=True, help="n schedule: k+c, c*k, an int, or a comma list")
    p.add_argument("--r", required=True, help="r schedule: diag, zero, an int, or a comma list")
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--K", type=int, help="number of levels")
    size.add_argument("--max-size", type=int, help="deepest K with m_K at most this")
    p.add_argument("--out", required=True)
    p.add_argument("--no-verify", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="check the axioms and lemmas exhaustively")
    p.add_argument("scheme")
    p.add_argument("--report")
    p.set_defaults(func=cmd_verify)

    p = common(sub.add_parser("capture", help="least capture of a delta-system"))
    p.add_argument("--family", required=True, help="one set per line")
    p.add_argument("--arity", default="2")
    p.add_argument("--min-level", type=int, default=0)
    p.add_argument("--any-pieces", action="store_true")
    p.add_argument("--extract", action="store_true", help="first extract a largest delta-subfamily")
    p.set_defaults(func=cmd_capture)

    p = common(sub.add_parser("color", help="colorings and the capture bridge"))
    p.add_argument("--arities", default="2,3,4")
    p.add_argument("--out", help="write the coloring table here")
    p.set_defaults(func=cmd_color)

    p = common(sub.add_parser("pn", help="P_n conditions, standard families, amalgamation"))
    p.add_argument("--set", help="the set P")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--standard", type=int, nargs=2, metavar=("K", "T"), help="standard family at level K of width T")
    p.add_argument("--p1", action="store_true", help="random amalgamation scenarios for n = 1")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_pn)

    p = common(sub.add_parser("force", help="amalgamate marked conditions into a capture"))
    p.add_argument("conditions", nargs="+", help="condition files")
    p.add_argument("--targets", required=True, help="comma list of ordinals, one per condition")
    p.add_argument("--arity", default="2")
    p.add_argument("--block", type=int)
    p.add_argument("--blocks", type=int)
    p.add_argument("--min-level", type=int, default=0)
    p.add_argument("--M", type=int, default=16, help="ordinals live below w*M")
    p.add_argument("--out", help="write the amalgamated condition here")
    p.set_defaults(func=cmd_force)

    p = common(sub.add_parser("generic", help="meet a schedule of goals along a chain"))
    p.add_argument("goals", help="goal file or quoted list such as 'cover:w force:2 set:0,w'")
    p.add_argument("--fuel", type=int, default=50)
    p.add_argument("--M", type=int, default=16)
    p.add_argument("--block", type=int)
    p.add_argument("--blocks", type=int)
    p.add_argument("--out", help="write the final condition here")
    p.set_defaults(func=cmd_generic)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"capture-lab: {exc}", file=sys.stderr)
        return 2
    except CaptureLabError as exc:
        print(f"capture-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"capture-lab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
