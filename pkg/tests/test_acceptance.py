"""Acceptance criteria.  Each test prints one PASS/FAIL line (also collected in the summary)."""

from __future__ import annotations

import itertools
import random
import time

import pytest

from capture_lab.capturing import CaptureQuery, find_capture
from capture_lab.cohen import (
    extend_to_cover,
    force_capture,
    induced_family,
    leq,
    parse_goal,
    phi_apply,
    run_generic,
    standardize,
    validate_condition,
    verify_fragment,
)
from capture_lab.core_types import OrdinalCode, PartitionSchedule, diagonal_r, generate_type, largest_type, omega, validate_type
from capture_lab.errors import CaptureLabError, DepthExhausted, InsufficientWidth, PreconditionFailed
from capture_lab.knaster import (
    PnCondition,
    PnCounterexample,
    build_colorings,
    coloring_bridge,
    p1_amalgam_check,
    pn_standard_family,
    pn_union_check,
    random_p1_scenario,
)
from capture_lab.scheme import build_scheme, verify_axioms, verify_lemmas

import oracles
from families import all_small_schemes, family

w = omega
E1, E2 = (0, 1), (0, 1, 2, 3)


@pytest.fixture(scope="module")
def cohen_base():
    return build_scheme(generate_type([2, 3, 5, 5, 6, 7, 8], [0, 1, 3, 3, 2, 1, 0], 7), check=False)


@pytest.fixture(scope="module")
def cohen_space(cohen_base):
    raw = oracles.condition_space(cohen_base.levels, E2, [w(1), w(2), w(3)])
    return [(r, validate_condition(cohen_base, r)) for r in raw]


# -- 1. scheme axioms ---------------------------------------------------------

AXIOM_TYPES = {
    "n=k+1, r diagonal": (lambda k: k + 1, diagonal_r),
    "n=k+2, r=0": (lambda k: k + 2, lambda k: 0),
    "n=k+1, r=(k-1) mod 3": (lambda k: k + 1, lambda k: (k - 1) % 3),
}


def test_criterion_1_scheme_axioms(verdict):
    lines, ok, rs = [], True, set()
    for name, (n, r) in AXIOM_TYPES.items():
        typ = largest_type(n, r, 5000)
        t0 = time.perf_counter()
        S = build_scheme(typ, check=False)
        passed = verify_axioms(S).passed and verify_lemmas(S).passed
        dt = time.perf_counter() - t0
        ok &= passed and dt <= 60 and typ.m[-1] <= 5000
        rs |= set(typ.r[1:])
        lines.append(f"{name} m={typ.m[-1]} K={typ.K} {'ok' if passed else 'FAILED'} {dt:.1f}s")
    ok &= {0, 1, 2} <= rs
    verdict(1, ok, "; ".join(lines))


# -- 2. capture oracle equivalence --------------------------------------------


def test_criterion_2_capture_oracle(verdict):
    rng = random.Random(20240601)
    schemes = []
    for S in all_small_schemes():
        schemes += [build_scheme(S.typ, K) for K in range(1, S.K)] + [S]
    trials = mismatches = found = 0
    first = None
    while trials < 1200:
        S = schemes[trials % len(schemes)]
        fam = family(rng, S, rng.randint(2, 5))
        arity = rng.choice([2, 3, "full"])
        if arity != "full" and arity > len(fam):
            arity = 2
        q = CaptureQuery(arity, rng.randint(0, 1))
        got = find_capture(S, fam, q)
        got = None if got is None else (got.k, got.F, got.indices)
        ref = oracles.brute_capture(S.levels, S.typ.n, [list(m) for m in fam.members], arity, q.min_level)
        trials += 1
        found += got is not None
        if got != ref:
            mismatches += 1
            first = first or (S.typ.m, fam.members, arity, got, ref)
    ok = mismatches == 0 and found > 0 and found < trials
    verdict(2, ok, f"{trials} families on {len(schemes)} schemes, {found} captured, {mismatches} mismatches"
            + (f", first {first}" if first else ""))


# -- 3. coloring bridge -------------------------------------------------------


def test_criterion_3_coloring_bridge(verdict):
    small = validate_type([1, 2, 4], [2, 3], [0, 1])
    ct = build_colorings(build_scheme(small))
    worked = ct.f[1] == (0, 3, 5) and ct.f[2] == (0, 3, 6) and ct.f[3] == (0, 3, 7) and ct.N == (1, 4, 8)
    types = [small, validate_type([1, 2, 4, 16], [2, 3, 4], [0, 1, 0])]
    types += [largest_type(n, r, 500) for n, r in AXIOM_TYPES.values()]
    counts, bad = {2: 0, 3: 0, 4: 0}, []
    for typ in types:
        S = build_scheme(typ)
        table = build_colorings(S)
        rep = coloring_bridge(table, (2, 3, 4))
        for ar, check in zip((2, 3, 4), rep.checks):
            counts[ar] += check.checked
            if not check.passed:
                bad.append(f"m={typ.m[-1]} arity {ar}: {check.detail}")
        # independent scan of captured singleton tuples, straight from the definition
        level = {F: k for k, l in enumerate(S.levels) for F in l}
        for F, pts in oracles.captured_singleton_tuples(S.levels, S.typ.n, 3):
            k = level[F]
            if len({table.f[p][:k] for p in pts}) != 1 or len({table.f[p][k] for p in pts}) != 3:
                bad.append(f"m={typ.m[-1]} oracle tuple {pts} in {F}")
    ok = worked and not bad and all(counts.values())
    verdict(3, ok, f"worked values {'reproduced' if worked else 'WRONG'}; witnesses by arity {counts}; "
            f"{len(bad)} violations" + (f", first {bad[0]}" if bad else ""))


# -- 4. P_n amalgamation ------------------------------------------------------


def test_criterion_4_pn_amalgamation(verdict):
    rng = random.Random(4)
    types = [
        validate_type([1, 2, 4], [2, 3], [0, 1]),
        generate_type(lambda k: k + 1, diagonal_r, 4),
        generate_type(lambda k: k + 1, lambda k: (k - 1) % 3, 4),
        generate_type(lambda k: k + 2, lambda k: 0, 3),
    ]
    fams = unions = bad = 0
    witness = None
    for typ in types:
        S = build_scheme(typ)
        for k in range(1, S.K + 1):
            nk = S.typ.n[k]
            for n in range(1, nk):
                for _ in range(6):
                    D = rng.choice(S.levels[k])
                    P = tuple(sorted(rng.sample(D, rng.randint(1, min(3, len(D))))))
                    if not oracles.pn_condition(S.levels, S.typ.n, P, n):
                        continue
                    for t in range(n + 1, nk + 1):
                        try:
                            fam = pn_standard_family(S, PnCondition(P, n), k, t)
                        except (InsufficientWidth, PreconditionFailed):
                            continue
                        fams += 1
                        for sub in itertools.combinations(fam, n):
                            unions += 1
                            Q = sorted({x for c in sub for x in c.P})
                            got = pn_union_check(S, sub, n)
                            if not isinstance(got, PnCondition) or not oracles.pn_condition(S.levels, S.typ.n, Q, n):
                                bad += 1
                        if witness is None:
                            for sub in itertools.combinations(fam, n + 1):
                                got = pn_union_check(S, sub, n)
                                if isinstance(got, PnCounterexample):
                                    Q = sorted({x for c in sub for x in c.P})
                                    level = {F: l for l, ls in enumerate(S.levels) for F in ls}
                                    fam_pts = [[x] for x in got.tuple]
                                    captured = oracles.captured(S.levels, level[got.witness.F], got.witness.F,
                                                                fam_pts, tuple(range(n + 1)))
                                    if captured and not oracles.pn_condition(S.levels, S.typ.n, Q, n):
                                        witness = (typ.m[-1], n, got.tuple, got.witness.F)
                                    break
    ok = bad == 0 and witness is not None and unions > 0
    verdict(4, ok, f"{fams} standardized families, {unions} n-unions, {bad} counterexamples; "
            f"failing (n+1)-union {witness}")


# -- 5. P_1 amalgamation step -------------------------------------------------


def test_criterion_5_p1_step(verdict):
    rng = random.Random(5)
    schemes = [build_scheme(generate_type(lambda k: k + 1, diagonal_r, K)) for K in (3, 4, 5)]
    runs = failures = 0
    for i in range(150):
        sc = random_p1_scenario(schemes[i % 3], rng)
        if sc is None:
            continue
        runs += 1
        failures += not p1_amalgam_check(schemes[i % 3], *sc)
    verdict(5, runs >= 100 and failures == 0, f"{runs} scenarios, {failures} false")


# -- 6. density ---------------------------------------------------------------


def test_criterion_6_density(verdict, cohen_base, cohen_space):
    S = cohen_base
    xis = [OrdinalCode(t, j) for t in range(4) for j in range(4)]
    t0 = time.perf_counter()
    bad = []
    for raw, p in cohen_space:
        for xi in xis:
            try:
                q, x = extend_to_cover(S, p, xi)
            except CaptureLabError as exc:
                bad.append(f"{p.to_text()!r} {xi}: {type(exc).__name__}")
                continue
            img = oracles.phi_map(q.entries, [x])[x]
            if x not in q.top or phi_apply(q, x) != xi or img != (xi.limb, xi.off):
                bad.append(f"{p.to_text()!r} {xi}: does not cover")
            elif leq(S, q, p) is None or not oracles.brute_leq(S.levels, q.entries, raw):
                bad.append(f"{p.to_text()!r} {xi}: not an extension")
    dt = time.perf_counter() - t0
    verdict(6, not bad and dt <= 120,
            f"{len(cohen_space)} conditions x {len(xis)} ordinals, {len(bad)} failures, {dt:.1f}s"
            + (f", first {bad[0]}" if bad else ""))


# -- 7. capture forcing -------------------------------------------------------


def _force_ok(S, fam, res, n):
    """Re-check a forcing result from the definitions alone."""
    if len(res.extension_witnesses) != n or not res.report.passed:
        return False
    level = {F: k for k, l in enumerate(S.levels) for F in l}
    for i in range(n):
        p, q = fam.conds[i], res.q
        if not oracles.brute_leq(S.levels, q.entries, p.entries):
            return False
        for d, W in res.extension_witnesses[i].W.items():
            Dq, aq = p.entry(d)[1:]
            Dp, ap = q.entry(d)[1:]
            if level.get(tuple(W)) != level[tuple(Dq)] or not oracles.witness_by_definition(W, Dq, aq, Dp, ap):
                return False
    # the capture is read off the induced family of q
    k = res.witness.k
    members = {tuple(sorted(m)): l for m, l in induced_family(S, res.q)}
    F = tuple(sorted(res.F))
    if members.get(F) != k:
        return False
    lower = [m for m, l in members.items() if l == k - 1 and set(m) <= set(F)]
    root = oracles._root_of(lower)
    pieces = sorted(lower, key=lambda m: min(set(m) - set(root)))
    if len(pieces) != S.typ.n[k]:
        return False
    targets = [fam.targets[i] for i in range(n)]
    if any(set(pieces[i]) & set(targets) != {targets[i]} for i in range(n)):
        return False
    return len({pieces[i].index(targets[i]) for i in range(n)}) == 1


def test_criterion_7_capture_forcing(verdict):
    S = build_scheme(generate_type([2, 3, 5, 5, 6, 7, 8], [0, 1, 3, 3, 2, 1, 0], 7), check=False)

    def cond(*entries):
        return validate_condition(S, entries)

    families = {
        "no root": standardize(S, [cond((w(t), E1, 1)) for t in (1, 2, 3)], [w(1), w(2), w(3)]),
        "root": standardize(S, [cond((w(1), E2, 1), (w(t), E2, 2)) for t in (2, 3, 4)], [w(2), w(3), w(4)]),
        "small root": standardize(S, [cond((w(1), E1, 0), (w(t), E1, 1)) for t in (2, 3, 4)], [w(2), w(3), w(4)]),
        "anchored": standardize(S, [cond((w(t), E2, 1)) for t in (1, 2, 3)], [OrdinalCode(t, 1) for t in (1, 2, 3)]),
    }
    lines, ok = [], True
    # full mode needs a level with n_k = 3 whose first piece holds D; only level 2 has
    # n_k = 3 here, and its pieces are too small for D = {0..3}
    modes = {"no root": (3, "full"), "root": (3,), "small root": (3, "full"), "anchored": (3,)}
    for name, fam in families.items():
        for mode in modes[name]:
            res = force_capture(S, fam, mode)
            n = 3 if mode == 3 else S.typ.n[res.witness.k]
            good = (mode == 3 or n == len(fam)) and _force_ok(S, fam, res, n)
            ok &= good
            lines.append(f"{name}/{mode}: k={res.witness.k} {'ok' if good else 'BAD'}")
    # block filters: levels alternate between two blocks
    part = PartitionSchedule((0, 1, 0, 1, 0, 1, 0), 2)
    fam = families["no root"]
    for block in (0, 1):
        for kstar in (0, 2, 4):
            try:
                res = force_capture(S, fam, 2, block=block, partition=part, min_level=kstar)
            except DepthExhausted:
                lines.append(f"block {block} k>{kstar}: none")
                continue
            k = res.witness.k
            good = part.block_of(k) == block and k > kstar and _force_ok(S, fam, res, 2)
            ok &= good
            lines.append(f"block {block} k>{kstar}: k={k} {'ok' if good else 'BAD'}")
    verdict(7, ok, "; ".join(lines))


# -- 8. order sanity ----------------------------------------------------------


def test_criterion_8_order(verdict, cohen_base, cohen_space):
    S = cohen_base
    conds = [p for _, p in cohen_space]
    n = len(conds)
    below = [[j for j in range(n) if leq(S, conds[i], conds[j]) is not None] for i in range(n)]
    le = [set(b) for b in below]
    reflexive = all(i in le[i] for i in range(n))
    intransitive = sum(1 for i in range(n) for j in le[i] for k in le[j] if k not in le[i])
    fams = [{(tuple(m), k) for m, k in induced_family(S, p)} for p in conds]
    pairs = sum(len(s) for s in le)
    monotone_bad = [(i, j) for i in range(n) for j in le[i] if not fams[j] <= fams[i]]
    example = ""
    if monotone_bad:
        i, j = monotone_bad[0]
        example = f"; e.g. p={conds[i].to_text().strip()!r} <= q={conds[j].to_text().strip()!r} misses {sorted(fams[j] - fams[i])[0]}"
    ok = reflexive and intransitive == 0 and not monotone_bad
    verdict(8, ok, f"{n} conditions, {pairs} comparable pairs; reflexive={reflexive}; "
            f"{intransitive} transitivity violations; {len(monotone_bad)} pairs with F_q not inside F_p{example}")


# -- 9. generic runs ----------------------------------------------------------

SCHEDULE = ("force:3 cover:w*4 set:w,w*4 force:2 cover:w*5+1 set:w*2,w*3 "
            "cover:w*6 set:w*5,w*6 cover:w*7 force:2 set:w*7+1 cover:w*8")


def test_criterion_9_generic_run(verdict):
    deep = build_scheme(generate_type(list(range(2, 12)), [0, 1, 2, 0, 48, 2, 406, 420, 0, 4378], 10), check=False)
    goals = [parse_goal(g) for g in SCHEDULE.split()]
    kinds = {type(g).__name__ for g in goals}
    run = run_generic(deep, goals, fuel=50)
    rep = verify_fragment(deep, run.fragment, run.chain)
    chain_ok = all(leq(deep, b, a) is not None for a, b in zip(run.chain, run.chain[1:]))
    # independent pairwise check on a sample of each level
    rng = random.Random(9)
    by_level = {}
    for m, k in run.fragment:
        by_level.setdefault(k, []).append(tuple(sorted(m)))
    sample = {k: rng.sample(ms, min(len(ms), 150)) for k, ms in by_level.items()}
    pairwise = oracles.fragment_pairs_ok(sample)
    captures = sum(r.get("kind") == "capture" for r in run.records)
    ok = len(goals) == 12 and len(kinds) == 3 and rep.passed and run.report.passed and chain_ok and pairwise
    verdict(9, ok, f"12 goals ({captures} captures) met in {len(run.chain) - 1} steps of fuel 50; "
            f"fragment {len(run.fragment)} members, re-check {'passed' if rep.passed else 'FAILED'}, "
            f"sampled pairwise {'ok' if pairwise else 'FAILED'}")
