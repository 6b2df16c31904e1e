"""Colorings that refute (star)_m, the posets P_n of capture-free sets, and their amalgamations."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .capturing import CaptureQuery, CaptureWitness, captures, check_delta_system, find_capture
from .core_types import FinSet, finset
from .errors import BadScenario, InsufficientWidth, NotADeltaSystem, PreconditionFailed
from .report import CheckResult, Report
from .scheme import Scheme, order_iso


# -- colorings ----------------------------------------------------------------


@dataclass
class ColoringTable:
    S: Scheme
    f: dict[int, tuple[int, ...]]
    N: tuple[int, ...]
    relative: dict[FinSet, dict[int, tuple[int, ...]]]

    def to_text(self) -> str:
        return "".join(f"{a}: {' '.join(map(str, seq))}\n" for a, seq in sorted(self.f.items()))


def color_bounds(S: Scheme) -> tuple[int, ...]:
    N = [1]
    for k in range(1, S.K + 1):
        N.append(N[-1] + S.typ.n[k] + 1)
    return tuple(N)


def build_colorings(S: Scheme) -> ColoringTable:
    """Relative colorings f^F for every member, bottom-up; f_alpha is taken from the top member.

    At level k, root points get value N[k-1] at coordinate k and inherit the
    lower coordinates from piece 0; the copy of a point of F_0 minus the root
    inside piece i gets N[k-1] + i + 1 and inherits from piece i itself.
    """
    N = color_bounds(S)
    rel: dict[FinSet, dict[int, tuple[int, ...]]] = {}
    for a in S.universe:
        rel[(a,)] = {a: (0,)}
    for k in range(1, S.K + 1):
        for F in S.levels[k]:
            root, pieces = S.decompose(F)
            table = {a: rel[pieces[0]][a] + (N[k - 1],) for a in root}
            rset = set(root)
            for i, P in enumerate(pieces):
                sub = rel[P]
                for a in P:
                    if a not in rset:
                        table[a] = sub[a] + (N[k - 1] + i + 1,)
            rel[F] = table
    return ColoringTable(S, dict(rel[S.top]), N, rel)


def verify_colorings(ct: ColoringTable) -> Report:
    S = ct.S
    checks = []
    bad, count = None, 0
    for k, lvl in enumerate(S.levels):
        if not lvl:
            continue
        E = lvl[0]
        for F in lvl[1:]:
            phi = order_iso(E, F)
            for a in E:
                count += 1
                if ct.relative[F][phi(a)] != ct.relative[E][a]:
                    bad = bad or f"level {k}: {E} -> {F} at {a}"
    checks.append(CheckResult("transport", bad is None, count, bad))

    bad, count = None, 0
    for F in S.members():
        k = S.level_of(F)
        for a, seq in ct.relative[F].items():
            count += 1
            if ct.f[a][: k + 1] != seq:
                bad = bad or f"{F} at {a}: {seq} vs {ct.f[a]}"
    checks.append(CheckResult("coherence", bad is None, count, bad))

    Nok = all(ct.N[k] == ct.N[k - 1] + S.typ.n[k] + 1 for k in range(1, S.K + 1)) and ct.N[0] == 1
    checks.append(CheckResult("color-bound recursion", Nok, S.K + 1, None if Nok else str(ct.N)))

    bad, count = None, 0
    for a, seq in ct.f.items():
        for l, v in enumerate(seq):
            count += 1
            if not 0 <= v < ct.N[l]:
                bad = bad or f"f_{a}({l}) = {v} not below N_{l} = {ct.N[l]}"
    checks.append(CheckResult("color range", bad is None, count, bad))
    return Report("colorings", checks)


def singleton_witnesses(S: Scheme, arity: int):
    """Every capture of a singleton family at the given arity, as (F, k, points)."""
    for k in range(1, S.K + 1):
        if S.typ.n[k] < arity:
            continue
        for F in S.levels[k]:
            root, pieces = S.decompose(F)
            rset = set(root)
            isos = [order_iso(pieces[0], pieces[i]) for i in range(arity)]
            for a in pieces[0]:
                if a not in rset:
                    yield F, k, tuple(phi(a) for phi in isos)


def coloring_bridge(ct: ColoringTable, arities: Iterable[int] = (2, 3, 4)) -> Report:
    """Captured points share a prefix of length k and split into distinct values at k."""
    checks = []
    for ar in arities:
        bad, count = None, 0
        for F, k, pts in singleton_witnesses(ct.S, ar):
            count += 1
            fam = check_delta_system([(p,) for p in pts])
            if not captures(ct.S, F, fam, tuple(range(ar))):
                bad = bad or f"{F} does not capture {pts}"
                continue
            prefixes = {ct.f[p][:k] for p in pts}
            values = {ct.f[p][k] for p in pts}
            if len(prefixes) != 1 or len(values) != ar:
                bad = bad or f"level {k} F={F} points {pts}"
        checks.append(CheckResult(f"bridge arity {ar}", bad is None, count, bad))
    return Report("coloring bridge", checks)


def read_coloring(source) -> dict[int, tuple[int, ...]]:
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    out = {}
    for line in text.splitlines():
        if line.strip():
            head, _, rest = line.partition(":")
            out[int(head)] = tuple(int(v) for v in rest.split())
    return out


# -- (star)_m -----------------------------------------------------------------


@dataclass(frozen=True)
class StarInstance:
    gamma: tuple[tuple[int, ...], ...]
    m: int

    def __post_init__(self):
        if len(set(self.gamma)) != len(self.gamma):
            raise ValueError("sequences must be pairwise distinct")
        if len({len(g) for g in self.gamma}) > 1:
            raise ValueError("sequences must have equal length")


def star_search(inst: StarInstance) -> tuple[int, tuple[tuple[int, ...], ...]] | None:
    """Smallest k with m+1 sequences sharing a length-k prefix and distinct at k.

    Within the first qualifying prefix class the earliest sequence per value is
    taken, in list order.
    """
    if inst.m + 1 > len(inst.gamma):
        return None
    length = len(inst.gamma[0]) if inst.gamma else 0
    for k in range(length):
        groups: dict[tuple, dict[int, tuple]] = {}
        for g in inst.gamma:
            groups.setdefault(g[:k], {}).setdefault(g[k], g)
        for firsts in groups.values():
            if len(firsts) >= inst.m + 1:
                chosen = sorted(firsts.values(), key=inst.gamma.index)[: inst.m + 1]
                return k, tuple(chosen)
    return None


# -- P_n ----------------------------------------------------------------------


@dataclass(frozen=True)
class PnCondition:
    P: FinSet
    n: int


@dataclass(frozen=True)
class PnCounterexample:
    tuple: tuple[int, ...]
    witness: CaptureWitness


def pn_is_condition(S: Scheme, P: Iterable[int], n: int) -> bool | PnCounterexample:
    """True when no n+1 points of P form a captured singleton family."""
    P = finset(P)
    if n < 1:
        raise PreconditionFailed("n must be at least 1")
    if len(P) < n + 1:
        return True
    fam = check_delta_system([(x,) for x in P])
    w = find_capture(S, fam, CaptureQuery(n + 1))
    if w is None:
        return True
    return PnCounterexample(tuple(P[i] for i in w.indices), w)


def _require_condition(S: Scheme, cond: PnCondition) -> None:
    res = pn_is_condition(S, cond.P, cond.n)
    if res is not True:
        raise PreconditionFailed(f"{cond.P} is not a P_{cond.n} condition: {res.tuple} captured")


def pn_standard_family(S: Scheme, base: PnCondition, k: int, t: int) -> list[PnCondition]:
    """Copies of base.P along a greedy increasing delta-chain of level-k members.

    D_0 is the first level-k member containing P; later members are taken in
    member order whenever they keep the chain a delta-system.
    """
    _require_condition(S, base)
    if not 0 <= k <= S.K:
        raise InsufficientWidth(f"level {k} not built")
    P = base.P
    anchor = P[0] if P else None
    pool = S.containing[k].get(anchor, ()) if P else S.levels[k]
    D0 = next((D for D in pool if set(P) <= set(D)), None)
    if D0 is None:
        raise PreconditionFailed(f"no level-{k} member contains {P}")
    chain = [D0]
    for D in S.levels[k]:
        if len(chain) == t:
            break
        if D in chain:
            continue
        try:
            check_delta_system(chain + [D])
        except NotADeltaSystem:
            continue
        chain.append(D)
    if len(chain) < t:
        raise InsufficientWidth(f"only {len(chain)} level-{k} members in delta-position, need {t}")
    out = [PnCondition(order_iso(D0, D).image(P), base.n) for D in chain]
    for c in out:
        _require_condition(S, c)
    return out


def pn_union_check(S: Scheme, conds: Sequence[PnCondition], n: int) -> PnCondition | PnCounterexample:
    Q = finset(x for c in conds for x in c.P)
    res = pn_is_condition(S, Q, n)
    return PnCondition(Q, n) if res is True else res


# -- the amalgamation step for P_1 --------------------------------------------


@dataclass(frozen=True)
class P1CaptureData:
    """D_a captures (P_a, P_a2), D_b captures (P_b1, P_b) and F captures (D_a, D_b)."""

    P_a2: FinSet
    P_b1: FinSet
    D_a: FinSet
    D_b: FinSet
    F: FinSet


def _captures_pair(S: Scheme, D, X, Y) -> bool:
    try:
        fam = check_delta_system([X, Y])
        return S.is_member(D) and S.level_of(D) >= 1 and captures(S, D, fam, (0, 1))
    except Exception:
        return False


def validate_p1_scenario(S: Scheme, P_a: PnCondition, P_b: PnCondition, data: P1CaptureData) -> None:
    sets = [P_a.P, data.P_a2, data.P_b1, P_b.P]
    for X in sets:
        if pn_is_condition(S, X, 1) is not True:
            raise BadScenario(f"{X} is not a P_1 condition")
    # the four conditions come from a refined delta-system: distinct, one common intersection
    if len(set(sets)) != 4 or len({frozenset(X) & frozenset(Y) for i, X in enumerate(sets) for Y in sets[i + 1 :]}) != 1:
        raise BadScenario("the four conditions do not form a delta-system")
    if not (S.is_member(data.D_a) and S.is_member(data.D_b)) or S.level_of(data.D_a) != S.level_of(data.D_b):
        raise BadScenario("D_a and D_b must be members of one level")
    if not _captures_pair(S, data.D_a, P_a.P, data.P_a2):
        raise BadScenario("D_a does not capture (P_a, P_a2)")
    if not _captures_pair(S, data.D_b, data.P_b1, P_b.P):
        raise BadScenario("D_b does not capture (P_b1, P_b)")
    if not _captures_pair(S, data.F, data.D_a, data.D_b):
        raise BadScenario("F does not capture (D_a, D_b)")


def p1_amalgam_check(S: Scheme, P_a: PnCondition, P_b: PnCondition, data: P1CaptureData | None) -> bool:
    if P_a.P == P_b.P:
        # equal copies: the union is the set itself, no capture data is consulted
        return pn_is_condition(S, P_a.P, 1) is True
    validate_p1_scenario(S, P_a, P_b, data)
    return pn_is_condition(S, finset(P_a.P + P_b.P), 1) is True


def random_p1_scenario(S: Scheme, rng: random.Random, tries: int = 200):
    """Assemble a scenario satisfying every precondition, or None if the draws all fail."""
    for _ in range(tries):
        lvl = rng.randint(2, S.K)
        F = rng.choice(S.levels[lvl])
        _, Fp = S.decompose(F)
        k = rng.randint(1, lvl - 1)
        inner = S.restrict(Fp[0])[k]
        if not inner:
            continue
        D_a = rng.choice(inner)
        D_b = order_iso(Fp[0], Fp[1]).image(D_a)
        rD, Dp = S.decompose(D_a)
        tail = [x for x in Dp[0] if x not in rD]
        P1 = set(rng.sample(tail, rng.randint(1, min(3, len(tail)))))
        if rD and rng.random() < 0.5:
            P1 |= set(rng.sample(rD, rng.randint(1, len(rD))))
        P1 = finset(P1)
        if pn_is_condition(S, P1, 1) is not True:
            continue
        P2 = order_iso(Dp[0], Dp[1]).image(P1)
        across = order_iso(Fp[0], Fp[1])
        Pb1, Pb2 = across.image(P1), across.image(P2)
        try:
            data = P1CaptureData(P2, Pb1, D_a, D_b, F)
            validate_p1_scenario(S, PnCondition(P1, 1), PnCondition(Pb2, 1), data)
        except BadScenario:
            continue
        return PnCondition(P1, 1), PnCondition(Pb2, 1), data
    return None
