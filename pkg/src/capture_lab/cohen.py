"""A desk-scale model of the finite-condition poset that transfers a scheme on omega onto omega_1.

Conditions attach to finitely many limit ordinals delta a member D of the base
scheme and an anchor a in D.  The map Phi^p re-anchors the top member so that
the block starting at each anchor lands at its limit; the induced family F_p is
the image of everything below the top member.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

from .capturing import CaptureWitness, DeltaSystemFamily, captures_decomposed
from .core_types import FinSet, OrdinalCode, PartitionSchedule, check_cap, finset, nat, parse_ordinal, render_ordinal
from .errors import (
    CapExceeded,
    ConditionViolation,
    DepthExhausted,
    FuelExhausted,
    NotStandardizable,
    PreconditionFailed,
    WidthExhausted,
)
from .report import CheckResult, Report
from .scheme import (
    Scheme,
    _is_interval_of,
    copy_with_interval,
    find_cover_with_root,
    iter_covers,
    iter_covers_with_root,
    order_iso,
)


class Entry(NamedTuple):
    delta: OrdinalCode
    D: FinSet
    a: int


@dataclass(frozen=True)
class CohenCondition:
    entries: tuple[Entry, ...] = ()

    @property
    def supp(self) -> tuple[OrdinalCode, ...]:
        return tuple(e.delta for e in self.entries)

    @property
    def top(self) -> FinSet:
        return self.entries[-1].D if self.entries else ()

    @property
    def anchors(self) -> tuple[int, ...]:
        return tuple(e.a for e in self.entries)

    def entry(self, delta: OrdinalCode) -> Entry | None:
        return next((e for e in self.entries if e.delta == delta), None)

    def __len__(self) -> int:
        return len(self.entries)

    def to_text(self) -> str:
        return "".join(
            f"{render_ordinal(e.delta)} : {' '.join(map(str, e.D))} @ {e.a}\n" for e in self.entries
        )


def brief(A) -> str:
    """Compact rendering of a finite set of naturals: runs become a..b."""
    A = sorted(A)
    parts, i = [], 0
    while i < len(A):
        j = i
        while j + 1 < len(A) and A[j + 1] == A[j] + 1:
            j += 1
        parts.append(str(A[i]) if i == j else f"{A[i]}..{A[j]}")
        i = j + 1
    return "{" + ",".join(parts) + "}"


def _ords(A) -> str:
    A = list(A)
    shown = ", ".join(map(render_ordinal, A[:6]))
    return "{" + shown + (", ..." if len(A) > 6 else "") + "}"


def _as_ordinal(x) -> OrdinalCode:
    if isinstance(x, OrdinalCode):
        return x
    if isinstance(x, str):
        return parse_ordinal(x)
    if isinstance(x, int):
        return nat(x)
    return OrdinalCode(*x)


def validate_condition(S: Scheme, raw: Iterable, cap: int | None = None) -> CohenCondition:
    """Check a list of (delta, D, a) triples; the empty list is a valid condition."""
    entries = [Entry(_as_ordinal(d), finset(D), int(a)) for d, D, a in raw]
    entries.sort(key=lambda e: e.delta)
    for e in entries:
        if not e.delta.is_limit:
            raise ConditionViolation("limit", f"{render_ordinal(e.delta)} is not a limit")
        if cap is not None and e.delta.limb >= cap:
            raise ConditionViolation("cap", f"{render_ordinal(e.delta)} is not below w*{cap}")
        if not S.is_member(e.D):
            raise ConditionViolation("member", f"{brief(e.D)} is not a base member")
    for lo, hi in zip(entries, entries[1:]):
        if lo.delta == hi.delta:
            raise ConditionViolation("support", f"{render_ordinal(lo.delta)} listed twice")
        if not set(lo.D) <= set(hi.D):
            raise ConditionViolation("nestedness", f"D at {render_ordinal(lo.delta)} not inside D at {render_ordinal(hi.delta)}")
        if not lo.a < hi.a:
            raise ConditionViolation("monotone anchors", f"{lo.a} >= {hi.a}")
    for e in entries:
        if e.a not in e.D:
            raise ConditionViolation("anchor", f"{e.a} not in {brief(e.D)}")
    return CohenCondition(tuple(entries))


def read_condition(S: Scheme, source, cap: int | None = None) -> CohenCondition:
    """Lines of the form ``<ordinal> : <elems> @ <anchor>``."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    raw = []
    for line in text.splitlines():
        if not line.strip():
            continue
        head, _, rest = line.partition(":")
        elems, _, anchor = rest.partition("@")
        raw.append((parse_ordinal(head), [int(v) for v in elems.split()], int(anchor)))
    return validate_condition(S, raw, cap)


# -- the embeddings -----------------------------------------------------------


def phi_embed(a: int, delta: OrdinalCode, x: int) -> OrdinalCode:
    return nat(x) if x < a else OrdinalCode(delta.limb, delta.off + x - a)


def phi_apply(p: CohenCondition, x: int) -> OrdinalCode:
    """Phi^p on a single natural (the piecewise rule, not restricted to the top member)."""
    es = p.entries
    if not es or x < es[0].a:
        return nat(x)
    i = len(es) - 1
    while es[i].a > x:
        i -= 1
    return phi_embed(es[i].a, es[i].delta, x)


def phi_total(p: CohenCondition) -> dict[int, OrdinalCode]:
    return {x: phi_apply(p, x) for x in p.top}


def phi_inverse(p: CohenCondition, xi: OrdinalCode) -> int | None:
    """The x in the top member with Phi^p(x) = xi, if any."""
    es = p.entries
    if not es:
        return None
    if xi.limb == 0:
        x = xi.off
        ok = x < es[0].a
    else:
        i = next((i for i, e in enumerate(es) if e.delta.limb == xi.limb), None)
        if i is None:
            return None
        x = es[i].a + xi.off
        ok = i == len(es) - 1 or x < es[i + 1].a
    return x if ok and x in set(p.top) else None


def induced_family(S: Scheme, p: CohenCondition) -> list[tuple[tuple[OrdinalCode, ...], int]]:
    if not p.entries:
        return []
    out = []
    for k, lvl in enumerate(S.restrict(p.top)):
        for E in lvl:
            out.append((tuple(phi_apply(p, x) for x in E), k))
    return out


# -- the order ------------------------------------------------------------------


@dataclass
class ExtensionWitness:
    W: dict[OrdinalCode, FinSet] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {render_ordinal(d): list(W) for d, W in sorted(self.W.items())}


def witness_ok(S: Scheme, W, Dq, aq: int, Dp, ap: int) -> bool:
    """Clause (ii) for one support point, with W given."""
    W = tuple(W)
    if not S.is_member(W) or S.level_of(W) != S.level_of(Dq) or ap not in W:
        return False
    if sum(1 for w in W if w < ap) != sum(1 for d in Dq if d < aq):
        return False
    upper = tuple(w for w in W if w >= ap)
    return set(upper) <= set(Dp) and _is_interval_of(upper, tuple(Dp))


def _search_witness(S: Scheme, Dq, aq: int, Dp, ap: int) -> FinSet | None:
    # W cap D^p is an initial segment of W containing max W, so W lies inside D^p
    k = S.level_of(Dq)
    c = sum(1 for d in Dq if d < aq)
    Dp = tuple(Dp)
    if ap not in Dp:
        return None
    pos = Dp.index(ap)
    upper = Dp[pos : pos + S.typ.m[k] - c]
    if len(upper) != S.typ.m[k] - c:
        return None
    mask_p = S.masks[Dp]
    hits = []
    for W in S.containing[k].get(upper[-1], ()):
        mW = S.masks[W]
        if mW & ~mask_p or ap not in W:
            continue
        if tuple(w for w in W if w >= ap) == upper and sum(1 for w in W if w < ap) == c:
            hits.append(W)
    return min(hits) if hits else None


def why_not_leq(S: Scheme, p: CohenCondition, q: CohenCondition) -> str | None:
    """None when p <= q (p stronger); otherwise the first failing clause."""
    if not set(q.supp) <= set(p.supp):
        return "support: supp(q) not inside supp(p)"
    qs = q.entries
    for i, e in enumerate(qs):
        for f in qs[i + 1 :]:
            dp = p.entry(f.delta).a - p.entry(e.delta).a
            if dp < f.a - e.a:
                return f"clause (i) at ({render_ordinal(e.delta)}, {render_ordinal(f.delta)})"
    for e in qs:
        pe = p.entry(e.delta)
        if _search_witness(S, e.D, e.a, pe.D, pe.a) is None:
            return f"clause (ii) at {render_ordinal(e.delta)}"
    return None


def leq(S: Scheme, p: CohenCondition, q: CohenCondition) -> ExtensionWitness | None:
    """Witnesses for p <= q, each the lexicographically least member that works."""
    if why_not_leq(S, p, q) is not None:
        return None
    out = ExtensionWitness()
    for e in q.entries:
        pe = p.entry(e.delta)
        out.W[e.delta] = _search_witness(S, e.D, e.a, pe.D, pe.a)
    return out


# -- density: covering ordinals and sets --------------------------------------


@dataclass
class Extension:
    q: CohenCondition
    x: int | None
    witness: ExtensionWitness


def _finish(S: Scheme, p: CohenCondition, entries, x, xi, built: dict) -> Extension | None:
    """Accept a candidate only if it is a condition, extends p, and hits xi."""
    try:
        q = validate_condition(S, entries)
    except ConditionViolation:
        return None
    if xi is not None and (x not in set(q.top) or phi_apply(q, x) != xi):
        return None
    wit = leq(S, q, p)
    if wit is None:
        return None
    for d, W in built.items():
        e, pe = q.entry(d), p.entry(d)
        if not witness_ok(S, W, pe.D, pe.a, e.D, e.a):
            return None
    return Extension(q, x, wit)


def _enlarge(S: Scheme, p: CohenCondition, extra: Iterable[int], x=None, xi=None) -> Iterator[Extension]:
    """Replace every D by one cover F of D_n plus ``extra``; anchors unchanged."""
    need = set(p.top) | set(extra)
    for F in iter_covers(S, need):
        built = {e.delta: copy_with_interval(S, F, e.D, e.a) for e in p.entries}
        ext = _finish(S, p, [(e.delta, F, e.a) for e in p.entries], x, xi, built)
        if ext:
            yield ext


def _cut(S: Scheme, p: CohenCondition, A: Iterable[int], c: int, new: tuple | None, x, xi) -> Iterator[Extension]:
    """Covers F with A inside F_0 and root F_0 below a_c; entries from c on move to F_1."""
    es = p.entries
    for F in iter_covers_with_root(S, A, es[c].a):
        _, pieces = S.decompose(F)
        phi = order_iso(pieces[0], pieces[1])
        entries = [tuple(e) for e in es[:c]]
        if new is not None:
            entries.append((new[0], F, new[1]))
        built = {}
        for e in es[c:]:
            entries.append((e.delta, F, phi(e.a)))
            built[e.delta] = phi.image(copy_with_interval(S, pieces[0], e.D, e.a))
        ext = _finish(S, p, entries, x, xi, built)
        if ext:
            yield ext


def _append(S: Scheme, p: CohenCondition, delta: OrdinalCode, ell: int) -> Iterator[Extension]:
    a = max(p.top, default=0) + 1
    xi = OrdinalCode(delta.limb, ell)
    for F in iter_covers(S, set(p.top) | set(range(a, a + ell + 1))):
        ext = _finish(S, p, [tuple(e) for e in p.entries] + [(delta, F, a)], a + ell, xi, {})
        if ext:
            yield ext


def extension_candidates(S: Scheme, p: CohenCondition, xi: OrdinalCode) -> tuple[Iterator[Extension], str]:
    """Lazy stream of verified (q, x) for xi, plus a description of the demand."""
    es = p.entries
    top = set(p.top)
    if xi.limb == 0:
        v = xi.off
        if not es:
            delta = OrdinalCode(1, 0)
            stream = (
                ext
                for F in iter_covers(S, [v, v + 1])
                for ext in [_finish(S, p, [(delta, F, v + 1)], v, xi, {})]
                if ext
            )
            return stream, f"cover of {brief([v, v + 1])}"
        if v < es[0].a:
            return _enlarge(S, p, [v], v, xi), f"cover of D_n + {{{v}}}"
        A = top | {v}
        return _cut(S, p, A, 0, None, v, xi), f"(A={brief(A)}, a={es[0].a})"
    delta, ell = OrdinalCode(xi.limb, 0), xi.off
    j = next((i for i, e in enumerate(es) if e.delta == delta), None)
    if j is not None:
        aj = es[j].a
        if j == len(es) - 1:
            return _enlarge(S, p, range(aj, aj + ell + 1), aj + ell, xi), f"cover of D_n + [{aj}, {aj + ell}]"
        A = top | set(range(aj, aj + ell + 1))
        return _cut(S, p, A, j + 1, None, aj + ell, xi), f"(A={brief(A)}, a={es[j + 1].a})"
    if not es or delta > es[-1].delta:
        return _append(S, p, delta, ell), f"cover above D_n for {render_ordinal(xi)}"
    j = next(i for i, e in enumerate(es) if e.delta > delta)
    a = max(top) + 1
    A = top | set(range(a, a + ell + 1))
    return _cut(S, p, A, j, (delta, a), a + ell, xi), f"(A={brief(A)}, a={es[j].a})"


def extend_to_cover(S: Scheme, p: CohenCondition, xi, cap: int | None = None) -> tuple[CohenCondition, int]:
    """Some q <= p and x with Phi^q(x) = xi; q = p when xi is already in range."""
    xi = _as_ordinal(xi)
    if cap is not None:
        check_cap(xi, cap)
    x = phi_inverse(p, xi)
    if x is not None:
        return p, x
    stream, demand = extension_candidates(S, p, xi)
    ext = next(stream, None)
    if ext is None:
        raise DepthExhausted(f"no base member realizes {render_ordinal(xi)}: needs {demand} within K={S.K}")
    return ext.q, ext.x


def covering_member(S: Scheme, q: CohenCondition, A: Iterable[OrdinalCode]) -> tuple | None:
    A = set(A)
    return next((m for m in induced_family(S, q) if A <= set(m[0])), None)


def extend_cover_set(S: Scheme, p: CohenCondition, A: Iterable, cap: int | None = None) -> CohenCondition:
    """q <= p such that some member of the induced family of q contains A."""
    A = [_as_ordinal(x) for x in A]
    if not A:
        return p
    q = p
    for _ in range(4 * len(A) + 4):
        missing = [xi for xi in A if phi_inverse(q, xi) is None]
        if not missing:
            break
        q, _ = extend_to_cover(S, q, missing[0], cap)
    else:
        raise DepthExhausted("covering did not stabilise")
    if covering_member(S, q, A):
        return q
    B = [phi_inverse(q, xi) for xi in A]
    for ext in _enlarge(S, q, B):
        if covering_member(S, ext.q, A):
            return ext.q
    raise DepthExhausted(f"no base member contains D_n + {brief(B)}")


# -- standardized families and forced capture ----------------------------------


@dataclass(frozen=True)
class StandardizedFamily:
    conds: tuple[CohenCondition, ...]
    targets: tuple[OrdinalCode, ...]
    r: int
    d: int
    D: tuple[FinSet, ...]
    a: tuple[int, ...]
    x: int
    j0: int

    def __len__(self) -> int:
        return len(self.conds)


def standardize(S: Scheme, conds: Sequence[CohenCondition], marks: Sequence) -> StandardizedFamily:
    """Check the refinement clauses: (1) supports form an increasing delta-system whose root
    is a common prefix, (2) equal support size, (3) identical (D_i, a_i), (4) one marked
    point x and block index j0 with distinct increasing targets."""
    conds = tuple(conds)
    marks = tuple(_as_ordinal(m) for m in marks)
    if not conds or len(marks) != len(conds):
        raise PreconditionFailed("need one target per condition")
    d = len(conds[0])
    if d == 0 or any(len(c) != d for c in conds):
        raise NotStandardizable(2, "support sizes differ or are empty")
    supps = [c.supp for c in conds]
    r = d
    for s in supps[1:]:
        r = min(r, next((i for i in range(d) if s[i] != supps[0][i]), d))
    if len(conds) > 1:
        if r == d:
            raise NotStandardizable(1, "identical supports")
        tails = [set(s[r:]) for s in supps]
        for i, s in enumerate(supps):
            for t in supps[i + 1 :]:
                if set(s) & set(t) != set(s[:r]):
                    raise NotStandardizable(1, "supports do not meet exactly in the common prefix")
        for s, t in zip(supps, supps[1:]):
            if not s[-1] < t[r]:
                raise NotStandardizable(1, "non-root supports are not increasing")
        del tails
    data = [(e.D, e.a) for e in conds[0].entries]
    for c in conds[1:]:
        if [(e.D, e.a) for e in c.entries] != data:
            raise NotStandardizable(3, "member/anchor data differ")
    xs = {phi_inverse(c, m) for c, m in zip(conds, marks)}
    if None in xs or len(xs) != 1:
        raise NotStandardizable(4, "targets are not images of one common point")
    x = xs.pop()
    anchors = [a for _, a in data]
    if x < anchors[0]:
        raise NotStandardizable(4, "marked point lies below every anchor")
    # boundary x = a_j belongs to block j, matching the half-open pieces of Phi
    j0 = max(i for i, a in enumerate(anchors) if a <= x)
    if any(not s < t for s, t in zip(marks, marks[1:])):
        raise NotStandardizable(4, "targets are not strictly increasing")
    if len(conds) > 1 and j0 < r:
        raise NotStandardizable(4, "marked block lies in the common root")
    if len(conds) == 1:
        r = min(r, j0)
    return StandardizedFamily(conds, marks, r, d, tuple(D for D, _ in data), tuple(anchors), x, j0)


@dataclass
class ForceResult:
    q: CohenCondition
    F_star: FinSet
    F: tuple[OrdinalCode, ...]
    witness: CaptureWitness
    extension_witnesses: list[ExtensionWitness]
    report: Report

    def to_record(self) -> dict:
        return {
            "kind": "capture",
            "level": self.witness.k,
            "F": [render_ordinal(x) for x in self.F],
            "indices": list(self.witness.indices),
        }


def _induced_decomposition(S: Scheme, q: CohenCondition, F_img: tuple, k: int):
    """Root and pieces of F_img read off the induced family alone."""
    fam = induced_family(S, q)
    below = [set(m) for m, l in fam if l == k - 1 and set(m) <= set(F_img)]
    root = set.intersection(*below) if below else set()
    below.sort(key=lambda m: min(m - root))
    return tuple(sorted(root)), [tuple(sorted(m)) for m in below]


def force_capture(
    S: Scheme,
    fam: StandardizedFamily,
    n: int | str = 2,
    block: int | None = None,
    partition: PartitionSchedule | None = None,
    min_level: int = 0,
) -> ForceResult:
    """Amalgamate the first n conditions into q that captures their targets.

    ``n="full"`` uses n = n_k of the chosen level.  Candidate F* are tried in
    ascending (level, member) order; the first whose result passes every
    postcondition is returned.
    """
    if n != "full" and n > len(fam):
        raise WidthExhausted(f"{len(fam)} marked conditions, {n} requested")
    k_top = S.level_of(fam.D[-1])
    levels = [
        k for k in range(max(k_top, min_level) + 1, S.K + 1)
        if (block is None or (k <= len(partition.assign) and partition.block_of(k) == block))
        and (S.typ.n[k] <= len(fam) if n == "full" else S.typ.n[k] >= n)
    ]
    if fam.r >= fam.d:
        raise PreconditionFailed("no non-root coordinates to amalgamate")
    cut = fam.a[fam.r]
    tried = 0
    for F_star in iter_covers_with_root(S, fam.D[-1], cut, levels=levels):
        tried += 1
        res = _try_force(S, fam, F_star, n)
        if res is not None:
            return res
    raise DepthExhausted(
        f"no F* at levels {levels} with D_(d-1)={brief(fam.D[-1])} in F*_0 and root F*_0 below {cut} ({tried} tried)"
    )


def _try_force(S: Scheme, fam: StandardizedFamily, F_star: FinSet, n) -> ForceResult | None:
    k = S.level_of(F_star)
    n = S.typ.n[k] if n == "full" else n
    root, pieces = S.decompose(F_star)
    W0 = [copy_with_interval(S, pieces[0], D, a) for D, a in zip(fam.D, fam.a)]
    isos = [order_iso(pieces[0], pieces[i]) for i in range(n)]
    entries = [(fam.conds[0].supp[j], fam.D[j], fam.a[j]) for j in range(fam.r)]
    W = [[phi.image(W0[j]) for j in range(fam.d)] for phi in isos]
    for i, phi in enumerate(isos):
        for j in range(fam.r, fam.d):
            entries.append((fam.conds[i].supp[j], F_star, phi(fam.a[j])))
    try:
        q = validate_condition(S, entries)
    except ConditionViolation:
        return None
    checks = []
    ext_w = []
    for i in range(n):
        p = fam.conds[i]
        ok = all(
            witness_ok(S, W[i][j], fam.D[j], fam.a[j], F_star, isos[i](fam.a[j]))
            for j in range(fam.r, fam.d)
        )
        wit = leq(S, q, p)
        if not ok or wit is None:
            return None
        ext_w.append(wit)
    checks.append(CheckResult("extends every input", True, n))
    xs = [isos[i](fam.x) for i in range(n)]
    if [phi_apply(q, x) for x in xs] != list(fam.targets[:n]):
        return None
    checks.append(CheckResult("marked points hit targets", True, n))
    F_img = tuple(phi_apply(q, x) for x in F_star)
    targets = [(t,) for t in fam.targets[:n]]
    family = DeltaSystemFamily((), tuple(targets))
    img_root = tuple(phi_apply(q, x) for x in root)
    img_pieces = [tuple(phi_apply(q, x) for x in P) for P in pieces]
    ok_map = captures_decomposed(img_root, img_pieces, family, tuple(range(n)))
    ind_root, ind_pieces = _induced_decomposition(S, q, F_img, k)
    ok_ind = (ind_root, ind_pieces) == (img_root, img_pieces)
    if not (ok_map and ok_ind):
        return None
    checks.append(CheckResult("image captures targets", True, 1))
    return ForceResult(q, F_star, F_img, CaptureWitness(F_img, k, tuple(range(n))), ext_w, Report("force", checks))


# -- generic runs -------------------------------------------------------------


@dataclass(frozen=True)
class CoverOrdinal:
    xi: OrdinalCode


@dataclass(frozen=True)
class CoverSet:
    A: tuple[OrdinalCode, ...]


@dataclass(frozen=True)
class ForceCapture:
    n: int | str = 2
    block: int | None = None
    min_level: int = 0


@dataclass
class GenericRun:
    chain: list[CohenCondition]
    fragment: list[tuple[tuple[OrdinalCode, ...], int]]
    records: list[dict]
    report: Report


def parse_goal(text: str):
    """``cover:w*2+1``, ``set:0,w+1`` or ``force:3`` / ``force:full``."""
    kind, _, arg = text.partition(":")
    if kind == "cover":
        return CoverOrdinal(parse_ordinal(arg))
    if kind == "set":
        return CoverSet(tuple(parse_ordinal(v) for v in arg.split(",") if v.strip()))
    if kind == "force":
        return ForceCapture(arg if arg == "full" else int(arg or 2))
    raise ValueError(f"unknown goal {text!r}")


def _marked_seeds(S: Scheme, p: CohenCondition, goal: ForceCapture, partition, per_level: int = 64):
    """Candidate (k, D', a') for the fresh coordinate, ordered by the level k of the F* they admit."""
    last_a = p.entries[-1].a if p.entries else -1
    ok = lambda k: (
        k > goal.min_level
        and (goal.block is None or partition.block_of(k) == goal.block)
        and (goal.n == "full" or S.typ.n[k] >= goal.n)
    )
    seeds = []
    best = S.K + 1
    for Dp in iter_covers(S, set(p.top) | {max(p.top, default=-1) + 1}):
        kD = S.level_of(Dp)
        if kD + 1 >= best:
            break
        if sum(1 for s in seeds if s[1] == kD) >= per_level:
            continue
        for a in (v for v in Dp if v > last_a):
            levels = [k for k in range(kD + 1, best) if ok(k)]
            F = find_cover_with_root(S, Dp, a, levels=levels)
            if F is not None:
                k = S.level_of(F)
                seeds.append((k, kD, Dp, a))
                best = min(best, k)
    seeds.sort(key=lambda s: (s[0], s[1], s[2], s[3]))
    return seeds


def _capture_family(S: Scheme, p: CohenCondition, goal: ForceCapture, cap: int, partition) -> ForceResult:
    """Build marked conditions p_i = p + {lambda_i: (D', a')} on fresh limits and amalgamate them."""
    base_limb = max((d.limb for d in p.supp), default=0) + 1
    for k, _, Dp, a in _marked_seeds(S, p, goal, partition):
        width = S.typ.n[k] if goal.n == "full" else goal.n
        if base_limb + width > cap:
            raise CapExceeded(f"capture needs limits up to w*{base_limb + width - 1}, cap is w*{cap}")
        conds, marks = [], []
        for t in range(width):
            lam = OrdinalCode(base_limb + t, 0)
            conds.append(validate_condition(S, [tuple(e) for e in p.entries] + [(lam, Dp, a)], cap))
            marks.append(lam)
        fam = standardize(S, conds, marks)
        try:
            return force_capture(S, fam, goal.n, goal.block, partition, goal.min_level)
        except (DepthExhausted, WidthExhausted):
            continue
    raise DepthExhausted(f"no marked family above {brief(p.top)} can be amalgamated")



def run_generic(
    S: Scheme,
    schedule: Sequence,
    fuel: int = 50,
    cap: int = 16,
    partition: PartitionSchedule | None = None,
) -> GenericRun:
    """Meet each goal in order along a decreasing chain; every extension step costs one unit of fuel."""
    p = CohenCondition()
    chain = [p]
    records = []
    spent = 0

    def spend(i):
        nonlocal spent
        spent += 1
        if spent > fuel:
            raise FuelExhausted(i)

    for i, goal in enumerate(schedule):
        try:
            q = _meet_goal(S, p, i, goal, spend, records, cap, partition)
        except (DepthExhausted, WidthExhausted) as exc:
            raise type(exc)(f"goal {i}: {exc.args[0] if exc.args else exc}") from exc
        if q is not p:
            if leq(S, q, p) is None:
                raise PreconditionFailed(f"goal {i}: extension does not lie below the chain")
            chain.append(q)
            p = q
    fragment = induced_family(S, p)
    return GenericRun(chain, fragment, records, verify_fragment(S, fragment, chain))


def _meet_goal(S: Scheme, p: CohenCondition, i: int, goal, spend, records: list, cap: int, partition) -> CohenCondition:
    if isinstance(goal, CoverOrdinal):
        spend(i)
        q, x = extend_to_cover(S, p, goal.xi, cap)
        records.append({"goal": i, "kind": "cover", "xi": render_ordinal(goal.xi), "x": x})
    elif isinstance(goal, CoverSet):
        for xi in goal.A:
            check_cap(xi, cap)
        q = p
        while any(phi_inverse(q, xi) is None for xi in goal.A):
            spend(i)
            xi = next(xi for xi in goal.A if phi_inverse(q, xi) is None)
            q, _ = extend_to_cover(S, q, xi, cap)
        if covering_member(S, q, goal.A) is None:
            spend(i)
            q = extend_cover_set(S, q, goal.A, cap)
        member = covering_member(S, q, goal.A)
        records.append({"goal": i, "kind": "set", "A": [render_ordinal(x) for x in goal.A],
                        "member": [render_ordinal(x) for x in member[0]]})
    elif isinstance(goal, ForceCapture):
        spend(i)
        res = _capture_family(S, p, goal, cap, partition)
        q = res.q
        rec = res.to_record()
        rec.update(goal=i)
        records.append(rec)
    else:
        raise ValueError(f"unknown goal {goal!r}")
    return q


def verify_fragment(S: Scheme, fragment, chain: Sequence[CohenCondition] = ()) -> Report:
    """Restricted axiom re-check of an induced fragment: sizes, same-level intersections
    being initial segments, and the decomposition of every member one level up."""
    checks = []
    by_level: dict[int, list[tuple]] = {}
    for m, k in fragment:
        by_level.setdefault(k, []).append(tuple(sorted(m)))
    bad = next((f"level {k}: size {len(m)}" for k, ms in by_level.items() for m in ms if len(m) != S.typ.m[k]), None)
    checks.append(CheckResult("sizes", bad is None, len(fragment), bad))

    # Two members meet in an initial segment of both iff, at every shared point, they
    # share the whole prefix up to it.  Prefix ids from a trie make this linear.
    bad, count = None, 0
    for k, ms in by_level.items():
        trie: dict[tuple, int] = {}
        seen: dict[OrdinalCode, tuple[int, tuple]] = {}
        for E in ms:
            pid = -1
            for x in E:
                pid = trie.setdefault((pid, x), len(trie))
                count += 1
                first = seen.setdefault(x, (pid, E))
                if first[0] != pid and bad is None:
                    bad = f"level {k}: {_ords(first[1])} / {_ords(E)}"
    checks.append(CheckResult("intersections", bad is None, count, bad))

    bad, count = None, 0
    for k, ms in by_level.items():
        if k == 0:
            continue
        by_min: dict[OrdinalCode, list[frozenset]] = {}
        for E in by_level.get(k - 1, []):
            by_min.setdefault(E[0], []).append(frozenset(E))
        for F in ms:
            Fs = frozenset(F)
            inside = [E for x in F for E in by_min.get(x, ()) if E <= Fs]
            count += 1
            if len(inside) != S.typ.n[k]:
                bad = bad or f"level {k}: {len(inside)} pieces in {_ords(F)}"
                continue
            root = frozenset.intersection(*inside)
            tails = sorted(sorted(E - root) for E in inside)
            ok = len(root) == S.typ.r[k] and frozenset().union(*inside) == Fs
            ok = ok and all(t and s[-1] < t[0] for s, t in zip(tails, tails[1:]))
            ok = ok and (not root or all(max(root) < t[0] for t in tails))
            if not ok:
                bad = bad or f"level {k}: {_ords(F)}"
    checks.append(CheckResult("decomposition", bad is None, count, bad))

    bad = None
    for p, q in zip(chain, chain[1:]):
        if leq(S, q, p) is None:
            bad = bad or "chain not decreasing"
    checks.append(CheckResult("chain", bad is None, max(len(chain) - 1, 0), bad))
    return Report("fragment", checks)
