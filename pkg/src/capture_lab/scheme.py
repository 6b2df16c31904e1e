"""Finite fragments of construction schemes on an initial segment of omega.

A scheme is stored level by level as sorted tuples.  Decompositions are never
stored: a level-k member with root size r splits arithmetically into its root
(the first r elements) followed by n_k consecutive blocks of m_{k-1} - r_k
elements, and piece i is the root together with block i.
"""

from __future__ import annotations

import bisect
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .core_types import FinSet, TypeSequence, finset
from .errors import ConstructionFailure, NotAMember, PreconditionFailed, SizeMismatch
from .report import CheckResult, Report


# -- order isomorphisms -----------------------------------------------------


@dataclass(frozen=True)
class IsoMap:
    """The increasing bijection between two finite sets of equal size."""

    source: tuple
    target: tuple

    @cached_property
    def _table(self) -> dict:
        return dict(zip(self.source, self.target))

    @property
    def pairs(self) -> list[tuple]:
        return list(zip(self.source, self.target))

    def __call__(self, x):
        return self._table[x]

    def image(self, X: Iterable) -> tuple:
        return tuple(sorted(self._table[x] for x in X))

    def inverse(self) -> "IsoMap":
        return IsoMap(self.target, self.source)


def order_iso(E: Sequence, F: Sequence) -> IsoMap:
    E, F = tuple(E), tuple(F)
    if len(E) != len(F):
        raise SizeMismatch(f"|E|={len(E)} but |F|={len(F)}")
    return IsoMap(E, F)


def transport(f: IsoMap, X):
    """Image of a set (pointwise) or of a function on ``f.source`` (f o phi^-1)."""
    if isinstance(X, dict):
        return {f(x): v for x, v in X.items()}
    return f.image(X)


def _mask(F: Iterable[int]) -> int:
    m = 0
    for x in F:
        m |= 1 << x
    return m


# -- the scheme -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Scheme:
    """Leveled family of finite subsets of [0, m_K).

    ``roots`` maps each member to its declared root size; the builder always
    uses r_k, loaded files may say anything (the verifier judges).
    """

    typ: TypeSequence
    levels: tuple[tuple[FinSet, ...], ...]
    roots: dict = field(repr=False)

    @property
    def K(self) -> int:
        return len(self.levels) - 1

    @property
    def universe(self) -> range:
        return range(self.typ.m[self.K])

    @property
    def top(self) -> FinSet:
        return tuple(self.universe)

    def members(self) -> Iterator[FinSet]:
        for lvl in self.levels:
            yield from lvl

    def member_count(self) -> int:
        return sum(len(lvl) for lvl in self.levels)

    @cached_property
    def level_index(self) -> dict:
        return {F: k for k, lvl in enumerate(self.levels) for F in lvl}

    def is_member(self, F) -> bool:
        return tuple(F) in self.level_index

    def level_of(self, F) -> int:
        try:
            return self.level_index[tuple(F)]
        except KeyError:
            raise NotAMember(F) from None

    @cached_property
    def masks(self) -> dict:
        return {F: _mask(F) for F in self.level_index}

    @cached_property
    def containing(self) -> list[dict]:
        """containing[k][x]: level-k members containing x, in member order."""
        out = []
        for lvl in self.levels:
            idx = defaultdict(list)
            for F in lvl:
                for x in F:
                    idx[x].append(F)
            out.append(idx)
        return out

    @cached_property
    def by_min(self) -> list[dict]:
        out = []
        for lvl in self.levels:
            idx = defaultdict(list)
            for F in lvl:
                idx[F[0]].append(F)
            out.append(idx)
        return out

    @cached_property
    def piece0_containing(self) -> list[dict]:
        """piece0_containing[k][x]: level-k members whose piece 0 contains x."""
        out = [defaultdict(list)]
        for k in range(1, self.K + 1):
            idx = defaultdict(list)
            width = self.typ.m[k - 1]
            for F in self.levels[k]:
                for x in F[:width]:
                    idx[x].append(F)
            out.append(idx)
        return out

    # -- structural queries --

    def root(self, F) -> FinSet:
        F = tuple(F)
        if F not in self.roots:
            raise NotAMember(F)
        return F[: self.roots[F]]

    def decompose(self, F) -> tuple[FinSet, tuple[FinSet, ...]]:
        F = tuple(F)
        k = self.level_of(F)
        if k == 0:
            raise PreconditionFailed("level-0 members have no decomposition")
        return _split(F, self.roots[F], self.typ.n[k])

    def restrict(self, F) -> list[list[FinSet]]:
        """All members contained in F, grouped by level (levels 0..level(F))."""
        F = tuple(F)
        cached = self._restrict_cache.get(F)
        if cached is not None:
            return cached
        k = self.level_of(F)
        mF = self.masks[F]
        masks = self.masks
        out = []
        for l in range(k + 1):
            found = []
            idx = self.by_min[l]
            for x in F:
                for E in idx.get(x, ()):
                    if masks[E] & mF == masks[E]:
                        found.append(E)
            found.sort()
            out.append(found)
        self._restrict_cache[F] = out
        return out

    @cached_property
    def _restrict_cache(self) -> dict:
        return {}

    # -- serialization --

    def to_text(self) -> str:
        lines = [self.typ.to_text()]
        for k, lvl in enumerate(self.levels):
            for F in lvl:
                lines.append(f"{k}: {' '.join(map(str, F))} ; {self.roots[F]}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")


def _split(F: FinSet, r: int, n: int) -> tuple[FinSet, tuple[FinSet, ...]]:
    root = F[:r]
    w = (len(F) - r) // n if n else 0
    return root, tuple(root + F[r + i * w : r + (i + 1) * w] for i in range(n))


def scheme_from_members(typ: TypeSequence, members: Iterable[tuple[int, Sequence[int], int]]) -> Scheme:
    """Assemble a scheme from (level, elements, root size) triples, no checks."""
    buckets: dict[int, set] = defaultdict(set)
    roots = {}
    K = typ.K
    for k, elems, rsize in members:
        F = finset(elems)
        buckets[k].add(F)
        roots[F] = rsize
        K = max(K, k)
    levels = tuple(tuple(sorted(buckets.get(k, ()))) for k in range(K + 1))
    return Scheme(typ, levels, roots)


def load_scheme(source, verify: bool = True) -> Scheme:
    """Parse the scheme text format (path or text); re-verifies the axioms by default."""
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text(encoding="utf-8")
    lines = text.split("\n")
    typ = TypeSequence.from_text("\n".join(lines[:3]))
    triples = []
    for line in lines[3:]:
        line = line.strip()
        if not line:
            continue
        head, rest = line.split(":", 1)
        elems, rsize = rest.split(";")
        triples.append((int(head), [int(v) for v in elems.split()], int(rsize)))
    S = scheme_from_members(typ, triples)
    if verify:
        report = verify_axioms(S)
        if not report.passed:
            raise ConstructionFailure(f"loaded scheme fails its axioms:\n{report.to_text()}")
    return S


def build_scheme(typ: TypeSequence, K: int | None = None, check: bool = True) -> Scheme:
    """Canonical fragment on [0, m_K) grown from the spine E_k = [0, m_k).

    Every level-k member is an increasing copy of E_k; its pieces are the
    copies of E_k's pieces, so the whole family is obtained by splitting from
    the top down.
    """
    K = typ.K if K is None else K
    if K > typ.K:
        raise PreconditionFailed(f"type has only {typ.K} levels, asked for {K}")
    typ = typ.truncate(K)
    if K == 0:
        return Scheme(typ, (((0,),),), {(0,): 0})
    sets: list[set] = [set() for _ in range(K + 1)]
    sets[K].add(tuple(range(typ.m[K])))
    for k in range(K, 0, -1):
        r, n = typ.r[k], typ.n[k]
        below = sets[k - 1]
        for F in sets[k]:
            below.update(_split(F, r, n)[1])
    roots = {}
    for k in range(K + 1):
        rk = typ.r[k] if k else 0
        for F in sets[k]:
            roots[F] = rk
    S = Scheme(typ, tuple(tuple(sorted(s)) for s in sets), roots)
    if check:
        report = verify_axioms(S)
        if not report.passed:
            raise ConstructionFailure(report.to_text())
    return S


# -- interval copies and covers with a prescribed root -------------------------


def _is_interval_of(X: Sequence, F: Sequence) -> bool:
    """X (sorted, subset of F) occupies consecutive positions of F."""
    if not X:
        return True
    i = bisect.bisect_left(F, X[0])
    return tuple(F[i : i + len(X)]) == tuple(X)


def _above(E: Sequence, mu) -> tuple:
    return tuple(x for x in E if x >= mu)


def copy_with_interval(S: Scheme, F, E, mu: int) -> FinSet:
    """A copy E* of E inside F agreeing with E up to mu whose part from mu on is an interval of F.

    Follows the inductive recipe: descend into the piece holding E and, if mu
    lies in the root, slide the result back into piece 0.
    """
    F, E = tuple(F), tuple(E)
    k, l = S.level_of(F), S.level_of(E)
    if not set(E) <= set(F) or mu not in E:
        raise PreconditionFailed("need E subset of F and mu in E")
    if l == k:
        return E
    root, pieces = S.decompose(F)
    holder = next((P for P in pieces if set(E) <= set(P)), None)
    if holder is None:
        raise PreconditionFailed(f"{E} lies in no piece of {F}")
    inner = copy_with_interval(S, holder, E, mu)
    if mu not in root:
        return inner
    return order_iso(holder, pieces[0]).image(inner)


def search_copy_with_interval(S: Scheme, F, E, mu: int) -> list[FinSet]:
    """Every member satisfying the two copy clauses, by exhaustive scan."""
    F, E = tuple(F), tuple(E)
    l = S.level_of(E)
    head = tuple(x for x in E if x <= mu)
    out = []
    for C in S.restrict(F)[l]:
        if tuple(x for x in C if x <= mu) == head and _is_interval_of(_above(C, mu), F):
            out.append(C)
    return out


def iter_covers_with_root(S: Scheme, A: Iterable[int], a: int, min_level: int = 1, levels=None) -> Iterator[FinSet]:
    """Members F with A inside piece 0 and R(F) = F_0 cap a, ascending level then lexicographic."""
    A = finset(A)
    below = sum(1 for x in A if x < a)
    for k in range(max(min_level, 1), S.K + 1):
        if levels is not None and k not in levels:
            continue
        rk, width = S.typ.r[k], S.typ.m[k - 1]
        if below > rk:
            continue
        cands = S.piece0_containing[k].get(A[-1], ()) if A else S.levels[k]
        Aset = set(A)
        for F in cands:
            F0 = F[:width]
            if S.roots[F] != rk:
                continue
            if Aset <= set(F0) and tuple(x for x in F0 if x < a) == F[: S.roots[F]]:
                yield F


def find_cover_with_root(S: Scheme, A: Iterable[int], a: int, min_level: int = 1, levels=None) -> FinSet | None:
    return next(iter_covers_with_root(S, A, a, min_level, levels), None)


def explain_no_cover(S: Scheme, A: Iterable[int], a: int, min_level: int = 1, levels=None) -> str:
    A = finset(A)
    below = sum(1 for x in A if x < a)
    usable = [
        k for k in range(max(min_level, 1), S.K + 1)
        if S.typ.r[k] >= below and (levels is None or k in levels)
    ]
    if not usable:
        return f"no level <= {S.K} has r_k >= |A cap a| = {below} (A={A}, a={a})"
    return f"no member at levels {usable} has A={A} in piece 0 with root = piece 0 cap {a}"


def iter_covers(S: Scheme, A: Iterable[int], min_level: int = 0) -> Iterator[FinSet]:
    """Members containing A, ascending level then member order."""
    A = finset(A)
    Aset = set(A)
    for k in range(min_level, S.K + 1):
        cands = S.containing[k].get(A[-1], ()) if A else S.levels[k]
        for F in cands:
            if Aset <= set(F):
                yield F


def smallest_cover(S: Scheme, A: Iterable[int], min_level: int = 0) -> FinSet | None:
    """Lowest-level, lexicographically first member containing A."""
    return next(iter_covers(S, A, min_level), None)


# -- verification -----------------------------------------------------------


def _fmt(*sets) -> str:
    return " , ".join("{" + ",".join(map(str, s)) + "}" for s in sets)


def verify_axioms(S: Scheme) -> Report:
    """Exhaustive check of the four scheme clauses."""
    typ, masks = S.typ, S.masks
    checks = []

    # (1) bounded cofinality: the whole universe is a member.
    top = S.top
    checks.append(CheckResult("cofinal", top in S.level_index, 1, None if top in S.level_index else f"universe [0,{len(top)}) is not a member"))

    # (2) sizes and roots
    bad, count = None, 0
    for k, lvl in enumerate(S.levels):
        rk = typ.r[k] if k else 0
        for F in lvl:
            count += 1
            if len(F) != typ.m[k] or S.roots[F] != rk:
                bad = bad or f"level {k}: {_fmt(F)} size {len(F)} root {S.roots[F]}"
    checks.append(CheckResult("sizes", bad is None, count, bad))

    # (3) same-level intersections are initial segments of both
    bad, count = None, 0
    for k, lvl in enumerate(S.levels):
        if bad:
            break
        idx = S.containing[k]
        pos = {F: i for i, F in enumerate(lvl)}
        for i, E in enumerate(lvl):
            partners = set()
            for x in E:
                for F in idx[x]:
                    if pos[F] > i:
                        partners.add(F)
            mE = masks[E]
            for F in partners:
                count += 1
                mF = masks[F]
                if not (_prefix_ok(mE, mF) and _prefix_ok(mF, mE)):
                    bad = f"level {k}: {_fmt(E, F)}"
                    break
            if bad:
                break
    checks.append(CheckResult("intersections", bad is None, count, bad))

    # (4) canonical decomposition into an increasing delta-system of level k-1 members
    bad, count = None, 0
    for k in range(1, S.K + 1):
        below = set(S.levels[k - 1])
        for F in S.levels[k]:
            count += 1
            root, pieces = _split(F, S.roots[F], typ.n[k])
            why = None
            if any(P not in below for P in pieces):
                why = "piece not a level-(k-1) member"
            elif set().union(*map(set, pieces)) != set(F):
                why = "pieces do not cover F"
            else:
                tails = [P[len(root):] for P in pieces]
                if any(not t for t in tails) or any(tails[i][-1] >= tails[i + 1][0] for i in range(len(tails) - 1)):
                    why = "pieces not increasing"
                elif root and tails[0] and root[-1] >= tails[0][0]:
                    why = "root not below the pieces"
                elif set(S.restrict(F)[k - 1]) != set(pieces):
                    why = "decomposition not unique"
            if why:
                bad = bad or f"level {k}: {_fmt(F)} {why}"
    checks.append(CheckResult("decomposition", bad is None, count, bad))
    return Report("axioms", checks)


def _prefix_ok(mE: int, mF: int) -> bool:
    """E cap F is an initial segment of E (bitmask form)."""
    d = mE & ~mF
    return d == 0 or (mE & mF) < (d & -d)


def verify_lemmas(S: Scheme) -> Report:
    masks = S.masks
    checks = []

    # E (level l) against F (level k >= l): E cap F is an initial segment of E
    bad, count = None, 0
    for l, lvl in enumerate(S.levels):
        for k in range(l, S.K + 1):
            idx = S.containing[k]
            for E in lvl:
                mE = masks[E]
                seen = set()
                for x in E:
                    for F in idx[x]:
                        if F in seen:
                            continue
                        seen.add(F)
                        count += 1
                        if not _prefix_ok(mE, masks[F]):
                            bad = bad or f"E={_fmt(E)} (level {l}), F={_fmt(F)} (level {k})"
    checks.append(CheckResult("initial-segments", bad is None, count, bad))

    # a lower member inside F lies in a piece; in exactly one unless it sits in the root;
    # one level down it equals a piece.
    bad, count = None, 0
    for k in range(1, S.K + 1):
        for F in S.levels[k]:
            root, pieces = S.decompose(F)
            piece_masks = [masks[P] for P in pieces]
            mR = _mask(root)
            sub = S.restrict(F)
            for l in range(k):
                for E in sub[l]:
                    count += 1
                    mE = masks[E]
                    holders = sum(1 for pm in piece_masks if mE & pm == mE)
                    inside_root = mE & mR == mE
                    if holders == 0 or (holders > 1 and not inside_root):
                        bad = bad or f"E={_fmt(E)} in {holders} pieces of F={_fmt(F)}"
                    elif l == k - 1 and E not in pieces:
                        bad = bad or f"E={_fmt(E)} is not a piece of F={_fmt(F)}"
    checks.append(CheckResult("piece-containment", bad is None, count, bad))

    # same-level members carry order-isomorphic restrictions
    bad, count = None, 0
    for k, lvl in enumerate(S.levels):
        ref = None
        for F in lvl:
            count += 1
            shape = _relative_shape(S, F)
            if ref is None:
                ref = (F, shape)
            elif shape != ref[1]:
                bad = bad or f"restrictions of {_fmt(ref[0])} and {_fmt(F)} differ"
    checks.append(CheckResult("restriction-transport", bad is None, count, bad))

    # copies with interval tails exist for all F, E inside F, mu in E
    bad, count = None, 0
    buckets = defaultdict(list)  # (level, mu, rank of mu) -> members
    for l, lvl in enumerate(S.levels):
        for C in lvl:
            for j, x in enumerate(C):
                buckets[(l, x, j)].append(C)
    for k in range(S.K + 1):
        for F in S.levels[k]:
            mF = masks[F]
            rank = {x: i for i, x in enumerate(F)}
            for l, sub in enumerate(S.restrict(F)):
                for E in sub:
                    for j, mu in enumerate(E):
                        count += 1
                        if _tail_is_interval(E, j, rank):
                            continue
                        head = E[:j]
                        if not any(
                            C[:j] == head and masks[C] & mF == masks[C] and _tail_is_interval(C, j, rank)
                            for C in buckets[(l, mu, j)]
                        ):
                            bad = bad or f"no copy for F={_fmt(F)}, E={_fmt(E)}, mu={mu}"
    checks.append(CheckResult("interval-copies", bad is None, count, bad))
    return Report("lemmas", checks)


def _tail_is_interval(C: Sequence, j: int, rank: dict) -> bool:
    try:
        return rank[C[-1]] - rank[C[j]] == len(C) - 1 - j and all(x in rank for x in C[j:])
    except KeyError:
        return False


def _relative_shape(S: Scheme, F: FinSet) -> frozenset:
    rank = {x: i for i, x in enumerate(F)}
    return frozenset((l, tuple(rank[x] for x in E)) for l, sub in enumerate(S.restrict(F)) for E in sub)


def verify_all(S: Scheme) -> Report:
    a, b = verify_axioms(S), verify_lemmas(S)
    return Report("scheme", a.checks + b.checks)
