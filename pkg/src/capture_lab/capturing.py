"""Delta-systems and the capture relation, including full and block-restricted capture."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .core_types import FinSet, PartitionSchedule, finset
from .errors import ArityTooLarge, NotADeltaSystem, NotAMember, TooSmall
from .scheme import Scheme, order_iso


@dataclass(frozen=True)
class DeltaSystemFamily:
    root: FinSet
    members: tuple[FinSet, ...]

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class CaptureWitness:
    F: FinSet
    k: int
    indices: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.indices)

    def to_record(self) -> dict:
        return {"kind": "capture", "level": self.k, "F": list(self.F), "indices": list(self.indices)}


@dataclass(frozen=True)
class CaptureQuery:
    """``arity`` is an int >= 2 or ``"full"`` (arity n_k of the witnessing level)."""

    arity: int | str = 2
    min_level: int = 0
    block: int | None = None
    partition: PartitionSchedule | None = None
    any_pieces: bool = False

    def __post_init__(self):
        if self.arity != "full" and (not isinstance(self.arity, int) or self.arity < 2):
            raise ValueError("arity must be an integer >= 2 or 'full'")
        if self.block is not None and self.partition is None:
            raise ValueError("block queries need a partition")

    def admits_level(self, k: int) -> bool:
        if k <= self.min_level:
            return False
        if self.block is not None and (k > len(self.partition.assign) or self.partition.block_of(k) != self.block):
            return False
        return True


@dataclass
class CaptureStats:
    levels_scanned: list[int] = field(default_factory=list)
    rejected: dict[str, int] = field(default_factory=dict)

    def reject(self, clause: str) -> None:
        self.rejected[clause] = self.rejected.get(clause, 0) + 1


# -- delta systems ------------------------------------------------------------


def _delta_violation(members: Sequence[FinSet], root: FinSet) -> tuple[tuple[int, int], str] | None:
    rset = set(root)
    sets = [set(m) for m in members]
    for i, j in itertools.combinations(range(len(members)), 2):
        if sets[i] & sets[j] != rset:
            return (i, j), "root-mismatch"
    tails = [tuple(x for x in m if x not in rset) for m in members]
    for i, t in enumerate(tails):
        # an empty tail would make the member equal to the root (or to another member)
        if len(members) > 1 and not t:
            return (i, i), "not-increasing"
        if root and t and t[0] <= root[-1]:
            return (i, i), "not-increasing"
    for i in range(len(tails) - 1):
        if tails[i][-1] >= tails[i + 1][0]:
            return (i, i + 1), "not-increasing"
    return None


def check_delta_system(family: Iterable[Iterable]) -> DeltaSystemFamily:
    """Validate an increasing delta-system: common pairwise intersection, nonempty
    tails above the root, tails strictly increasing in list order.  A single set
    has root {}."""
    members = tuple(finset(m) for m in family)
    if not members:
        raise ValueError("empty family")
    root = finset(set(members[0]) & set(members[1])) if len(members) > 1 else ()
    bad = _delta_violation(members, root)
    if bad:
        raise NotADeltaSystem(*bad)
    return DeltaSystemFamily(root, members)


def extract_delta_system(family: Sequence[Iterable]) -> DeltaSystemFamily:
    """Largest sub-family (kept in list order) forming an increasing delta-system.

    Ties go to the lexicographically smallest index set.  For each candidate
    root (a pairwise intersection) the longest chain is found by dynamic
    programming over the sets containing that root.
    """
    sets = [finset(m) for m in family]
    if len(sets) < 2:
        raise TooSmall("need at least two sets")
    roots = {finset(set(a) & set(b)) for a, b in itertools.combinations(sets, 2)}
    best: tuple[int, ...] = ()
    for root in sorted(roots):
        rset = set(root)
        top = root[-1] if root else -1
        cand = []
        for i, s in enumerate(sets):
            if rset <= set(s):
                tail = tuple(x for x in s if x not in rset)
                if tail and tail[0] > top:
                    cand.append((i, tail))
        # longest[c] = longest chain starting at cand[c]
        longest = [1] * len(cand)
        for c in range(len(cand) - 1, -1, -1):
            for d in range(c + 1, len(cand)):
                if cand[c][1][-1] < cand[d][1][0]:
                    longest[c] = max(longest[c], 1 + longest[d])
        if not cand:
            continue
        L = max(longest)
        chain, need, last = [], L, None
        for c in range(len(cand)):
            if longest[c] == need and (last is None or cand[last][1][-1] < cand[c][1][0]):
                chain.append(cand[c][0])
                last, need = c, need - 1
                if need == 0:
                    break
        chain = tuple(chain)
        if len(chain) > len(best) or (len(chain) == len(best) and chain < best):
            best = chain
    if len(best) < 2:
        raise TooSmall("no delta-subsystem of size >= 2")
    return check_delta_system([sets[i] for i in best])


def read_family(source) -> list[FinSet]:
    """One set per line, elements separated by spaces; blank lines are the empty set."""
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        text = Path(source).read_text(encoding="utf-8")
    return [finset(int(v) for v in line.split()) for line in text.splitlines()]


def write_family(family: Iterable[Iterable[int]]) -> str:
    return "".join(" ".join(map(str, finset(m))) + "\n" for m in family)


# -- capture ------------------------------------------------------------------


def _pieces(F, root_size: int, n: int) -> tuple[FinSet, tuple[FinSet, ...]]:
    F = tuple(F)
    root = F[:root_size]
    w = (len(F) - root_size) // n
    return root, tuple(root + F[root_size + i * w : root_size + (i + 1) * w] for i in range(n))


def captures_decomposed(root: Sequence, pieces: Sequence[Sequence], family: DeltaSystemFamily,
                        indices: Sequence[int], piece_ids: Sequence[int] | None = None) -> bool:
    """The three capture clauses against an explicit decomposition.

    Works for any totally ordered elements, so it also judges induced families
    living on the simulated omega_1.
    """
    if piece_ids is None:
        piece_ids = range(len(indices))
    piece_ids = list(piece_ids)
    if len(piece_ids) != len(indices) or list(indices) != sorted(set(indices)):
        return False
    rset = set(root)
    s = set(family.root)
    if not s <= rset:
        return False
    base = pieces[piece_ids[0]]
    first = family.members[indices[0]]
    for j, xi in zip(piece_ids, indices):
        P = pieces[j]
        tail = set(family.members[xi]) - s
        if not tail <= set(P) - rset:
            return False
        if not set(first) <= set(base):
            return False
        if order_iso(base, P).image(first) != tuple(family.members[xi]):
            return False
    return True


def captures(S: Scheme, F, family: DeltaSystemFamily, indices: Sequence[int]) -> bool:
    """F captures the members at ``indices`` using its first len(indices) pieces."""
    F = tuple(F)
    k = S.level_of(F)
    if k == 0:
        raise NotAMember(F)
    if len(indices) > S.typ.n[k]:
        raise ArityTooLarge(f"arity {len(indices)} exceeds n_{k}={S.typ.n[k]}")
    root, pieces = S.decompose(F)
    return captures_decomposed(root, pieces, family, indices)


def _positions(family: DeltaSystemFamily) -> dict:
    pos: dict = {}
    for i, m in enumerate(family.members):
        pos.setdefault(m, []).append(i)
    return pos


def find_capture(S: Scheme, family: DeltaSystemFamily, query: CaptureQuery = CaptureQuery(),
                 stats: CaptureStats | None = None) -> CaptureWitness | None:
    """Minimal witness under (level, member order, index order), or None.

    For each candidate F and first index xi_0 the remaining indices are forced:
    member xi_i must be the transport of member xi_0 into piece i, so the
    search is linear in (members x family size) rather than in index tuples.
    """
    stats = stats if stats is not None else CaptureStats()
    pos = _positions(family)
    s = set(family.root)
    for k in range(1, S.K + 1):
        if not query.admits_level(k):
            continue
        nk = S.typ.n[k]
        n = nk if query.arity == "full" else query.arity
        if n > nk:
            stats.reject("arity>n_k")
            continue
        if n > len(family):
            stats.reject("family too small")
            continue
        stats.levels_scanned.append(k)
        for F in S.levels[k]:
            root, pieces = S.decompose(F)
            if not s <= set(root):
                stats.reject("root")
                continue
            best = _best_indices(root, pieces, family, pos, n, query.any_pieces)
            if best is None:
                stats.reject("pieces")
                continue
            return CaptureWitness(F, k, best)
    return None


def _best_indices(root, pieces, family, pos, n, any_pieces) -> tuple[int, ...] | None:
    rset = set(root)
    s = set(family.root)
    piece_choices = [tuple(range(n))] if not any_pieces else list(itertools.combinations(range(len(pieces)), n))
    best = None
    for choice in piece_choices:
        base = pieces[choice[0]]
        base_tail = set(base) - rset
        isos = [order_iso(base, pieces[j]) for j in choice]
        for x0, m0 in enumerate(family.members):
            if best is not None and x0 > best[0]:
                break
            if not set(m0) - s <= base_tail or not set(m0) <= set(base):
                continue
            idx = [x0]
            for phi in isos[1:]:
                img = phi.image(m0)
                nxt = next((p for p in pos.get(img, ()) if p > idx[-1]), None)
                if nxt is None:
                    break
                idx.append(nxt)
            if len(idx) == n:
                cand = tuple(idx)
                if best is None or cand < best:
                    best = cand
                break
    return best


def brute_force_capture(S: Scheme, family: DeltaSystemFamily, query: CaptureQuery = CaptureQuery()) -> CaptureWitness | None:
    """Enumerate every member and every increasing index tuple (reference oracle)."""
    for k in range(1, S.K + 1):
        if not query.admits_level(k):
            continue
        nk = S.typ.n[k]
        n = nk if query.arity == "full" else query.arity
        if n > nk:
            continue
        for F in S.levels[k]:
            root, pieces = _pieces(F, S.roots[F], nk)
            choices = [tuple(range(n))] if not query.any_pieces else list(itertools.combinations(range(nk), n))
            hits = [
                idx
                for idx in itertools.combinations(range(len(family)), n)
                for ch in choices
                if captures_decomposed(root, pieces, family, idx, ch)
            ]
            if hits:
                return CaptureWitness(F, k, min(hits))
    return None
