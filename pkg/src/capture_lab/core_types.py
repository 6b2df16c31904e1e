"""Type sequences, level partitions, finite sets and simulated countable ordinals."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence, Union

from .errors import CapExceeded, TypeViolation

FinSet = tuple  # strictly increasing tuple of naturals (or of OrdinalCodes)

Schedule = Union[Callable[[int], int], Sequence[int]]


def finset(elems: Iterable) -> tuple:
    """Normalize any iterable into a sorted duplicate-free tuple."""
    return tuple(sorted(set(elems)))


def is_initial_segment(A: Sequence, B: Sequence) -> bool:
    """A is an initial segment of B (both sorted tuples)."""
    return len(A) <= len(B) and tuple(B[: len(A)]) == tuple(A)


# -- type sequences ---------------------------------------------------------


@dataclass(frozen=True)
class TypeSequence:
    """Arithmetic profile (m_k, n_k, r_k) of a scheme.

    ``n`` and ``r`` are padded with a leading 0 so that ``n[k]`` and ``r[k]``
    index levels 1..K directly.
    """

    m: tuple[int, ...]
    n: tuple[int, ...]
    r: tuple[int, ...]

    @property
    def K(self) -> int:
        return len(self.m) - 1

    def truncate(self, K: int) -> "TypeSequence":
        return TypeSequence(self.m[: K + 1], self.n[: K + 1], self.r[: K + 1])

    def to_text(self) -> str:
        rows = [self.m, self.n[1:], self.r[1:]]
        return "\n".join(",".join(str(v) for v in row) for row in rows)

    @classmethod
    def from_text(cls, text: str) -> "TypeSequence":
        lines = text.split("\n")
        if len(lines) < 3:
            raise ValueError("type header needs three rows")
        rows = [[int(v) for v in line.split(",") if v.strip()] for line in lines[:3]]
        return validate_type(*rows)


def validate_type(m: Sequence[int], n: Sequence[int], r: Sequence[int]) -> TypeSequence:
    """Check the type clauses; ``n`` and ``r`` list the values for k = 1..K."""
    m, n, r = tuple(m), tuple(n), tuple(r)
    if len(m) == 0 or len(n) != len(m) - 1 or len(r) != len(m) - 1:
        raise TypeViolation("matching lengths", 0)
    if m[0] != 1:
        raise TypeViolation("m_0=1", 0)
    for k in range(1, len(m)):
        nk, rk = n[k - 1], r[k - 1]
        if rk < 0 or not m[k - 1] > rk:
            raise TypeViolation("m_{k-1}>r_k", k)
        if not nk > k:
            raise TypeViolation("n_k>k", k)
        if m[k] != nk * (m[k - 1] - rk) + rk:
            raise TypeViolation("m_k=n_k(m_{k-1}-r_k)+r_k", k)
    return TypeSequence(m, (0,) + n, (0,) + r)


def _as_callable(schedule: Schedule) -> Callable[[int], int]:
    if callable(schedule):
        return schedule
    values = tuple(schedule)
    return lambda k: values[k - 1]


def generate_type(n_schedule: Schedule, r_schedule: Schedule, K: int) -> TypeSequence:
    """Run the recurrence for K levels, clamping each r_k to at most m_{k-1} - 1.

    Sequence schedules are read from level 1 onwards.
    """
    n_of, r_of = _as_callable(n_schedule), _as_callable(r_schedule)
    m, ns, rs = [1], [], []
    for k in range(1, K + 1):
        nk = n_of(k)
        if not nk > k:
            raise TypeViolation("n_k>k", k)
        rk = min(max(r_of(k), 0), m[-1] - 1)
        ns.append(nk)
        rs.append(rk)
        m.append(nk * (m[-1] - rk) + rk)
    return validate_type(m, ns, rs)


def diagonal_r(k: int) -> int:
    """0, 1, 0, 1, 2, 0, 1, 2, 3, ... (every r recurs infinitely often)."""
    block = 2
    k -= 1
    while k >= block:
        k -= block
        block += 1
    return k


def largest_type(n_schedule: Schedule, r_schedule: Schedule, max_size: int, max_K: int = 64) -> TypeSequence:
    """The deepest generated type whose top size m_K stays within ``max_size``."""
    best = generate_type(n_schedule, r_schedule, 0)
    for K in range(1, max_K + 1):
        try:
            typ = generate_type(n_schedule, r_schedule, K)
        except (IndexError, TypeViolation):
            break
        if typ.m[-1] > max_size:
            break
        best = typ
    return best


def parse_schedule(text: str) -> Callable[[int], int]:
    """Named schedules for the CLI: ``k+c``, ``c*k``/``ck``, ``diag``, ``zero``, an int, or a comma list."""
    text = text.replace(" ", "")
    if text == "diag":
        return diagonal_r
    if text == "zero":
        return lambda k: 0
    if "," in text:
        values = [int(v) for v in text.split(",") if v]
        return lambda k: values[k - 1]
    if re.fullmatch(r"\d+", text):
        c = int(text)
        return lambda k: c
    mt = re.fullmatch(r"k\+(\d+)", text)
    if mt:
        c = int(mt.group(1))
        return lambda k: k + c
    mt = re.fullmatch(r"(\d+)\*?k", text)
    if mt:
        c = int(mt.group(1))
        return lambda k: c * k
    raise ValueError(f"unknown schedule {text!r}")


@dataclass(frozen=True)
class Fairness:
    bound: int  # every r < bound occurs (in every block, if partitioned)
    K: int


def schedule_fairness(typ: TypeSequence, partition: "PartitionSchedule | None" = None) -> Fairness:
    """Largest R such that every r < R occurs as some r_k with 1 <= k <= K."""
    if partition is None:
        groups = [set(typ.r[1:])]
    else:
        groups = [
            {typ.r[k] for k in range(1, typ.K + 1) if partition.block_of(k) == ell}
            for ell in range(partition.block_count)
        ]
    bound = 0
    while all(bound in g for g in groups):
        bound += 1
    return Fairness(bound, typ.K)


@dataclass(frozen=True)
class PartitionSchedule:
    """Partition of levels k >= 1 into blocks; ``assign[k-1]`` is the block of k."""

    assign: tuple[int, ...]
    block_count: int

    def __post_init__(self):
        missing = set(range(self.block_count)) - set(self.assign)
        if missing:
            raise ValueError(f"blocks {sorted(missing)} never attained")

    @classmethod
    def cyclic(cls, block_count: int, K: int) -> "PartitionSchedule":
        return cls(tuple((k - 1) % block_count for k in range(1, K + 1)), block_count)

    def block_of(self, k: int) -> int:
        return self.assign[k - 1]

    def levels(self, ell: int) -> list[int]:
        return [k for k in range(1, len(self.assign) + 1) if self.assign[k - 1] == ell]


# -- simulated countable ordinals ---------------------------------------------


class OrdinalCode(NamedTuple):
    """The ordinal omega*limb + off; tuple ordering is ordinal ordering."""

    limb: int
    off: int

    @property
    def is_limit(self) -> bool:
        return self.off == 0 and self.limb >= 1

    def __str__(self) -> str:
        return render_ordinal(self)


def nat(x: int) -> OrdinalCode:
    return OrdinalCode(0, x)


def omega(limb: int = 1) -> OrdinalCode:
    return OrdinalCode(limb, 0)


def ord_add(delta: OrdinalCode, i: int) -> OrdinalCode:
    if i < 0:
        raise ValueError("can only add naturals")
    return OrdinalCode(delta.limb, delta.off + i)


def ord_cmp(x: OrdinalCode, y: OrdinalCode) -> int:
    return (x > y) - (x < y)


def render_ordinal(x: OrdinalCode) -> str:
    return str(x.off) if x.limb == 0 else f"w*{x.limb}+{x.off}"


def parse_ordinal(text: str) -> OrdinalCode:
    text = text.strip().replace(" ", "")
    if re.fullmatch(r"\d+", text):
        return OrdinalCode(0, int(text))
    mt = re.fullmatch(r"w(?:\*(\d+))?(?:\+(\d+))?", text)
    if not mt:
        raise ValueError(f"cannot parse ordinal {text!r}")
    return OrdinalCode(int(mt.group(1) or 1), int(mt.group(2) or 0))


def check_cap(x: OrdinalCode, cap_limbs: int) -> None:
    """Ordinals of the simulated omega_1 lie below omega*cap_limbs."""
    if x.limb >= cap_limbs:
        raise CapExceeded(f"{render_ordinal(x)} is not below w*{cap_limbs}")


def limits_below(cap_limbs: int) -> list[OrdinalCode]:
    return [OrdinalCode(t, 0) for t in range(1, cap_limbs)]
