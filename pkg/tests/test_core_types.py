from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from capture_lab.core_types import (
    OrdinalCode,
    PartitionSchedule,
    TypeSequence,
    check_cap,
    diagonal_r,
    generate_type,
    is_initial_segment,
    largest_type,
    limits_below,
    ord_add,
    ord_cmp,
    parse_ordinal,
    parse_schedule,
    render_ordinal,
    schedule_fairness,
    validate_type,
)
from capture_lab.errors import CapExceeded, TypeViolation


def test_small_type_valid():
    typ = validate_type([1, 2, 4], [2, 3], [0, 1])
    assert typ.K == 2 and typ.n[2] == 3 and typ.r[2] == 1


@pytest.mark.parametrize(
    "m,n,r,clause",
    [
        ([2, 4], [2], [0], "m_0=1"),
        ([1, 2, 5], [2, 3], [0, 1], "m_k=n_k(m_{k-1}-r_k)+r_k"),
        ([1, 2, 4], [2, 2], [0, 0], "n_k>k"),
        ([1, 2, 2], [2, 3], [0, 2], "m_{k-1}>r_k"),
        ([1, 2], [2, 3], [0], "matching lengths"),
    ],
)
def test_type_violations(m, n, r, clause):
    with pytest.raises(TypeViolation) as exc:
        validate_type(m, n, r)
    assert exc.value.clause == clause


def test_diagonal_schedule():
    assert [diagonal_r(k) for k in range(1, 15)] == [0, 1, 0, 1, 2, 0, 1, 2, 3, 0, 1, 2, 3, 4]


def test_generate_matches_hand_recurrence():
    typ = generate_type(lambda k: k + 1, diagonal_r, 6)
    assert typ.m == (1, 2, 4, 16, 76, 446, 3122)


def test_generate_clamps_r():
    typ = generate_type([2, 3], [5, 5], 2)
    assert typ.r[1:] == (0, 1)
    assert typ.m == (1, 2, 4)


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 4)), min_size=1, max_size=6))
def test_generated_types_always_validate(steps):
    ns = [k + 1 + extra for k, (extra, _) in enumerate(steps, start=1)]
    rs = [r for _, r in steps]
    typ = generate_type(ns, rs, len(steps))
    for k in range(1, typ.K + 1):
        assert typ.m[k] == typ.n[k] * (typ.m[k - 1] - typ.r[k]) + typ.r[k]
        assert typ.m[k - 1] > typ.r[k]


def test_largest_type_respects_bound():
    typ = largest_type(lambda k: k + 1, diagonal_r, 5000)
    assert typ.m[-1] <= 5000
    assert generate_type(lambda k: k + 1, diagonal_r, typ.K + 1).m[-1] > 5000


def test_type_text_roundtrip():
    typ = generate_type([2, 3, 4], [0, 1, 0], 3)
    assert TypeSequence.from_text(typ.to_text()) == typ


def test_parse_schedule_forms():
    assert parse_schedule("k+1")(4) == 5
    assert parse_schedule("2k")(3) == 6
    assert parse_schedule("3")(9) == 3
    assert parse_schedule("4,5,6")(2) == 5
    assert parse_schedule("diag")(5) == 2
    with pytest.raises(ValueError):
        parse_schedule("k^2")


def test_fairness():
    typ = generate_type(lambda k: k + 1, diagonal_r, 6)
    assert schedule_fairness(typ).bound == 3
    part = PartitionSchedule.cyclic(2, 6)
    # block 0 holds levels 1,3,5 (r = 0,0,2); block 1 holds 2,4,6 (r = 1,1,0)
    assert schedule_fairness(typ, part).bound == 1


def test_partition_requires_every_block():
    with pytest.raises(ValueError):
        PartitionSchedule((0, 0, 0), 2)
    part = PartitionSchedule.cyclic(3, 7)
    assert part.levels(1) == [2, 5]


def test_initial_segment():
    assert is_initial_segment((0, 1), (0, 1, 5))
    assert not is_initial_segment((0, 5), (0, 1, 5))
    assert is_initial_segment((), (3,))


@given(st.integers(0, 5), st.integers(0, 50), st.integers(0, 5), st.integers(0, 50))
def test_ordinal_order_and_rendering(a, b, c, d):
    x, y = OrdinalCode(a, b), OrdinalCode(c, d)
    assert parse_ordinal(render_ordinal(x)) == x
    assert ord_cmp(x, y) == -ord_cmp(y, x)
    assert (ord_cmp(x, y) < 0) == ((a, b) < (c, d))
    assert ord_add(x, 3) > x


def test_ordinal_text():
    assert render_ordinal(OrdinalCode(0, 7)) == "7"
    assert render_ordinal(OrdinalCode(2, 3)) == "w*2+3"
    assert parse_ordinal("w") == OrdinalCode(1, 0)
    assert parse_ordinal("w*3") == OrdinalCode(3, 0)
    assert OrdinalCode(1, 0).is_limit and not OrdinalCode(0, 0).is_limit


def test_cap():
    check_cap(OrdinalCode(2, 99), 3)
    with pytest.raises(CapExceeded):
        check_cap(OrdinalCode(3, 0), 3)
    assert limits_below(3) == [OrdinalCode(1, 0), OrdinalCode(2, 0)]
