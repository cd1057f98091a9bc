from fractions import Fraction as F
from itertools import product

import pytest
from hypothesis import given, strategies as st

from cantorfence.cantor_plane import (
    UNIT,
    DigitStream,
    Interval,
    PlanarRectangle,
    check_regular,
    family_member,
    family_S,
    j_segment,
    locate_in_family,
    locate_member,
    middle_thirds,
    rectangle,
    ternary_point,
)

words = st.text(alphabet="01", max_size=12)


def brute_family(L, n):
    """Oracle: recursively split L into thirds, keeping outer thirds, left to right."""
    segs = [L]
    for _ in range(n):
        out = []
        for s in segs:
            third = s.length / 3
            out += [Interval(s.lo, s.lo + third), Interval(s.hi - third, s.hi)]
        segs = out
    return segs


class TestInterval:
    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            Interval(1, 1)
        with pytest.raises(ValueError):
            Interval(F(2, 3), F(1, 3))

    def test_json_round_trip_is_exact(self):
        iv = Interval(F(2, 9), F(1, 3))
        assert iv.to_json() == ["2/9", "1/3"]
        assert Interval.from_json(iv.to_json()) == iv

    def test_membership_is_closed(self):
        assert F(1, 3) in middle_thirds("0")
        assert F(1, 2) not in middle_thirds("0")


class TestMiddleThirds:
    @pytest.mark.parametrize("w,lo,hi", [("", 0, 1), ("0", 0, F(1, 3)), ("10", F(2, 3), F(7, 9))])
    def test_examples(self, w, lo, hi):
        assert middle_thirds(w) == Interval(lo, hi)

    def test_accepts_digit_sequences(self):
        assert middle_thirds([1, 0]) == middle_thirds("10")

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            middle_thirds("012")

    @given(words)
    def test_children_are_outer_thirds_with_exact_gap(self, w):
        parent = middle_thirds(w)
        a, b = middle_thirds(w + "0"), middle_thirds(w + "1")
        assert parent.contains_interval(a) and parent.contains_interval(b)
        assert a.lo == parent.lo and b.hi == parent.hi
        assert b.lo - a.hi == F(1, 3 ** (len(w) + 1))
        assert parent.length == F(1, 3 ** len(w))


class TestFamilyS:
    def test_examples(self):
        assert family_S(UNIT, 1) == [Interval(0, F(1, 3)), Interval(F(2, 3), 1)]
        assert family_S(UNIT, 0) == [UNIT]
        assert family_S(Interval(3, 6), 1) == [Interval(3, 4), Interval(5, 6)]

    @pytest.mark.parametrize("n", range(6))
    def test_matches_recursive_oracle(self, n):
        L = Interval(F(1, 7), F(5, 7))
        fam = family_S(L, n)
        assert fam == brute_family(L, n)
        assert len(fam) == 2**n
        check_regular(fam)

    @given(st.integers(0, 8), st.data())
    def test_direct_member_matches_enumeration(self, n, data):
        k = data.draw(st.integers(1, 2**n))
        assert family_member(UNIT, n, k) == family_S(UNIT, n)[k - 1]

    def test_member_index_checked(self):
        with pytest.raises(IndexError):
            family_member(UNIT, 2, 5)

    def test_non_disjoint_family_rejected(self):
        with pytest.raises(ValueError):
            check_regular([Interval(0, F(1, 2)), Interval(F(1, 2), 1)])


class TestJSegments:
    def test_examples(self):
        sched = {"0": 1}
        assert j_segment(sched, "0", (1,)) == Interval(0, F(1, 9))
        assert j_segment(sched, "0", (4,)) == Interval(F(8, 9), 1)
        assert j_segment(sched, "", ()) == UNIT

    def test_out_of_range_names_level(self):
        with pytest.raises(IndexError, match="level 2"):
            j_segment({"0": 1, "01": 1}, "01", (1, 5))

    def test_nested_appending(self):
        sched = {"0": 1, "01": 2, "010": 1}
        prev = UNIT
        for s, (w, ks) in enumerate([("0", (3,)), ("01", (3, 7)), ("010", (3, 7, 2))], start=1):
            seg = j_segment(sched, w, ks)
            assert prev.contains_interval(seg) and seg != prev
            prev = seg

    def test_rectangles(self):
        sched = {"0": 1}
        assert rectangle(sched, "", ()) == PlanarRectangle(UNIT, UNIT)
        assert rectangle(sched, "0", ()) == PlanarRectangle(UNIT, Interval(0, F(1, 3)))
        assert rectangle(sched, "0", (2,)) == PlanarRectangle(Interval(F(2, 9), F(1, 3)), Interval(0, F(1, 3)))

    def test_rectangle_count_at_step_four(self):
        sched = {"0": 1, "1": 2, "00": 1, "01": 1, "10": 1, "11": 1}
        rects = []
        for i1, i2 in product("01", repeat=2):
            for k1 in range(1, 4 ** sched[i1] + 1):
                for k2 in range(1, 4 ** sched[i1 + i2] + 1):
                    rects.append(rectangle(sched, i1 + i2, (k1, k2)))
        assert len(rects) == 2 * 4 * 4 + 2 * 16 * 4
        for a, b in zip(rects, rects[1:]):
            assert a.disjoint(b)


class TestDigitStreams:
    def test_parse_and_value(self):
        s = DigitStream.parse("0202(02)", base=3)
        assert s.digits(8) == (0, 2, 0, 2, 0, 2, 0, 2)
        assert s.value() == F(1, 4)
        assert str(s) == "0202(02)"

    def test_equality_uses_canonical_form(self):
        assert DigitStream.parse("0(10)") == DigitStream.parse("(01)")
        assert hash(DigitStream.parse("0(10)")) == hash(DigitStream.parse("(01)"))
        assert DigitStream.parse("1(0)").first_difference(DigitStream.parse("(0)")) == 0

    @pytest.mark.parametrize("bad", ["", "0(", "ab"])
    def test_malformed(self, bad):
        with pytest.raises(ValueError):
            DigitStream.parse(bad)

    def test_ternary_point_needs_zero_two_digits(self):
        with pytest.raises(ValueError):
            ternary_point(DigitStream.parse("01", base=3))
        assert ternary_point(DigitStream.parse("(2)", base=3)) == 1


class TestLocate:
    def test_examples(self):
        assert locate_in_family(F(1, 3), family_S(UNIT, 1)) == 1
        assert locate_in_family(1, family_S(UNIT, 2)) == 4
        assert locate_in_family(F(2, 9), family_S(UNIT, 2)) == 2

    def test_gap_rejected(self):
        with pytest.raises(ValueError):
            locate_in_family(F(1, 2), family_S(UNIT, 1))
        with pytest.raises(ValueError):
            locate_member(F(1, 2), UNIT, 1)

    @given(st.lists(st.sampled_from([0, 2]), max_size=10), st.lists(st.sampled_from([0, 2]), min_size=1, max_size=4),
           st.integers(0, 8))
    def test_descent_matches_bisection(self, prefix, period, n):
        x = ternary_point(DigitStream(prefix, period, 3))
        L = Interval(0, 1)
        k = locate_member(x, L, n)
        assert k == locate_in_family(x, family_S(L, n))
        assert x in family_member(L, n, k)
