"""Exact interval arithmetic for the planar side of the fence construction.

Middle-thirds segments, the affine families ``S(L; N)``, the nested
``J``-segments addressed by chain indices and the rectangles ``J x Delta``.
Every endpoint is a :class:`fractions.Fraction`; no floating point is used.
"""
from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Rational = Union[int, Fraction]


@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if not self.lo < self.hi:
            raise ValueError(f"degenerate interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        x = Fraction(x)
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def strictly_contains(self, other: "Interval") -> bool:
        # interior containment is impossible for the extreme children; this is
        # containment with at least one endpoint strictly inside
        return self.contains_interval(other) and self != other

    def disjoint(self, other: "Interval") -> bool:
        return self.hi < other.lo or other.hi < self.lo

    def affine(self, t: Rational) -> Fraction:
        """Image of ``t`` under ``t -> lo (1 - t) + hi t``."""
        return self.lo + (self.hi - self.lo) * Fraction(t)

    def to_json(self):
        return [_frac_str(self.lo), _frac_str(self.hi)]

    @classmethod
    def from_json(cls, data):
        return cls(parse_fraction(data[0]), parse_fraction(data[1]))

    def __repr__(self):
        return f"Interval({self.lo}, {self.hi})"


UNIT = Interval(Fraction(0), Fraction(1))


def _frac_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def parse_fraction(text) -> Fraction:
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    num, _, den = str(text).partition("/")
    return Fraction(int(num), int(den or 1))


def as_word(w) -> str:
    """Normalise a binary word given as str or int sequence to a '0'/'1' string."""
    if isinstance(w, str):
        word = w
    else:
        word = "".join(str(int(d)) for d in w)
    if any(c not in "01" for c in word):
        raise ValueError(f"not a binary word: {w!r}")
    return word


def middle_thirds(w) -> Interval:
    """The segment Delta_w: the first third for digit 0, the last third for 1."""
    word = as_word(w)
    lo = Fraction(0)
    scale = Fraction(1)
    for d in word:
        scale /= 3
        if d == "1":
            lo += 2 * scale
    return Interval(lo, lo + scale)


def _binary_words(n: int) -> Iterable[str]:
    for k in range(2**n):
        yield format(k, f"0{n}b") if n else ""


def family_S(L: Interval, n: int) -> list[Interval]:
    """The 2**n images of the level-n middle-thirds segments under t -> L, regularly ordered."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return [_image(L, middle_thirds(w)) for w in _binary_words(n)]


def _image(L: Interval, seg: Interval) -> Interval:
    return Interval(L.affine(seg.lo), L.affine(seg.hi))


def family_member(L: Interval, n: int, k: int) -> Interval:
    """The k-th (1-based) member of ``family_S(L, n)`` without enumerating the family."""
    if not 1 <= k <= 2**n:
        raise IndexError(f"index {k} outside 1..{2**n}")
    word = format(k - 1, f"0{n}b") if n else ""
    return _image(L, middle_thirds(word))


def check_regular(family: Sequence[Interval]) -> None:
    """Raise unless the family is pairwise disjoint and regularly ordered."""
    for a, b in zip(family, family[1:]):
        if not a.hi < b.lo:
            raise ValueError(f"family not regularly ordered/disjoint at {a} , {b}")


def j_segment(schedule: Mapping[str, int], branch, chain: Sequence[int]) -> Interval:
    """Nested segment J<k_1, ..., k_s> for branch digits i_1..i_s.

    At level j the parent segment is split by the family ``S(J; 2 a_w)`` with
    ``w`` the first j branch digits, and the k_j-th member is kept.
    """
    word = as_word(branch)
    if len(word) != len(chain):
        raise ValueError("branch and chain must have the same length")
    seg = UNIT
    for level, k in enumerate(chain, start=1):
        a = schedule[word[:level]]
        bound = 4**a
        if not 1 <= k <= bound:
            raise IndexError(f"chain index {k} at level {level} outside 1..{bound}")
        seg = family_member(seg, 2 * a, k)
    return seg


@dataclass(frozen=True)
class PlanarRectangle:
    horizontal: Interval
    vertical: Interval

    def contains_rectangle(self, other: "PlanarRectangle") -> bool:
        return (self.horizontal.contains_interval(other.horizontal)
                and self.vertical.contains_interval(other.vertical))

    def contains_point(self, x, y) -> bool:
        return x in self.horizontal and y in self.vertical

    def disjoint(self, other: "PlanarRectangle") -> bool:
        return self.horizontal.disjoint(other.horizontal) or self.vertical.disjoint(other.vertical)

    def diameter(self) -> float:
        return float(self.horizontal.length**2 + self.vertical.length**2) ** 0.5

    def to_json(self):
        return {"horizontal": self.horizontal.to_json(), "vertical": self.vertical.to_json()}


def rectangle(schedule: Mapping[str, int], branch, chain: Sequence[int]) -> PlanarRectangle:
    """K<[i_1], k_1, ...> for an even step (len(branch) == len(chain)) or odd step (one more digit)."""
    word = as_word(branch)
    s = len(chain)
    if len(word) not in (s, s + 1):
        raise ValueError("branch length must equal chain length or exceed it by one")
    return PlanarRectangle(j_segment(schedule, word[:s], chain), middle_thirds(word))


class DigitStream:
    """Eventually periodic digit sequence ``prefix (period)^inf``.

    Text form is ``"0202(02)"``; an empty period means trailing zeros.
    """

    _pattern = re.compile(r"^\s*([0-9]*)\s*(?:\(([0-9]+)\))?\s*$")

    def __init__(self, prefix: Sequence[int] = (), period: Sequence[int] = (0,), base: int = 2):
        self.prefix = tuple(int(d) for d in prefix)
        self.period = tuple(int(d) for d in period) or (0,)
        self.base = base
        for d in self.prefix + self.period:
            if not 0 <= d < base:
                raise ValueError(f"digit {d} invalid in base {base}")

    @classmethod
    def parse(cls, text: str, base: int = 2) -> "DigitStream":
        m = cls._pattern.match(text)
        if not m or not (m.group(1) or m.group(2)):
            raise ValueError(f"malformed digit stream {text!r}")
        return cls([int(c) for c in m.group(1)], [int(c) for c in (m.group(2) or "0")], base)

    def digit(self, i: int) -> int:
        """0-based digit access."""
        if i < len(self.prefix):
            return self.prefix[i]
        return self.period[(i - len(self.prefix)) % len(self.period)]

    def digits(self, n: int) -> tuple[int, ...]:
        return tuple(self.digit(i) for i in range(n))

    def value(self) -> Fraction:
        """Exact value of 0.d1 d2 d3 ... in this base."""
        b = self.base
        head = Fraction(0)
        for i, d in enumerate(self.prefix, start=1):
            head += Fraction(d, b**i)
        p = len(self.period)
        rep = 0
        for d in self.period:
            rep = rep * b + d
        tail = Fraction(rep, b**p - 1) / b ** len(self.prefix)
        return head + tail

    def canonical(self) -> tuple:
        """Normal form used for equality: shortest period, shortest prefix."""
        period = self.period
        for p in range(1, len(period) + 1):
            if len(period) % p == 0 and period == period[:p] * (len(period) // p):
                period = period[:p]
                break
        prefix = list(self.prefix)
        while prefix and prefix[-1] == period[-1]:
            period = (prefix.pop(),) + period[:-1]
        return tuple(prefix), period

    def first_difference(self, other: "DigitStream") -> int | None:
        """0-based index of the first differing digit, or None if equal."""
        n = max(len(self.prefix), len(other.prefix)) + len(self.period) * len(other.period)
        for i in range(n):
            if self.digit(i) != other.digit(i):
                return i
        return None

    def __eq__(self, other):
        return isinstance(other, DigitStream) and self.base == other.base and self.first_difference(other) is None

    def __hash__(self):
        return hash((self.base, self.canonical()))

    def __str__(self):
        return "".join(map(str, self.prefix)) + "(" + "".join(map(str, self.period)) + ")"

    def __repr__(self):
        return f"DigitStream({str(self)!r}, base={self.base})"


def ternary_point(stream: DigitStream) -> Fraction:
    """Point of C encoded by a ternary stream over {0, 2}."""
    if stream.base != 3 or any(d == 1 for d in stream.prefix + stream.period):
        raise ValueError("a point of C needs a ternary stream over {0, 2}")
    return stream.value()


def locate_in_family(x, family: Sequence[Interval]) -> int:
    """1-based regular-order index of the family member containing ``x``."""
    if isinstance(x, DigitStream):
        x = ternary_point(x)
    x = Fraction(x)
    check_regular(family)
    los = [seg.lo for seg in family]
    i = bisect.bisect_right(los, x) - 1
    if i < 0 or x > family[i].hi:
        raise ValueError(f"{x} lies in a gap of the family")
    return i + 1


def locate_member(x, L: Interval, n: int) -> int:
    """Index of the member of ``S(L; n)`` containing x, found by ternary descent."""
    x = Fraction(x)
    if x not in L:
        raise ValueError(f"{x} outside {L}")
    t = (x - L.lo) / L.length
    k = 0
    for _ in range(n):
        t *= 3
        if t <= 1:
            k = 2 * k
        elif t >= 2:
            k = 2 * k + 1
            t -= 2
        else:
            raise ValueError(f"{x} lies in a gap of S({L}; {n})")
    return k + 1
