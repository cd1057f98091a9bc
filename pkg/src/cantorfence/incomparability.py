"""Finite certificates that two necklace slices are ambiently incomparable.

If one necklace embeds ambiently in another, some shift ``k`` carries the
stage-``i`` chains of the first onto the stage-``i+k`` chains of the
second, so the chain sizes must agree level by level.  A single mismatch
per shift and direction rules the embedding out.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Union

from .cantor_plane import DigitStream
from .defining_sequence import DefiningTree

A_INTO_B = "A-into-B"
B_INTO_A = "B-into-A"


@dataclass(frozen=True)
class Inconclusive:
    required_depth: int
    reason: str = "insufficient depth"


@dataclass(frozen=True)
class SizeSequence:
    s: DigitStream
    sizes: tuple  # sizes[i - 1] = chain size at stage i

    @property
    def depth(self) -> int:
        return len(self.sizes)

    def at(self, level: int) -> int:
        """Chain size at stage ``level`` (1-based)."""
        if not 1 <= level <= self.depth:
            raise IndexError(f"level {level} outside 1..{self.depth}")
        return self.sizes[level - 1]


@dataclass(frozen=True)
class Witness:
    shift: int
    level: int
    size_a: int
    size_b: int
    direction: str


def size_sequence(tree: DefiningTree, s: DigitStream, depth: int) -> SizeSequence:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    word = "".join(str(d) for d in s.digits(depth))
    return SizeSequence(s, tuple(4 ** tree.exponent(word[:i]) for i in range(1, depth + 1)))


def _first_mismatch(a: SizeSequence, b: SizeSequence, k: int) -> Union[int, None, Inconclusive]:
    """First level i with a[i] != b[i + k]; None if all overlapping levels agree."""
    top = min(a.depth, b.depth - k)
    if top < 1:
        return Inconclusive(required_depth=k + 1)
    for i in range(1, top + 1):
        if a.at(i) != b.at(i + k):
            return i
    return None


def shift_match(seq_a: SizeSequence, seq_b: SizeSequence, k: int) -> Union[bool, Inconclusive]:
    """Whether stage-``i`` sizes of A equal stage-``i+k`` sizes of B over the overlap."""
    if k < 0:
        raise ValueError("shift must be non-negative")
    res = _first_mismatch(seq_a, seq_b, k)
    if isinstance(res, Inconclusive):
        return res
    return res is None


@dataclass
class Certificate:
    s: str
    t: str
    depth: int
    witnesses: list = field(default_factory=list)
    missing: list = field(default_factory=list)  # (shift, direction) pairs without a witness

    @property
    def complete(self) -> bool:
        return not self.missing

    def to_json(self) -> str:
        return json.dumps({"s": self.s, "t": self.t, "depth": self.depth,
                           "complete": self.complete,
                           "witnesses": [asdict(w) for w in self.witnesses],
                           "missing": self.missing}, indent=1)

    def table(self) -> str:
        lines = [f"{'shift':>5} {'dir':>9} {'level':>5} {'size_a':>12} {'size_b':>12}"]
        for w in self.witnesses:
            lines.append(f"{w.shift:>5} {w.direction:>9} {w.level:>5} {w.size_a:>12} {w.size_b:>12}")
        for k, d in self.missing:
            lines.append(f"{k:>5} {d:>9} {'-':>5} {'inconclusive':>12}")
        return "\n".join(lines)


def certify_incomparable(tree: DefiningTree, s: DigitStream, t: DigitStream, depth: int
                         ) -> Union[Certificate, Inconclusive]:
    """Size-mismatch witnesses for every shift ``0..depth`` in both directions."""
    m = s.first_difference(t)
    if m is None:
        raise ValueError("s and t are the same stream")
    if depth < m + 1:
        return Inconclusive(required_depth=m + 1, reason=f"streams agree on their first {m} digits")
    # every shift up to `depth` needs level 1 of one side against level 1 + k of the other
    ext = depth + 1
    seq_s = size_sequence(tree, s, ext)
    seq_t = size_sequence(tree, t, ext)
    cert = Certificate(str(s), str(t), depth)
    for k in range(depth + 1):
        for direction, a, b in ((A_INTO_B, seq_s, seq_t), (B_INTO_A, seq_t, seq_s)):
            lvl = _first_mismatch(a, b, k)
            if isinstance(lvl, int):
                cert.witnesses.append(Witness(k, lvl, a.at(lvl), b.at(lvl + k), direction))
            else:
                cert.missing.append((k, direction))
    return cert


def revalidate(tree: DefiningTree, s: DigitStream, t: DigitStream, cert: Certificate) -> bool:
    """Recompute every witness from the realised schedule."""
    for w in cert.witnesses:
        a, b = (s, t) if w.direction == A_INTO_B else (t, s)
        sa = size_sequence(tree, a, w.level)
        sb = size_sequence(tree, b, w.level + w.shift)
        if sa.at(w.level) != w.size_a or sb.at(w.level + w.shift) != w.size_b:
            return False
        if w.size_a == w.size_b:
            return False
    return True
