"""Evaluation of the fence embedding C x C -> R^3 and its necklace slices.

A point ``(x, s)`` of C x C is encoded by two digit streams: ``x`` ternary
over {0, 2}, ``s`` binary (the Delta-nesting digits).  Its image is the
intersection of the nested tori whose planar rectangles contain it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cantor_plane import (
    UNIT,
    DigitStream,
    family_member,
    family_S,
    locate_in_family,
    locate_member,
    ternary_point,
)
from .defining_sequence import DefiningNode, DefiningTree, branch_word
from .torus_geom import SolidTorus, ramify_margins, tori_disjoint_margin, torus_inside

# families up to this size are enumerated and searched; larger ones use ternary descent
ENUMERATE_MAX = 4096


@dataclass(frozen=True)
class FencePoint:
    x: DigitStream
    s: DigitStream

    def __post_init__(self):
        if self.x.base != 3 or any(d == 1 for d in self.x.prefix + self.x.period):
            raise ValueError("x must be a ternary stream over {0, 2}")
        if self.s.base != 2:
            raise ValueError("s must be a binary stream")

    @classmethod
    def parse(cls, x: str, s: str) -> "FencePoint":
        return cls(DigitStream.parse(x, base=3), DigitStream.parse(s, base=2))

    @property
    def x_value(self) -> Fraction:
        return ternary_point(self.x)

    @property
    def s_value(self) -> Fraction:
        """The point of C with ternary digits 2 * s_i."""
        return DigitStream([2 * d for d in self.s.prefix], [2 * d for d in self.s.period], 3).value()

    def __str__(self):
        return f"x={self.x}, s={self.s}"


def address_of(tree: DefiningTree, p: FencePoint, depth: int) -> tuple:
    """Address of the step-``depth`` node whose rectangle contains ``(x, s)``."""
    x = p.x_value
    out: list[int] = []
    seg = UNIT
    for k in range(depth):
        if k % 2 == 0:
            out.append(p.s.digit(k // 2))
        else:
            a = tree.exponent(branch_word(out))
            if 4**a <= ENUMERATE_MAX:
                fam = family_S(seg, 2 * a)
                idx = locate_in_family(x, fam)
                seg = fam[idx - 1]
            else:
                idx = locate_member(x, seg, 2 * a)
                seg = family_member(seg, 2 * a, idx)
            out.append(idx)
    return tuple(out)


def evaluate(tree: DefiningTree, p: FencePoint, eps: float, max_depth: int = 40
             ) -> tuple[np.ndarray, DefiningNode]:
    """Centre of the first torus on the point's path with diameter below ``eps``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    node = tree.root
    x = p.x_value
    seg = UNIT
    while node.diameter >= eps:
        if node.step >= max_depth:
            raise RuntimeError(f"no torus below diameter {eps} within {max_depth} steps")
        k = node.step
        if k % 2 == 0:
            comp = p.s.digit(k // 2)
        else:
            a = tree.exponent(node.branch)
            comp = locate_member(x, seg, 2 * a)
            seg = family_member(seg, 2 * a, comp)
        node = tree.child(node, comp)
    return node.frame.origin.copy(), node


@dataclass
class NecklaceSlice:
    s: DigitStream
    stages: list = field(default_factory=list)  # list[list[DefiningNode]]
    truncated: bool = False
    verified: bool = True
    failures: list = field(default_factory=list)

    def tori(self, i: int) -> list[SolidTorus]:
        return [n.torus for n in self.stages[i]]


def necklace_slice(tree: DefiningTree, s: DigitStream, levels: int, budget: int = 10**5,
                   verify: bool = True) -> NecklaceSlice:
    """Canonical defining sequence of the necklace over ``s``.

    Stage 0 is ``T<[i_1]>``; stage ``i`` collects every ``T<[i_1], k_1, ..., [i_i], k_i>``.
    Each stage-``i+1`` group sits as a verified simple chain inside the
    ramification child of a stage-``i`` torus, which is contained in it.
    """
    out = NecklaceSlice(s)
    stage = [tree.node_at((s.digit(0),))]
    out.stages.append(stage)
    for i in range(1, levels + 1):
        word = "".join(str(s.digit(j)) for j in range(i))
        q = 4 ** tree.exponent(word)
        parents = stage if i == 1 else [tree.child(n, s.digit(i - 1), memo=False) for n in stage]
        if len(parents) * q > budget:
            out.truncated = True
            break
        if verify:
            _, verdict = tree.chain_for(word)
            if not verdict.ok:
                out.verified = False
                out.failures.append((i, verdict.failures))
        stage = [c for n in parents for c in tree.expand_even(n, memo=False)]
        out.stages.append(stage)
    return out


@dataclass
class MoiseReport:
    ok: bool
    checked: int
    witnesses: list = field(default_factory=list)


def moise_check(tree: DefiningTree, addresses: Sequence[Sequence[int]], depth: int) -> MoiseReport:
    """Check the nested-family hypotheses along sampled address paths.

    For each step: the planar child lies in the planar parent and the torus
    child lies in the torus parent (direct geometric test), a sibling is
    disjoint from the node on both sides, child counts agree, and meshes
    do not grow.
    """
    witnesses = []
    checked = 0
    for addr in addresses:
        addr = tuple(addr)[:depth]
        for k in range(1, len(addr) + 1):
            parent = tree.node_at(addr[: k - 1])
            node = tree.node_at(addr[:k])
            checked += 1
            planar_in = parent.planar.contains_rectangle(node.planar)
            spatial_in = torus_inside(parent.torus, node.torus)
            if not (planar_in and spatial_in):
                witnesses.append((addr[:k], f"nesting planar={planar_in} spatial={spatial_in}"))
            n_sp = tree.n_children(parent)
            n_pl = 2 if (k - 1) % 2 == 0 else 4 ** tree.exponent(branch_word(parent.address))
            if n_sp != n_pl:
                witnesses.append((addr[:k], f"counts {n_sp} != {n_pl}"))
            comp = addr[k - 1]
            sib = 1 - comp if (k - 1) % 2 == 0 else (comp % n_sp) + 1
            other = tree.child(parent, sib, memo=False)
            pl_dis = other.planar.disjoint(node.planar)
            sp_dis = tori_disjoint_margin(other.torus, node.torus) > 0
            if not (pl_dis and sp_dis):
                witnesses.append((addr[:k], f"sibling {sib}: planar disjoint={pl_dis} spatial={sp_dis}"))
            if node.diameter > parent.diameter or node.planar.diameter() >= parent.planar.diameter():
                witnesses.append((addr[:k], "mesh increased"))
    return MoiseReport(not witnesses, checked, witnesses)


def divergence_step(tree: DefiningTree, p: FencePoint, p2: FencePoint, max_depth: int = 12) -> int:
    """First step at which the address paths of two points differ (1-based)."""
    a = address_of(tree, p, max_depth)
    b = address_of(tree, p2, max_depth)
    for k, (u, v) in enumerate(zip(a, b), start=1):
        if u != v:
            return k
    raise ValueError("points share their address to the given depth")


def separation_margin(tree: DefiningTree, address_a: Sequence[int], address_b: Sequence[int]) -> float:
    """Certified gap between two sibling tori at their divergence step (positive when disjoint)."""
    a, b = tree.node_at(address_a), tree.node_at(address_b)
    if a.address[:-1] != b.address[:-1]:
        raise ValueError("addresses are not siblings")
    parent = tree.node_at(a.address[:-1])
    if parent.step % 2 == 0:
        disjoint, _ = ramify_margins(parent.torus, tree.params.beta, tree.params.gamma)
        return disjoint
    return tori_disjoint_margin(a.torus, b.torus)
