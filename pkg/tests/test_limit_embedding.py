from dataclasses import replace

import numpy as np
import pytest

from cantorfence.cantor_plane import DigitStream, UNIT
from cantorfence.defining_sequence import DefiningNode, Frame
from cantorfence.limit_embedding import (
    FencePoint,
    address_of,
    divergence_step,
    evaluate,
    moise_check,
    necklace_slice,
    separation_margin,
)
from cantorfence.torus_geom import torus_inside


def point(x, s):
    return FencePoint.parse(x, s)


class TestFencePoint:
    def test_values(self):
        p = point("(2)", "1(0)")
        assert p.x_value == 1
        assert p.s_value * 3 == 2

    @pytest.mark.parametrize("x,s", [("1(0)", "(0)"), ("(0)", "(2)")])
    def test_rejects_bad_digits(self, x, s):
        with pytest.raises(ValueError):
            point(x, s)


class TestAddress:
    def test_examples(self, shared_tree):
        a0 = shared_tree.exponent("0")
        assert address_of(shared_tree, point("(0)", "(0)"), 2) == (0, 1)
        assert address_of(shared_tree, point("(2)", "(0)"), 2) == (0, 4**a0)
        assert address_of(shared_tree, point("(0)", "1(0)"), 1) == (1,)

    def test_rectangle_contains_point(self, shared_tree):
        p = point("0220(20)", "10(1)")
        node = shared_tree.node_at(address_of(shared_tree, p, 4))
        assert node.planar.contains_point(p.x_value, p.s_value)

    def test_fast_path_agrees_with_enumeration(self, shared_tree, monkeypatch):
        import cantorfence.limit_embedding as le

        p = point("02(2)", "1(0)")
        fast = address_of(shared_tree, p, 2)
        monkeypatch.setattr(le, "ENUMERATE_MAX", 4**10)
        assert address_of(shared_tree, p, 2) == fast


class TestEvaluate:
    def test_self_consistent(self, shared_tree):
        p = point("(02)", "(01)")
        e2, n2 = evaluate(shared_tree, p, 1e-2)
        e3, n3 = evaluate(shared_tree, p, 1e-3)
        assert n2.diameter < 1e-2 and n3.diameter < 1e-3
        assert np.linalg.norm(e2 - e3) < 1.1e-2
        assert n3.address[: n2.step] == n2.address

    def test_nonpositive_eps(self, shared_tree):
        with pytest.raises(ValueError):
            evaluate(shared_tree, point("(0)", "(0)"), 0)

    def test_depth_cap(self, shared_tree):
        with pytest.raises(RuntimeError):
            evaluate(shared_tree, point("(0)", "(0)"), 1e-3, max_depth=2)

    def test_distinct_points_separate(self, shared_tree):
        p, p2 = point("(0)", "(0)"), point("(2)", "(0)")
        k = divergence_step(shared_tree, p, p2, 4)
        assert k == 2
        a = address_of(shared_tree, p, k)
        b = address_of(shared_tree, p2, k)
        gap = separation_margin(shared_tree, a, b)
        assert gap > 0
        e1, _ = evaluate(shared_tree, p, 1e-3)
        e2, _ = evaluate(shared_tree, p2, 1e-3)
        assert np.linalg.norm(e1 - e2) > 0

    def test_same_path_rejected(self, shared_tree):
        p = point("(0)", "(0)")
        with pytest.raises(ValueError):
            divergence_step(shared_tree, p, p, 4)

    def test_non_siblings_rejected(self, shared_tree):
        with pytest.raises(ValueError):
            separation_margin(shared_tree, (0, 1), (1, 1))


class TestNecklace:
    def test_stage_counts(self, shared_tree):
        s = DigitStream.parse("(0)")
        sl = necklace_slice(shared_tree, s, 1)
        a0 = shared_tree.exponent("0")
        assert [len(st) for st in sl.stages] == [1, 4**a0]
        assert sl.verified and not sl.truncated
        for t in sl.tori(1):
            assert torus_inside(sl.tori(0)[0], t)

    def test_budget_truncates(self, shared_tree):
        sl = necklace_slice(shared_tree, DigitStream.parse("(0)"), 2, budget=100)
        assert sl.truncated and len(sl.stages) == 2


class TestMoise:
    def test_random_paths(self, shared_tree, rng):
        addrs = [shared_tree.random_address(4, rng) for _ in range(10)]
        rep = moise_check(shared_tree, addrs, 4)
        assert rep.ok, rep.witnesses
        assert rep.checked == 40

    def test_depth_zero(self, shared_tree):
        rep = moise_check(shared_tree, [(0, 1)], 0)
        assert rep.ok and rep.checked == 0

    def test_detects_escaped_child(self, shared_tree):
        addr = (1, 5)
        good = shared_tree.node_at(addr)
        moved = replace(good, frame=Frame(good.frame.origin + np.array([5.0, 0, 0]),
                                          good.frame.rot, good.frame.scale))
        shared_tree.nodes[addr] = moved
        try:
            rep = moise_check(shared_tree, [addr], 2)
        finally:
            shared_tree.nodes[addr] = good
        assert not rep.ok
        assert any("spatial=False" in msg for _, msg in rep.witnesses)
