import json
from fractions import Fraction as F

import numpy as np
import pytest

from cantorfence.cantor_plane import Interval, PlanarRectangle, UNIT
from cantorfence.defining_sequence import (
    AddressError,
    BudgetExceeded,
    DefiningTree,
    ExponentSchedule,
    TreeParams,
    branch_word,
    chain_indices,
    format_address,
    representative,
)
from cantorfence.torus_geom import GeometryError, tori_disjoint_margin, torus_inside


class TestSchedule:
    def test_injective_and_deterministic(self, shared_tree):
        again = DefiningTree()
        again.level_count(4, budget=10**9)
        assert shared_tree.schedule.is_injective()
        assert again.schedule.to_json() == shared_tree.schedule.to_json()
        assert {w: shared_tree.exponent(w) for w in ("0", "1")} == {"0": 3, "1": 4}

    def test_assign_refuses_reuse(self):
        s = ExponentSchedule(fixed={"0": 2})
        with pytest.raises(ValueError):
            s.assign("1", 2, exact=True)
        assert s.assign("1", 2) == 3
        with pytest.raises(ValueError):
            s.assign("", 5)
        with pytest.raises(ValueError):
            s.assign("0", 7)

    def test_fixed_schedule_is_honoured(self):
        tree = DefiningTree(TreeParams(fixed_schedule=(("0", 4), ("1", 3))))
        assert tree.exponent("0") == 4 and tree.exponent("1") == 3
        assert tree.chain_for("0")[0].q == 256

    def test_infeasible_fixed_exponent(self):
        tree = DefiningTree(TreeParams(fixed_schedule=(("0", 1),)))
        with pytest.raises(GeometryError):
            tree.chain_for("0")

    def test_mesh_bound_drives_exponent(self, shared_tree):
        for w in ("0", "1"):
            chain, verdict = shared_tree.chain_for(w)
            assert verdict.ok
            parent = shared_tree.node_at(representative(w))
            assert parent.frame.scale * 2 * (chain.link_major + chain.link_minor) < 1 / (2 * len(w))


class TestParams:
    @pytest.mark.parametrize("kw", [dict(root_minor=1.0), dict(gamma=0.6), dict(safety=1.0),
                                    dict(rho_frac=0.0), dict(base=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            TreeParams(**kw)

    def test_json_round_trip(self):
        p = TreeParams(root_center=(1.0, 2.0, 3.0), fixed_schedule=(("0", 3),))
        assert TreeParams.from_json(json.loads(json.dumps(p.to_json()))) == p


class TestAddresses:
    def test_helpers(self):
        a = (0, 5, 1, 2, 0)
        assert branch_word(a) == "010"
        assert chain_indices(a) == (5, 2)
        assert format_address(a) == "<[0],5,[1],2,[0]>"
        assert representative("01") == (0, 1, 1)
        assert representative("01", odd=False) == (0, 1, 1, 1)

    @pytest.mark.parametrize("addr,level", [((2,), 1), ((0, 0), 2), ((0, 65), 2), ((1, 1, 0, 999999), 4)])
    def test_invalid_component_names_level(self, shared_tree, addr, level):
        with pytest.raises(AddressError) as err:
            shared_tree.node_at(addr)
        assert err.value.level == level

    def test_memo_identity(self, shared_tree):
        assert shared_tree.node_at((0, 1, 1)) is shared_tree.node_at([0, 1, 1])
        assert shared_tree.root is shared_tree.node_at(())


class TestExpansion:
    def test_ramification_of_root(self, shared_tree):
        root = shared_tree.root
        kids = shared_tree.expand_odd(root)
        assert [k.address for k in kids] == [(0,), (1,)]
        assert kids[0].planar == PlanarRectangle(UNIT, Interval(0, F(1, 3)))
        assert kids[1].planar == PlanarRectangle(UNIT, Interval(F(2, 3), 1))
        for k in kids:
            assert torus_inside(root.torus, k.torus)
            assert k.torus.minor == pytest.approx(0.4 * 0.45 * k.torus.major)
        assert tori_disjoint_margin(kids[0].torus, kids[1].torus) > 0
        with pytest.raises(ValueError):
            shared_tree.expand_even(root)

    @pytest.mark.parametrize("word", ["0", "1"])
    def test_chain_child_count_matches_planar(self, shared_tree, word):
        node = shared_tree.node_at((int(word),))
        kids = shared_tree.expand_even(node, memo=False)
        a = shared_tree.exponent(word)
        assert len(kids) == 4**a == shared_tree.n_children(node)
        # planar children are the 4^a regular subsegments, in order and disjoint
        for left, right in zip(kids, kids[1:]):
            assert left.planar.horizontal.hi < right.planar.horizontal.lo
            assert left.planar.vertical == right.planar.vertical == node.planar.vertical
        with pytest.raises(ValueError):
            shared_tree.expand_odd(node)

    def test_nesting_along_path(self, shared_tree):
        addr = (0, 1, 1, 7, 0, 3)
        for k in range(1, len(addr) + 1):
            parent = shared_tree.node_at(addr[: k - 1])
            node = shared_tree.node_at(addr[:k])
            assert torus_inside(parent.torus, node.torus)
            assert parent.planar.contains_rectangle(node.planar)
            assert node.diameter < parent.diameter

    def test_congruent_classes(self, shared_tree):
        a = shared_tree.node_at((0, 1, 1))
        b = shared_tree.node_at((0, 40, 1))
        assert a.ratio == b.ratio
        assert a.frame.scale == pytest.approx(b.frame.scale, rel=1e-12)


class TestLevels:
    def test_counts(self, shared_tree):
        a0, a1 = shared_tree.exponent("0"), shared_tree.exponent("1")
        assert [shared_tree.level_count(k) for k in range(3)] == [1, 2, 4**a0 + 4**a1]
        assert shared_tree.level_count(3) == 2 * (4**a0 + 4**a1)

    def test_stats_steps(self, shared_tree):
        s0, s2 = shared_tree.level_stats(0), shared_tree.level_stats(2)
        assert s0.count == 1 and s0.mesh == pytest.approx(2 * 1.45)
        assert s2.mesh < 0.5
        assert s2.min_margin > 0
        assert s2.classes == 2
        assert shared_tree.level_stats(1).min_margin > 0

    def test_class_stats_match_enumeration(self, shared_tree):
        stats = shared_tree.level_stats(2)
        nodes = list(shared_tree.iter_level(2))
        assert len(nodes) == stats.count
        assert max(n.diameter for n in nodes) == pytest.approx(stats.mesh, rel=1e-9)
        assert max(n.planar.diameter() for n in nodes) == pytest.approx(stats.planar_mesh)
        assert len({n.address for n in nodes}) == len(nodes)

    def test_budget(self, shared_tree):
        with pytest.raises(BudgetExceeded) as err:
            shared_tree.level_stats(4, budget=1000)
        assert err.value.step == 4 and err.value.projected > 1000
        with pytest.raises(BudgetExceeded):
            next(shared_tree.iter_level(4, budget=1000))


def test_random_addresses_are_valid(shared_tree, rng):
    for _ in range(20):
        addr = shared_tree.random_address(6, rng)
        assert len(addr) == 6
        shared_tree.node_at(addr)


def test_subtree_json(shared_tree):
    doc = json.loads(shared_tree.subtree_json([(), (1, 3)]))
    assert doc["schedule"] == shared_tree.schedule.to_json()
    assert doc["schedule"]["0"] == 3
    assert [n["step"] for n in doc["nodes"]] == [0, 2]
