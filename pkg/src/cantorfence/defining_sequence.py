"""Lazily expanded tree of tori alternating ramifications and simple chains.

Addresses are flat integer tuples ``(i_1, k_1, i_2, k_2, ...)``: even
positions hold branch digits (0/1), odd positions hold 1-based chain
indices.  An address of length ``k`` names a node of step ``k``.

Each node carries a similarity frame (origin, rotation, scale) and the
minor/major ratio of its torus.  Chains are built and verified once per
branch word in the unit frame of their parent; all tori that share a
branch word are congruent, which is what makes deep paths and exact
level statistics cheap.
"""
from __future__ import annotations

import json
import math
import threading
from dataclasses import asdict, dataclass, field
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from .cantor_plane import PlanarRectangle, as_word, rectangle
from .torus_geom import (
    Chain,
    ChainVerdict,
    GeometryError,
    SolidTorus,
    build_chain,
    chain_min_links,
    orthonormal_frame,
    ramify_margins,
    verify_chain,
)

E_Z = np.array([0.0, 0.0, 1.0])


class BudgetExceeded(RuntimeError):
    def __init__(self, step: int, projected: int, budget: int):
        super().__init__(f"level {step} has at least {projected} nodes, budget is {budget}")
        self.step = step
        self.projected = projected
        self.budget = budget


class AddressError(ValueError):
    def __init__(self, level: int, message: str):
        super().__init__(f"address component {level}: {message}")
        self.level = level


@dataclass(frozen=True)
class Frame:
    origin: np.ndarray
    rot: np.ndarray
    scale: float

    def compose(self, inner: "Frame") -> "Frame":
        return Frame(self.origin + self.scale * (self.rot @ inner.origin),
                     self.rot @ inner.rot, self.scale * inner.scale)

    def apply(self, p) -> np.ndarray:
        return self.origin + self.scale * (self.rot @ np.asarray(p, dtype=float))


def _root_frame(center, axis, major) -> Frame:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    e1, e2 = orthonormal_frame(axis)
    return Frame(np.asarray(center, dtype=float), np.column_stack([e1, e2, axis]), float(major))


class ExponentSchedule(Mapping[str, int]):
    """Injective map from nonempty binary words to positive exponents ``a_w``."""

    def __init__(self, base: int = 1, fixed: Optional[Mapping[str, int]] = None):
        self.base = base
        self._values: dict[str, int] = {}
        self._used: set[int] = set()
        self.order: list[str] = []
        for w, a in (fixed or {}).items():
            self.assign(w, a, exact=True)

    def __getitem__(self, word) -> int:
        return self._values[as_word(word)]

    def __iter__(self):
        return iter(self.order)

    def __len__(self):
        return len(self._values)

    def next_free(self, floor: int) -> int:
        a = max(floor, self.base)
        while a in self._used:
            a += 1
        return a

    def assign(self, word, value: int, exact: bool = False) -> int:
        word = as_word(word)
        if not word:
            raise ValueError("the empty word carries no exponent")
        if word in self._values:
            raise ValueError(f"a_{word} already assigned")
        a = value if exact else self.next_free(value)
        if a in self._used or a < 1:
            raise ValueError(f"exponent {a} for {word} breaks injectivity")
        self._values[word] = a
        self._used.add(a)
        self.order.append(word)
        return a

    def is_injective(self) -> bool:
        return len(set(self._values.values())) == len(self._values)

    def to_json(self) -> dict:
        return {w: self._values[w] for w in self.order}


@dataclass(frozen=True)
class TreeParams:
    root_center: tuple = (0.0, 0.0, 0.0)
    root_axis: tuple = (0.0, 0.0, 1.0)
    root_major: float = 1.0
    root_minor: float = 0.45
    beta: float = 0.5
    gamma: float = 0.4
    rho_frac: float = 0.75
    safety: float = 0.5
    quadrature: int = 256
    base: int = 1
    fixed_schedule: tuple = ()

    def __post_init__(self):
        if not self.root_major > self.root_minor > 0:
            raise ValueError("root torus needs major > minor > 0")
        if not (0 < self.gamma < self.beta and self.beta + self.gamma < 1):
            raise ValueError("need 0 < gamma < beta and beta + gamma < 1")
        if not 0 < self.safety < 1:
            raise ValueError("safety must lie in (0, 1)")
        if not 0 < self.rho_frac < 1:
            raise ValueError("rho_frac must lie in (0, 1)")
        if self.base < 1:
            raise ValueError("schedule base must be >= 1")

    def to_json(self) -> dict:
        d = asdict(self)
        d["root_center"] = list(self.root_center)
        d["root_axis"] = list(self.root_axis)
        d["fixed_schedule"] = dict(self.fixed_schedule)
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> "TreeParams":
        d = dict(d)
        if "root_center" in d:
            d["root_center"] = tuple(d["root_center"])
        if "root_axis" in d:
            d["root_axis"] = tuple(d["root_axis"])
        if "fixed_schedule" in d:
            d["fixed_schedule"] = tuple(sorted(dict(d["fixed_schedule"]).items()))
        return cls(**d)


@dataclass(frozen=True)
class DefiningNode:
    address: tuple
    frame: Frame
    ratio: float
    planar: PlanarRectangle

    @property
    def step(self) -> int:
        return len(self.address)

    @property
    def torus(self) -> SolidTorus:
        return SolidTorus(self.frame.origin, self.frame.rot[:, 2], self.frame.scale,
                          self.frame.scale * self.ratio)

    @property
    def diameter(self) -> float:
        return 2 * self.frame.scale * (1 + self.ratio)

    @property
    def branch(self) -> str:
        return branch_word(self.address)

    def to_json(self) -> dict:
        return {"address": list(self.address), "step": self.step,
                "torus": self.torus.to_json(), "planar": self.planar.to_json()}


def branch_word(address: Sequence[int]) -> str:
    return "".join(str(d) for d in address[0::2])


def chain_indices(address: Sequence[int]) -> tuple:
    return tuple(address[1::2])


def format_address(address: Sequence[int]) -> str:
    parts = [f"[{c}]" if i % 2 == 0 else str(c) for i, c in enumerate(address)]
    return "<" + ",".join(parts) + ">"


def representative(word: str, odd: bool = True) -> tuple:
    """Address with all chain indices 1 and the given branch digits."""
    out = []
    for i, d in enumerate(word):
        out.append(int(d))
        if i < len(word) - 1 or not odd:
            out.append(1)
    return tuple(out)


@dataclass
class LevelStats:
    step: int
    count: int
    mesh: float
    min_margin: float
    planar_mesh: float
    classes: int


class DefiningTree:
    """Lazy defining sequence ``G'_k`` with its planar counterpart ``G_k``.

    ``node_at`` materialises only the ancestors of the requested address.
    Exponents are assigned on first demand, so the schedule depends on the
    order of queries; drivers in this package always query breadth-first.
    """

    def __init__(self, params: Optional[TreeParams] = None, max_exponent: int = 60):
        self.params = params or TreeParams()
        p = self.params
        self.schedule = ExponentSchedule(p.base, dict(p.fixed_schedule))
        self.max_exponent = max_exponent
        root = DefiningNode((), _root_frame(p.root_center, p.root_axis, p.root_major),
                            p.root_minor / p.root_major, rectangle(self.schedule, "", ()))
        self.nodes: dict[tuple, DefiningNode] = {(): root}
        self.chains: dict[str, tuple[Chain, ChainVerdict]] = {}
        self._lock = threading.RLock()

    @property
    def root(self) -> DefiningNode:
        return self.nodes[()]

    # -- schedule -----------------------------------------------------------

    def _parent_class(self, word: str) -> DefiningNode:
        """Representative ramification node carrying the chain for ``word``."""
        return self.node_at(representative(word, odd=True))

    def choose_exponent(self, word, floor: int = 1) -> int:
        """Assign ``a_w``: feasible chain, mesh below ``1/(2|w|)``, then the next unused value."""
        word = as_word(word)
        with self._lock:
            if word in self.schedule:
                return self.schedule[word]
            parent = self._parent_class(word)
            p = self.params
            q_min = chain_min_links(1.0, parent.ratio, p.rho_frac, p.safety, p.quadrature)
            a = max(floor, p.base, math.ceil(math.log(q_min, 4) - 1e-12))
            bound = 1.0 / (2 * len(word))
            while True:
                a = self.schedule.next_free(a)
                if a > self.max_exponent:
                    raise GeometryError(f"no feasible exponent <= {self.max_exponent} for a_{word}")
                built = self._try_chain(parent, 4**a)
                if built is not None:
                    chain, verdict = built
                    diam = parent.frame.scale * 2 * (chain.link_major + chain.link_minor)
                    if diam < bound:
                        break
                a += 1
            self.schedule.assign(word, a, exact=True)
            self.chains[word] = (chain, verdict)
            return a

    def _try_chain(self, parent: DefiningNode, q: int):
        p = self.params
        canon = SolidTorus(np.zeros(3), E_Z, 1.0, parent.ratio)
        try:
            chain = build_chain(canon, q, p.rho_frac, p.safety)
        except GeometryError:
            return None
        # the two-step rotational symmetry certificate covers every pair, so the
        # tree never needs the all-pairs sweep, even for small q
        verdict = verify_chain(canon, chain, p.quadrature, exhaustive=False)
        return (chain, verdict) if verdict.ok else None

    def chain_for(self, word) -> tuple[Chain, ChainVerdict]:
        """Canonical (unit-frame) chain and verdict used under every node with this branch word."""
        word = as_word(word)
        with self._lock:
            if word not in self.chains:
                if word in self.schedule:
                    # fixed schedule entry: build the prescribed chain
                    parent = self._parent_class(word)
                    built = self._try_chain(parent, 4 ** self.schedule[word])
                    if built is None:
                        raise GeometryError(f"prescribed a_{word}={self.schedule[word]} is infeasible")
                    self.chains[word] = built
                else:
                    self.choose_exponent(word)
            return self.chains[word]

    def exponent(self, word) -> int:
        word = as_word(word)
        if word not in self.schedule:
            self.choose_exponent(word)
        return self.schedule[word]

    # -- expansion ------------------------------------------------------------

    def _child(self, node: DefiningNode, comp: int) -> DefiningNode:
        p = self.params
        address = node.address + (comp,)
        level = len(address)
        if node.step % 2 == 0:
            if comp not in (0, 1):
                raise AddressError(level, f"branch digit must be 0 or 1, got {comp}")
            sign = -1.0 if comp == 0 else 1.0
            local = Frame(np.array([0.0, 0.0, sign * p.beta * node.ratio]), np.eye(3), 1.0)
            ratio = p.gamma * node.ratio
        else:
            word = branch_word(node.address)
            chain, _ = self.chain_for(word)
            if not 1 <= comp <= chain.q:
                raise AddressError(level, f"chain index must lie in 1..{chain.q}, got {comp}")
            j = comp - 1
            local = Frame(chain.center(j), chain.frame(j), chain.link_major)
            ratio = chain.link_minor / chain.link_major
        planar = rectangle(self.schedule, branch_word(address), chain_indices(address))
        return DefiningNode(address, node.frame.compose(local), ratio, planar)

    def child(self, node: DefiningNode, comp: int, memo: bool = True) -> DefiningNode:
        key = node.address + (comp,)
        with self._lock:
            hit = self.nodes.get(key)
            if hit is not None:
                return hit
            out = self._child(node, comp)
            if memo:
                self.nodes[key] = out
            return out

    def node_at(self, address: Sequence[int]) -> DefiningNode:
        address = tuple(int(c) for c in address)
        with self._lock:
            node = self.root
            for comp in address:
                node = self.child(node, comp)
            return node

    def expand_odd(self, node: DefiningNode, memo: bool = True) -> list[DefiningNode]:
        if node.step % 2:
            raise ValueError("ramification applies to even-step nodes")
        return [self.child(node, 0, memo), self.child(node, 1, memo)]

    def expand_even(self, node: DefiningNode, memo: bool = True) -> list[DefiningNode]:
        if node.step % 2 == 0:
            raise ValueError("chains are inserted into odd-step nodes")
        chain, _ = self.chain_for(node.branch)
        return [self.child(node, k, memo) for k in range(1, chain.q + 1)]

    def children(self, node: DefiningNode, memo: bool = True) -> list[DefiningNode]:
        return self.expand_odd(node, memo) if node.step % 2 == 0 else self.expand_even(node, memo)

    def n_children(self, node_or_address) -> int:
        address = getattr(node_or_address, "address", node_or_address)
        if len(address) % 2 == 0:
            return 2
        return 4 ** self.exponent(branch_word(address))

    # -- levels ---------------------------------------------------------------

    def level_words(self, step: int) -> list[str]:
        """Branch words labelling the congruence classes of ``G'_step``."""
        n = (step + 1) // 2
        return [format(i, f"0{n}b") for i in range(2**n)] if n else [""]

    def class_count(self, word: str, step: int) -> int:
        count = 1
        for j in range(1, step // 2 + 1):
            count *= 4 ** self.exponent(word[:j])
        return count

    def level_count(self, step: int, budget: Optional[int] = None) -> int:
        """Exact ``#G'_step``, assigning exponents breadth-first; stops early past ``budget``."""
        for k in range(step + 1):
            total = sum(self.class_count(w, k) for w in self.level_words(k))
            if budget is not None and total > budget:
                raise BudgetExceeded(k, total, budget)
        return total

    def level_stats(self, step: int, budget: int = 10**6) -> LevelStats:
        """Count, mesh and worst sibling margin of the full level ``step``.

        Raises :class:`BudgetExceeded` when the level holds more than
        ``budget`` tori.  Mesh and margins are taken over one representative
        per branch word, which covers every member up to congruence.
        """
        count = self.level_count(step, budget)
        mesh = 0.0
        planar_mesh = 0.0
        margin = math.inf
        words = self.level_words(step)
        for w in words:
            node = self.node_at(representative(w, odd=step % 2 == 1) if w else ())
            mesh = max(mesh, node.diameter)
            planar_mesh = max(planar_mesh, node.planar.diameter())
            if step == 0:
                continue
            parent = self.node_at(node.address[:-1])
            if step % 2:
                disjoint, _ = ramify_margins(parent.torus, self.params.beta, self.params.gamma)
                margin = min(margin, disjoint)
            else:
                _, verdict = self.chain_for(w)
                margin = min(margin, parent.frame.scale * verdict.disjoint_margin)
        return LevelStats(step, count, mesh, margin, planar_mesh, len(words))

    def iter_level(self, step: int, budget: int = 10**6) -> Iterator[DefiningNode]:
        """Every node of ``G'_step`` (not memoised), after the budget check."""
        self.level_count(step, budget)
        frontier = [self.root]
        for _ in range(step):
            frontier = [c for n in frontier for c in self.children(n, memo=False)]
        yield from frontier

    def memo_stats(self) -> dict:
        return {"nodes": len(self.nodes), "chains": len(self.chains),
                "schedule": len(self.schedule)}

    def random_address(self, steps: int, rng: np.random.Generator) -> tuple:
        out: list[int] = []
        for k in range(steps):
            if k % 2 == 0:
                out.append(int(rng.integers(0, 2)))
            else:
                a = self.exponent(branch_word(out))
                if a < 31:
                    out.append(int(rng.integers(1, 4**a + 1)))
                else:  # beyond int64: draw the 2a bits in 62-bit blocks
                    bits = 0
                    for _ in range(-(-2 * a // 62)):
                        bits = (bits << 62) | int(rng.integers(0, 2**62))
                    out.append(1 + bits % 4**a)
        return tuple(out)

    def subtree_json(self, addresses: Sequence[Sequence[int]]) -> str:
        nodes = [self.node_at(a).to_json() for a in addresses]
        return json.dumps({"params": self.params.to_json(), "schedule": self.schedule.to_json(),
                           "nodes": nodes}, indent=1, sort_keys=True)
