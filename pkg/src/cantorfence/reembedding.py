"""Boundary-fixing radial maps of n-cubes and the feeler iteration on point samples.

Conventions: ``I = [0, 1]``; ``pi`` drops the last coordinate and ``lam``
returns it, so the "bottom face" of ``I^n`` is ``lam = 0``.  A compact
perfect set is replaced by a finite :class:`PointSample` whose points each
have a neighbour within the sample resolution.

Every map built here is recorded as a stage of a :class:`MapRecord`; the
record replays bit-identically because construction and replay share the
same vectorised evaluation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree


class ReembeddingError(ValueError):
    """A precondition of a construction step failed."""


def lam(x) -> np.ndarray:
    return np.asarray(x, dtype=float)[..., -1]


def pi(x) -> np.ndarray:
    return np.asarray(x, dtype=float)[..., :-1]


def _as_points(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    return a.reshape(1, -1) if a.ndim == 1 else a


# ---------------------------------------------------------------------------
# cubes and radial maps


@dataclass(frozen=True)
class NCube:
    """Axis-parallel box ``[lo_1, hi_1] x ... x [lo_n, hi_n]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).reshape(-1)
        hi = np.array(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.size < 1:
            raise ValueError("lo and hi must be non-empty vectors of equal length")
        if not np.all(hi - lo > 0):
            raise ValueError(f"degenerate cube: hi - lo = {hi - lo}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def around(cls, center, half) -> "NCube":
        c = np.asarray(center, dtype=float)
        return cls(c - half, c + half)

    @property
    def n(self) -> int:
        return self.lo.size

    @property
    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lo) & (x <= self.hi), axis=-1)

    def interior_contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x > self.lo) & (x < self.hi), axis=-1)

    def on_boundary(self, x) -> np.ndarray:
        return self.contains(x) & ~self.interior_contains(x)

    def inside_interior_of(self, other: "NCube") -> bool:
        return bool(np.all(self.lo > other.lo) and np.all(self.hi < other.hi))

    def disjoint(self, other: "NCube") -> bool:
        return bool(np.any(self.hi < other.lo) or np.any(other.hi < self.lo))

    def boundary_distance(self, x) -> np.ndarray:
        """Chebyshev distance from interior points to the boundary."""
        x = np.asarray(x, dtype=float)
        return np.minimum(x - self.lo, self.hi - x).min(axis=-1)

    def to_json(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_json(cls, data) -> "NCube":
        return cls(data["lo"], data["hi"])

    def __eq__(self, other):
        return (isinstance(other, NCube) and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes()))


def unit_cube(n: int) -> NCube:
    return NCube(np.zeros(n), np.ones(n))


def ray_exit(N: NCube, p, x) -> np.ndarray:
    """Point where the ray from interior point ``p`` through ``x`` leaves ``N``."""
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    if not N.interior_contains(p):
        raise ValueError("ray origin must lie in the open cube")
    if np.array_equal(x, p):
        raise ValueError("x equals p: no ray")
    q, _ = _ray_exit_many(N, p, x.reshape(1, -1))
    return q[0]


def _ray_exit_many(N: NCube, p: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exit points and ray parameters ``t`` (``q = p + t (x - p)``) for rows of ``X != p``."""
    d = X - p
    with np.errstate(divide="ignore", invalid="ignore"):
        t_hi = np.where(d > 0, (N.hi - p) / d, np.inf)
        t_lo = np.where(d < 0, (N.lo - p) / d, np.inf)
    t_all = np.minimum(t_hi, t_lo)
    axis = np.argmin(t_all, axis=1)
    rows = np.arange(len(X))
    t = t_all[rows, axis]
    q = p + t[:, None] * d
    # the limiting coordinate sits exactly on its face
    face = np.where(d[rows, axis] > 0, N.hi[axis], N.lo[axis])
    q[rows, axis] = face
    np.clip(q, N.lo, N.hi, out=q)
    return q, t


@dataclass(frozen=True)
class RadialMap:
    """``H_{N,p,p'}``: sends ``p`` to ``p'`` and each segment ``p q`` (``q`` on the boundary) linearly onto ``p' q``."""

    domain: NCube
    p: np.ndarray
    p_prime: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        pp = np.array(self.p_prime, dtype=float).reshape(-1)
        if p.size != self.domain.n or pp.size != self.domain.n:
            raise ValueError("dimension mismatch between points and domain")
        if not (self.domain.interior_contains(p) and self.domain.interior_contains(pp)):
            raise ValueError("p and p' must lie in the open cube")
        p.flags.writeable = False
        pp.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p_prime", pp)

    def _move(self, src: np.ndarray, dst: np.ndarray, X: np.ndarray) -> np.ndarray:
        out = X.copy()
        at_src = np.all(X == src, axis=1)
        inner = self.domain.interior_contains(X) & ~at_src
        out[at_src] = dst
        if inner.any():
            q, t = _ray_exit_many(self.domain, src, X[inner])
            tau = 1.0 / t
            out[inner] = dst + tau[:, None] * (q - dst)
        return out

    def apply_many(self, X) -> np.ndarray:
        """Extension by the identity applied to the rows of ``X``."""
        X = _as_points(X)
        if np.array_equal(self.p, self.p_prime):
            return X.copy()
        return self._move(self.p, self.p_prime, X)

    def inverse_many(self, Y) -> np.ndarray:
        Y = _as_points(Y)
        if np.array_equal(self.p, self.p_prime):
            return Y.copy()
        return self._move(self.p_prime, self.p, Y)

    def to_json(self):
        return {"type": "radial", "domain": self.domain.to_json(), "p": self.p.tolist(),
                "p_prime": self.p_prime.tolist()}

    @classmethod
    def from_json(cls, data) -> "RadialMap":
        return cls(NCube.from_json(data["domain"]), data["p"], data["p_prime"])


def radial_apply(m: RadialMap, x) -> np.ndarray:
    """``H_{N,p,p'}(x)`` for ``x`` in the closed cube."""
    x = np.asarray(x, dtype=float)
    if not m.domain.contains(x):
        raise ValueError("x lies outside the domain; use extend_identity")
    return m.apply_many(x)[0]


def radial_inverse(m: RadialMap, y) -> np.ndarray:
    """Inverse of :func:`radial_apply`: walk back along the ray from ``p'`` through ``y``."""
    y = np.asarray(y, dtype=float)
    if not m.domain.contains(y):
        raise ValueError("y lies outside the domain")
    return m.inverse_many(y)[0]


def extend_identity(m: RadialMap, x) -> np.ndarray:
    """The radial map on its cube, the identity elsewhere."""
    return m.apply_many(np.asarray(x, dtype=float))[0]


def lemma1_margin(m: RadialMap, x) -> float:
    """``lam(H(x)) - lam(p')`` for admissible ``x`` (``lam(x) >= lam(p) > lam(p')``)."""
    x = np.asarray(x, dtype=float)
    if not m.domain.contains(x):
        raise ValueError("x lies outside the domain")
    if not lam(m.p) > lam(m.p_prime):
        raise ValueError("need lam(p) > lam(p')")
    if lam(x) < lam(m.p):
        raise ValueError("need lam(x) >= lam(p)")
    return float(lam(radial_apply(m, x)) - lam(m.p_prime))


# ---------------------------------------------------------------------------
# map records


@dataclass(frozen=True)
class AffineStage:
    """``x -> scale * x + offset`` with a scalar scale (a similarity)."""

    scale: float
    offset: np.ndarray

    def apply_many(self, X) -> np.ndarray:
        return self.scale * _as_points(X) + self.offset

    def to_json(self):
        return {"type": "affine", "scale": self.scale, "offset": list(map(float, self.offset))}


@dataclass
class MapRecord:
    """Ordered composite of affine and radial stages; ``tags`` name the step each stage came from."""

    stages: list = field(default_factory=list)
    tags: list = field(default_factory=list)

    def append(self, stage, tag: str = "") -> None:
        self.stages.append(stage)
        self.tags.append(tag)

    def extend(self, other: "MapRecord") -> None:
        self.stages.extend(other.stages)
        self.tags.extend(other.tags)

    def apply(self, X) -> np.ndarray:
        Y = _as_points(X).copy()
        for st in self.stages:
            Y = st.apply_many(Y)
        return Y

    def __len__(self):
        return len(self.stages)

    def to_json(self) -> str:
        return json.dumps([{**st.to_json(), "tag": tag} for st, tag in zip(self.stages, self.tags)])

    @classmethod
    def from_json(cls, text: str) -> "MapRecord":
        rec = cls()
        for item in json.loads(text):
            if item["type"] == "affine":
                st = AffineStage(float(item["scale"]), np.array(item["offset"], dtype=float))
            elif item["type"] == "radial":
                st = RadialMap.from_json(item)
            else:
                raise ValueError(f"unknown stage type {item['type']!r}")
            rec.append(st, item.get("tag", ""))
        return rec


# ---------------------------------------------------------------------------
# samples


@dataclass
class PointSample:
    """Finite stand-in for a perfect compactum: every point has another within ``delta``."""

    points: np.ndarray
    delta: float
    validate: bool = True

    def __post_init__(self):
        self.points = np.array(self.points, dtype=float)
        if self.points.ndim != 2 or len(self.points) == 0:
            raise ValueError("points must be a non-empty (m, n) array")
        if self.points.shape[1] < 2:
            raise ValueError("dimension must be at least 2")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.validate:
            self.check_perfect()

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    def nearest_gaps(self) -> np.ndarray:
        if len(self.points) < 2:
            return np.array([np.inf])
        dist, _ = cKDTree(self.points).query(self.points, k=2)
        return dist[:, 1]

    def check_perfect(self) -> None:
        gaps = self.nearest_gaps()
        if np.any(gaps == 0):
            raise ValueError("sample contains duplicate points")
        bad = np.flatnonzero(gaps > self.delta)
        if bad.size:
            raise ValueError(f"{bad.size} isolated points (first index {bad[0]}, gap {gaps[bad[0]]:.3g})")

    def mapped(self, points: np.ndarray) -> "PointSample":
        return PointSample(points, self.delta, validate=False)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.points, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path, delta: Optional[float] = None) -> "PointSample":
        pts = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(pts, delta if delta is not None else _auto_delta(pts))


def _auto_delta(points: np.ndarray) -> float:
    if len(points) < 2:
        return 1.0
    dist, _ = cKDTree(points).query(points, k=2)
    return float(dist[:, 1].max())


def cantor_points(m: int, levels: int = 12, rng=None) -> np.ndarray:
    """``m`` distinct random points of the middle-thirds set, digits truncated at ``levels``."""
    rng = np.random.default_rng(rng)
    weights = 3.0 ** -np.arange(1, levels + 1)
    out: set = set()
    while len(out) < m:
        digits = 2 * rng.integers(0, 2, size=(m, levels))
        out.update((digits * weights).sum(axis=1).tolist())
    return np.sort(rng.choice(sorted(out), size=m, replace=False))


def product_cantor_sample(sizes: Sequence[int] = (22, 22, 21), levels: int = 12,
                          seed: int = 0) -> PointSample:
    """Grid sample of ``C^n``: the product of one random Cantor sample per axis."""
    rng = np.random.default_rng(seed)
    axes = [cantor_points(m, levels, rng) for m in sizes]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(sizes))
    return PointSample(grid, _auto_delta(grid))


def boundary_indices(points, n: Optional[int] = None) -> np.ndarray:
    """Indices of points on the boundary of the unit cube."""
    P = _as_points(points)
    return np.flatnonzero(np.any((P <= 0) | (P >= 1), axis=1))


def _lexmin(points: np.ndarray, idx: np.ndarray) -> int:
    """Index (into ``points``) of the lam-minimal row among ``idx``; ties lexicographic."""
    sub = points[idx]
    order = np.lexsort(tuple(sub[:, j] for j in range(sub.shape[1] - 2, -1, -1)) + (sub[:, -1],))
    return int(idx[order[0]])


# ---------------------------------------------------------------------------
# normalisation


def lemma2_normalize(X: PointSample) -> tuple[MapRecord, PointSample, int]:
    """Move ``X`` into ``I^n`` touching the boundary once, in the open bottom face.

    Returns the record, the image sample and the index of the boundary point.
    """
    P = X.points
    n = X.n
    # the lam-minimal point is invariant under positive similarities, so it
    # is found first and the affine stage centres it in pi: this leaves the
    # widest room for the cube neighbourhoods built around it later
    k = _lexmin(P, np.arange(len(P)))
    dev = float(np.abs(pi(P) - pi(P[k])).max())
    lspan = float(lam(P).max() - lam(P[k]))
    scale = min(0.4 / dev if dev > 0 else np.inf, 0.8 / lspan if lspan > 0 else np.inf)
    if not np.isfinite(scale):
        scale = 1.0
    offset = np.append(np.full(n - 1, 0.5), 0.1) - scale * P[k]
    rec = MapRecord()
    rec.append(AffineStage(scale, offset), "normalize:affine")
    Y = rec.stages[0].apply_many(P)
    p = Y[k]
    target = np.append(pi(p), 0.0)
    N = NCube(np.append(np.zeros(n - 1), -1.0), np.ones(n))
    H = RadialMap(N, p, target)
    rec.append(H, "normalize:radial")
    Y = H.apply_many(Y)
    return rec, X.mapped(Y), k


# ---------------------------------------------------------------------------
# feeler step


@dataclass
class FeelerOutcome:
    case: str
    r: np.ndarray
    s: np.ndarray
    q: np.ndarray
    M: NCube
    index_q: int  # sample index of the new boundary point


def _pick_r(Y: np.ndarray, cand: np.ndarray, N: NCube, p: np.ndarray) -> int:
    """Candidate balancing pi-separation from p against distance to the boundary of N."""
    gap = np.abs(pi(Y[cand]) - pi(p)).max(axis=1)
    room = N.boundary_distance(Y[cand])
    score = np.minimum(gap, room)
    best = score.max()
    top = cand[score == best]
    return _lexmin(Y, top)


def _case1_cube(N: NCube, p: np.ndarray, r: np.ndarray) -> NCube:
    """Cube around r and q = (pi(r), 0) inside the open N, excluding p.

    In pi-coordinates it spans ``r +- g/2``, where ``g`` is the largest
    pi-offset of r from p, so the coordinate realising ``g`` keeps p out.
    Its lam-range runs from halfway down the negative part of N to halfway
    between lam(r) and the top of N.
    """
    n = N.n
    g = float(np.abs(pi(r) - pi(p)).max())
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n - 1):
        keep = min(0.01 * (N.hi[i] - N.lo[i]), 0.5 * (r[i] - N.lo[i]), 0.5 * (N.hi[i] - r[i]))
        lo[i] = max(r[i] - g / 2, N.lo[i] + keep)
        hi[i] = min(r[i] + g / 2, N.hi[i] - keep)
    lo[-1] = N.lo[-1] / 2
    hi[-1] = r[-1] + (N.hi[-1] - r[-1]) / 2
    return NCube(lo, hi)


def _feeler_one(Y: np.ndarray, p: np.ndarray, N: NCube, delta: float, rec: MapRecord,
                tag: str) -> tuple[np.ndarray, FeelerOutcome]:
    inside = N.interior_contains(Y) & np.all((Y > 0) & (Y < 1), axis=1)
    cand = np.flatnonzero(inside)
    if cand.size == 0:
        raise ReembeddingError(f"{tag}: no sample point in the open cube besides its boundary point")
    distinct = cand[np.any(pi(Y[cand]) != pi(p), axis=1)]
    case = "1"
    if distinct.size == 0:
        # every candidate sits straight above p: nudge one sideways first
        case = "2"
        k = _lexmin(Y, cand)
        r = Y[k]
        room = min(float(N.boundary_distance(r)), float(np.minimum(r, 1 - r).min()))
        h = room / 2
        M2 = NCube.around(r, h)
        e1 = np.zeros(N.n)
        e1[0] = 1.0
        r2 = r + min(delta / 4, h / 2) * e1
        H = RadialMap(M2, r, r2)
        rec.append(H, f"{tag}:case2")
        Y = H.apply_many(Y)
        k_r = k
    else:
        k_r = _pick_r(Y, distinct, N, p)
    r = Y[k_r].copy()
    q = np.append(pi(r), 0.0)
    M = _case1_cube(N, p, r)
    if M.contains(p):
        raise ReembeddingError(f"{tag}: no admissible cube around r and q avoiding p")
    for attempt in range(3):
        in_M = np.flatnonzero(M.contains(Y))
        d = float(lam(Y[in_M]).min())
        level = in_M[lam(Y[in_M]) == d]
        interior = level[M.interior_contains(Y[level])]
        if interior.size:
            k_s = _lexmin(Y, interior)
            break
        # the minimum sits only on the boundary of M: lower r to that level inside M
        s_prime = np.append(pi(M.center), d)
        H = RadialMap(M, Y[k_r], s_prime)
        rec.append(H, f"{tag}:subcase1.2")
        Y = H.apply_many(Y)
    else:
        raise ReembeddingError(f"{tag}: lam-minimum stayed on the cube boundary")
    s = Y[k_s].copy()
    H = RadialMap(M, s, q)
    rec.append(H, f"{tag}:feeler")
    Y = H.apply_many(Y)
    return Y, FeelerOutcome(case, r, s, q, M, k_s)


def feeler_step(X: PointSample, boundary: Sequence[tuple], tag: str = "feeler"
                ) -> tuple[MapRecord, PointSample, list]:
    """Add one new bottom-face point inside each cube, leaving everything outside the cubes fixed.

    ``boundary`` lists ``(p_i, N_i)`` pairs: the current boundary points of
    ``X`` and pairwise disjoint cube neighbourhoods with ``pi(N_i)`` inside
    ``pi(I^n)``.
    """
    Y = X.points.copy()
    n = X.n
    pts = [np.asarray(p, dtype=float) for p, _ in boundary]
    cubes = [N for _, N in boundary]
    bidx = boundary_indices(Y)
    if len(bidx) != len(pts) or any(not np.any(np.all(Y[bidx] == p, axis=1)) for p in pts):
        raise ReembeddingError("the boundary points of the sample differ from the given ones")
    for i, (p, N) in enumerate(zip(pts, cubes)):
        if not N.interior_contains(p):
            raise ReembeddingError(f"cube {i}: p is not an interior point")
        if np.any(N.lo[:-1] < 0) or np.any(N.hi[:-1] > 1):
            raise ReembeddingError(f"cube {i}: pi(N) is not inside pi(I^n)")
        for j in range(i):
            if not N.disjoint(cubes[j]):
                raise ReembeddingError(f"cubes {j} and {i} overlap")
    rec = MapRecord()
    outcomes = []
    for i, (p, N) in enumerate(zip(pts, cubes)):
        Y, out = _feeler_one(Y, p, N, X.delta, rec, f"{tag}[{i}]")
        outcomes.append(out)
    return rec, X.mapped(Y), outcomes


# ---------------------------------------------------------------------------
# Cantor iteration


@dataclass
class CubeTree:
    """Cubes ``N_w`` and boundary points ``p_w`` for binary words ``w`` with ``|w| <= k``."""

    k: int
    cubes: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)
    indices: dict = field(default_factory=dict)  # sample index of p_w
    record: MapRecord = field(default_factory=MapRecord)

    def words(self, length: int) -> list[str]:
        return sorted(w for w in self.cubes if len(w) == length)

    def violations(self, Y: np.ndarray) -> list[str]:
        """Checks the five nesting conditions against the final sample ``Y``."""
        out = []
        for w, N in self.cubes.items():
            if w:
                parent = self.cubes[w[:-1]]
                if not N.inside_interior_of(parent):
                    out.append(f"N_{w} not inside the interior of N_{w[:-1]}")
            if w + "0" in self.cubes and not self.cubes[w + "0"].disjoint(self.cubes[w + "1"]):
                out.append(f"children of N_{w} intersect")
            p = self.points[w]
            if len(w) == self.k and not (lam(p) == 0 and N.interior_contains(p)):
                out.append(f"p_{w} is not in the open bottom face of N_{w}")
        if np.any(Y < 0) or np.any(Y > 1):
            out.append("sample leaves I^n")
        bidx = set(boundary_indices(Y).tolist())
        leaves = {self.indices[w] for w in self.words(self.k)}
        if bidx != leaves or len(leaves) != 2**self.k:
            out.append(f"boundary points {sorted(bidx)} differ from leaf points {sorted(leaves)}")
        for w in self.words(self.k):
            if not np.array_equal(Y[self.indices[w]], self.points[w]):
                out.append(f"p_{w} is not the image of its sample point")
        # stage supports: every radial map of round j lies in a cube of length j
        for st, tag in zip(self.record.stages, self.record.tags):
            if isinstance(st, RadialMap) and tag.startswith("round"):
                j = int(tag[5:].split(":")[0].split("[")[0])
                if not any(_cube_inside(st.domain, self.cubes[w]) for w in self.words(j)):
                    out.append(f"stage {tag} is not supported in a round-{j} cube")
        return out

    def to_json(self) -> dict:
        return {"k": self.k,
                "cubes": {w or "root": N.to_json() for w, N in sorted(self.cubes.items())},
                "points": {w or "root": self.points[w].tolist() for w in sorted(self.points)}}


def _cube_inside(a: NCube, b: NCube) -> bool:
    return bool(np.all(a.lo >= b.lo) and np.all(a.hi <= b.hi))


def _child_half(parent: NCube, center: np.ndarray, sibling: np.ndarray, shrink: float) -> float:
    parent_half = float(parent.widths.min()) / 2
    sep = float(np.abs(pi(center) - pi(sibling)).max())
    room = float(parent.boundary_distance(center))
    return min(shrink * parent_half, 0.45 * sep, 0.9 * room)


class IterationAborted(ReembeddingError):
    def __init__(self, round_index: int, tree: CubeTree, cause: Exception):
        super().__init__(f"round {round_index}: {cause}")
        self.round_index = round_index
        self.tree = tree


def cantor_iteration(X: PointSample, k: int, shrink: float = 0.25) -> tuple[CubeTree, PointSample]:
    """Normalise, then run ``k`` feeler rounds over a shrinking binary tree of cubes."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if not 0 < shrink < 1:
        raise ValueError("shrink must lie in (0, 1)")
    rec, S, k0 = lemma2_normalize(X)
    Y = S.points
    n = X.n
    tree = CubeTree(k, record=rec)
    p = Y[k0]
    room = float(np.minimum(pi(p), 1 - pi(p)).min())
    h0 = 0.9 * min(room, 0.5)
    tree.cubes[""] = NCube.around(p, h0)
    tree.points[""] = p.copy()
    tree.indices[""] = k0
    for j in range(k):
        words = tree.words(j)
        try:
            step_rec, S, outs = feeler_step(S, [(tree.points[w], tree.cubes[w]) for w in words],
                                            tag=f"round{j}")
        except ReembeddingError as exc:
            raise IterationAborted(j, tree, exc) from exc
        tree.record.extend(step_rec)
        Y = S.points
        for w, out in zip(words, outs):
            tree.points[w + "0"] = tree.points[w]
            tree.indices[w + "0"] = tree.indices[w]
            tree.points[w + "1"] = Y[out.index_q].copy()
            tree.indices[w + "1"] = out.index_q
            parent = tree.cubes[w]
            a, b = tree.points[w + "0"], tree.points[w + "1"]
            for child, c, sib in ((w + "0", a, b), (w + "1", b, a)):
                half = _child_half(parent, c, sib, shrink)
                if not half > 0:
                    raise IterationAborted(j, tree, ReembeddingError(f"no room for N_{child}"))
                tree.cubes[child] = NCube.around(c, half)
    return tree, S
