"""Standard solid tori, 2-fold ramification and simple chains.

A chain of ``q`` links is placed on the core circle of its parent: link ``j``
is centred at angle ``2 pi j / q``; even links lie flat in the parent's core
plane, odd links stand in the plane spanned by the parent axis and the
tangent.  Every construction can be checked by :func:`verify_chain`, which
tests containment, disjointness and the cyclic linking pattern with two
independent linking-number computations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import kernels

AXIS_TOL = 1e-12


class GeometryError(ValueError):
    """A geometric construction is infeasible for the requested parameters."""


class LinkingIndeterminate(ArithmeticError):
    """Gauss quadrature and the disk-crossing count disagree or are unresolved."""


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero vector")
    return v / n


def orthonormal_frame(axis) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing ``axis`` to a right-handed frame."""
    a = _unit(axis)
    helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = _unit(helper - (helper @ a) * a)
    e2 = np.cross(a, e1)
    return e1, e2


@dataclass(frozen=True)
class SolidTorus:
    """Solid torus of revolution: disk of radius ``minor`` revolved at distance ``major``."""

    center: np.ndarray
    axis: np.ndarray
    major: float
    minor: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3)
        a = np.asarray(self.axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(a) - 1.0) > AXIS_TOL:
            raise ValueError(f"axis must be a unit vector, got |axis| = {np.linalg.norm(a)}")
        if not (self.major > self.minor > 0):
            raise ValueError(f"need major > minor > 0, got R={self.major}, r={self.minor}")
        c.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "axis", a)
        object.__setattr__(self, "major", float(self.major))
        object.__setattr__(self, "minor", float(self.minor))

    @property
    def core(self) -> "CoreCircle":
        return CoreCircle(self.center, self.axis, self.major)

    def to_json(self) -> dict:
        return {"center": self.center.tolist(), "axis": self.axis.tolist(),
                "major": self.major, "minor": self.minor}

    @classmethod
    def from_json(cls, d) -> "SolidTorus":
        return cls(np.array(d["center"], float), np.array(d["axis"], float), d["major"], d["minor"])

    def __eq__(self, other):
        return (isinstance(other, SolidTorus) and np.array_equal(self.center, other.center)
                and np.array_equal(self.axis, other.axis)
                and self.major == other.major and self.minor == other.minor)

    def __hash__(self):
        return hash((self.center.tobytes(), self.axis.tobytes(), self.major, self.minor))


@dataclass(frozen=True)
class CoreCircle:
    center: np.ndarray
    normal: np.ndarray
    radius: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > AXIS_TOL:
            raise ValueError("normal must be a unit vector")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "normal", n)

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        return orthonormal_frame(self.normal)

    def points(self, theta) -> np.ndarray:
        u, v = self.basis()
        theta = np.asarray(theta, dtype=float)[..., None]
        return self.center + self.radius * (np.cos(theta) * u + np.sin(theta) * v)

    def shifted(self, offset) -> "CoreCircle":
        return CoreCircle(self.center - offset, self.normal, self.radius)


def core_distance(t: SolidTorus, p) -> float:
    """Distance from ``p`` to the core circle of ``t``; ``p`` is in ``t`` iff this is <= minor."""
    w = np.asarray(p, dtype=float) - t.center
    z = float(w @ t.axis)
    rad = float(np.linalg.norm(w - z * t.axis))
    return math.hypot(rad - t.major, z)


def diameter(t: SolidTorus) -> float:
    return 2.0 * (t.major + t.minor)


def ramify2(t: SolidTorus, offset_frac: float = 0.5, minor_frac: float = 0.25
            ) -> tuple[SolidTorus, SolidTorus]:
    """Two coaxial sub-tori from disjoint subdisks of the meridian disk.

    The subdisks are centred ``+-offset_frac * r`` along the axis and have
    radius ``minor_frac * r``.
    """
    b, g = offset_frac, minor_frac
    if not (g > 0 and b > 0 and b + g < 1 and g < b):
        raise GeometryError(f"ramification needs 0 < gamma < beta, beta + gamma < 1 (beta={b}, gamma={g})")
    shift = b * t.minor * t.axis
    lower = SolidTorus(t.center - shift, t.axis, t.major, g * t.minor)
    upper = SolidTorus(t.center + shift, t.axis, t.major, g * t.minor)
    return lower, upper


def ramify_margins(t: SolidTorus, offset_frac: float, minor_frac: float) -> tuple[float, float]:
    """(disjointness margin, containment margin) of :func:`ramify2`, both analytic."""
    return 2 * t.minor * (offset_frac - minor_frac), t.minor * (1 - offset_frac - minor_frac)


# ---------------------------------------------------------------------------
# circle distance and linking


def circle_min_distance(c1: CoreCircle, c2: CoreCircle, rel_tol: float = 1e-3,
                        max_cells: int = 400_000) -> tuple[float, float]:
    """Minimum distance between two circles as ``(estimate, certified_lower_bound)``.

    The distance is 1-Lipschitz in each circle point, so on a parameter cell of
    half-widths ``(h1, h2)`` it cannot drop below the centre value minus
    ``r1 h1 + r2 h2``.  Cells are refined branch-and-bound style until the
    bound is within ``rel_tol`` of the best sampled value.
    """
    origin = c1.center
    a, b = c1.shifted(origin), c2.shifted(origin)
    u1, v1 = a.basis()
    u2, v2 = b.basis()
    args = (a.center, u1, v1, a.radius, b.center, u2, v2, b.radius)

    n0 = 32
    h = math.pi / n0
    centers = (np.arange(n0) + 0.5) * (2 * math.pi / n0)
    th, ph = np.meshgrid(centers, centers, indexing="ij")
    th, ph = th.ravel(), ph.ravel()
    best = math.inf
    lower = -math.inf
    dropped = math.inf
    for _ in range(40):
        f = kernels.circle_pair_distances(*args, th, ph)
        k = int(np.argmin(f))
        if f[k] < best:
            best, seed = float(f[k]), (th[k], ph[k])
        lb = f - (a.radius + b.radius) * h
        lower = min(float(lb.min()), dropped)
        if best - lower <= rel_tol * max(best, 1e-300) or lower > best:
            break
        keep = lb < best - 0.5 * rel_tol * best
        if 4 * keep.sum() > max_cells:
            break
        if not keep.all():
            dropped = min(dropped, float(lb[~keep].min()))
        th, ph = th[keep], ph[keep]
        h /= 2
        th = np.concatenate([th - h, th - h, th + h, th + h])
        ph = np.concatenate([ph - h, ph + h, ph - h, ph + h])

    # the polish evaluates one point at a time, so plain floats beat array calls
    c1x, u1x, v1x, c2x, u2x, v2x = (tuple(map(float, w)) for w in (a.center, u1, v1, b.center, u2, v2))
    r1, r2 = a.radius, b.radius

    def fun(x):
        ct, st, cp, sp = math.cos(x[0]), math.sin(x[0]), math.cos(x[1]), math.sin(x[1])
        return math.sqrt(sum((c1x[i] + r1 * (ct * u1x[i] + st * v1x[i])
                              - c2x[i] - r2 * (cp * u2x[i] + sp * v2x[i])) ** 2 for i in range(3)))

    res = minimize(fun, np.array(seed), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 400})
    estimate = min(best, float(res.fun))
    return estimate, min(max(lower, 0.0), estimate)


def _disk_crossing_number(c1: CoreCircle, c2: CoreCircle) -> int:
    """Signed crossings of ``c2`` through the flat disk bounded by ``c1``."""
    n1 = c1.normal
    u2, v2 = c2.basis()
    A = c2.radius * float(u2 @ n1)
    B = c2.radius * float(v2 @ n1)
    C = float((c2.center - c1.center) @ n1)
    amp = math.hypot(A, B)
    scale = max(c1.radius, c2.radius)
    if amp <= 1e-14 * scale:
        # parallel planes: no transversal crossing; coplanar disjoint circles are unlinked
        return 0
    if abs(abs(C) - amp) <= 1e-12 * scale:
        # near-tangent: harmless if the projection of c2 stays clear of the disk
        rel = c2.center - c1.center
        planar = float(np.linalg.norm(rel - (rel @ n1) * n1))
        if planar - c2.radius > c1.radius * (1 + 1e-9):
            return 0
        raise LinkingIndeterminate("circle is tangent to the spanning plane")
    if abs(C) > amp:
        return 0
    base = math.atan2(B, A)
    delta = math.acos(-C / amp)
    total = 0
    for phi in (base + delta, base - delta):
        p = c2.center + c2.radius * (math.cos(phi) * u2 + math.sin(phi) * v2)
        r = float(np.linalg.norm(p - c1.center))
        if abs(r - c1.radius) <= 1e-12 * scale:
            raise LinkingIndeterminate("crossing point on the spanning circle")
        if r < c1.radius:
            slope = -A * math.sin(phi) + B * math.cos(phi)
            total += 1 if slope > 0 else -1
    return total


@dataclass(frozen=True)
class LinkingResult:
    value: int
    gauss: float
    residual: float
    crossing: int


def linking_details(c1: CoreCircle, c2: CoreCircle, quadrature: int = 256) -> LinkingResult:
    """Both linking computations; raises :class:`LinkingIndeterminate` if they do not agree."""
    origin = c1.center
    a, b = c1.shifted(origin), c2.shifted(origin)
    u1, v1 = a.basis()
    u2, v2 = b.basis()
    g = kernels.gauss_linking_circles(a.center, u1, v1, a.radius, b.center, u2, v2, b.radius,
                                      quadrature)
    rounded = round(g)
    residual = abs(g - rounded)
    crossing = _disk_crossing_number(a, b)
    if residual >= 0.1:
        raise LinkingIndeterminate(f"Gauss residual {residual:.3g} >= 0.1; raise quadrature")
    if abs(rounded) != abs(crossing):
        raise LinkingIndeterminate(f"Gauss {g:.4f} vs crossing count {crossing}")
    return LinkingResult(abs(crossing), g, residual, crossing)


def linking_number(c1: CoreCircle, c2: CoreCircle, quadrature: int = 256) -> int:
    """Absolute linking number of two disjoint circles."""
    return linking_details(c1, c2, quadrature).value


# ---------------------------------------------------------------------------
# chains


@dataclass
class Chain:
    """Simple chain of ``q`` congruent links on the core circle of ``parent``.

    Link geometry is computed per index from the angle ``2 pi j / q``, so a
    chain of millions of links costs nothing until its links are asked for.
    ``overrides`` replaces individual links (used to probe the verifier).
    """

    parent: SolidTorus
    q: int
    link_major: float
    link_minor: float
    rho_frac: float = 0.75
    safety: float = 0.5
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        self._e1, self._e2 = orthonormal_frame(self.parent.axis)

    def _radial(self, j: int) -> np.ndarray:
        t = 2 * math.pi * j / self.q
        return math.cos(t) * self._e1 + math.sin(t) * self._e2

    def center(self, j: int) -> np.ndarray:
        if j in self.overrides:
            return self.overrides[j].center
        return self.parent.center + self.parent.major * self._radial(j)

    def axis(self, j: int) -> np.ndarray:
        if j in self.overrides:
            return self.overrides[j].axis
        return self.parent.axis if j % 2 == 0 else self._radial(j)

    def basis_u(self, j: int) -> np.ndarray:
        """In-plane direction of link ``j``: radial for even links, the parent axis for odd ones."""
        if j in self.overrides:
            return orthonormal_frame(self.overrides[j].axis)[0]
        return self._radial(j) if j % 2 == 0 else self.parent.axis

    def offset(self, i: int, j: int) -> np.ndarray:
        """``center(j) - center(i)`` without cancellation for nearby links."""
        if i in self.overrides or j in self.overrides:
            return self.center(j) - self.center(i)
        ti = 2 * math.pi * i / self.q
        half = math.pi * (j - i) / self.q
        mid = ti + half
        chord = 2 * self.parent.major * math.sin(half)
        return chord * (-math.sin(mid) * self._e1 + math.cos(mid) * self._e2)

    def link(self, j: int) -> SolidTorus:
        if j in self.overrides:
            return self.overrides[j]
        return SolidTorus(self.center(j), self.axis(j), self.link_major, self.link_minor)

    @property
    def links(self) -> list[SolidTorus]:
        return [self.link(j) for j in range(self.q)]

    @property
    def centers(self) -> np.ndarray:
        return np.array([self.center(j) for j in range(self.q)])

    def core(self, j: int) -> CoreCircle:
        t = self.link(j)
        return CoreCircle(t.center, t.axis, t.major)

    def core_pair(self, i: int, j: int) -> tuple[CoreCircle, CoreCircle]:
        """Core circles of links i and j in a frame attached to link i, scaled to unit link radius.

        The frame is the parent frame rotated to put link i at angle zero, so
        only the relative angle ``2 pi (j - i) / q`` enters.  Rounding then
        stays relative to the link size however large ``q`` is.
        """
        k = self.link_major
        if i in self.overrides or j in self.overrides:
            ti, tj = self.link(i), self.link(j)
            return (CoreCircle(np.zeros(3), ti.axis, ti.major / k),
                    CoreCircle((tj.center - ti.center) / k, tj.axis, tj.major / k))
        n = (j - i) % self.q
        if 2 * n > self.q:
            n -= self.q
        d = 2 * math.pi * (n / self.q)
        R = self.parent.major / k
        off = np.array([-2 * R * math.sin(d / 2) ** 2, R * math.sin(d), 0.0])
        ez = np.array([0.0, 0.0, 1.0])
        ai = ez if i % 2 == 0 else np.array([1.0, 0.0, 0.0])
        aj = ez if j % 2 == 0 else np.array([math.cos(d), math.sin(d), 0.0])
        return CoreCircle(np.zeros(3), ai, 1.0), CoreCircle(off, aj, 1.0)

    def frame(self, j: int) -> np.ndarray:
        """Rotation whose columns are (u, axis x u, axis) for link ``j``."""
        a = self.axis(j)
        u = self.basis_u(j)
        return np.column_stack([u, np.cross(a, u), a])

    def replace_link(self, j: int, torus: SolidTorus) -> "Chain":
        return Chain(self.parent, self.q, self.link_major, self.link_minor, self.rho_frac,
                     self.safety, {**self.overrides, j: torus})

    def __len__(self):
        return self.q


def rho_band(parent: SolidTorus, q: int) -> tuple[float, float]:
    """Open interval of link major radii giving linked neighbours and unlinked second neighbours."""
    d = 2 * parent.major * math.sin(math.pi / q)
    c = math.cos(math.pi / q)
    return d / (2 * c), d * c


def build_chain(parent: SolidTorus, q: int, rho_frac: float = 0.75, safety: float = 0.5) -> Chain:
    """Simple chain of ``q`` congruent standard tori in ``parent``.

    The link minor radius is ``safety`` times the smallest of three budgets:
    containment ``r - rho``, the second-neighbour gap ``(d2 - 2 rho)/2`` and
    half the certified clearance between adjacent core circles.
    """
    if q % 2 or q < 4:
        raise GeometryError(f"q must be even and >= 4, got {q}")
    R, r = parent.major, parent.minor
    d = 2 * R * math.sin(math.pi / q)
    lo, hi = rho_band(parent, q)
    rho = rho_frac * d
    if not lo < rho < hi:
        raise GeometryError(f"rho={rho:.6g} outside linking band ({lo:.6g}, {hi:.6g})")
    d2 = 2 * R * math.sin(2 * math.pi / q)
    contain_budget = r - rho
    gap_budget = (d2 - 2 * rho) / 2
    if contain_budget <= 0:
        raise GeometryError(f"containment budget r - rho = {contain_budget:.3g} <= 0")
    if gap_budget <= 0:
        raise GeometryError(f"second-neighbour gap budget {gap_budget:.3g} <= 0")
    probe = Chain(parent, q, rho, min(contain_budget, gap_budget) / 2, rho_frac, safety)
    _, adjacent = circle_min_distance(*probe.core_pair(0, 1))
    adjacent *= rho
    budget = min(contain_budget, gap_budget, adjacent / 2)
    if budget <= 0:
        raise GeometryError("adjacent links touch: minor budget <= 0")
    return Chain(parent, q, rho, safety * budget, rho_frac, safety)


@dataclass
class ChainVerdict:
    contained: bool
    contain_margin: float
    pairwise_disjoint: bool
    disjoint_margin: float
    linking_ok: bool
    linking_matrix: Optional[np.ndarray]
    polygon_ok: bool
    null_homotopic: bool
    exhaustive: bool
    max_residual: float = 0.0
    methods_agree: bool = True
    pairs_checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.contained and self.pairwise_disjoint and self.linking_ok
                and self.polygon_ok and self.null_homotopic)

    def summary(self) -> dict:
        return {"ok": self.ok, "contained": self.contained, "contain_margin": self.contain_margin,
                "pairwise_disjoint": self.pairwise_disjoint,
                "disjoint_margin": self.disjoint_margin, "linking_ok": self.linking_ok,
                "polygon_ok": self.polygon_ok, "null_homotopic": self.null_homotopic,
                "exhaustive": self.exhaustive, "max_residual": self.max_residual,
                "pairs_checked": self.pairs_checked}


EXHAUSTIVE_MAX_Q = 64


def _containment(parent: SolidTorus, chain: Chain, j: int, grid: int) -> tuple[float, float]:
    """(sampled bound, ball backstop) on the sup of parent core distance over link ``j``."""
    link = chain.link(j)
    u = orthonormal_frame(link.axis)[0]
    v = np.cross(link.axis, u)
    sup = kernels.max_core_distance_on_torus(parent.center, parent.axis, parent.major,
                                             link.center, u, v, link.axis,
                                             link.major, link.minor, grid)
    slack = (link.major + 2 * link.minor) * math.pi / grid
    ball = link.major + link.minor + core_distance(parent, link.center)
    return sup + slack, ball


def _pair_disjoint_bound(chain: Chain, i: int, j: int) -> float:
    """Certified lower bound on the core-circle distance minus the two minors."""
    ti, tj = chain.link(i), chain.link(j)
    dc = float(np.linalg.norm(chain.offset(i, j)))
    ball = dc - ti.major - tj.major
    need = ti.minor + tj.minor
    if ball > need:
        return ball - need
    _, lb = circle_min_distance(*chain.core_pair(i, j))
    return lb * chain.link_major - need


def _near_window(chain: Chain, reach: float) -> int:
    """Largest index offset whose centre chord can be within ``reach``."""
    R = chain.parent.major
    if reach >= 2 * R:
        return chain.q // 2
    w = int(chain.q / math.pi * math.asin(reach / (2 * R))) + 1
    return min(w, chain.q // 2)


def verify_chain(parent: SolidTorus, chain: Chain, quadrature: int = 256, grid: int = 64,
                 exhaustive: Optional[bool] = None) -> ChainVerdict:
    """Check the four simple-chain conditions and return a verdict with margins.

    With ``exhaustive`` (default for ``q <= 64`` and for modified chains)
    every pair gets both linking methods and a distance bound.  Otherwise
    the regular layout certifies that rotating by two steps maps the chain
    onto itself, and only pairs involving links 0 and 1 are tested; pairs
    whose bounding balls are disjoint are unlinked and disjoint without
    quadrature.
    """
    q = chain.q
    if exhaustive is None:
        exhaustive = q <= EXHAUSTIVE_MAX_Q or bool(chain.overrides)
    failures = []

    # polygon, congruence and orientation pattern
    e1, e2 = orthonormal_frame(parent.axis)
    probe = range(q) if exhaustive else sorted({0, 1, 2, 3, q - 2, q - 1})
    scale = max(parent.major, 1.0)
    poly_err = orient_err = 0.0
    for j in probe:
        t = 2 * math.pi * j / q
        radial = math.cos(t) * e1 + math.sin(t) * e2
        expect_a = parent.axis if j % 2 == 0 else radial
        poly_err = max(poly_err, float(np.abs(chain.center(j) - parent.center - parent.major * radial).max()) / scale)
        orient_err = max(orient_err, abs(abs(float(chain.axis(j) @ expect_a)) - 1))
    congruent = all(abs(t.major - chain.link_major) <= 1e-12 * scale
                    and abs(t.minor - chain.link_minor) <= 1e-12 * scale
                    for t in chain.overrides.values())
    polygon_ok = q >= 3 and q % 2 == 0 and poly_err < 1e-9 and orient_err < 1e-9 and congruent
    if not polygon_ok:
        failures.append(f"polygon/orientation/congruence error {max(poly_err, orient_err):.3g}")

    # containment
    rows = range(q) if exhaustive else range(2)
    sampled, balls = zip(*(_containment(parent, chain, j, grid) for j in rows))
    bound = min(max(sampled), max(balls))
    contain_margin = parent.minor - bound
    contained = contain_margin > 0
    if not contained:
        failures.append(f"containment margin {contain_margin:.3g}")
    null_homotopic = parent.minor - max(balls) > 0
    if not null_homotopic:
        failures.append("link not inside a round ball within the parent")

    # pairs
    far_margin = math.inf
    if exhaustive:
        pairs = [(i, j) for i in range(q) for j in range(i + 1, q)]
    else:
        reach = 2 * (chain.link_major + chain.link_minor)
        w = _near_window(chain, reach)
        pairs = sorted({(i, (i + o) % q) for i in (0, 1) for o in range(1, w + 1)}
                       | {(i, (i - o) % q) for i in (0, 1) for o in range(1, w + 1)})
        if w + 1 <= q // 2:
            far_margin = 2 * parent.major * math.sin(math.pi * (w + 1) / q) - reach
    disjoint_margin = far_margin
    computed = {}
    linking_ok = True
    methods_agree = True
    max_res = 0.0
    for i, j in pairs:
        disjoint_margin = min(disjoint_margin, _pair_disjoint_bound(chain, i, j))
        adjacent = (j - i) % q in (1, q - 1)
        try:
            res = linking_details(*chain.core_pair(i, j), quadrature)
            lk = res.value
            max_res = max(max_res, res.residual)
        except LinkingIndeterminate as exc:
            methods_agree = False
            failures.append(f"pair ({i},{j}): {exc}")
            lk = -1
        computed[(i, j)] = lk
        if lk != (1 if adjacent else 0):
            linking_ok = False
            failures.append(f"pair ({i},{j}): |lk|={lk}, expected {int(adjacent)}")
    linking = None
    if exhaustive:
        linking = np.zeros((q, q), dtype=np.int8)
        for (i, j), lk in computed.items():
            linking[i, j] = linking[j, i] = lk
    elif q <= 1024:
        # two-step rotation maps link i to i + 2: row i equals row (i mod 2) shifted
        rows2 = np.zeros((2, q), dtype=np.int8)
        for (i, j), lk in computed.items():
            rows2[i, j] = lk
        idx = np.arange(q)
        linking = rows2[idx[:, None] % 2, (idx[None, :] - idx[:, None] + idx[:, None] % 2) % q]
    pairwise_disjoint = disjoint_margin > 0
    if not pairwise_disjoint:
        failures.append(f"disjointness margin {disjoint_margin:.3g}")
    return ChainVerdict(contained, contain_margin, pairwise_disjoint, disjoint_margin,
                        linking_ok and methods_agree, linking, polygon_ok, null_homotopic,
                        exhaustive, max_res, methods_agree, len(pairs), failures)


def min_feasible_q(R: float, r: float, rho_frac: float = 0.75) -> int:
    """Smallest even q >= 4 with ``rho_frac * 2R sin(pi/q) < r`` (necessary for containment)."""
    q = 4
    while rho_frac * 2 * R * math.sin(math.pi / q) >= r:
        q += 2
    return q


def chain_min_links(R: float, r: float, rho_frac: float = 0.75, safety: float = 0.5,
                    quadrature: int = 256, q_floor: int = 4) -> int:
    """Smallest even ``q >= q_floor`` whose default chain passes :func:`verify_chain`."""
    if not R > r > 0:
        raise ValueError("need R > r > 0")
    parent = SolidTorus(np.zeros(3), np.array([0.0, 0.0, 1.0]), 1.0, r / R)
    q = max(min_feasible_q(1.0, r / R, rho_frac), q_floor + (q_floor % 2))
    while True:
        try:
            chain = build_chain(parent, q, rho_frac, safety)
        except GeometryError:
            q += 2
            continue
        if verify_chain(parent, chain, quadrature, exhaustive=False).ok:
            return q
        q += 2


def links_for_diameter(R: float, r: float, eps: float, rho_frac: float = 0.75,
                       safety: float = 0.5) -> tuple[int, Chain]:
    """Smallest even q (>= the feasibility minimum) whose verified chain has link diameter <= eps."""
    q = chain_min_links(R, r, rho_frac, safety)
    parent = SolidTorus(np.zeros(3), np.array([0.0, 0.0, 1.0]), R, r)
    while True:
        chain = build_chain(parent, q, rho_frac, safety)
        if 2 * (chain.link_major + chain.link_minor) <= eps and verify_chain(parent, chain).ok:
            return q, chain
        q += 2


def containment_margin(outer: SolidTorus, inner: SolidTorus, max_grid: int = 1 << 16) -> float:
    """Certified lower bound on ``outer.minor - sup{core_distance(outer, x) : x in inner}``.

    The sup is bounded by the largest core distance along the inner core
    circle plus the inner minor radius; core distance is 1-Lipschitz, so a
    grid of ``g`` points adds slack ``pi R_inner / g``.  The grid is refined
    until the bound is positive or ``max_grid`` is reached.
    """
    core = inner.core
    grid = 256
    while True:
        theta = 2 * np.pi * np.arange(grid) / grid
        pts = core.points(theta)
        w = pts - outer.center
        z = w @ outer.axis
        rad = np.linalg.norm(w - z[:, None] * outer.axis, axis=1)
        sup = float(np.sqrt((rad - outer.major) ** 2 + z**2).max())
        margin = outer.minor - (sup + inner.minor + math.pi * inner.major / grid)
        if margin > 0 or grid >= max_grid:
            return margin
        grid *= 4


def torus_inside(outer: SolidTorus, inner: SolidTorus) -> bool:
    return containment_margin(outer, inner) > 0


def tori_disjoint_margin(a: SolidTorus, b: SolidTorus) -> float:
    """Certified lower bound on the gap between two solid tori (negative if undecided/overlapping)."""
    dc = float(np.linalg.norm(a.center - b.center))
    ball = dc - a.major - b.major
    if ball > a.minor + b.minor:
        return ball - a.minor - b.minor
    _, lb = circle_min_distance(a.core, b.core)
    return lb - a.minor - b.minor
