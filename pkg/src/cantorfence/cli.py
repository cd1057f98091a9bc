"""Command-line front end: build, eval, slice, certify, export-obj, reembed, verify.

Exit codes: 0 on success, 1 when a geometric verdict or certificate fails,
2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .cantor_plane import DigitStream
from .defining_sequence import (
    AddressError,
    BudgetExceeded,
    DefiningTree,
    TreeParams,
    format_address,
)
from .incomparability import Inconclusive, certify_incomparable, revalidate
from .limit_embedding import FencePoint, evaluate, necklace_slice
from .reembedding import IterationAborted, PointSample, ReembeddingError, cantor_iteration
from .torus_geom import GeometryError, SolidTorus, build_chain, orthonormal_frame, ramify_margins, verify_chain

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# ---------------------------------------------------------------------------
# configuration and scene documents


@dataclass
class RunConfig:
    tree: TreeParams = field(default_factory=TreeParams)
    depth: int = 2
    budget: int = 10**5
    seed: int = 0
    output: Optional[str] = None
    obj_resolution: tuple = (48, 24)

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        u, v = self.obj_resolution
        if u < 3 or v < 3:
            raise ValueError("OBJ resolution must be at least 3x3")

    def to_json(self) -> dict:
        return {"tree": self.tree.to_json(), "depth": self.depth, "budget": self.budget,
                "seed": self.seed, "output": self.output,
                "obj_resolution": list(self.obj_resolution)}

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        data = dict(data)
        tree = TreeParams.from_json(data.pop("tree", {}))
        if "obj_resolution" in data:
            data["obj_resolution"] = tuple(data["obj_resolution"])
        return cls(tree=tree, **data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def digest(self) -> str:
        """Hash of the settings that determine the geometry (output paths excluded)."""
        key = {k: v for k, v in self.to_json().items() if k != "output"}
        return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class SceneDocument:
    tori: list = field(default_factory=list)  # dicts: address, level, torus, verdict
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"metadata": self.metadata, "tori": self.tori}, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SceneDocument":
        data = json.loads(text)
        for rec in data["tori"]:
            SolidTorus.from_json(rec["torus"])  # re-validates
        return cls(data["tori"], data["metadata"])

    def solid_tori(self, levels: Optional[Sequence[int]] = None) -> list[tuple[list, SolidTorus]]:
        return [(rec["address"], SolidTorus.from_json(rec["torus"])) for rec in self.tori
                if levels is None or rec["level"] in levels]

    @property
    def ok(self) -> bool:
        return all(rec["verdict"] is None or rec["verdict"]["ok"] for rec in self.tori)


def cmd_build(config: RunConfig, tree: Optional[DefiningTree] = None) -> SceneDocument:
    """Expand every level up to ``config.depth`` (breadth first) and record verdicts."""
    tree = tree or DefiningTree(config.tree)
    p = config.tree
    doc = SceneDocument(metadata={"config_hash": config.digest(), "version": __version__,
                                  "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
                                  "depth": config.depth})
    for step in range(config.depth + 1):
        for node in tree.iter_level(step, budget=config.budget):
            if step == 0:
                verdict = None
            elif step % 2 == 1:
                parent = tree.node_at(node.address[:-1])
                gap, contain = ramify_margins(parent.torus, p.beta, p.gamma)
                verdict = {"ok": bool(gap > 0 and contain > 0), "kind": "ramification",
                           "disjoint_margin": gap, "contain_margin": contain}
            else:
                _, v = tree.chain_for(node.branch)
                verdict = {"kind": "chain", **v.summary()}
            doc.tori.append({"address": list(node.address), "level": step,
                             "label": format_address(node.address),
                             "torus": node.torus.to_json(), "verdict": verdict})
    doc.metadata["schedule"] = tree.schedule.to_json()
    return doc


def scene_without_timestamp(text: str) -> str:
    data = json.loads(text)
    data["metadata"].pop("timestamp", None)
    return json.dumps(data, sort_keys=True)


# ---------------------------------------------------------------------------
# OBJ export


def torus_mesh(t: SolidTorus, nu: int = 48, nv: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Vertices (nu*nv, 3) and outward-oriented triangles (2*nu*nv, 3) of the torus surface."""
    e1, e2 = orthonormal_frame(t.axis)
    u = 2 * np.pi * np.arange(nu) / nu
    v = 2 * np.pi * np.arange(nv) / nv
    U, V = np.meshgrid(u, v, indexing="ij")
    radial = np.cos(U)[..., None] * e1 + np.sin(U)[..., None] * e2
    ring = t.major + t.minor * np.cos(V)
    verts = t.center + ring[..., None] * radial + (t.minor * np.sin(V))[..., None] * t.axis
    idx = np.arange(nu * nv).reshape(nu, nv)
    a = idx
    b = np.roll(idx, -1, axis=0)
    c = np.roll(np.roll(idx, -1, axis=0), -1, axis=1)
    d = np.roll(idx, -1, axis=1)
    # (a, b, c) and (a, c, d) wind counterclockwise seen from outside:
    # d(verts)/du x d(verts)/dv points away from the core circle
    tris = np.concatenate([np.stack([a, b, c], -1).reshape(-1, 3),
                           np.stack([a, c, d], -1).reshape(-1, 3)])
    return verts.reshape(-1, 3), tris


def write_obj(tori: Sequence[tuple], path, nu: int = 48, nv: int = 24) -> int:
    """One group per torus, named by address; returns the number of groups written."""
    offset = 1
    with open(path, "w") as fh:
        fh.write(f"# cantorfence {__version__}\n")
        for address, t in tori:
            verts, tris = torus_mesh(t, nu, nv)
            fh.write(f"g T{format_address(address).replace(' ', '')}\n")
            for x, y, z in verts:
                fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
            for i, j, k in tris + offset:
                fh.write(f"f {i} {j} {k}\n")
            offset += len(verts)
    return len(tori)


def read_obj(path) -> tuple[dict, np.ndarray]:
    """Groups (name -> triangle array, 0-based) and the vertex array of an OBJ file."""
    verts, groups, current = [], {}, None
    with open(path) as fh:
        for line in fh:
            if line.startswith("v "):
                verts.append([float(x) for x in line.split()[1:4]])
            elif line.startswith("g "):
                current = line[2:].strip()
                groups[current] = []
            elif line.startswith("f "):
                groups[current].append([int(x) - 1 for x in line.split()[1:4]])
    return {k: np.array(v, dtype=int).reshape(-1, 3) for k, v in groups.items()}, np.array(verts)


# ---------------------------------------------------------------------------
# argument handling


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "depth", None) is not None:
        cfg.depth = args.depth
    if getattr(args, "budget", None) is not None:
        cfg.budget = args.budget
    return cfg


def _parse_resolution(text: str) -> tuple[int, int]:
    try:
        u, v = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"resolution must look like 48x24, got {text!r}")
    if u < 3 or v < 3:
        raise argparse.ArgumentTypeError("resolution must be at least 3x3")
    return u, v


def _stream(prefix: str, base: int):
    def parse(text: str) -> DigitStream:
        if text.startswith(prefix + "="):
            text = text[len(prefix) + 1:]
        try:
            return DigitStream.parse(text, base=base)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc))
    return parse


def _run_build(args) -> int:
    cfg = _config_from_args(args)
    doc = cmd_build(cfg)
    out = args.output or cfg.output
    text = doc.to_json()
    if out:
        Path(out).write_text(text)
    counts = {}
    for rec in doc.tori:
        counts[rec["level"]] = counts.get(rec["level"], 0) + 1
    for level, n in sorted(counts.items()):
        print(f"level {level}: {n} tori")
    print(f"schedule: {doc.metadata['schedule']}")
    print("all verdicts pass" if doc.ok else "VERDICT FAILURE")
    return EXIT_OK if doc.ok else EXIT_FAIL


def _run_eval(args) -> int:
    tree = DefiningTree(_config_from_args(args).tree)
    try:
        p = FencePoint(args.x, args.s)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    center, node = evaluate(tree, p, args.eps)
    print(" ".join(f"{c:.12g}" for c in center))
    print(f"address {format_address(node.address)} level {node.step} diameter {node.diameter:.3g}")
    return EXIT_OK


def _run_slice(args) -> int:
    tree = DefiningTree(_config_from_args(args).tree)
    sl = necklace_slice(tree, args.s, args.levels, budget=args.budget or 10**5)
    for i, stage in enumerate(sl.stages):
        print(f"stage {i}: {len(stage)} tori")
    if sl.truncated:
        print("truncated by budget")
    print("verified" if sl.verified else f"FAILED: {sl.failures}")
    return EXIT_OK if sl.verified else EXIT_FAIL


def _run_certify(args) -> int:
    if args.s == args.t:
        print("error: s and t are the same stream", file=sys.stderr)
        return EXIT_USAGE
    tree = DefiningTree(_config_from_args(args).tree)
    cert = certify_incomparable(tree, args.s, args.t, args.depth)
    if isinstance(cert, Inconclusive):
        print(f"inconclusive: depth {cert.required_depth} required ({cert.reason})")
        return EXIT_FAIL
    print(cert.to_json() if args.json else cert.table())
    ok = cert.complete and revalidate(tree, args.s, args.t, cert)
    return EXIT_OK if ok else EXIT_FAIL


def _run_export(args) -> int:
    doc = SceneDocument.from_json(Path(args.scene).read_text())
    tori = doc.solid_tori(args.levels)
    if not tori:
        print("warning: no tori selected; writing an empty file", file=sys.stderr)
    nu, nv = args.resolution
    n = write_obj(tori, args.output, nu, nv)
    print(f"wrote {n} groups to {args.output}")
    return EXIT_OK


def _run_reembed(args) -> int:
    sample = PointSample.from_csv(args.sample, delta=args.delta)
    if args.n is not None and sample.n != args.n:
        print(f"error: sample has dimension {sample.n}, expected {args.n}", file=sys.stderr)
        return EXIT_USAGE
    try:
        tree, out = cantor_iteration(sample, args.k, args.shrink)
    except IterationAborted as exc:
        print(f"aborted in round {exc.round_index}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    out.to_csv(outdir / "sample.csv")
    (outdir / "record.json").write_text(tree.record.to_json())
    (outdir / "cubes.json").write_text(json.dumps(tree.to_json(), indent=1))
    problems = tree.violations(out.points)
    replay = float(np.abs(tree.record.apply(sample.points) - out.points).max())
    print(f"boundary points: {len(tree.words(args.k))}; stages: {len(tree.record)}; replay error {replay:.3g}")
    for msg in problems:
        print(f"violation: {msg}")
    print("audit passed" if not problems else "AUDIT FAILED")
    return EXIT_OK if not problems and replay <= 1e-9 else EXIT_FAIL


def _run_verify(args) -> int:
    parent = SolidTorus(np.zeros(3), np.array([0.0, 0.0, 1.0]), args.R, args.r)
    chain = build_chain(parent, args.q, args.rho_frac, args.safety)
    v = verify_chain(parent, chain, args.quadrature)
    for key, val in v.summary().items():
        print(f"{key}: {val}")
    for msg in v.failures:
        print(f"failure: {msg}")
    return EXIT_OK if v.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cantorfence", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)

    def with_config(p):
        p.add_argument("--config", help="JSON run configuration")
        return p

    p = with_config(sub.add_parser("build", help="expand levels and write a scene JSON"))
    p.add_argument("--depth", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_run_build)

    p = with_config(sub.add_parser("eval", help="evaluate the embedding at a point"))
    p.add_argument("--x", type=_stream("x", 3), required=True, help="ternary stream over {0,2}, e.g. 02(2)")
    p.add_argument("--s", type=_stream("s", 2), required=True, help="binary stream, e.g. 10(0)")
    p.add_argument("--eps", type=float, default=1e-3)
    p.set_defaults(func=_run_eval)

    p = with_config(sub.add_parser("slice", help="stages of the necklace over s"))
    p.add_argument("--s", type=_stream("s", 2), required=True)
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--budget", type=int)
    p.set_defaults(func=_run_slice)

    p = with_config(sub.add_parser("certify", help="incomparability certificate for two slices"))
    p.add_argument("--s", type=_stream("s", 2), required=True)
    p.add_argument("--t", type=_stream("t", 2), required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_run_certify)

    p = sub.add_parser("export-obj", help="triangulate the tori of a scene")
    p.add_argument("scene")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--levels", type=int, nargs="*")
    p.add_argument("--resolution", type=_parse_resolution, default=(48, 24))
    p.set_defaults(func=_run_export)

    p = sub.add_parser("reembed", help="feeler iteration on a CSV point sample")
    p.add_argument("sample")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--shrink", type=float, default=0.25)
    p.add_argument("--delta", type=float)
    p.add_argument("--outdir", default="reembed_out")
    p.set_defaults(func=_run_reembed)

    p = sub.add_parser("verify", help="build and verify one simple chain")
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--r", type=float, default=0.45)
    p.add_argument("--q", type=int, default=16)
    p.add_argument("--rho-frac", type=float, default=0.75)
    p.add_argument("--safety", type=float, default=0.5)
    p.add_argument("--quadrature", type=int, default=256)
    p.set_defaults(func=_run_verify)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BudgetExceeded, ReembeddingError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, AddressError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
