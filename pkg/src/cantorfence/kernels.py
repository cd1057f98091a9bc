"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set ``CANTORFENCE_PURE=1`` to force the numpy fallback.
"""
import os

import numpy as np

from . import _kernels_py

_impl = _kernels_py
BACKEND = "python"
if os.environ.get("CANTORFENCE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass


def _vec(a):
    return np.require(a, dtype=np.float64, requirements=["C", "W"])


def gauss_linking_circles(c1, u1, v1, r1, c2, u2, v2, r2, m, impl=None):
    """Trapezoidal Gauss linking integral for two parametrised circles."""
    impl = impl or _impl
    return float(impl.gauss_linking_circles(
        _vec(c1), _vec(u1), _vec(v1), float(r1),
        _vec(c2), _vec(u2), _vec(v2), float(r2), int(m)))


def circle_pair_distances(c1, u1, v1, r1, c2, u2, v2, r2, theta, phi, impl=None):
    impl = impl or _impl
    return np.asarray(impl.circle_pair_distances(
        _vec(c1), _vec(u1), _vec(v1), float(r1),
        _vec(c2), _vec(u2), _vec(v2), float(r2), _vec(theta), _vec(phi)))


def max_core_distance_on_torus(pc, pa, pmajor, c, e1, e2, ax, major, minor, grid,
                               impl=None):
    """Largest core distance (to the parent torus) over a grid on a torus surface."""
    impl = impl or _impl
    return float(impl.max_core_distance_on_torus(
        _vec(pc), _vec(pa), float(pmajor), _vec(c), _vec(e1), _vec(e2), _vec(ax),
        float(major), float(minor), int(grid)))


def implementations():
    """All importable backends, keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
