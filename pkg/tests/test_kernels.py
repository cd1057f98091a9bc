import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cantorfence import kernels
from cantorfence.torus_geom import CoreCircle, orthonormal_frame

IMPLS = kernels.implementations()


def random_circle(rng, scale=1.0):
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    return CoreCircle(rng.normal(size=3) * scale, n, float(rng.uniform(0.3, 2.0)))


def test_fallback_always_available():
    assert "python" in IMPLS
    assert kernels.BACKEND in IMPLS


def test_pure_mode_env_var_forces_fallback():
    env = dict(os.environ, CANTORFENCE_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import cantorfence.kernels as k; print(k.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.skipif("cython" not in IMPLS, reason="compiled extension not built")
class TestBackendsAgree:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_gauss(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_circle(rng), random_circle(rng, 3.0)
        u1, v1 = a.basis()
        u2, v2 = b.basis()
        args = (a.center, u1, v1, a.radius, b.center, u2, v2, b.radius, 64)
        ref = kernels.gauss_linking_circles(*args, impl=IMPLS["python"])
        got = kernels.gauss_linking_circles(*args, impl=IMPLS["cython"])
        assert got == pytest.approx(ref, rel=1e-10, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_distances(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_circle(rng), random_circle(rng)
        u1, v1 = a.basis()
        u2, v2 = b.basis()
        th, ph = rng.uniform(0, 2 * np.pi, (2, 50))
        args = (a.center, u1, v1, a.radius, b.center, u2, v2, b.radius, th, ph)
        ref = kernels.circle_pair_distances(*args, impl=IMPLS["python"])
        got = kernels.circle_pair_distances(*args, impl=IMPLS["cython"])
        assert np.allclose(got, ref, rtol=1e-12, atol=1e-14)
        direct = np.linalg.norm(a.points(th) - b.points(ph), axis=1)
        assert np.allclose(ref, direct, rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_containment_sampling(self, seed):
        rng = np.random.default_rng(seed)
        pa = rng.normal(size=3)
        pa /= np.linalg.norm(pa)
        ax = rng.normal(size=3)
        ax /= np.linalg.norm(ax)
        e1, e2 = orthonormal_frame(ax)
        args = (rng.normal(size=3), pa, 1.0, rng.normal(size=3), e1, e2, ax, 0.3, 0.1, 16)
        ref = kernels.max_core_distance_on_torus(*args, impl=IMPLS["python"])
        got = kernels.max_core_distance_on_torus(*args, impl=IMPLS["cython"])
        assert got == pytest.approx(ref, rel=1e-12)


def test_read_only_inputs_accepted():
    a = np.array([0.0, 0.0, 0.0])
    a.flags.writeable = False
    e = np.array([1.0, 0.0, 0.0])
    f = np.array([0.0, 1.0, 0.0])
    val = kernels.gauss_linking_circles(a, e, f, 1.0, np.array([1.0, 0, 0]), e,
                                        np.array([0.0, 0, 1.0]), 1.0, 128)
    assert abs(abs(val) - 1) < 1e-6
