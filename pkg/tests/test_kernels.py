"""Compiled and pure-Python kernels must agree bit-for-bit."""

import numpy as np
import pytest

from splatseg._kernels import get_impl
from splatseg.refine import disk_offsets

try:
    get_impl("compiled")
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

pytestmark = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels unavailable")


@pytest.fixture(scope="module")
def impls():
    return get_impl("purepy"), get_impl("compiled")


def test_rasterize_matches(impls):
    pp, cc = impls
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = int(rng.integers(0, 500))
        h, w = int(rng.integers(1, 80)), int(rng.integers(1, 80))
        xs = rng.uniform(-6, w + 6, n)
        ys = rng.uniform(-6, h + 6, n)
        labels = rng.integers(0, 5, n).astype(np.int32)
        tau = float(rng.choice([1.0, 2.5, 4.0, 9.0]))
        for require in (True, False):
            a = pp.rasterize_first_hit(xs, ys, labels, h, w, tau, require)
            b = cc.rasterize_first_hit(xs, ys, labels, h, w, tau, require, 2)
            assert np.array_equal(a, b)


def test_rasterize_thread_invariance(impls):
    _, cc = impls
    rng = np.random.default_rng(1)
    xs = rng.uniform(0, 64, 2000)
    ys = rng.uniform(0, 64, 2000)
    labels = rng.integers(0, 4, 2000).astype(np.int32)
    base = cc.rasterize_first_hit(xs, ys, labels, 64, 64, 4.0, True, 1)
    for threads in (2, 4, 8):
        again = cc.rasterize_first_hit(xs, ys, labels, 64, 64, 4.0, True, threads)
        assert np.array_equal(base, again)


def test_region_grow_matches(impls):
    pp, cc = impls
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = int(rng.integers(2, 400))
        pts = rng.uniform(-2, 2, (n, 3))
        eps = float(rng.uniform(0.05, 0.6))
        seed = int(rng.integers(0, n))
        assert np.array_equal(pp.region_grow(pts, seed, eps),
                              cc.region_grow(pts, seed, eps))


def test_morphology_matches(impls):
    pp, cc = impls
    rng = np.random.default_rng(3)
    for _ in range(20):
        h, w = int(rng.integers(1, 60)), int(rng.integers(1, 60))
        mask = (rng.random((h, w)) < rng.uniform(0.2, 0.8)).astype(np.uint8)
        dy, dx = disk_offsets(int(rng.integers(1, 4)))
        assert np.array_equal(pp.binary_dilate(mask, dy, dx),
                              cc.binary_dilate(mask, dy, dx))
        assert np.array_equal(pp.binary_erode(mask, dy, dx),
                              cc.binary_erode(mask, dy, dx))
        assert np.array_equal(pp.background_reachable(mask),
                              cc.background_reachable(mask))
        for conn in (4, 8):
            la, ca = pp.label_components(mask, conn)
            lb, cb = cc.label_components(mask, conn)
            assert ca == cb
            assert np.array_equal(la, lb)


def test_component_ids_are_first_pixel_ordered(impls):
    pp, cc = impls
    mask = np.zeros((6, 9), dtype=np.uint8)
    mask[0, 7] = 1      # component 1: first pixel row-major
    mask[2, 0:2] = 1    # component 2
    mask[4, 4] = 1      # component 3
    for impl in impls:
        labels, count = impl.label_components(mask, 8)
        assert count == 3
        assert labels[0, 7] == 1
        assert labels[2, 0] == 2
        assert labels[4, 4] == 3
