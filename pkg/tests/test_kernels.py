"""Backend correctness and bit-parity between the compiled core and the
numpy fallback."""

import numpy as np
import pytest

from ctaug.kernels import _numpy

try:
    from ctaug.kernels import _core
except ImportError:
    _core = None

BACKENDS = [_numpy] + ([_core] if _core else [])
IDS = ["numpy"] + (["compiled"] if _core else [])


@pytest.fixture(params=BACKENDS, ids=IDS)
def backend(request):
    return request.param


def random_f32(seed, shape=(7, 9, 11), lo=-1200, hi=900):
    return np.random.default_rng(seed).uniform(lo, hi, size=shape).astype(np.float32)


class TestClipAffine:
    def test_against_per_voxel_oracle(self, backend):
        x = random_f32(0)
        lo, up, sub, den = -19.5, 149.5, -19.5, 169.0
        out = backend.clip_affine(x, lo, up, sub, den)
        lo32, up32, sub32, den32 = (np.float32(v) for v in (lo, up, sub, den))
        for idx in np.ndindex(*x.shape):
            c = min(max(x[idx], lo32), up32)
            assert out[idx] == (c - sub32) / den32

    def test_read_only_input_accepted(self, backend):
        x = random_f32(1)
        x.setflags(write=False)
        backend.clip_affine(x, 0.0, 1.0, 0.0, 1.0)


class TestResample:
    def test_trilinear_midpoint_average(self, backend):
        src = np.zeros((1, 1, 2), dtype=np.float32)
        src[0, 0, 1] = 10.0
        out = backend.resample_trilinear(src, (1, 1, 3), (1.0, 1.0, 0.5))
        assert list(out[0, 0]) == [0.0, 5.0, 10.0]

    def test_nearest_rounds_half_up(self, backend):
        src = np.arange(4, dtype=np.float32).reshape(1, 1, 4)
        out = backend.resample_nearest(src, (1, 1, 8), (1.0, 1.0, 0.5))
        assert list(out[0, 0]) == [0, 1, 1, 2, 2, 3, 3, 3]


class TestLabelComponents:
    def test_two_blobs(self, backend):
        m = np.zeros((3, 3, 3), dtype=np.uint8)
        m[0, 0, 0] = 1
        m[2, 2, 2] = 1
        labels, n = backend.label_components(m, 26)
        assert n == 2
        assert labels[0, 0, 0] == 1  # scan-order numbering
        assert labels[2, 2, 2] == 2

    def test_diagonal_connectivity(self, backend):
        m = np.zeros((2, 2, 2), dtype=np.uint8)
        m[0, 0, 0] = 1
        m[1, 1, 1] = 1
        assert backend.label_components(m, 26)[1] == 1
        assert backend.label_components(m, 18)[1] == 2
        assert backend.label_components(m, 6)[1] == 2
        m2 = np.zeros((1, 2, 2), dtype=np.uint8)
        m2[0, 0, 0] = 1
        m2[0, 1, 1] = 1
        assert backend.label_components(m2, 26)[1] == 1  # 8-connectivity in-plane
        assert backend.label_components(m2, 6)[1] == 2


class TestHistogram:
    def test_exact_bins(self, backend):
        x = np.array([0.0, 0.999, 1.0, 2.0, 3.999, 4.0, -0.5, 4.5], dtype=np.float32)
        counts, under, over = backend.histogram_fixed(x, 0.0, 4.0, 4)
        assert list(counts) == [2, 1, 1, 2]
        assert under == 1 and over == 1

    def test_total_preserved(self, backend):
        x = random_f32(2)
        counts, under, over = backend.histogram_fixed(x.ravel(), -100, 500, 13)
        assert counts.sum() + under + over == x.size


@pytest.mark.skipif(_core is None, reason="compiled kernels unavailable")
class TestBackendParity:
    def test_clip_affine(self):
        x = random_f32(10)
        a = _core.clip_affine(x, -19.5, 149.5, -19.5, 169.0)
        b = _numpy.clip_affine(x, -19.5, 149.5, -19.5, 169.0)
        assert np.array_equal(a, b)

    def test_trilinear(self):
        x = random_f32(11, shape=(8, 10, 12))
        args = ((13, 7, 20), (8 / 13 * 1.01, 10 / 7 * 0.93, 12 / 20 * 1.07))
        assert np.array_equal(
            _core.resample_trilinear(x, *args), _numpy.resample_trilinear(x, *args)
        )

    def test_nearest(self):
        m = (np.random.default_rng(12).random((9, 9, 9)) < 0.5).astype(np.uint8)
        args = ((5, 13, 7), (1.7, 0.6, 1.2))
        assert np.array_equal(_core.resample_nearest(m, *args), _numpy.resample_nearest(m, *args))

    @pytest.mark.parametrize("connectivity", [6, 18, 26])
    @pytest.mark.parametrize("density", [0.2, 0.5, 0.8])
    def test_labels(self, connectivity, density):
        m = (np.random.default_rng(13).random((12, 12, 12)) < density).astype(np.uint8)
        l1, n1 = _core.label_components(m, connectivity)
        l2, n2 = _numpy.label_components(m, connectivity)
        assert n1 == n2
        assert np.array_equal(l1, l2)

    def test_histogram(self):
        x = random_f32(14)
        a = _core.histogram_fixed(x.ravel(), -1000.0, 800.0, 37)
        b = _numpy.histogram_fixed(x.ravel(), -1000.0, 800.0, 37)
        assert np.array_equal(a[0], b[0]) and a[1:] == b[1:]
