import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctaug import (
    Mask,
    Units,
    ValidationError,
    ViewingWindow,
    Volume,
    hu_from_attenuation,
    resample_mask_nearest,
    resample_trilinear,
)

SPACING = (1.5, 1.5, 1.5)


def make_volume(voxels, units=Units.HU, spacing=SPACING):
    return Volume(voxels=np.asarray(voxels, dtype=np.float32), spacing=spacing, units=units)


class TestTypes:
    def test_volume_widens_int16(self):
        v = Volume(voxels=np.zeros((2, 2, 2), dtype=np.int16), spacing=SPACING)
        assert v.voxels.dtype == np.float32

    def test_volume_is_immutable(self):
        v = make_volume(np.zeros((2, 2, 2)))
        with pytest.raises(ValueError):
            v.voxels[0, 0, 0] = 1.0

    def test_norm01_bounds_enforced(self):
        with pytest.raises(ValidationError):
            make_volume(np.full((2, 2, 2), 1.5), units=Units.NORM01)
        make_volume(np.full((2, 2, 2), 1.0), units=Units.NORM01)

    def test_spacing_must_be_positive(self):
        with pytest.raises(ValidationError):
            make_volume(np.zeros((2, 2, 2)), spacing=(1.0, 0.0, 1.0))

    def test_window_bounds(self):
        w = ViewingWindow(width=169, level=65)
        assert w.lower == 65 - 84.5
        assert w.upper == 65 + 84.5
        with pytest.raises(ValidationError):
            ViewingWindow(width=0, level=0)

    def test_mask_label_set_enforced(self):
        labels = np.zeros((2, 2, 2), dtype=np.uint8)
        labels[0, 0, 0] = 7
        with pytest.raises(ValidationError):
            Mask(labels=labels, spacing=SPACING)


class TestHuCalibration:
    def test_water_maps_to_zero(self):
        assert hu_from_attenuation(0.19, 0.19, 0.0002) == 0.0
        assert hu_from_attenuation(0.19, 0.19, 0.0002, convention="verbatim") == 0.0

    def test_air_verbatim_and_conventional(self):
        mu_water, mu_air = 0.19, 0.0002
        assert hu_from_attenuation(mu_air, mu_water, mu_air, convention="verbatim") == 1000.0
        assert hu_from_attenuation(mu_air, mu_water, mu_air) == -1000.0

    def test_midpoint(self):
        mu_water, mu_air = 0.2, 0.0
        mid = (mu_water + mu_air) / 2
        assert hu_from_attenuation(mid, mu_water, mu_air, convention="verbatim") == 500.0
        assert hu_from_attenuation(mid, mu_water, mu_air) == -500.0

    def test_degenerate_calibration_rejected(self):
        with pytest.raises(ValidationError):
            hu_from_attenuation(0.1, 0.2, 0.2)

    @given(a=st.floats(-5, 5), b=st.floats(-5, 5), mu_water=st.floats(0.1, 1.0))
    def test_affine_in_mu(self, a, b, mu_water):
        # f affine <=> f(a) + f(b) - f(0) == f(a + b)
        mu_air = mu_water / 2
        f = lambda m: hu_from_attenuation(m, mu_water, mu_air)
        assert f(a) + f(b) - f(0.0) == pytest.approx(f(a + b), rel=1e-9, abs=1e-6)


class TestResample:
    def test_identity_spacing_is_exact(self, hu_volume_factory):
        v = hu_volume_factory(seed=1)
        out = resample_trilinear(v, v.spacing)
        assert np.array_equal(out.voxels, v.voxels)

    def test_constant_volume_stays_constant(self):
        v = make_volume(np.full((4, 5, 6), 123.0))
        out = resample_trilinear(v, (1.0, 0.7, 2.1))
        assert np.all(out.voxels == np.float32(123.0))

    def test_upsampled_ramp_matches_closed_form(self):
        # ramp along x; 2x upsampling must interpolate with halved step
        n = 8
        ramp = np.tile(np.arange(n, dtype=np.float32), (3, 4, 1))
        v = make_volume(ramp, spacing=(1.0, 1.0, 2.0))
        out = resample_trilinear(v, (1.0, 1.0, 1.0))
        assert out.shape == (3, 4, 2 * n)
        expected = np.minimum(np.arange(2 * n) * 0.5, n - 1.0)
        assert np.allclose(out.voxels[0, 0], expected, atol=0)

    def test_output_shape_and_spacing(self, hu_volume_factory):
        v = hu_volume_factory(seed=2, shape=(10, 12, 14))
        out = resample_trilinear(v, (3.0, 3.0, 3.0))
        assert out.spacing == (3.0, 3.0, 3.0)
        assert out.shape == (5, 6, 7)

    def test_values_stay_within_input_range(self, hu_volume_factory):
        v = hu_volume_factory(seed=3, shape=(9, 9, 9))
        out = resample_trilinear(v, (0.9, 1.1, 2.3))
        assert out.voxels.min() >= v.voxels.min()
        assert out.voxels.max() <= v.voxels.max()

    def test_min_one_voxel_per_axis(self):
        v = make_volume(np.zeros((2, 2, 2)))
        out = resample_trilinear(v, (100.0, 100.0, 100.0))
        assert out.shape == (1, 1, 1)

    def test_mask_resample_round_trip_identity(self, phantom_pair):
        _, mask = phantom_pair
        out = resample_mask_nearest(mask, mask.spacing)
        assert np.array_equal(out.labels, mask.labels)

    def test_mask_resample_preserves_label_set(self, phantom_pair):
        _, mask = phantom_pair
        out = resample_mask_nearest(mask, (2.25, 2.25, 2.25))
        assert set(np.unique(out.labels)) <= set(np.unique(mask.labels))

    def test_volume_and_mask_resample_stay_aligned(self, phantom_pair):
        volume, mask = phantom_pair
        target = (2.0, 2.5, 1.75)
        v = resample_trilinear(volume, target)
        m = resample_mask_nearest(mask, target)
        assert v.shape == m.shape
        assert v.spacing == m.spacing
