import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctaug import (
    IntensityTransform,
    Pipeline,
    SplitMix64,
    Units,
    UnitsError,
    ValidationError,
    Volume,
    brightness_add,
    brightness_mult,
    contrast,
    equal_strength_intensity_ranges,
    gamma,
    histogram,
    preset_nnunet,
    preset_unetr,
    run_pipeline,
)
from ctaug.baseline import BRIGHTNESS_ADD, BRIGHTNESS_MULT, CONTRAST, GAMMA, GAMMA_INVERSE


def norm_volume(values, units=Units.NORM01):
    return Volume(
        voxels=np.asarray(values, dtype=np.float32).reshape(1, 1, -1),
        spacing=(1, 1, 1),
        units=units,
    )


class TestContrast:
    def test_alpha_one_is_identity(self):
        v = norm_volume([0.0, 0.25, 1.0])
        assert np.array_equal(contrast(v, 1.0).voxels, v.voxels)

    def test_constant_volume_unchanged_at_image_mean(self):
        v = norm_volume([0.4] * 6)
        assert np.array_equal(contrast(v, 3.0).voxels, v.voxels)

    def test_two_voxel_expansion(self):
        v = norm_volume([0.0, 1.0])
        clipped = contrast(v, 2.0, anchor="window_center", preserve_range=True)
        assert list(clipped.voxels.ravel()) == [0.0, 1.0]
        free = contrast(v, 2.0, anchor="window_center", preserve_range=False)
        assert list(free.voxels.ravel()) == [-0.5, 1.5]

    def test_hu_input_rejected(self, hu_volume_factory):
        with pytest.raises(UnitsError):
            contrast(hu_volume_factory(), 1.2)

    def test_units_degrade_without_preserve(self):
        v = norm_volume([0.0, 1.0])
        assert contrast(v, 2.0).units == Units.ZSCORE
        assert contrast(v, 2.0, preserve_range=True).units == Units.NORM01


class TestBrightness:
    def test_identity_parameters(self):
        v = norm_volume([0.1, 0.9])
        assert np.array_equal(brightness_mult(v, 1.0).voxels, v.voxels)
        assert np.array_equal(brightness_add(v, 0.0).voxels, v.voxels)

    def test_offset_moves_minimum(self):
        v = norm_volume([0.0, 0.5, 1.0])
        out = brightness_add(v, 0.1)
        assert out.voxels.min() == np.float32(0.1)
        assert out.units == Units.ZSCORE  # left [0, 1], tag degrades

    def test_scaling_values(self):
        v = norm_volume([0.0, 0.5, 1.0])
        out = brightness_mult(v, 0.9)
        assert np.allclose(out.voxels.ravel(), [0.0, 0.45, 0.9], atol=1e-7)

    def test_clip01_keeps_tag(self):
        v = norm_volume([0.0, 1.0])
        out = brightness_add(v, 0.2, clip01=True)
        assert out.units == Units.NORM01
        assert out.voxels.max() == 1.0


class TestGamma:
    def test_identity(self):
        v = norm_volume([0.0, 0.3, 1.0])
        assert np.allclose(gamma(v, 1.0).voxels, v.voxels, atol=1e-7)

    def test_endpoints_are_fixed_points(self):
        v = norm_volume([0.0, 0.25, 1.0])
        for g in (0.4, 1.0, 2.5):
            out = gamma(v, g)
            assert out.voxels.ravel()[0] == 0.0
            assert out.voxels.ravel()[-1] == 1.0
            inv = gamma(v, g, inverse=True)
            assert inv.voxels.ravel()[0] == 0.0
            assert inv.voxels.ravel()[-1] == 1.0

    def test_quarter_squared(self):
        v = norm_volume([0.0, 0.25, 1.0])
        assert gamma(v, 2.0).voxels.ravel()[1] == np.float32(0.0625)

    def test_constant_volume_returned_unchanged(self):
        v = norm_volume([0.7] * 4)
        assert np.array_equal(gamma(v, 2.0).voxels, v.voxels)

    def test_range_and_units_preserved(self):
        v = norm_volume([0.2, 0.5, 0.8], units=Units.ZSCORE)
        out = gamma(v, 0.7)
        assert out.units == Units.ZSCORE
        assert out.voxels.min() == np.float32(0.2)
        assert out.voxels.max() == np.float32(0.8)

    @given(g=st.floats(0.05, 5.0))
    @settings(max_examples=40, deadline=None)
    def test_monotone_increasing(self, g):
        xs = np.sort(np.random.default_rng(0).uniform(0, 1, 64).astype(np.float32))
        for inverse in (False, True):
            out = gamma(norm_volume(xs), g, inverse=inverse).voxels.ravel()
            assert np.all(np.diff(out) >= 0)

    def test_nonpositive_gamma_rejected(self):
        with pytest.raises(ValidationError):
            gamma(norm_volume([0.1, 0.2]), 0.0)


class TestPipeline:
    def test_zero_probability_is_voxel_exact_identity(self, hu_volume_factory):
        from ctaug import ViewingWindow, apply_window

        v = apply_window(hu_volume_factory(seed=30), ViewingWindow(width=169, level=65))
        pipe = Pipeline(transforms=tuple(
            IntensityTransform(t.kind, t.parameter_range, probability=0.0)
            for t in preset_nnunet().transforms
        ))
        out = run_pipeline(v, pipe, SplitMix64(1))
        assert np.array_equal(out.voxels, v.voxels)

    def test_degenerate_range_probability_one_is_deterministic(self):
        v = norm_volume([0.0, 0.5, 1.0])
        pipe = Pipeline(transforms=(
            IntensityTransform(BRIGHTNESS_MULT, (0.9, 0.9), probability=1.0),
        ))
        for seed in range(5):
            out = run_pipeline(v, pipe, SplitMix64(seed))
            assert np.allclose(out.voxels.ravel(), [0.0, 0.45, 0.9], atol=1e-7)

    def test_fixed_seed_bit_identical(self):
        v = norm_volume(np.random.default_rng(3).uniform(0, 1, 200))
        pipe = preset_nnunet()
        a = run_pipeline(v, pipe, SplitMix64(9))
        b = run_pipeline(v, pipe, SplitMix64(9))
        assert a.voxels.tobytes() == b.voxels.tobytes()

    def test_gate_then_value_draw_order(self, scripted_rng):
        # first transform gated out (one draw); second gated in (two draws)
        v = norm_volume([0.0, 0.5, 1.0])
        pipe = Pipeline(transforms=(
            IntensityTransform(BRIGHTNESS_ADD, (0.5, 0.5), probability=0.5),
            IntensityTransform(BRIGHTNESS_MULT, (0.8, 1.0), probability=1.0),
        ))
        rng = scripted_rng([0.7, 0.0, 0.5])  # gate fail, gate pass, value 0.5 -> 0.9
        out = run_pipeline(v, pipe, rng)
        assert np.allclose(out.voxels.ravel(), [0.0, 0.45, 0.9], atol=1e-7)
        assert rng.consumed == 3


class TestPresets:
    def test_nnunet_kinds_in_order(self):
        kinds = [t.kind for t in preset_nnunet().transforms]
        assert kinds == [CONTRAST, BRIGHTNESS_MULT, GAMMA, GAMMA_INVERSE]

    def test_unetr_kinds_in_order(self):
        kinds = [t.kind for t in preset_unetr().transforms]
        assert kinds == [BRIGHTNESS_ADD, BRIGHTNESS_MULT]

    def test_presets_round_trip_through_json(self):
        for preset in (preset_nnunet(), preset_unetr()):
            assert Pipeline.from_json(preset.to_json()) == preset

    def test_pipeline_json_requires_key(self):
        with pytest.raises(ValidationError):
            Pipeline.from_json({"transforms": []})


class TestHistogramShapeInvariance:
    # linear transforms only relabel the bin axis: identical count multisets
    # under correspondingly transformed bin edges
    def test_additive_shift(self):
        values = np.random.default_rng(4).uniform(0.01, 0.99, 4000).astype(np.float32)
        v = norm_volume(values)
        shifted = brightness_add(v, 0.1)
        h0 = histogram(v, 32, (0.0, 1.0))
        h1 = histogram(shifted, 32, (0.1, 1.1))
        assert list(h0.counts) == list(h1.counts)

    def test_multiplicative_scale(self):
        values = np.random.default_rng(5).uniform(0.01, 0.99, 4000).astype(np.float32)
        v = norm_volume(values)
        scaled = brightness_mult(v, 0.9)
        h0 = histogram(v, 32, (0.0, 1.0))
        h1 = histogram(scaled, 32, (0.0, 0.9))
        assert list(h0.counts) == list(h1.counts)

    def test_contrast_affine(self):
        values = np.random.default_rng(6).uniform(0.01, 0.99, 4000).astype(np.float32)
        v = norm_volume(values)
        out = contrast(v, 1.25, anchor="window_center")
        lo, hi = 0.5 + 1.25 * (0.0 - 0.5), 0.5 + 1.25 * (1.0 - 0.5)
        h0 = histogram(v, 32, (0.0, 1.0))
        h1 = histogram(out, 32, (lo, hi))
        assert list(h0.counts) == list(h1.counts)


def test_equal_strength_ranges():
    offsets, factors = equal_strength_intensity_ranges(
        level_range=(12, 130), width_range=(129, 298),
        base_level=65.0, base_width=169.0, global_std=50.0,
    )
    assert offsets == ((12 - 65) / 50.0, (130 - 65) / 50.0)
    assert factors == (129 / 169.0, 298 / 169.0)


def test_gamma_range_validation():
    with pytest.raises(ValidationError):
        IntensityTransform(GAMMA, (0.0, 1.5))
