import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctaug import (
    AugmentationSpec,
    Normalization,
    SplitMix64,
    Units,
    UnitsError,
    ValidationError,
    ViewingWindow,
    Volume,
    apply_window,
    contrast,
    output_interval,
    random_windowing,
    rw_shift_scale,
    sample_window,
)

TUMOR_WINDOW = ViewingWindow(width=169, level=65)
RAW_WINDOW = ViewingWindow(width=2000, level=0)
APPENDIX_SPEC = AugmentationSpec(
    base=TUMOR_WINDOW,
    level_range=(12, 130),
    width_range=(129, 298),
    p_level=0.3,
    p_width=0.3,
    seed=7,
)


def hu(voxels):
    return Volume(
        voxels=np.asarray(voxels, dtype=np.float32).reshape(1, 1, -1),
        spacing=(1, 1, 1),
        units=Units.HU,
    )


class TestApplyWindow:
    def test_tumor_window_level_maps_to_midpoint(self):
        out = apply_window(hu([65.0]), TUMOR_WINDOW)
        assert out.voxels.ravel()[0] == 0.5
        assert out.units == Units.NORM01

    def test_tumor_window_clipping_endpoints(self):
        out = apply_window(hu([1000.0, -500.0]), TUMOR_WINDOW)
        assert list(out.voxels.ravel()) == [1.0, 0.0]

    def test_raw_window_endpoints_and_midpoint(self):
        out = apply_window(hu([-1000.0, 0.0]), RAW_WINDOW)
        assert list(out.voxels.ravel()) == [0.0, 0.5]

    def test_units_mismatch_rejected(self):
        v = Volume(voxels=np.zeros((1, 1, 1), dtype=np.float32), spacing=(1, 1, 1),
                   units=Units.NORM01)
        with pytest.raises(UnitsError):
            apply_window(v, TUMOR_WINDOW)

    def test_clip_matches_per_voxel_median_oracle(self, hu_volume_factory):
        v = hu_volume_factory(seed=20, shape=(4, 5, 6))
        out = apply_window(v, TUMOR_WINDOW)
        lo, up = np.float32(TUMOR_WINDOW.lower), np.float32(TUMOR_WINDOW.upper)
        den = up - lo
        for idx in np.ndindex(*v.shape):
            clipped = np.float32(sorted([lo, v.voxels[idx], up])[1])  # median
            assert out.voxels[idx] == (clipped - lo) / den

    @given(width=st.floats(1.0, 2500.0), level=st.floats(-500.0, 500.0))
    @settings(max_examples=50, deadline=None)
    def test_minmax_output_in_unit_interval(self, width, level):
        rng = np.random.default_rng(0)
        v = hu(rng.uniform(-2000, 2000, size=64).astype(np.float32))
        out = apply_window(v, ViewingWindow(width=width, level=level))
        assert out.voxels.min() >= 0.0
        assert out.voxels.max() <= 1.0

    def test_endpoints_attained_when_input_spans_window(self, hu_volume_factory):
        v = hu_volume_factory(seed=21)
        out = apply_window(v, TUMOR_WINDOW)
        assert out.voxels.min() == 0.0
        assert out.voxels.max() == 1.0

    def test_monotone_in_input(self):
        xs = np.sort(np.random.default_rng(1).uniform(-2000, 2000, 128)).astype(np.float32)
        out = apply_window(hu(xs), TUMOR_WINDOW).voxels.ravel()
        assert np.all(np.diff(out) >= 0)

    def test_zscore_normalization(self):
        norm = Normalization.zscore(mean=100.0, std=50.0)
        out = apply_window(hu([100.0, 149.5]), TUMOR_WINDOW, norm)
        assert out.units == Units.ZSCORE
        assert out.voxels.ravel()[0] == 0.0
        assert out.voxels.ravel()[1] == pytest.approx(0.99, abs=1e-6)

    def test_fixed_base_equals_minmax_for_base_window(self, hu_volume_factory):
        v = hu_volume_factory(seed=22)
        minmax = apply_window(v, TUMOR_WINDOW)
        fixed = apply_window(v, TUMOR_WINDOW, Normalization.fixed_base(TUMOR_WINDOW))
        assert np.array_equal(minmax.voxels, fixed.voxels)


class TestSampleWindow:
    def test_zero_probabilities_keep_base(self, scripted_rng):
        spec = AugmentationSpec(base=TUMOR_WINDOW, level_range=(12, 130),
                                width_range=(129, 298), p_level=0.0, p_width=0.0)
        s = sample_window(spec, scripted_rng([0.9, 0.9]))
        assert s.window == TUMOR_WINDOW
        assert not s.level_was_shifted and not s.width_was_scaled
        assert s.draws_consumed == 2

    def test_degenerate_width_range_still_flags_scaled(self, scripted_rng):
        spec = AugmentationSpec(base=TUMOR_WINDOW, level_range=(65, 65),
                                width_range=(169, 169), p_level=0.0, p_width=1.0)
        s = sample_window(spec, scripted_rng([0.0, 0.37, 0.9]))
        assert s.window.width == 169
        assert s.width_was_scaled and not s.level_was_shifted
        assert s.draws_consumed == 3

    def test_midpoint_draws_give_range_midpoints(self, scripted_rng):
        spec = AugmentationSpec(base=TUMOR_WINDOW, level_range=(12, 130),
                                width_range=(129, 298), p_level=1.0, p_width=1.0)
        s = sample_window(spec, scripted_rng([0.0, 0.5, 0.0, 0.5]))
        assert s.window.width == pytest.approx(213.5)
        assert s.window.level == pytest.approx(71.0)
        assert s.draws_consumed == 4

    def test_draw_order_width_gate_width_level_gate_level(self, scripted_rng):
        # the level value draw (0.25) must not be consumed by the width step
        spec = AugmentationSpec(base=TUMOR_WINDOW, level_range=(0, 100),
                                width_range=(100, 300), p_level=1.0, p_width=0.0)
        s = sample_window(spec, scripted_rng([0.9, 0.0, 0.25]))
        assert not s.width_was_scaled
        assert s.window.width == 169
        assert s.window.level == 25.0
        assert s.draws_consumed == 3

    def test_draws_consumed_matches_stream_position(self):
        spec = AugmentationSpec(base=TUMOR_WINDOW, level_range=(12, 130),
                                width_range=(129, 298), p_level=0.5, p_width=0.5, seed=3)
        for seed in range(20):
            rng = SplitMix64(seed)
            s = sample_window(spec, rng)
            assert rng.index == s.draws_consumed
            assert s.draws_consumed in (2, 3, 4)

    def test_sampled_values_stay_in_ranges(self):
        rng = SplitMix64(4)
        spec = APPENDIX_SPEC
        for _ in range(500):
            s = sample_window(spec, rng)
            if s.width_was_scaled:
                assert 129 <= s.window.width < 298
            else:
                assert s.window.width == 169
            if s.level_was_shifted:
                assert 12 <= s.window.level < 130
            else:
                assert s.window.level == 65


class TestSpecValidation:
    def test_base_width_must_lie_in_width_range(self):
        with pytest.raises(ValidationError):
            AugmentationSpec(base=ViewingWindow(width=100, level=65),
                             level_range=(12, 130), width_range=(129, 298))

    def test_probability_bounds(self):
        with pytest.raises(ValidationError):
            AugmentationSpec(base=TUMOR_WINDOW, level_range=(12, 130),
                             width_range=(129, 298), p_level=1.5)

    def test_json_round_trip(self):
        doc = APPENDIX_SPEC.to_json()
        again = AugmentationSpec.from_json(json.loads(json.dumps(doc)))
        assert again == APPENDIX_SPEC

    def test_fixed_base_defaults_to_spec_base(self):
        doc = {**APPENDIX_SPEC.to_json(), "normalization": {"mode": "fixed_base"}}
        spec = AugmentationSpec.from_json(doc)
        assert spec.normalization.base == TUMOR_WINDOW


class TestRandomWindowing:
    def test_zero_gates_equal_static_windowing(self, hu_volume_factory):
        v = hu_volume_factory(seed=23)
        spec = AugmentationSpec(base=TUMOR_WINDOW, level_range=(12, 130),
                                width_range=(129, 298), p_level=0.0, p_width=0.0, seed=1)
        out = random_windowing(v, spec, SplitMix64(1))
        static = apply_window(v, TUMOR_WINDOW)
        assert np.array_equal(out.voxels, static.voxels)

    def test_constant_volume_at_level_maps_to_half(self):
        spec = AugmentationSpec(base=TUMOR_WINDOW, level_range=(65, 65),
                                width_range=(129, 298), p_level=1.0, p_width=1.0, seed=5)
        v = Volume(voxels=np.full((2, 3, 4), 65.0, dtype=np.float32), spacing=(1, 1, 1),
                   units=Units.HU)
        for seed in range(10):
            out = random_windowing(v, spec, SplitMix64(seed))
            # 0.5 up to float32 realization of the sampled interval
            assert np.allclose(out.voxels, 0.5, atol=1e-6)

    def test_bit_identical_reruns(self, hu_volume_factory):
        v = hu_volume_factory(seed=24)
        a = random_windowing(v, APPENDIX_SPEC, SplitMix64(77))
        b = random_windowing(v, APPENDIX_SPEC, SplitMix64(77))
        assert a.voxels.tobytes() == b.voxels.tobytes()

    def test_different_seeds_differ(self, hu_volume_factory):
        v = hu_volume_factory(seed=25)
        spec = AugmentationSpec(base=TUMOR_WINDOW, level_range=(12, 130),
                                width_range=(129, 298), p_level=1.0, p_width=1.0)
        outputs = {random_windowing(v, spec, SplitMix64(s)).voxels.tobytes() for s in range(8)}
        assert len(outputs) > 1

    def test_output_extremes_sit_on_interval_endpoints(self, hu_volume_factory):
        v = hu_volume_factory(seed=26)
        rng = SplitMix64(9)
        spec = APPENDIX_SPEC
        for _ in range(50):
            s = sample_window(spec, rng)
            out = apply_window(v, s.window, spec.normalization)
            assert out.voxels.min() == 0.0
            assert out.voxels.max() == 1.0


class TestContrastEquivalence:
    def test_window_scaling_equals_center_contrast_then_clip(self, hu_volume_factory):
        # narrowing the window at fixed level == contrast about the center by
        # W_base/W on the base-windowed image, then clipping to the base range
        rng = np.random.default_rng(42)
        for trial in range(20):
            v = hu_volume_factory(seed=100 + trial)
            w = float(rng.uniform(30, TUMOR_WINDOW.width))
            scaled = apply_window(v, ViewingWindow(width=w, level=TUMOR_WINDOW.level))
            base_img = apply_window(v, TUMOR_WINDOW)
            alpha = TUMOR_WINDOW.width / w
            equivalent = contrast(base_img, alpha, anchor="window_center", preserve_range=True)
            err = np.abs(scaled.voxels - equivalent.voxels).max()
            assert err < 1e-6


class TestRwShiftScale:
    def fixed_spec(self, p_level=1.0, p_width=1.0, seed=0):
        return AugmentationSpec(
            base=TUMOR_WINDOW, level_range=(12, 130), width_range=(129, 298),
            p_level=p_level, p_width=p_width,
            normalization=Normalization.fixed_base(TUMOR_WINDOW), seed=seed,
        )

    def test_minmax_normalization_rejected(self, hu_volume_factory):
        with pytest.raises(ValidationError):
            rw_shift_scale(hu_volume_factory(), APPENDIX_SPEC, SplitMix64(0))

    def test_failed_gates_equal_fixed_base_clip(self, hu_volume_factory):
        v = hu_volume_factory(seed=27)
        spec = self.fixed_spec(p_level=0.0, p_width=0.0)
        out = rw_shift_scale(v, spec, SplitMix64(0))
        expected = apply_window(v, TUMOR_WINDOW, Normalization.fixed_base(TUMOR_WINDOW))
        assert np.array_equal(out.voxels, expected.voxels)

    def test_surviving_hu_always_maps_to_same_value(self):
        v = hu(np.full(16, 65.0))
        spec = self.fixed_spec()
        for seed in range(20):
            out = rw_shift_scale(v, spec, SplitMix64(seed))
            assert np.all(out.voxels == 0.5)  # (65 - lower_base) / W_base

    def test_super_base_window_keeps_out_of_base_values(self, scripted_rng):
        # base [0, 100]; scripted sampling forces the window [-20, 120]
        base = ViewingWindow(width=100, level=50)
        spec = AugmentationSpec(
            base=base, level_range=(50, 50), width_range=(100, 140),
            p_level=0.0, p_width=1.0, normalization=Normalization.fixed_base(base),
        )
        v = hu([-10.0, 110.0])
        out = rw_shift_scale(v, spec, scripted_rng([0.0, 1.0, 0.9]))
        assert out.units == Units.ZSCORE
        assert list(out.voxels.ravel()) == [np.float32(-0.1), np.float32(1.1)]

    def test_zscore_variant(self, hu_volume_factory):
        v = hu_volume_factory(seed=28)
        spec = AugmentationSpec(
            base=TUMOR_WINDOW, level_range=(12, 130), width_range=(129, 298),
            p_level=1.0, p_width=1.0, normalization=Normalization.zscore(100.0, 50.0), seed=2,
        )
        out = rw_shift_scale(v, spec, SplitMix64(2))
        assert out.units == Units.ZSCORE


class TestOutputInterval:
    def test_minmax_unit_interval(self):
        assert output_interval(TUMOR_WINDOW, Normalization.minmax()) == (0.0, 1.0)

    def test_fixed_base_interval_matches_attained_extremes(self, hu_volume_factory):
        v = hu_volume_factory(seed=29)
        base = TUMOR_WINDOW
        wider = ViewingWindow(width=220, level=80)
        out = apply_window(v, wider, Normalization.fixed_base(base))
        lo, hi = output_interval(wider, Normalization.fixed_base(base))
        assert float(out.voxels.min()) == lo
        assert float(out.voxels.max()) == hi

    def test_sub_base_window_vacates_the_base_edges(self, hu_volume_factory):
        # narrowing under a fixed base map leaves [0, lo) and (hi, 1] empty:
        # the output is a valid windowed image of the narrower window
        v = hu_volume_factory(seed=31)
        narrower = ViewingWindow(width=100, level=65)
        out = apply_window(v, narrower, Normalization.fixed_base(TUMOR_WINDOW))
        lo, hi = output_interval(narrower, Normalization.fixed_base(TUMOR_WINDOW))
        assert 0.0 < lo < hi < 1.0
        assert float(out.voxels.min()) == lo
        assert float(out.voxels.max()) == hi
