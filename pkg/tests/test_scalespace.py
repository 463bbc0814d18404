"""Gaussian scale-space tests: kernels, responses, extrema, descriptors.

Convolution is checked against an index-by-index nested-loop oracle, and
the filtered impulse against closed-form values of the sampled Gaussian.
"""

import math

import numpy as np
import pytest
from conftest import (
    gaussian_blob_image,
    make_frame,
    naive_correlate,
    random_frame,
    random_symmetric_kernel,
)

from anomscope import (
    AnomscopeError,
    Kernel,
    convolve,
    detect_scale_space_extrema,
    gaussian_kernel,
    log_descriptor,
    log_response,
    scale_normalized_log,
)
from anomscope.scalespace import LAPLACIAN_STENCIL, default_radius


class TestGaussianKernel:
    def test_center_tap_is_the_density_peak(self):
        k = gaussian_kernel(1.0)
        assert abs(k.taps[k.radius, k.radius] - 1.0 / (2.0 * math.pi)) < 1e-15

    def test_center_tap_scales_inversely_with_t(self):
        k = gaussian_kernel(4.0)
        assert abs(k.taps[k.radius, k.radius] - 1.0 / (8.0 * math.pi)) < 1e-15

    @pytest.mark.parametrize("t,radius", [(1.0, 3), (2.0, 5), (4.0, 6), (0.04, 1)])
    def test_default_radius_is_three_sigma_rounded_up(self, t, radius):
        assert default_radius(t) == radius
        assert gaussian_kernel(t).radius == radius

    def test_taps_are_exactly_symmetric(self):
        k = gaussian_kernel(2.5)
        np.testing.assert_array_equal(k.taps, k.taps[::-1, :])
        np.testing.assert_array_equal(k.taps, k.taps[:, ::-1])
        np.testing.assert_array_equal(k.taps, k.taps.T)

    def test_tap_sum_at_default_radius_for_unit_variance(self):
        # truncating the sampled density at radius 3 keeps this much mass
        total = gaussian_kernel(1.0).taps.sum()
        assert abs(total - 0.9994587918263369) < 1e-12
        assert abs(total - 1.0) < 1e-3

    def test_widening_the_radius_recovers_more_mass(self):
        near = abs(gaussian_kernel(4.0, radius=6).taps.sum() - 1.0)
        far = abs(gaussian_kernel(4.0, radius=12).taps.sum() - 1.0)
        assert far < near

    @pytest.mark.parametrize("bad_t", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_non_positive_or_non_finite_t(self, bad_t):
        with pytest.raises(AnomscopeError, match="positive"):
            gaussian_kernel(bad_t)

    def test_rejects_radius_below_one(self):
        with pytest.raises(AnomscopeError, match="radius"):
            gaussian_kernel(1.0, radius=0)

    def test_kernel_type_rejects_asymmetric_taps(self):
        taps = np.zeros((3, 3))
        taps[0, 0] = 1.0
        with pytest.raises(AnomscopeError, match="symmetric"):
            Kernel(radius=1, taps=taps, scale_t=0.0)

    def test_kernel_type_rejects_shape_mismatch(self):
        with pytest.raises(AnomscopeError, match="shape"):
            Kernel(radius=2, taps=np.zeros((3, 3)), scale_t=0.0)


class TestConvolve:
    def test_matches_nested_loop_oracle_on_random_frames(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            frame = random_frame(rng, 8, 8)
            t = float(rng.uniform(0.05, 0.8))
            k = gaussian_kernel(t, radius=int(rng.integers(1, 4)))
            got = convolve(frame, k).values
            want = naive_correlate(frame.data, k.taps)
            assert np.max(np.abs(got - want)) < 1e-12

    def test_matches_oracle_for_random_symmetric_kernels(self):
        rng = np.random.default_rng(8)
        for radius in (1, 2):
            frame = random_frame(rng, 9, 7)
            taps = random_symmetric_kernel(rng, radius)
            k = Kernel(radius=radius, taps=taps, scale_t=0.0)
            got = convolve(frame, k).values
            want = naive_correlate(frame.data, taps)
            assert np.max(np.abs(got - want)) < 1e-12

    def test_identity_kernel_returns_the_frame(self):
        rng = np.random.default_rng(9)
        frame = random_frame(rng, 6, 11)
        taps = np.zeros((3, 3))
        taps[1, 1] = 1.0
        out = convolve(frame, Kernel(radius=1, taps=taps, scale_t=0.0))
        np.testing.assert_array_equal(out.values, frame.data)

    def test_constant_frame_maps_to_constant_tap_sum_multiple(self):
        frame = make_frame(np.full((10, 10), 0.25))
        k = gaussian_kernel(1.0)
        out = convolve(frame, k).values
        expected = 0.25 * k.taps.sum()
        assert np.max(np.abs(out - expected)) < 1e-12

    def test_kernel_larger_than_frame_is_an_error(self):
        frame = make_frame(np.zeros((5, 5)))
        with pytest.raises(AnomscopeError, match="exceeds"):
            convolve(frame, gaussian_kernel(4.0))  # side 13 > 5

    def test_output_carries_frame_size_and_kernel_scale(self):
        rng = np.random.default_rng(10)
        frame = random_frame(rng, 8, 12)
        out = convolve(frame, gaussian_kernel(1.0))
        assert (out.width, out.height) == (12, 8)
        assert out.scale_t == 1.0
        assert np.all(np.isfinite(out.values))


class TestLogResponse:
    def test_equals_full_2d_smoothing_followed_by_stencil(self):
        # dual route: separable path vs naive 2-D correlation of both stages
        rng = np.random.default_rng(11)
        frame = random_frame(rng, 12, 12)
        t = 1.5
        smoothed = naive_correlate(frame.data, gaussian_kernel(t).taps)
        want = naive_correlate(smoothed, LAPLACIAN_STENCIL)
        got = log_response(frame, t).values
        assert np.max(np.abs(got - want)) < 1e-10

    def test_impulse_center_matches_sampled_gaussian_closed_form(self):
        # smoothing an impulse yields the sampled kernel, so the stencil at
        # the center evaluates to 2 * (exp(-1/(2t)) - 1) / (pi t) for any t
        size = 41
        image = np.zeros((size, size))
        image[size // 2, size // 2] = 1.0
        t = 2.0
        got = log_response(make_frame(image), t).values[size // 2, size // 2]
        want = 2.0 * (math.exp(-1.0 / (2.0 * t)) - 1.0) / (math.pi * t)
        assert abs(got - want) < 1e-14

    def test_impulse_center_tracks_analytic_laplacian_with_stencil_bias(self):
        # the 5-point stencil underestimates the analytic value -1/(pi t^2)
        # by the factor 2t(1 - exp(-1/(2t))): about 11.5% low at t=2 and
        # within 2% at t=16
        def rel_dev(t, size):
            image = np.zeros((size, size))
            image[size // 2, size // 2] = 1.0
            got = log_response(make_frame(image), t).values[size // 2, size // 2]
            analytic = -1.0 / (math.pi * t * t)
            return abs(got - analytic) / abs(analytic)

        assert 0.10 < rel_dev(2.0, 41) < 0.13
        assert rel_dev(16.0, 61) < 0.02

    def test_scale_normalization_multiplies_by_t(self):
        rng = np.random.default_rng(12)
        frame = random_frame(rng, 12, 12)
        raw = log_response(frame, 2.0).values
        normalized = scale_normalized_log(frame, 2.0).values
        np.testing.assert_array_equal(normalized, 2.0 * raw)

    def test_constant_frame_has_zero_laplacian(self):
        frame = make_frame(np.full((12, 12), 0.6))
        values = log_response(frame, 1.0).values
        assert np.max(np.abs(values)) < 1e-12

    def test_frame_smaller_than_stencil_is_an_error(self):
        frame = make_frame(np.zeros((2, 2)))
        with pytest.raises(AnomscopeError, match="3x3|exceeds"):
            log_response(frame, 0.05)

    def test_kernel_exceeding_frame_is_an_error(self):
        frame = make_frame(np.zeros((8, 8)))
        with pytest.raises(AnomscopeError, match="exceeds"):
            log_response(frame, 4.0)


class TestScaleSelection:
    def test_blob_center_response_peaks_near_two_sigma_squared(self):
        # a Gaussian blob of std 4 should select t near 2 * sigma^2 = 32?
        # no: for the 5-point scheme the peak sits near t = sigma^2 (the
        # blob doubles the effective variance); measured argmax is t = 16
        sigma = 4.0
        frame = make_frame(gaussian_blob_image(65, 32, 32, sigma))
        center = []
        sweep = range(1, 41)
        for t in sweep:
            center.append(abs(scale_normalized_log(frame, float(t)).values[32, 32]))
        best = list(sweep)[int(np.argmax(center))]
        assert 13 <= best <= 19

    def test_selected_scale_tracks_image_rescaling(self):
        # doubling the image side should roughly quadruple the selected t
        sigma = 3.0
        frame = make_frame(gaussian_blob_image(65, 32, 32, sigma))
        big = make_frame(np.repeat(np.repeat(frame.data, 2, axis=0), 2, axis=1))

        def best_t(f, sweep):
            peaks = [np.max(np.abs(scale_normalized_log(f, float(t)).values)) for t in sweep]
            return list(sweep)[int(np.argmax(peaks))]

        t_small = best_t(frame, range(2, 21))
        t_big = best_t(big, range(2, 61))
        ratio = t_big / t_small
        assert 3.0 <= ratio <= 5.0


class TestExtremaDetection:
    def _blob_frame(self):
        return make_frame(gaussian_blob_image(65, 32, 32, 4.0))

    def test_blob_yields_one_dominant_keypoint_at_its_center(self):
        kps = detect_scale_space_extrema(self._blob_frame(), (2.0, 4.0, 8.0, 16.0, 32.0))
        assert kps, "expected at least one keypoint"
        top = max(kps, key=lambda kp: abs(kp.response))
        assert (top.x, top.y) == (32, 32)
        assert top.scale_t == 16.0
        assert top.polarity == "min"  # bright blob: negative Laplacian
        dominant = [kp for kp in kps if abs(kp.response) > 0.5 * abs(top.response)]
        assert len(dominant) == 1

    def test_keypoints_are_interior_in_space_and_scale(self):
        scales = (2.0, 4.0, 8.0, 16.0, 32.0)
        frame = self._blob_frame()
        for kp in detect_scale_space_extrema(frame, scales):
            assert 1 <= kp.x <= frame.width - 2
            assert 1 <= kp.y <= frame.height - 2
            assert kp.scale_t in scales[1:-1]
            assert abs(kp.response) > 0.01

    def test_keypoints_come_out_scale_then_row_major_ordered(self):
        rng = np.random.default_rng(13)
        frame = random_frame(rng, 24, 24)
        kps = detect_scale_space_extrema(frame, (0.5, 1.0, 2.0, 4.0), threshold=0.0)
        keys = [(kp.scale_t, kp.y, kp.x) for kp in kps]
        assert keys == sorted(keys)

    def test_huge_threshold_suppresses_everything(self):
        assert detect_scale_space_extrema(self._blob_frame(), threshold=1e9) == []

    def test_fewer_than_three_scales_is_an_error(self):
        with pytest.raises(AnomscopeError, match="at least 3"):
            detect_scale_space_extrema(self._blob_frame(), (1.0, 2.0))

    def test_non_increasing_scales_are_an_error(self):
        with pytest.raises(AnomscopeError, match="strictly increasing"):
            detect_scale_space_extrema(self._blob_frame(), (1.0, 2.0, 2.0))

    def test_negative_threshold_is_an_error(self):
        with pytest.raises(AnomscopeError, match="threshold"):
            detect_scale_space_extrema(self._blob_frame(), threshold=-0.1)


class TestLogDescriptor:
    def test_length_is_scales_times_cells_times_stats_plus_counts(self):
        rng = np.random.default_rng(14)
        frame = random_frame(rng, 16, 16)
        desc = log_descriptor(frame, (0.5, 1.0, 2.0), (2, 2))
        assert desc.shape == (3 * 2 * 2 * 4 + 3,)
        assert np.all(np.isfinite(desc))

    def test_default_shape_is_325(self):
        rng = np.random.default_rng(15)
        frame = random_frame(rng, 64, 64)
        assert log_descriptor(frame).shape == (5 * 4 * 4 * 4 + 5,)

    def test_cell_statistics_match_manual_pooling(self):
        rng = np.random.default_rng(16)
        frame = random_frame(rng, 12, 12)
        scales = (0.5, 1.0, 2.0)
        desc = log_descriptor(frame, scales, (2, 2))
        maps = [scale_normalized_log(frame, t).values for t in scales]
        at = 0
        for m in maps:
            for rows in (slice(0, 6), slice(6, 12)):
                for cols in (slice(0, 6), slice(6, 12)):
                    cell = m[rows, cols]
                    np.testing.assert_allclose(
                        desc[at : at + 4],
                        [cell.mean(), cell.std(), cell.max(), cell.min()],
                        rtol=0,
                        atol=0,
                    )
                    at += 4

    def test_extremum_counts_agree_with_the_detector(self):
        frame = make_frame(gaussian_blob_image(65, 30, 34, 4.0))
        scales = (2.0, 4.0, 8.0, 16.0, 32.0)
        desc = log_descriptor(frame, scales, (4, 4))
        kps = detect_scale_space_extrema(frame, scales)
        counts = desc[-5:]
        n_pixels = 65 * 65
        for i, t in enumerate(scales):
            expected = sum(1 for kp in kps if kp.scale_t == t) / n_pixels
            assert counts[i] == expected
        assert counts[0] == 0.0 and counts[-1] == 0.0  # boundary scales host none

    def test_remainder_pixels_go_to_the_last_cells(self):
        # 10 pixels over 4 columns: spans 2,2,2,4
        rng = np.random.default_rng(17)
        frame = random_frame(rng, 10, 10)
        desc = log_descriptor(frame, (0.3, 0.6, 0.9), (1, 4))
        m = scale_normalized_log(frame, 0.3).values
        last_cell = m[:, 6:10]
        np.testing.assert_allclose(desc[12:16],
            [last_cell.mean(), last_cell.std(), last_cell.max(), last_cell.min()],
            rtol=0, atol=0)

    def test_grid_finer_than_the_frame_is_an_error(self):
        rng = np.random.default_rng(18)
        frame = random_frame(rng, 6, 6)
        with pytest.raises(AnomscopeError, match="grid"):
            log_descriptor(frame, (0.3, 0.6, 0.9), (7, 1))
