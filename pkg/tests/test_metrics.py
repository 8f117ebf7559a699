"""Metric tests against scalar-loop and direct-formula oracles."""

import numpy as np
import pytest

from helpers import low_rank_cube, two_zone_cube
from hsfuse import core, forward, metrics


def psnr_loop_oracle(ref, est, peak=1.0, cap=99.0):
    rows, cols, bands = ref.shape
    values = []
    for k in range(bands):
        total = 0.0
        for i in range(rows):
            for j in range(cols):
                d = ref[i, j, k] - est[i, j, k]
                total += d * d
        mse = total / (rows * cols)
        values.append(cap if mse == 0 else min(10.0 * np.log10(peak * peak / mse), cap))
    return float(np.mean(values))


def ssim_window_oracle(x, y, peak=1.0):
    """Direct windowed SSIM: every interior 11x11 window, no convolution code."""
    size, sigma = 11, 1.5
    coords = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    w /= w.sum()
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    rows, cols = x.shape
    values = []
    for i in range(rows - size + 1):
        for j in range(cols - size + 1):
            px = x[i : i + size, j : j + size]
            py = y[i : i + size, j : j + size]
            mx = (w * px).sum()
            my = (w * py).sum()
            sxx = (w * px * px).sum() - mx * mx
            syy = (w * py * py).sum() - my * my
            sxy = (w * px * py).sum() - mx * my
            values.append(
                ((2 * mx * my + c1) * (2 * sxy + c2))
                / ((mx * mx + my * my + c1) * (sxx + syy + c2))
            )
    return float(np.mean(values))


def msa_loop_oracle(ref, est):
    rows, cols, _ = ref.shape
    angles = []
    for i in range(rows):
        for j in range(cols):
            a, b = ref[i, j], est[i, j]
            na, nb = np.linalg.norm(a), np.linalg.norm(b)
            if na == 0 or nb == 0:
                continue
            cos = min(1.0, max(-1.0, float(a @ b) / (na * nb)))
            angles.append(np.degrees(np.arccos(cos)))
    return float(np.mean(angles))


class TestPsnr:
    def test_equal_cubes_hit_cap(self):
        rng = np.random.default_rng(0)
        cube = rng.random((6, 6, 4))
        assert metrics.m_psnr(cube, cube) == 99.0

    def test_constant_offset_is_20db(self):
        rng = np.random.default_rng(1)
        ref = rng.random((8, 9, 3))
        est = ref + 0.1
        assert abs(metrics.m_psnr(ref, est) - 20.0) < 1e-10

    @pytest.mark.parametrize("seed", range(2, 6))
    def test_matches_loop_oracle(self, seed):
        rng = np.random.default_rng(seed)
        ref = rng.random((7, 5, 4))
        est = rng.random((7, 5, 4))
        assert abs(metrics.m_psnr(ref, est) - psnr_loop_oracle(ref, est)) < 1e-10

    def test_per_band_peak_option(self):
        rng = np.random.default_rng(6)
        ref = 3.0 * rng.random((6, 6, 2)) + 0.5
        est = ref + 0.2
        got = metrics.band_psnr(ref, est, peak=None)
        peaks = ref.max(axis=(0, 1))
        mse = ((ref - est) ** 2).mean(axis=(0, 1))
        np.testing.assert_allclose(got, 10 * np.log10(peaks**2 / mse), rtol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            metrics.m_psnr(np.ones((4, 4, 2)), np.ones((4, 4, 3)))

    def test_bad_peak(self):
        with pytest.raises(ValueError, match="peak"):
            metrics.m_psnr(np.ones((4, 4, 2)), np.ones((4, 4, 2)), peak=0.0)

    def test_noise_monotone(self):
        rng = np.random.default_rng(7)
        ref = rng.random((16, 16, 3))
        means = []
        for sigma in (0.01, 0.05, 0.1):
            vals = [
                metrics.m_psnr(ref, forward.add_noise(ref, sigma, seed))
                for seed in range(10)
            ]
            means.append(np.mean(vals))
        assert means[0] > means[1] > means[2]


class TestSsim:
    def test_identical_is_one(self):
        rng = np.random.default_rng(8)
        cube = rng.random((12, 12, 3))
        assert metrics.m_ssim(cube, cube) == 1.0

    def test_equal_constants_are_one(self):
        cube = np.full((11, 11, 2), 0.37)
        assert metrics.m_ssim(cube, cube.copy()) == 1.0

    @pytest.mark.parametrize("seed", range(9, 12))
    def test_matches_direct_window_oracle(self, seed):
        rng = np.random.default_rng(seed)
        ref = rng.random((32, 32, 2))
        est = np.clip(ref + 0.1 * rng.standard_normal(ref.shape), 0.0, 1.0)
        got = metrics.band_ssim(ref, est)
        for b in range(2):
            oracle = ssim_window_oracle(ref[:, :, b], est[:, :, b])
            assert abs(got[b] - oracle) < 1e-8

    def test_image_smaller_than_window(self):
        with pytest.raises(ValueError, match="window"):
            metrics.m_ssim(np.ones((10, 12, 1)), np.ones((10, 12, 1)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            metrics.m_ssim(np.ones((12, 12, 2)), np.ones((12, 13, 2)))


class TestMsa:
    def test_positive_scaling_is_zero(self):
        rng = np.random.default_rng(12)
        cube = rng.random((5, 6, 4)) + 0.1
        assert metrics.msa(cube, 2.0 * cube) == 0.0

    def test_per_pixel_positive_rescaling_is_zero(self):
        rng = np.random.default_rng(13)
        cube = rng.random((6, 5, 4)) + 0.1
        # powers of two keep the rescaled spectra exactly proportional
        scale = np.exp2(rng.integers(-3, 4, size=(6, 5)).astype(float))
        assert metrics.msa(cube, cube * scale[:, :, None]) == 0.0

    def test_orthogonal_spectra(self):
        rows, cols = 4, 3
        ref = np.zeros((rows, cols, 2))
        est = np.zeros((rows, cols, 2))
        ref[:, :, 0] = 1.0
        est[:, :, 1] = 1.0
        assert abs(metrics.msa(ref, est) - 90.0) < 1e-12

    @pytest.mark.parametrize("seed", range(14, 18))
    def test_matches_loop_oracle(self, seed):
        rng = np.random.default_rng(seed)
        ref = rng.random((6, 7, 5))
        est = rng.random((6, 7, 5))
        assert abs(metrics.msa(ref, est) - msa_loop_oracle(ref, est)) < 1e-9

    def test_zero_norm_pixels_skipped_and_counted(self):
        rng = np.random.default_rng(18)
        ref = rng.random((12, 12, 3)) + 0.1
        est = ref.copy()
        ref[0, 0] = 0.0
        est[2, 3] = 0.0
        report = metrics.evaluate(ref, est)
        assert report.msa_skipped == 2
        assert report.msa == 0.0

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError, match="zero-norm"):
            metrics.msa(np.zeros((3, 3, 2)), np.zeros((3, 3, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            metrics.msa(np.ones((3, 3, 2)), np.ones((3, 4, 2)))


class TestEvaluate:
    def test_per_band_peak_switch(self):
        rng = np.random.default_rng(23)
        ref = 2.0 * rng.random((12, 12, 3)) + 0.5
        est = ref + 0.1
        report = metrics.evaluate(ref, est, per_band_peak=True)
        np.testing.assert_allclose(report.band_psnr, metrics.band_psnr(ref, est, peak=None))

    def test_means_of_band_vectors(self):
        rng = np.random.default_rng(19)
        ref = rng.random((16, 16, 4))
        est = np.clip(ref + 0.05 * rng.standard_normal(ref.shape), 0, 1)
        report = metrics.evaluate(ref, est)
        assert report.m_psnr == pytest.approx(float(report.band_psnr.mean()), abs=0)
        assert report.m_ssim == pytest.approx(float(report.band_ssim.mean()), abs=0)
        assert report.band_psnr.shape == (4,)
        assert report.msa >= 0.0


class TestSingularSpectrum:
    def test_exact_rank3_cube(self):
        cube, _, _ = low_rank_cube(20, 10, 10, 8, 3)
        sigma = metrics.singular_spectrum(cube)
        assert sigma.shape == (8,)
        assert sigma[3] < 1e-10 * sigma[0]

    def test_single_pixel_norm(self):
        spectrum = np.array([3.0, 4.0])
        sigma = metrics.singular_spectrum(spectrum.reshape(1, 1, 2))
        np.testing.assert_allclose(sigma, [5.0])

    def test_patches_drop_faster_than_global(self):
        cube = two_zone_cube(21, 40, 20, 0, 20, 10, rank=3)
        grid = core.make_grid(40, 40, 10, 10, 10)
        patches = [core.extract_patch(cube, o, 10, 10) for o in grid.origins]
        patch_log = metrics.mean_log_singular_spectrum(patches)
        with np.errstate(divide="ignore"):
            global_log = np.log10(metrics.singular_spectrum(cube))
        assert patch_log[3] < global_log[3]

    def test_mean_log_of_identical_patches(self):
        cube, _, _ = low_rank_cube(22, 6, 6, 4, 4)
        got = metrics.mean_log_singular_spectrum([cube, cube])
        np.testing.assert_allclose(got, np.log10(metrics.singular_spectrum(cube)))

    def test_empty_patch_list_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            metrics.mean_log_singular_spectrum([])
