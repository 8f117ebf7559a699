"""Band-averaged quality metrics and singular-value diagnostics.

M-PSNR and M-SSIM are the means over bands of per-band PSNR/SSIM; MSA is
the mean spectral angle between per-pixel spectra, in degrees. All three
reject shape mismatches instead of broadcasting.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from . import core

__all__ = [
    "MetricReport",
    "band_psnr",
    "band_ssim",
    "m_psnr",
    "m_ssim",
    "msa",
    "evaluate",
    "singular_spectrum",
    "mean_log_singular_spectrum",
]

PSNR_CAP_DB = 99.0

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricReport:
    """Summary metrics for one reconstruction.

    ``m_psnr``/``m_ssim`` are the means of the per-band vectors;
    ``msa_skipped`` counts pixels excluded from MSA because either spectrum
    had zero norm.
    """

    m_psnr: float
    m_ssim: float
    msa: float
    band_psnr: np.ndarray
    band_ssim: np.ndarray
    msa_skipped: int


def _check_pair(ref, est):
    ref = core.check_cube(ref, "reference")
    est = core.check_cube(est, "estimate")
    if ref.shape != est.shape:
        raise ValueError(f"shape mismatch: reference {ref.shape} vs estimate {est.shape}")
    return ref, est


def band_psnr(ref, est, peak=1.0, cap_db=PSNR_CAP_DB):
    """Per-band PSNR in dB, capped at ``cap_db``.

    Parameters
    ----------
    ref, est : array_like
        Cubes of identical shape.
    peak : float or None
        Peak signal value. ``None`` uses each band's reference maximum.
    cap_db : float
        Upper bound on the reported value; bands with zero error take the
        cap exactly.
    """
    ref, est = _check_pair(ref, est)
    if peak is None:
        peaks = ref.max(axis=(0, 1))
        if (peaks <= 0).any():
            raise ValueError("per-band peak requested but a band's reference maximum is <= 0")
    else:
        if peak <= 0:
            raise ValueError(f"peak must be positive, got {peak}")
        peaks = np.full(ref.shape[2], float(peak))
    diff = ref - est
    mse = np.mean(diff * diff, axis=(0, 1))
    out = np.full(mse.shape, float(cap_db))
    nz = mse > 0
    out[nz] = np.minimum(10.0 * np.log10(peaks[nz] ** 2 / mse[nz]), cap_db)
    return out


def m_psnr(ref, est, peak=1.0, cap_db=PSNR_CAP_DB):
    """Mean over bands of the per-band PSNR, in dB."""
    return float(band_psnr(ref, est, peak, cap_db).mean())


def _gaussian_kernel(size=_SSIM_WINDOW, sigma=_SSIM_SIGMA):
    coords = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def _ssim_band(x, y, peak, kernel):
    c1 = (_SSIM_K1 * peak) ** 2
    c2 = (_SSIM_K2 * peak) ** 2
    mu_x = fftconvolve(x, kernel, mode="valid")
    mu_y = fftconvolve(y, kernel, mode="valid")
    sxx = fftconvolve(x * x, kernel, mode="valid") - mu_x * mu_x
    syy = fftconvolve(y * y, kernel, mode="valid") - mu_y * mu_y
    sxy = fftconvolve(x * y, kernel, mode="valid") - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def band_ssim(ref, est, peak=1.0):
    """Per-band SSIM with an 11x11 Gaussian window (sigma 1.5).

    Uses the standard stability constants K1=0.01, K2=0.03 with dynamic
    range ``peak``; windows are fully interior (no padding), so images must
    be at least 11x11.
    """
    ref, est = _check_pair(ref, est)
    if peak <= 0:
        raise ValueError(f"peak must be positive, got {peak}")
    if ref.shape[0] < _SSIM_WINDOW or ref.shape[1] < _SSIM_WINDOW:
        raise ValueError(
            f"image {ref.shape[:2]} is smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} SSIM window"
        )
    kernel = _gaussian_kernel()
    return np.array(
        [_ssim_band(ref[:, :, b], est[:, :, b], peak, kernel) for b in range(ref.shape[2])]
    )


def m_ssim(ref, est, peak=1.0):
    """Mean over bands of the per-band SSIM."""
    return float(band_ssim(ref, est, peak).mean())


def _msa(ref, est):
    rmat = core.unfold3(ref)
    emat = core.unfold3(est)
    dot = np.sum(rmat * emat, axis=0)
    rr = np.sum(rmat * rmat, axis=0)
    ee = np.sum(emat * emat, axis=0)
    valid = (rr > 0) & (ee > 0)
    skipped = int(valid.size - np.count_nonzero(valid))
    if not valid.any():
        raise ValueError("every pixel has a zero-norm spectrum")
    num = dot[valid]
    den2 = rr[valid] * ee[valid]
    cos = np.clip(num / np.sqrt(den2), -1.0, 1.0)
    # snap numerically (anti)parallel pairs so angles of 0 / 180 are exact
    cos = np.where(num * num >= den2, np.sign(num), cos)
    return float(np.degrees(np.arccos(cos)).mean()), skipped


def msa(ref, est):
    """Mean spectral angle over pixels, in degrees.

    The cosine is clamped to [-1, 1]; pixels where either spectrum has zero
    norm are skipped (their count is available via :func:`evaluate`).
    """
    ref, est = _check_pair(ref, est)
    return _msa(ref, est)[0]


def evaluate(ref, est, peak=1.0, per_band_peak=False):
    """Compute the full :class:`MetricReport` for a reconstruction.

    With ``per_band_peak`` the PSNR uses each band's reference maximum as
    its peak; SSIM always uses the scalar ``peak`` as its dynamic range.
    """
    ref, est = _check_pair(ref, est)
    psnr_bands = band_psnr(ref, est, None if per_band_peak else peak)
    ssim_bands = band_ssim(ref, est, peak)
    angle, skipped = _msa(ref, est)
    return MetricReport(
        m_psnr=float(psnr_bands.mean()),
        m_ssim=float(ssim_bands.mean()),
        msa=angle,
        band_psnr=psnr_bands,
        band_ssim=ssim_bands,
        msa_skipped=skipped,
    )


def singular_spectrum(cube):
    """Singular values (descending) of the cube's band-by-pixel unfolding."""
    cube = core.check_cube(cube)
    return np.linalg.svd(core.unfold3(cube), compute_uv=False)


def mean_log_singular_spectrum(patches):
    """Element-wise mean of log10 singular values across same-size patches.

    Exact zeros map to -inf, which propagates through the mean; realistic
    data stays finite.
    """
    patches = list(patches)
    if not patches:
        raise ValueError("at least one patch is required")
    spectra = [singular_spectrum(p) for p in patches]
    lengths = {s.shape[0] for s in spectra}
    if len(lengths) != 1:
        raise ValueError("patches have inconsistent singular spectrum lengths")
    with np.errstate(divide="ignore"):
        logs = np.log10(np.stack(spectra))
    return logs.mean(axis=0)
