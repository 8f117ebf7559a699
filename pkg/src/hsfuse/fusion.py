"""Non-iterative dual-measurement fusion reconstruction.

The scene is modelled as spectrally low rank: the band-by-pixel unfolding X
factors as E @ W with a (bands x k) spectral basis E and (k x pixels)
coefficients W. W is estimated from the multiband image (top right singular
vectors of its unfolding, so its rows are orthonormal and all scale lives in
E), and E is solved from the coded image through a structured sensing matrix
whose row for pixel p is the Kronecker product of that pixel's coefficient
and mask spectra. ``fuse`` runs the solve once over the whole image;
``pfuse`` solves overlapping spatial windows independently (optionally in
parallel) and averages the overlaps.

The layout of vec(E) is defined operationally: stacking E column by column
makes ``assemble_phi_w(C, W) @ vec(E)`` equal the pixel-major ravel of
``simulate_cassi(fold3(E @ W), C)`` for every E, W, C of matching shape.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import core, numeric
from .forward import validate_response

__all__ = [
    "FusionConfig",
    "CoefficientEstimate",
    "PatchStats",
    "estimate_coefficients",
    "assemble_phi_w",
    "assemble_phi_rgb",
    "solve_basis",
    "fuse",
    "pfuse",
]


@dataclass(frozen=True)
class FusionConfig:
    """Settings for patch-based fusion.

    ``rank`` is the spectral subspace dimension (bounded by the multiband
    channel count), ``patch_rows``/``patch_cols``/``stride`` drive the
    overlapping grid, ``improved`` switches the basis solve to the joint
    coded+multiband system, and ``rank_tol`` is the relative singular-value
    threshold for shrinking the rank on degenerate (flat) patches.
    """

    rank: int = 3
    patch_rows: int = 100
    patch_cols: int = 100
    stride: int = 50
    improved: bool = False
    rank_tol: float = 1e-10

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.patch_rows < 1 or self.patch_cols < 1:
            raise ValueError("patch dimensions must be positive")
        if self.stride < 1 or self.stride > min(self.patch_rows, self.patch_cols):
            raise ValueError("stride must satisfy 1 <= stride <= min(patch dims)")
        if not 0.0 <= self.rank_tol < 1.0:
            raise ValueError(f"rank_tol must be in [0, 1), got {self.rank_tol}")


class CoefficientEstimate(NamedTuple):
    coefficients: np.ndarray  # (rank, pixels), orthonormal rows
    rank: int  # effective rank after shrinkage
    singular_values: np.ndarray


@dataclass
class PatchStats:
    """Per-patch solve record collected by :func:`pfuse`.

    ``coefficients``/``basis`` are None for all-zero patches, which are
    reconstructed as zero without a solve.
    """

    origin: tuple
    rank: int
    residual: float
    coefficients: Optional[np.ndarray]
    basis: Optional[np.ndarray]


def estimate_coefficients(z, k, rank_tol=1e-10):
    """Coefficients from the multiband image: top-k right singular vectors.

    Returns W with orthonormal rows (W @ W.T = I), shaped (k_eff, pixels).
    k_eff < k only when trailing singular values fall below
    rank_tol * sigma_1, i.e. the data genuinely has fewer spectral degrees
    of freedom; the shrunk rank is reported in the result.
    """
    z = core.check_cube(z, "multiband measurement")
    channels = z.shape[2]
    if k < 1:
        raise ValueError(f"rank must be >= 1, got {k}")
    if k > channels:
        raise ValueError(f"rank {k} exceeds the channel count {channels}")
    zmat = core.unfold3(z)
    svd = numeric.truncated_svd(zmat, min(k, min(zmat.shape)))
    if svd.s[0] == 0.0:
        raise ValueError("multiband measurement is identically zero (rank 0)")
    keep = int(np.count_nonzero(svd.s > rank_tol * svd.s[0]))
    return CoefficientEstimate(svd.v[:, :keep].T.copy(), keep, svd.s[:keep].copy())


def assemble_phi_w(mask, w):
    """Structured sensing matrix of the coded camera under coefficients W.

    Row p is kron(W[:, p], C[p, :]) with C[p, :] the mask spectrum at pixel
    p, so the result has shape (pixels, k*bands) and
    ``assemble_phi_w(C, W) @ vec(E)`` equals the pixel-major ravel of
    ``simulate_cassi(fold3(E @ W), C)``.
    """
    mask = core.check_cube(mask, "mask")
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError(f"coefficients must be 2-D, got shape {w.shape}")
    rows, cols, bands = mask.shape
    k, pixels = w.shape
    if pixels != rows * cols:
        raise ValueError(f"coefficients cover {pixels} pixels, mask has {rows * cols}")
    mask_px = mask.reshape(rows * cols, bands, order="F")
    return np.einsum("tp,pb->ptb", w, mask_px).reshape(pixels, k * bands)


def assemble_phi_rgb(response, w):
    """Structured sensing matrix of the multiband camera under coefficients W.

    Analogous to :func:`assemble_phi_w` with the response columns in place
    of mask spectra: shape (channels*pixels, k*bands), rows ordered with all
    pixels of channel 0 first, and
    ``assemble_phi_rgb(A, W) @ vec(E)`` equals the pixel-major ravel of
    ``simulate_multiband(fold3(E @ W), A)``.
    """
    response = validate_response(response)
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError(f"coefficients must be 2-D, got shape {w.shape}")
    bands, channels = response.shape
    k, pixels = w.shape
    return np.einsum("tp,bc->cptb", w, response).reshape(channels * pixels, k * bands)


def _system(y, mask, w, improved, z, response):
    """Assemble the least-squares system (phi, rhs) for the basis solve."""
    phi = assemble_phi_w(mask, w)
    rhs = y.ravel(order="F")
    if improved:
        if z is None or response is None:
            raise ValueError("the improved solve requires the multiband measurement and its response")
        response = validate_response(response, bands=mask.shape[2])
        z = core.check_cube(z, "multiband measurement")
        if z.shape[:2] != y.shape or z.shape[2] != response.shape[1]:
            raise ValueError(
                f"multiband shape {z.shape} does not match image {y.shape} "
                f"and {response.shape[1]} channels"
            )
        phi = np.vstack((phi, assemble_phi_rgb(response, w)))
        rhs = np.concatenate((rhs, z.ravel(order="F")))
    return phi, rhs


def solve_basis(y, mask, w, improved=False, z=None, response=None):
    """Spectral basis from the coded image given coefficients W.

    Solves min ||vec(Y) - phi_W @ e|| by QR least squares and reshapes e to
    (bands, k). With ``improved=True`` the multiband measurement joins the
    stacked system through its own structured matrix (roughly 4x the work);
    on consistent data both paths give the same E @ W.
    """
    y = np.asarray(y, dtype=np.float64)
    mask = core.check_cube(mask, "mask")
    if y.ndim != 2 or y.shape != mask.shape[:2]:
        raise ValueError(f"coded image shape {y.shape} does not match mask {mask.shape[:2]}")
    phi, rhs = _system(y, mask, np.asarray(w, dtype=np.float64), improved, z, response)
    sol = numeric.lstsq(phi, rhs)
    return sol.x.reshape(mask.shape[2], -1, order="F")


def _check_measurements(y, z, mask):
    y = np.asarray(y, dtype=np.float64)
    z = core.check_cube(z, "multiband measurement")
    mask = core.check_cube(mask, "mask")
    if y.ndim != 2:
        raise ValueError(f"coded image must be 2-D, got shape {y.shape}")
    if y.shape != mask.shape[:2] or z.shape[:2] != mask.shape[:2]:
        raise ValueError(
            f"inconsistent spatial shapes: coded {y.shape}, multiband {z.shape[:2]}, "
            f"mask {mask.shape[:2]}"
        )
    return y, z, mask


def _fuse_block(y, z, mask, rank, improved, response, rank_tol):
    """Shared fusion core for one image or patch; returns (cube, stats fields)."""
    rows, cols, bands = mask.shape
    if not z.any():
        if y.any():
            raise ValueError("multiband measurement is identically zero (rank 0)")
        # nothing was measured at all: the zero cube is the exact solution
        return np.zeros((rows, cols, bands)), (0, 0.0, None, None)
    est = estimate_coefficients(z, rank, rank_tol)
    phi, rhs = _system(y, mask, est.coefficients, improved, z, response)
    sol = numeric.lstsq(phi, rhs)
    basis = sol.x.reshape(bands, est.rank, order="F")
    cube = core.fold3(basis @ est.coefficients, rows, cols)
    return cube, (est.rank, sol.residual, est.coefficients, basis)


def fuse(y, z, mask, rank, improved=False, response=None, rank_tol=1e-10):
    """Global fusion of one coded and one multiband measurement.

    Coefficients come from the multiband image, the spectral basis from the
    coded image; the reconstruction is fold3(E @ W). Requires more pixels
    than basis unknowns (rows*cols > rank*bands).
    """
    y, z, mask = _check_measurements(y, z, mask)
    rows, cols, bands = mask.shape
    if rank > z.shape[2]:
        raise ValueError(f"rank {rank} exceeds the channel count {z.shape[2]}")
    if rows * cols <= rank * bands:
        raise ValueError(
            f"image area {rows * cols} must exceed rank*bands = {rank * bands}"
        )
    cube, _ = _fuse_block(y, z, mask, rank, improved, response, rank_tol)
    return cube


def pfuse(y, z, mask, config, workers=1, response=None, stats=None):
    """Patch-based fusion over an overlapping grid, averaged on overlaps.

    Every grid window is solved independently (with ``workers`` > 1, on a
    thread pool); aggregation then runs in grid order on the main thread,
    so the output is bit-identical for any worker count. Patches whose
    multiband data is numerically rank deficient are solved at their
    effective rank; all-zero patches reconstruct as zero. Pass a list as
    ``stats`` to receive one :class:`PatchStats` per patch.

    The patch area must exceed the number of basis unknowns
    (patch_rows*patch_cols > rank*bands), otherwise the per-patch systems
    cannot have full column rank.
    """
    y, z, mask = _check_measurements(y, z, mask)
    rows, cols, bands = mask.shape
    m, n = config.patch_rows, config.patch_cols
    if config.rank > z.shape[2]:
        raise ValueError(f"rank {config.rank} exceeds the channel count {z.shape[2]}")
    if m * n <= config.rank * bands:
        raise ValueError(
            f"patch area m*n = {m * n} must exceed rank*bands = {config.rank * bands}"
        )
    if config.improved and response is None:
        raise ValueError("the improved solve requires the multiband response")
    grid = core.make_grid(rows, cols, m, n, config.stride)

    def solve(origin):
        i0, j0 = origin
        yp = y[i0 : i0 + m, j0 : j0 + n]
        zp = z[i0 : i0 + m, j0 : j0 + n, :]
        cp = mask[i0 : i0 + m, j0 : j0 + n, :]
        try:
            return _fuse_block(yp, zp, cp, config.rank, config.improved, response, config.rank_tol)
        except numeric.RankDeficiencyError as err:
            raise numeric.RankDeficiencyError(
                f"patch at origin ({i0}, {j0}): {err}", column=err.column
            ) from err
        except ValueError as err:
            raise ValueError(f"patch at origin ({i0}, {j0}): {err}") from err

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, grid.origins))
    else:
        results = [solve(origin) for origin in grid.origins]

    if stats is not None:
        for origin, (_, fields) in zip(grid.origins, results):
            rank_eff, residual, coeff, basis = fields
            stats.append(PatchStats(origin, rank_eff, residual, coeff, basis))
    return core.aggregate([cube for cube, _ in results], grid.origins, rows, cols)
