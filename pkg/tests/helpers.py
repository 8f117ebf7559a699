"""Shared synthetic-scene builders for the test suite."""

import numpy as np

from hsfuse import core


def low_rank_cube(seed, rows, cols, bands, rank, scales=None):
    """Cube with exact spectral rank ``rank``; returns (cube, basis, coeff).

    The basis has orthonormal columns (optionally scaled per column) and the
    coefficients have orthonormal rows, so the cube's singular values equal
    ``scales``.
    """
    rng = np.random.default_rng(seed)
    basis = np.linalg.qr(rng.standard_normal((bands, rank)))[0]
    if scales is not None:
        basis = basis * np.asarray(scales, dtype=float)
    coeff = np.linalg.qr(rng.standard_normal((rows * cols, rank)))[0].T
    return core.fold3(basis @ coeff, rows, cols), basis, coeff


def two_zone_cube(seed, rows, left_cols, gap_cols, right_cols, bands, rank=3):
    """Two regions drawn from mutually orthogonal rank-``rank`` subspaces.

    Columns [0, left_cols) use the first subspace, the next ``gap_cols``
    columns are zero, and the last ``right_cols`` use the second subspace.
    With gap_cols = 0 this is the two-halves scene (global rank 2*rank).
    """
    rng = np.random.default_rng(seed)
    q = np.linalg.qr(rng.standard_normal((bands, 2 * rank)))[0]
    basis_left, basis_right = q[:, :rank], q[:, rank:]
    cols = left_cols + gap_cols + right_cols
    cube = np.zeros((rows, cols, bands))
    w_left = rng.random((rank, rows * left_cols))
    w_right = rng.random((rank, rows * right_cols))
    cube[:, :left_cols, :] = core.fold3(basis_left @ w_left, rows, left_cols)
    cube[:, left_cols + gap_cols :, :] = core.fold3(basis_right @ w_right, rows, right_cols)
    return cube


def smooth_spectra_cube(seed, rows, cols, bands, terms=8, decay=0.45):
    """Full-spectral-rank cube with smooth spectra and decaying energy.

    Spectral factors are low-frequency cosines with geometrically decaying
    weights, so the cube behaves like natural data: approximately low rank
    but never exactly.
    """
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, bands)
    basis = np.stack([np.cos(np.pi * r * t) for r in range(terms)], axis=1)
    basis /= np.linalg.norm(basis, axis=0)
    weights = decay ** np.arange(terms)
    coeff = rng.random((terms, rows * cols))
    return core.fold3((basis * weights) @ coeff, rows, cols)


def dyadic_low_rank_cube(seed, rows, cols, bands, rank):
    """Exact low-rank cube whose values round-trip float32 storage exactly.

    Basis and coefficient entries are small dyadic rationals, so every cube
    value (a short sum of products of 2^-7 and 2^-5 multiples) is exactly
    representable in float32. Values lie in [0, rank/4].
    """
    rng = np.random.default_rng(seed)
    basis = rng.integers(0, 33, size=(bands, rank)).astype(float) / 128.0
    coeff = rng.integers(0, 33, size=(rank, rows * cols)).astype(float) / 32.0
    return core.fold3(basis @ coeff, rows, cols), basis, coeff


def rel_err(estimate, truth):
    return float(np.linalg.norm(estimate - truth) / np.linalg.norm(truth))
