"""Dense kernels used by the fusion solves: top-k SVD and QR least squares.

Both wrap LAPACK (via numpy/scipy) behind explicit numerical contracts:
the SVD returns descending singular triplets with orthonormal factors, and
the least-squares solve goes through a column-pivoted QR factorisation,
which equals the normal-equation solution on full-column-rank systems but
does not square the condition number.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg

__all__ = ["RANK_RTOL", "RankDeficiencyError", "SvdResult", "LstsqResult", "truncated_svd", "lstsq"]

# Relative tolerance on the pivoted-QR diagonal below which a column is
# declared numerically dependent.
RANK_RTOL = 1e-10


class RankDeficiencyError(ArithmeticError):
    """A least-squares system has numerically dependent columns."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class SvdResult(NamedTuple):
    u: np.ndarray  # (rows, k), orthonormal columns
    s: np.ndarray  # (k,), descending
    v: np.ndarray  # (cols, k), orthonormal columns


class LstsqResult(NamedTuple):
    x: np.ndarray
    residual: float


def truncated_svd(mat, k):
    """Top-k singular triplets of a dense matrix, so mat ~= u @ diag(s) @ v.T.

    Singular values are sorted descending. The rank-k projector v @ v.T is
    unique whenever s[k-1] > s[k]; individual columns of u/v are only
    defined up to sign (or rotation on repeated singular values).
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {mat.shape}")
    if not np.isfinite(mat).all():
        raise ValueError("matrix contains non-finite entries")
    if not 1 <= k <= min(mat.shape):
        raise ValueError(f"k must be in [1, {min(mat.shape)}], got {k}")
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    return SvdResult(u[:, :k].copy(), s[:k].copy(), vt[:k].T.copy())


def lstsq(phi, y):
    """Minimise ||y - phi @ x||_2 for a tall full-column-rank system.

    Solved through column-pivoted QR. If the smallest diagonal of the R
    factor falls below RANK_RTOL times the largest, the system is declared
    rank deficient and the offending (original) column index is reported.
    Returns the solution together with the residual 2-norm.
    """
    phi = np.asarray(phi, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if phi.ndim != 2:
        raise ValueError(f"expected a 2-D system matrix, got shape {phi.shape}")
    if y.ndim != 1 or y.shape[0] != phi.shape[0]:
        raise ValueError(f"right-hand side shape {y.shape} does not match {phi.shape[0]} rows")
    rows, cols = phi.shape
    if rows < cols:
        raise ValueError(f"system is underdetermined: {rows} rows < {cols} columns")
    if not np.isfinite(phi).all():
        raise ValueError("system matrix contains non-finite entries")
    q, r, perm = scipy.linalg.qr(phi, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    dmax = diag.max()
    if dmax == 0.0:
        raise RankDeficiencyError(
            f"system matrix is zero (column {int(perm[0])})", column=int(perm[0])
        )
    bad = np.flatnonzero(diag < RANK_RTOL * dmax)
    if bad.size:
        column = int(perm[bad[0]])
        raise RankDeficiencyError(
            f"numerical rank {int(bad[0])} < {cols} columns (column {column} is dependent)",
            column=column,
        )
    z = scipy.linalg.solve_triangular(r, q.T @ y)
    x = np.empty_like(z)
    x[perm] = z
    residual = float(np.linalg.norm(y - phi @ x))
    return LstsqResult(x, residual)
