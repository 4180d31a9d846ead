"""Triangular-matrix inversion and Hankel diagnostics for moment sequences.

All "infinite" matrices in the imaging theory are materialized as their
leading s x s blocks.  For triangular matrices the leading block of the
inverse equals the inverse of the leading block, so the truncation is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InsufficientMoments, SingularDiagonal


def _is_lower(m):
    return np.all(np.triu(m, 1) == 0)


def _is_upper(m):
    return np.all(np.tril(m, -1) == 0)


def invert_triangular(m, lower=None):
    """Invert a triangular matrix by the growing-block recursion.

    Each step appends one row: with the inverse of the leading s x s block
    in hand, the new off-diagonal row is d = -c @ inv_block / m[s, s] and
    the new diagonal entry is 1 / m[s, s].  The result has the same
    orientation as the input, with exact zeros in the opposite triangle.

    Works on float arrays and on object arrays (e.g. Fraction entries),
    in which case the arithmetic is exact.

    Parameters
    ----------
    m : (s, s) array_like, triangular
    lower : bool, optional
        Orientation; inferred from the zero pattern when omitted.

    Raises
    ------
    SingularDiagonal
        If any diagonal entry is zero.
    ValueError
        If the matrix is not square or not triangular.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if lower is None:
        if _is_lower(m):
            lower = True
        elif _is_upper(m):
            lower = False
        else:
            raise ValueError("matrix is not triangular")
    elif lower and not _is_lower(m):
        raise ValueError("matrix is not lower-triangular")
    elif not lower and not _is_upper(m):
        raise ValueError("matrix is not upper-triangular")

    work = m if lower else m.T
    s = work.shape[0]
    for i in range(s):
        if work[i, i] == 0:
            raise SingularDiagonal(i)

    inv = np.zeros_like(work)
    inv[0, 0] = 1 / work[0, 0]
    for i in range(1, s):
        inv[i, i] = 1 / work[i, i]
        inv[i, :i] = -(work[i, :i] @ inv[:i, :i]) / work[i, i]
    return inv if lower else inv.T


def hankel_from_moments(theta, s):
    """Return the s x s Hankel matrix M[j, k] = theta[j + k]."""
    theta = np.asarray(theta)
    if len(theta) < 2 * s - 1:
        raise InsufficientMoments(
            f"need {2 * s - 1} moments for size {s}, got {len(theta)}"
        )
    j = np.arange(s)
    return theta[j[:, None] + j[None, :]]


INTERIOR = "interior"
BOUNDARY = "boundary"
INVALID = "invalid"


@dataclass(frozen=True)
class MomentValidity:
    """Classification of a moment sequence via its Hankel matrices.

    status is "interior" (all Hankel matrices strictly positive definite,
    i.e. the sequence comes from a measure with infinite support),
    "boundary" (positive semidefinite with saturating rank, support_size
    point masses), or "invalid" (a negative eigenvalue beyond tolerance).
    """

    status: str
    support_size: int | None
    ranks: tuple


def moment_validity(theta, s_max, tol=1e-10):
    """Classify a moment sequence by eigenvalues of its Hankel matrices.

    Eigenvalue thresholds are relative: an eigenvalue counts as positive
    if it exceeds tol * trace, and as negative if it is below -tol * trace.
    For a measure with r point masses the rank of the s x s Hankel matrix
    is min(r, s).
    """
    theta = np.asarray(theta, dtype=float)
    ranks = []
    invalid = False
    for s in range(1, s_max + 1):
        m = hankel_from_moments(theta, s)
        eigs = np.linalg.eigvalsh(m)
        scale = np.trace(m)
        if scale <= 0:
            scale = max(np.abs(m).max(), 1.0)
        if eigs[0] < -tol * scale:
            invalid = True
        ranks.append(int(np.count_nonzero(eigs > tol * scale)))
    ranks = tuple(ranks)
    if invalid:
        return MomentValidity(INVALID, None, ranks)
    if ranks[-1] == s_max:
        return MomentValidity(INTERIOR, None, ranks)
    return MomentValidity(BOUNDARY, ranks[-1], ranks)
