"""Orthogonal polynomials and special functions used by the imaging models.

Covers Gram-Schmidt orthonormalization against a moment sequence (via a
Cholesky factorization of the Hankel matrix), Legendre-polynomial
derivatives at the band edge, spherical Bessel functions of the first kind
evaluated by a stable downward recurrence, and double factorials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NotPositiveDefinite
from .linalg import hankel_from_moments, invert_triangular


def double_factorial(m):
    """m!! as an exact integer, with (-1)!! = 1 (empty product)."""
    if m < -1:
        raise ValueError("double factorial requires m >= -1")
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def legendre_derivative_at_one(q, j):
    """j-th derivative of the Legendre polynomial P_q evaluated at 1.

    Equals (2j - 1)!! * binom(q + j, 2j) for q >= j and 0 otherwise,
    computed exactly in integer arithmetic.
    """
    if q < 0 or j < 0:
        raise ValueError("q and j must be nonnegative")
    if q < j:
        return 0
    return double_factorial(2 * j - 1) * math.comb(q + j, 2 * j)


# ---------------------------------------------------------------------------
# spherical Bessel functions

_RESCALE = 1e250


def spherical_bessel_series(q, y, max_terms=400):
    """Ascending-series evaluation of j_q(y).

    j_q(y) = y^q / (2q+1)!! * sum_m (-y^2/2)^m / (m! (2q+3)(2q+5)...(2q+2m+1))

    Accurate when |y| is not large compared with q; used as the small-
    argument branch and as an independent check on the recurrence.
    """
    y = np.asarray(y, dtype=float)
    pref = np.where(
        y == 0.0,
        1.0 if q == 0 else 0.0,
        np.sign(y) ** q * np.exp(
            q * np.log(np.abs(np.where(y == 0.0, 1.0, y)))
            - math.lgamma(2 * q + 2) + q * math.log(2.0) + math.lgamma(q + 1)
        ),
    )
    # (2q+1)!! = (2q+1)! / (2^q q!), folded into the exponent above
    term = np.ones_like(y)
    total = np.ones_like(y)
    half_y2 = 0.5 * y * y
    for m in range(1, max_terms):
        term = term * (-half_y2) / (m * (2 * q + 2 * m + 1))
        total += term
        if np.all(np.abs(term) <= 1e-18 * np.abs(total)):
            break
    return pref * total


def spherical_bessel_table(qmax, y):
    """j_0(y) .. j_qmax(y) by downward (Miller) recurrence.

    The recurrence is started about 20 orders above qmax + |y| with an
    arbitrary seed, run down to order 0 with overflow rescaling, and
    normalized against the closed forms of j_0 and j_1 (whichever is
    larger in magnitude at the given y).

    Parameters
    ----------
    qmax : int
    y : float or 1-D array

    Returns
    -------
    (qmax + 1,) or (qmax + 1, len(y)) array
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    ys = np.atleast_1d(y)
    ay = np.abs(ys)
    out = np.zeros((qmax + 1, ys.size))

    zero = ay == 0.0
    out[0, zero] = 1.0
    nz = ~zero
    if np.any(nz):
        a = ay[nz]
        table = _miller(qmax, a)
        # normalize against whichever of j0, j1 is better conditioned
        r0 = np.sin(a) / a
        r1 = np.sin(a) / a**2 - np.cos(a) / a
        use0 = np.abs(r0) >= np.abs(r1)
        scale = np.where(use0, r0 / table[0], r1 / table[min(1, qmax)]
                         if qmax >= 1 else r0 / table[0])
        if qmax == 0:
            scale = r0 / table[0]
        table = table * scale
        # parity: j_q(-y) = (-1)^q j_q(y)
        signs = np.where(ys[nz] < 0, -1.0, 1.0) ** np.arange(qmax + 1)[:, None]
        out[:, nz] = table * signs
    return out[:, 0] if scalar else out


def _miller(qmax, a):
    """Unnormalized downward recurrence for positive arguments a."""
    start = qmax + 20 + int(np.ceil(a.max()))
    jp = np.zeros_like(a)          # order n + 1
    jc = np.full_like(a, 1e-30)    # order n
    table = np.zeros((qmax + 2, a.size))
    if start <= qmax + 1:
        table[start] = jc
    for n in range(start, 0, -1):
        jm = (2 * n + 1) / a * jc - jp
        jp, jc = jc, jm
        big = np.abs(jc) > _RESCALE
        if np.any(big):
            jc[big] /= _RESCALE
            jp[big] /= _RESCALE
            table[:, big] /= _RESCALE
        if n - 1 <= qmax + 1:
            table[n - 1] = jc
    return table[: qmax + 1]


def spherical_bessel(q, y):
    """Spherical Bessel function of the first kind j_q(y).

    Uses the ascending series for small |y| relative to the order (where
    the downward recurrence gains nothing and the series is exact to
    rounding) and the normalized downward recurrence otherwise.
    Accepts scalar or array y.
    """
    if q < 0:
        raise ValueError("order must be nonnegative")
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    ys = np.atleast_1d(y)
    out = np.empty_like(ys)
    small = np.abs(ys) < max(q / 4.0, 0.5)
    if np.any(small):
        out[small] = spherical_bessel_series(q, ys[small])
    if np.any(~small):
        out[~small] = spherical_bessel_table(q, ys[~small])[q]
    return out[()] if not scalar else float(out[0])


# ---------------------------------------------------------------------------
# orthonormal polynomials against a reference moment sequence

@dataclass(frozen=True)
class PolynomialBasis:
    """Orthonormal polynomials g_j(y) = sum_k coefficients[j, k] y^k.

    The coefficient matrix is lower-triangular with positive diagonal;
    the polynomials satisfy int g_j g_k dF0 = delta_jk for the reference
    measure F0 whose moments are stored alongside.
    """

    coefficients: np.ndarray
    reference_moments: np.ndarray

    @property
    def degree(self):
        return self.coefficients.shape[0] - 1

    def evaluate(self, j, y):
        """Evaluate g_j at y (scalar or array)."""
        return np.polynomial.polynomial.polyval(y, self.coefficients[j])


def gram_schmidt(reference_moments, degree):
    """Orthonormal polynomials for a reference measure given by its moments.

    Computed as the transpose-inverse of the Cholesky factor of the Hankel
    matrix of the reference moments: with M = L L^T, G = L^{-1} satisfies
    G M G^T = I, so the rows of G are the coefficient vectors of an
    orthonormal family.  Requires moments up to degree 2*degree.

    Raises
    ------
    NotPositiveDefinite
        If the reference measure has support smaller than degree + 1.
    """
    moments = np.asarray(reference_moments, dtype=float)
    m = hankel_from_moments(moments, degree + 1)
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            "reference Hankel matrix is not positive definite"
        ) from exc
    g = invert_triangular(chol, lower=True)
    return PolynomialBasis(coefficients=g, reference_moments=moments)


def series_coefficients(theta, basis):
    """Coefficients xi = G theta of the orthogonal-series representation.

    For an object measure dF = sum_j xi_j g_j dF0, each coefficient is
    xi_j = int g_j dF, a finite linear combination of the object moments.
    The inverse map is theta = G^{-1} xi.
    """
    theta = np.asarray(theta, dtype=float)
    g = basis.coefficients
    if len(theta) < g.shape[1]:
        raise ValueError(
            f"need {g.shape[1]} moments for degree {basis.degree}"
        )
    return g @ theta[: g.shape[1]]
