"""Moment estimation with direct imaging.

The image moments phi are related to the object moments theta by a
lower-triangular moment-transfer matrix C built from the intensity moments
of the point-spread function.  Inverting C gives polynomial influence
functions, the semiparametric bound equals the intensity-weighted squared
norm of the influence, and summing the influence over the recorded photon
positions gives an unbiased estimator whose variance attains the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptySample, SingularInformation
from .linalg import invert_triangular
from .measures import expected_photon_number, image_intensity_direct, object_moment
from . import measures


def _trimmed_weights(u):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    nz = np.nonzero(u)[0]
    k = int(nz[-1]) if nz.size else 0
    return u[: k + 1], k


def c_matrix_direct(psf, s):
    """Moment-transfer matrix C[j, k] = binom(j, k) * int H(x) x^(j-k) dx.

    Lower-triangular with diagonal entries equal to tau.  Raises ValueError
    for point-spread functions with infinite intensity moments (the
    bandlimited case).
    """
    if s < 1:
        raise ValueError("size must be at least 1")
    c = np.zeros((s, s))
    mom = [psf.intensity_moment(ell) for ell in range(s)]
    for j in range(s):
        for k in range(j + 1):
            c[j, k] = math.comb(j, k) * mom[j - k]
    return c


@dataclass(frozen=True)
class InfluencePolynomial:
    """The influence function beta~(x) as a polynomial in x."""

    coefficients: np.ndarray

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)


def influence_direct(psf, u):
    """Influence polynomial beta~(x) = u^T C^{-1} (1, x, x^2, ...)^T."""
    u, k = _trimmed_weights(u)
    cinv = invert_triangular(c_matrix_direct(psf, k + 1), lower=True)
    return InfluencePolynomial(coefficients=u @ cinv)


def _image_moment_table(model, psf, kmax):
    """phi_0 .. phi_kmax via phi = C theta (exact, finite sums)."""
    theta = np.array([object_moment(model, j) for j in range(kmax + 1)])
    return c_matrix_direct(psf, kmax + 1) @ theta


def crb_direct(model, psf, u):
    """Semiparametric bound for beta = u^T theta under direct imaging.

    Evaluated as b^T V b where b are the influence coefficients and
    V[j, m] = phi_{j+m} are the image moments, propagated exactly from the
    object moments through the transfer matrix.
    """
    u, k = _trimmed_weights(u)
    b = influence_direct(psf, u).coefficients
    phi = _image_moment_table(model, psf, 2 * k)
    jj = np.arange(k + 1)
    v = phi[jj[:, None] + jj[None, :]]
    return float(b @ v @ b)


def constrained_crb_direct(model, psf, u):
    """Bound when theta_0 is known: the unconstrained bound minus beta^2 / N.

    This is the projection form (1/N)[nu_0(beta0~^2) - beta^2] with
    beta0~ = N beta~, written in terms of the unconstrained bound.
    Requires u_0 = 0.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u[0] != 0.0:
        raise ValueError("the constrained bound requires u_0 = 0")
    beta = sum(u[j] * object_moment(model, j) for j in range(len(u)))
    n_photons = expected_photon_number(model, psf)
    return crb_direct(model, psf, u) - beta**2 / n_photons


def estimate_direct(sample, psf, u):
    """Unbiased efficient estimator: the influence summed over photons."""
    if sample.n_photons == 0:
        return 0.0
    return float(np.sum(influence_direct(psf, u)(sample.positions)))


def estimate_direct_normalized(sample, psf, u):
    """Near-efficient estimator for a normalized object (theta_0 = 1 known).

    Averages beta0~(x) = u^T (C / tau)^{-1} (1, x, ...)^T over the photons;
    conditionally unbiased given the photon count L, with conditional
    variance [nu_0(beta0~^2) - beta^2] / L.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u[0] != 0.0:
        raise ValueError("the normalized estimator requires u_0 = 0")
    if sample.n_photons == 0:
        raise EmptySample("normalized estimator needs at least one photon")
    coeffs = psf.tau * influence_direct(psf, u).coefficients
    return float(np.mean(np.polynomial.polynomial.polyval(sample.positions, coeffs)))


# ---------------------------------------------------------------------------
# truncated-Fisher oracle

def _score_numerators(psf, x, p):
    """T_j(x) = (-1)^j H^(j)(x) / j! for j < p, via the Hermite recurrence."""
    if not isinstance(psf, measures.GaussianPSF):
        raise ValueError("score functions implemented for the Gaussian PSF only")
    h0 = psf.intensity(x)
    t = np.empty((p, x.size))
    he_prev = np.zeros_like(x)
    he = np.ones_like(x)
    fact = 1.0
    for j in range(p):
        t[j] = h0 * he / fact
        he_prev, he = he, x * he - j * he_prev
        fact *= j + 1
    return t


def truncated_fisher_information_direct(model, psf, p, half_width=None, n_nodes=2001):
    """Fisher information of the p-moment truncated model, by quadrature.

    J[j, m] = int T_j(x) T_m(x) / f(x) dx with T_j the score numerators.
    """
    if half_width is None:
        half_width = 12.0 + model.support_radius
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    x = half_width * x
    w = half_width * w
    f = image_intensity_direct(model, psf, x)
    if np.any(f <= 0):
        raise SingularInformation("image intensity vanishes on the quadrature domain")
    t = _score_numerators(psf, x, p)
    a = t * np.sqrt(w / f)
    return a @ a.T


def _bound_from_information(j, u, p):
    uu = np.zeros(p)
    uu[: min(len(u), p)] = u[: min(len(u), p)]
    try:
        sol = np.linalg.solve(j, uu)
    except np.linalg.LinAlgError as exc:
        raise SingularInformation(str(exc)) from exc
    return float(uu @ sol)


def truncated_fisher_crb_direct(model, psf, u, p):
    """Parametric bound u^T (J^(p))^{-1} u for the p-moment truncation.

    Nondecreasing in p and converging to crb_direct from below; serves as
    an independent oracle for the semiparametric bound.
    """
    u, k = _trimmed_weights(u)
    if p < k + 1:
        raise ValueError("truncation must cover the estimand index")
    j = truncated_fisher_information_direct(model, psf, p)
    return _bound_from_information(j, u, p)


def schur_constrained_crb_direct(model, psf, u, p):
    """Constrained bound from the theta_0-deleted information submatrix.

    Removing the row and column of the known parameter theta_0 from the
    truncated Fisher information and inverting is the Schur-complement
    route to the constrained bound; it cross-checks the projection form.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u[0] != 0.0:
        raise ValueError("the constrained bound requires u_0 = 0")
    u, k = _trimmed_weights(u)
    if p < k + 1:
        raise ValueError("truncation must cover the estimand index")
    j = truncated_fisher_information_direct(model, psf, p)
    return _bound_from_information(j[1:, 1:], u[1:], p - 1)
