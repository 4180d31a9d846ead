"""Even-moment estimation with spatial-mode demultiplexing (SPADE).

In the mode basis matched to the point-spread function, the mode intensity
f(q) is an upper-triangular combination of the even object moments.  The
influence functions are polynomials in the mode index with closed forms
for both the Gaussian (Hermite-Gaussian modes) and bandlimited (Legendre
modes) kernels, and the bound is the diagonal sum over modes of the
squared influence weighted by f(q).
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import SingularInformation
from .measures import (
    BandlimitedSincPSF,
    GaussianPSF,
    check_mode_truncation,
    default_mode_truncation,
    expected_photon_number,
    image_intensity_spade,
    object_moment,
    spade_intensities,
)
from .orthopoly import double_factorial


def gaussian_influence(j, q, tau):
    """Influence for theta_2j with Hermite-Gaussian modes: 4^j q!/(tau (q-j)!).

    Evaluated as a falling-factorial product so it stays finite for large q;
    vanishes for q < j.  Vectorized over q.
    """
    q = np.asarray(q, dtype=float)
    out = np.ones_like(q)
    for i in range(j):
        out = out * (q - i)
    return np.where(q >= j, 4.0**j * out / tau, 0.0)


def legendre_influence(j, q, tau):
    """Influence for theta_2j with Legendre modes.

    (2j+1)!!(2j-1)!! binom(q+j, 2j) / tau, a degree-2j polynomial of q;
    vanishes for q < j.  Vectorized over q.
    """
    q = np.asarray(q, dtype=float)
    out = np.ones_like(q)
    for i in range(1, 2 * j + 1):
        out = out * (q - j + i) / i
    pref = double_factorial(2 * j + 1) * double_factorial(2 * j - 1) / tau
    return np.where(q >= j, pref * out, 0.0)


def _even_weights(u):
    """Split u over moment degrees into weights over even-degree index j."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u[1::2] != 0.0):
        raise ValueError("SPADE estimates even moments only; odd weights must be 0")
    return u[::2]


def influence_values(psf, u, q):
    """beta~(q) = sum_j u_2j theta~_2j(q) on an array of mode indices."""
    ue = _even_weights(u)
    influ = gaussian_influence if isinstance(psf, GaussianPSF) else legendre_influence
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    for j, w in enumerate(ue):
        if w != 0.0:
            out = out + w * influ(j, q, psf.tau)
    return out


def c_matrix_spade(psf, s):
    """Upper-triangular transfer matrix C[q, j] with H(q|y) = sum_j C[q,j] y^2j.

    Gaussian kernel: C[q, j] = tau (-1)^(j-q) / (4^j q! (j-q)!).
    Legendre kernel: from the Cauchy product of the spherical-Bessel series.
    """
    if s < 1:
        raise ValueError("size must be at least 1")
    c = np.zeros((s, s))
    if isinstance(psf, GaussianPSF):
        for q in range(s):
            for j in range(q, s):
                c[q, j] = (
                    psf.tau * (-1.0) ** (j - q)
                    / (4.0**j * math.factorial(q) * math.factorial(j - q))
                )
        return c
    if not isinstance(psf, BandlimitedSincPSF):
        raise ValueError("unsupported point-spread function")
    for q in range(s):
        # j_q(y) = y^q sum_m a_m y^2m with a_m = (-1)^m / (2^m m! (2q+2m+1)!!)
        a = np.empty(s - q)
        a[0] = 1.0 / double_factorial(2 * q + 1)
        for m in range(1, s - q):
            a[m] = -a[m - 1] / (2 * m * (2 * q + 2 * m + 1))
        for j in range(q, s):
            t = j - q
            c[q, j] = psf.tau * (2 * q + 1) * float(a[: t + 1] @ a[t::-1])
    return c


def f_spade(model, psf, q):
    """Mode intensity f(q) = int H(q|y) dF(y)."""
    return image_intensity_spade(model, psf, q)


def crb_spade(model, psf, u, Q=None):
    """Semiparametric bound for beta = u^T theta (even u) under SPADE.

    Diagonal form sum_q beta~(q)^2 f(q), truncated at Q modes with a
    checked tail bound.
    """
    if Q is None:
        Q = default_mode_truncation(model, psf)
    else:
        check_mode_truncation(model, psf, Q)
    qs = np.arange(Q + 1)
    bt = influence_values(psf, u, qs)
    f = spade_intensities(model, psf, Q)
    return float(bt @ (bt * f))


def constrained_crb_spade(model, psf, u, Q=None):
    """Bound with theta_0 known: the unconstrained bound minus beta^2 / N."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u[0] != 0.0:
        raise ValueError("the constrained bound requires u_0 = 0")
    beta = sum(u[j] * object_moment(model, j) for j in range(len(u)))
    n_photons = expected_photon_number(model, psf)
    return crb_spade(model, psf, u, Q=Q) - beta**2 / n_photons


def estimate_spade(sample, psf, u):
    """Unbiased efficient estimator: sum_q beta~(q) n(q)."""
    counts = np.asarray(sample.counts)
    if counts.sum() == 0:
        return 0.0
    qs = np.arange(len(counts))
    return float(influence_values(psf, u, qs) @ counts)


def truncated_fisher_information_spade(model, psf, p, Q=None):
    """Fisher information of the p-even-moment truncated model.

    J[j, m] = sum_q C[q, j] C[q, m] / f(q) over modes q <= Q.
    """
    if Q is None:
        Q = default_mode_truncation(model, psf)
    s = max(p, Q + 1)
    c = c_matrix_spade(psf, s)[: Q + 1, :p]
    f = spade_intensities(model, psf, Q)
    if np.any(f <= 0):
        raise SingularInformation("mode intensity vanishes below the truncation")
    a = c / np.sqrt(f)[:, None]
    return a.T @ a


def truncated_fisher_crb_spade(model, psf, u, p, Q=None):
    """Parametric bound u^T (J^(p))^{-1} u for p even-moment parameters.

    Nondecreasing in p and converging to crb_spade from below.
    """
    ue = _even_weights(u)
    nz = np.nonzero(ue)[0]
    k = int(nz[-1]) if nz.size else 0
    if p < k + 1:
        raise ValueError("truncation must cover the estimand index")
    j = truncated_fisher_information_spade(model, psf, p, Q=Q)
    uu = np.zeros(p)
    uu[: min(len(ue), p)] = ue[: min(len(ue), p)]
    try:
        sol = np.linalg.solve(j, uu)
    except np.linalg.LinAlgError as exc:
        raise SingularInformation(str(exc)) from exc
    return float(uu @ sol)
