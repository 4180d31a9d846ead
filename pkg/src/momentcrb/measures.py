"""Object distributions, point-spread functions, and Poisson photon sampling.

Coordinates are dimensionless, normalized to the point-spread-function
width.  An object is a nonnegative measure F on the line with total mass
theta_0 and moments theta_j = int y^j dF(y).  The imaging system converts
source mass into photons at rate tau, so the expected photon number is
N = tau * theta_0.  Direct imaging records photon arrival positions
x = y + z with z distributed as |psi|^2; SPADE records per-mode photon
counts with mode likelihood H(q|y) / tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import TruncationTooSmall
from .orthopoly import double_factorial, spherical_bessel, spherical_bessel_table

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_TAIL_TOL = 1e-12


@lru_cache(maxsize=32)
def _leggauss(n):
    return np.polynomial.legendre.leggauss(n)


def _gl_nodes(lo, hi, n):
    x, w = _leggauss(n)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * x, half * w


# ---------------------------------------------------------------------------
# object models

@dataclass(frozen=True)
class PointSources:
    """Finitely many point masses at strictly increasing positions."""

    positions: tuple
    weights: tuple

    def __post_init__(self):
        pos = tuple(float(p) for p in self.positions)
        wts = tuple(float(w) for w in self.weights)
        if len(pos) != len(wts) or not pos:
            raise ValueError("positions and weights must be nonempty and match")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("positions must be strictly increasing")
        if any(w < 0 for w in wts):
            raise ValueError("weights must be nonnegative")
        if sum(wts) <= 0:
            raise ValueError("total mass must be positive")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", wts)

    @property
    def total_mass(self):
        return sum(self.weights)

    @property
    def support_radius(self):
        return max(abs(p) for p in self.positions)

    def moment(self, j):
        y = np.asarray(self.positions)
        w = np.asarray(self.weights)
        return float(w @ y**j)

    def quadrature(self, n=None):
        """Nodes and mass weights representing F exactly."""
        return np.asarray(self.positions), np.asarray(self.weights)

    def sample_positions(self, rng, n):
        w = np.asarray(self.weights)
        return rng.choice(np.asarray(self.positions), size=n, p=w / w.sum())


@dataclass(frozen=True)
class FlatTop:
    """Uniform density of total mass theta0 on [-delta/2, delta/2]."""

    theta0: float
    delta: float

    def __post_init__(self):
        if self.theta0 <= 0:
            raise ValueError("theta0 must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")

    @property
    def total_mass(self):
        return self.theta0

    @property
    def support_radius(self):
        return self.delta / 2.0

    def moment(self, j):
        # odd moments vanish by symmetry; returned as exact zeros
        if j % 2:
            return 0.0
        return self.theta0 * (self.delta / 2.0) ** j / (j + 1)

    def quadrature(self, n=None):
        if self.delta == 0.0:
            return np.array([0.0]), np.array([self.theta0])
        x, w = _gl_nodes(-self.delta / 2.0, self.delta / 2.0, n or 200)
        return x, w * (self.theta0 / self.delta)

    def sample_positions(self, rng, n):
        if self.delta == 0.0:
            return np.zeros(n)
        return rng.uniform(-self.delta / 2.0, self.delta / 2.0, size=n)


@dataclass(frozen=True)
class Tabulated:
    """Density tabulated on a sorted grid, integrated by the trapezoid rule."""

    grid: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if grid.ndim != 1 or grid.shape != dens.shape or grid.size < 2:
            raise ValueError("grid and density must be matching 1-D arrays")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(dens < 0):
            raise ValueError("density must be nonnegative")
        if np.trapezoid(dens, grid) <= 0:
            raise ValueError("total mass must be positive")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", dens)

    @property
    def total_mass(self):
        return float(np.trapezoid(self.density, self.grid))

    @property
    def support_radius(self):
        return float(max(abs(self.grid[0]), abs(self.grid[-1])))

    def moment(self, j):
        return float(np.trapezoid(self.density * self.grid**j, self.grid))

    def quadrature(self, n=None):
        h = np.diff(self.grid)
        w = np.zeros_like(self.grid)
        w[:-1] += h / 2.0
        w[1:] += h / 2.0
        return self.grid, w * self.density

    def sample_positions(self, rng, n):
        # piecewise-linear density: pick a cell, then invert the linear CDF
        g, d = self.grid, self.density
        cell_mass = 0.5 * (d[:-1] + d[1:]) * np.diff(g)
        idx = rng.choice(len(cell_mass), size=n, p=cell_mass / cell_mass.sum())
        u = rng.random(n)
        d0, d1 = d[idx], d[idx + 1]
        slope = d1 - d0
        disc = d0**2 + slope * u * (d0 + d1)
        t = np.where(
            np.abs(slope) > 1e-300,
            (np.sqrt(np.maximum(disc, 0.0)) - d0) / np.where(slope == 0, 1.0, slope),
            u,
        )
        return g[idx] + t * (g[idx + 1] - g[idx])


# ---------------------------------------------------------------------------
# point-spread functions

@dataclass(frozen=True)
class GaussianPSF:
    """Gaussian amplitude psi(z) = (2 pi)^(-1/4) exp(-z^2/4).

    The intensity H(x) = tau |psi(x)|^2 is tau times the standard normal
    density, and the matched mode basis is Hermite-Gaussian, for which
    H(q|y) / tau is a Poisson distribution over q with mean y^2 / 4.
    """

    tau: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    def amplitude(self, z):
        z = np.asarray(z, dtype=float)
        return (2.0 * math.pi) ** -0.25 * np.exp(-z * z / 4.0)

    def transfer(self, k):
        k = np.asarray(k, dtype=float)
        return (2.0 / math.pi) ** 0.25 * np.exp(-k * k)

    def intensity(self, x):
        x = np.asarray(x, dtype=float)
        return self.tau * np.exp(-x * x / 2.0) / _SQRT_2PI

    def intensity_moment(self, ell):
        """int H(x) x^ell dx: tau (ell-1)!! for even ell, 0 for odd."""
        if ell % 2:
            return 0.0
        return self.tau * float(double_factorial(ell - 1))

    def mode_weight(self, q, y):
        """H(q|y) for one mode index, vectorized over y."""
        y = np.asarray(y, dtype=float)
        lam = y * y / 4.0
        if q == 0:
            return self.tau * np.exp(-lam)
        with np.errstate(divide="ignore"):
            logp = q * np.log(np.where(lam > 0, lam, 1.0)) - lam - math.lgamma(q + 1)
        return self.tau * np.where(lam > 0, np.exp(logp), 0.0)

    def mode_weights(self, Q, y):
        """H(q|y) for q = 0..Q; shape (Q+1,) + shape(y)."""
        y = np.asarray(y, dtype=float)
        lam = y * y / 4.0
        out = np.empty((Q + 1,) + lam.shape)
        out[0] = np.exp(-lam)
        for q in range(1, Q + 1):
            out[q] = out[q - 1] * lam / q
        return self.tau * out


@dataclass(frozen=True)
class BandlimitedSincPSF:
    """Hard bandwidth limit: Psi(k) = 1/sqrt(2) for |k| < 1.

    The amplitude is psi(z) = sin(z) / (z sqrt(pi)); the matched mode basis
    is built from Legendre polynomials and gives H(q|y) = tau (2q+1) j_q^2(y)
    with j_q the spherical Bessel function.  Second and higher even moments
    of the intensity are infinite, so direct-imaging moment estimation is
    unavailable for this point-spread function.
    """

    tau: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    def amplitude(self, z):
        z = np.asarray(z, dtype=float)
        out = np.where(z == 0, 1.0, np.sin(np.where(z == 0, 1.0, z)) / np.where(z == 0, 1.0, z))
        return out / math.sqrt(math.pi)

    def transfer(self, k):
        k = np.asarray(k, dtype=float)
        return np.where(np.abs(k) < 1.0, 1.0 / math.sqrt(2.0), 0.0)

    def intensity(self, x):
        a = self.amplitude(x)
        return self.tau * a * a

    def intensity_moment(self, ell):
        if ell == 0:
            return self.tau
        if ell % 2:
            return 0.0
        raise ValueError(
            "even intensity moments of order >= 2 are infinite for the "
            "bandlimited point-spread function"
        )

    def mode_weight(self, q, y):
        jq = spherical_bessel(q, y)
        return self.tau * (2 * q + 1) * jq * jq

    def mode_weights(self, Q, y):
        jq = spherical_bessel_table(Q, y)
        factor = 2.0 * np.arange(Q + 1) + 1.0
        if jq.ndim == 2:
            factor = factor[:, None]
        return self.tau * factor * jq * jq


# ---------------------------------------------------------------------------
# photon samples

@dataclass(frozen=True)
class DirectSample:
    """One realization of direct imaging: photon arrival positions."""

    positions: np.ndarray
    seed: int

    @property
    def n_photons(self):
        return len(self.positions)


@dataclass(frozen=True)
class SpadeSample:
    """One realization of SPADE: photon counts per mode, 0..truncation."""

    counts: np.ndarray
    truncation: int
    seed: int

    @property
    def n_photons(self):
        return int(self.counts.sum())


# ---------------------------------------------------------------------------
# operations

def object_moment(model, j):
    """Object moment theta_j = int y^j dF(y).

    Exact for point sources and flat tops; trapezoid quadrature on the
    user grid for tabulated densities.
    """
    if j < 0:
        raise ValueError("moment order must be nonnegative")
    with np.errstate(over="ignore"):
        val = model.moment(j)
    if not math.isfinite(val):
        raise OverflowError(f"moment of order {j} overflows")
    return val


def expected_photon_number(model, psf):
    """N = tau * theta_0, the mean total photon count."""
    return psf.tau * model.total_mass


def image_intensity_direct(model, psf, x, rtol=1e-12):
    """Direct-imaging intensity f(x) = int H(x - y) dF(y), vectorized in x.

    Exact finite sum for point sources; Gauss-Legendre quadrature with node
    doubling until the result is stable for continuous objects.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(model, PointSources):
        y, w = model.quadrature()
        return psf.intensity(x[..., None] - y) @ w
    prev = None
    for n in (64, 128, 256, 512, 1024):
        y, w = model.quadrature(n)
        cur = psf.intensity(x[..., None] - y) @ w
        if prev is not None and np.allclose(cur, prev, rtol=rtol, atol=1e-300):
            return cur
        prev = cur
    return prev


def image_intensity_spade(model, psf, q, rtol=1e-12):
    """SPADE intensity f(q) = int H(q|y) dF(y) for one mode index q."""
    if isinstance(model, PointSources):
        y, w = model.quadrature()
        return float(psf.mode_weight(q, y) @ w)
    prev = None
    for n in (64, 128, 256, 512, 1024):
        y, w = model.quadrature(n)
        cur = float(psf.mode_weight(q, y) @ w)
        if prev is not None and math.isclose(cur, prev, rel_tol=rtol, abs_tol=1e-300):
            return cur
        prev = cur
    return prev


def spade_intensities(model, psf, Q, rtol=1e-12):
    """f(0..Q) in one pass, sharing the kernel table across modes."""
    if isinstance(model, PointSources):
        y, w = model.quadrature()
        return psf.mode_weights(Q, y) @ w
    prev = None
    for n in (64, 128, 256, 512, 1024):
        y, w = model.quadrature(n)
        cur = psf.mode_weights(Q, y) @ w
        if prev is not None and np.allclose(cur, prev, rtol=rtol, atol=1e-300):
            return cur
        prev = cur
    return prev


def _poisson_tail(lam, Q):
    """P(q > Q) for a Poisson distribution, summed upward from Q + 1."""
    if lam == 0.0:
        return 0.0
    term = math.exp(-lam + (Q + 1) * math.log(lam) - math.lgamma(Q + 2))
    total = 0.0
    q = Q + 1
    while term > 1e-30 * (1.0 + total) and q < Q + 10000:
        total += term
        q += 1
        term *= lam / q
    return total


def mode_tail_mass(model, psf, Q):
    """Upper bound on the per-photon probability of landing beyond mode Q."""
    ymax = model.support_radius
    if isinstance(psf, GaussianPSF):
        return _poisson_tail(ymax * ymax / 4.0, Q)
    # Legendre kernel: use the completeness sum over a support sample
    ys = np.linspace(-ymax, ymax, 21) if ymax > 0 else np.array([0.0])
    covered = psf.mode_weights(Q, ys).sum(axis=0) / psf.tau
    return float(np.max(1.0 - covered))


def default_mode_truncation(model, psf):
    """Smallest Q (at least 16) with per-photon tail mass below 1e-12.

    The Gaussian rule (Poisson tail at lambda = (y_max / 2)^2) is used as
    the starting point for both kernels; for the Legendre kernel the
    completeness sum is then checked and Q grown if needed.
    """
    Q = 16
    while mode_tail_mass(model, psf, Q) >= _TAIL_TOL:
        Q += 8
        if Q > 4096:
            raise TruncationTooSmall("no admissible truncation below 4096")
    return Q


def check_mode_truncation(model, psf, Q):
    tail = mode_tail_mass(model, psf, Q)
    if tail >= _TAIL_TOL:
        raise TruncationTooSmall(
            f"tail mass {tail:.3e} beyond mode {Q} exceeds {_TAIL_TOL:g}"
        )


def sample_direct(model, psf, seed):
    """Draw one direct-imaging realization, deterministic in the seed.

    The photon number L is Poisson with mean N; each position is y + z
    with y from F / theta_0 and z standard normal.  Gaussian PSF only.
    """
    if not isinstance(psf, GaussianPSF):
        raise ValueError("direct-imaging sampling requires a Gaussian PSF")
    rng = np.random.default_rng(seed)
    L = rng.poisson(expected_photon_number(model, psf))
    y = model.sample_positions(rng, L)
    z = rng.standard_normal(L)
    return DirectSample(positions=y + z, seed=seed)


def sample_spade(model, psf, Q=None, seed=0):
    """Draw one SPADE realization: per-mode counts up to truncation Q.

    Each photon's source position y is drawn from F / theta_0 and its mode
    from H(q|y) / tau.  The truncation is checked to leave less than 1e-12
    tail mass per photon; photons beyond Q (a < 1e-12 event per photon)
    are discarded.
    """
    if Q is None:
        Q = default_mode_truncation(model, psf)
    else:
        check_mode_truncation(model, psf, Q)
    rng = np.random.default_rng(seed)
    L = rng.poisson(expected_photon_number(model, psf))
    y = model.sample_positions(rng, L)
    if isinstance(psf, GaussianPSF):
        q = rng.poisson(y * y / 4.0)
        q = q[q <= Q]
    else:
        pmf = psf.mode_weights(Q, y) / psf.tau if L else np.zeros((Q + 1, 0))
        cdf = np.cumsum(pmf, axis=0)
        u = rng.random(L)
        q = np.minimum((cdf < u[None, :]).sum(axis=0), Q)
    counts = np.bincount(q, minlength=Q + 1)
    return SpadeSample(counts=counts, truncation=Q, seed=seed)
