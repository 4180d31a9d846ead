"""Scikit-learn style wrappers around the moment estimators.

These adapters expose the unbiased estimators through the familiar
fit/attributes contract (get_params, set_params, clone-compatible
constructors) so they can sit inside ordinary sklearn tooling.  The
underlying math lives in the direct and spade modules.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from . import direct, spade
from .measures import BandlimitedSincPSF, DirectSample, GaussianPSF, SpadeSample


def _as_positions(X):
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError("expected a single column of photon positions")
        X = X[:, 0]
    return X


class DirectMomentEstimator(BaseEstimator):
    """Moment-combination estimator for direct-imaging photon positions.

    Parameters
    ----------
    weights : sequence of float
        Weights u_j over moment degrees; the estimand is sum_j u_j theta_j.
    tau : float
        Photon conversion factor of the (Gaussian) point-spread function.
    normalized : bool
        If True, use the per-photon average form appropriate when the
        object distribution is known to be normalized (theta_0 = 1);
        requires weights[0] == 0 and a nonempty sample.
    """

    def __init__(self, weights=(0.0, 0.0, 1.0), tau=1.0, normalized=False):
        self.weights = weights
        self.tau = tau
        self.normalized = normalized

    def fit(self, X, y=None):
        """Estimate from photon positions X (1-D array or single column)."""
        positions = _as_positions(X)
        psf = GaussianPSF(tau=self.tau)
        sample = DirectSample(positions=positions, seed=0)
        if self.normalized:
            est = direct.estimate_direct_normalized(sample, psf, self.weights)
        else:
            est = direct.estimate_direct(sample, psf, self.weights)
        self.estimate_ = est
        self.n_photons_ = len(positions)
        return self


class SpadeMomentEstimator(BaseEstimator):
    """Even-moment estimator for SPADE photon counts.

    X is the vector of per-mode counts n(0), n(1), ...; the estimand is
    sum_j u_j theta_j with even-supported weights u.
    """

    def __init__(self, weights=(0.0, 0.0, 1.0), tau=1.0, psf="gaussian"):
        self.weights = weights
        self.tau = tau
        self.psf = psf

    def _psf(self):
        if self.psf == "gaussian":
            return GaussianPSF(tau=self.tau)
        if self.psf == "bandlimited":
            return BandlimitedSincPSF(tau=self.tau)
        raise ValueError(f"unknown psf {self.psf!r}")

    def fit(self, X, y=None):
        counts = check_array(X, ensure_2d=False, dtype=int)
        if counts.ndim != 1:
            raise ValueError("expected a 1-D vector of mode counts")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        sample = SpadeSample(counts=counts, truncation=len(counts) - 1, seed=0)
        self.estimate_ = spade.estimate_spade(sample, self._psf(), self.weights)
        self.n_photons_ = int(counts.sum())
        return self
