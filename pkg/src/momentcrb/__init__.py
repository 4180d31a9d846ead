"""Semiparametric Cramer-Rao bounds and efficient moment estimators for
incoherent optical imaging, for both direct imaging and spatial-mode
demultiplexing (SPADE), with Poisson Monte Carlo verification."""

from .direct import (
    c_matrix_direct,
    constrained_crb_direct,
    crb_direct,
    estimate_direct,
    estimate_direct_normalized,
    influence_direct,
    truncated_fisher_crb_direct,
)
from .estimators import DirectMomentEstimator, SpadeMomentEstimator
from .linalg import hankel_from_moments, invert_triangular, moment_validity
from .measures import (
    BandlimitedSincPSF,
    DirectSample,
    FlatTop,
    GaussianPSF,
    PointSources,
    SpadeSample,
    Tabulated,
    expected_photon_number,
    image_intensity_direct,
    image_intensity_spade,
    object_moment,
    sample_direct,
    sample_spade,
)
from .montecarlo import TrialReport, compare_methods, fisher_convergence_report, run_trials
from .orthopoly import (
    double_factorial,
    gram_schmidt,
    legendre_derivative_at_one,
    series_coefficients,
    spherical_bessel,
)
from .spade import (
    c_matrix_spade,
    constrained_crb_spade,
    crb_spade,
    estimate_spade,
    f_spade,
    gaussian_influence,
    legendre_influence,
    truncated_fisher_crb_spade,
)

__version__ = "0.1.0"
