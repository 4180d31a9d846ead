import math
import os

import numpy as np
import pytest

from momentcrb.measures import FlatTop, GaussianPSF, PointSources
from momentcrb.montecarlo import (
    DIRECT,
    SPADE,
    THREADS_ENV,
    TrialReport,
    compare_methods,
    derive_seed,
    fisher_convergence_report,
    run_trials,
)

E2 = np.array([0.0, 0.0, 1.0])


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(12345, 7) == derive_seed(12345, 7)

    def test_distinct_across_indices(self):
        seeds = {derive_seed(1, i) for i in range(1000)}
        assert len(seeds) == 1000

    def test_distinct_across_masters(self):
        assert derive_seed(1, 0) != derive_seed(2, 0)

    def test_fits_in_64_bits(self):
        for i in range(50):
            assert 0 <= derive_seed(99, i) < 2**64


class TestRunTrials:
    def test_minimum_trials_enforced(self):
        with pytest.raises(ValueError):
            run_trials(FlatTop(1.0, 0.5), GaussianPSF(10.0), DIRECT, E2, 1, 0)

    def test_unknown_measurement(self):
        with pytest.raises(ValueError):
            run_trials(FlatTop(1.0, 0.5), GaussianPSF(10.0), "nope", E2, 5, 0)

    def test_reproducible(self):
        model = FlatTop(1.0, 0.5)
        psf = GaussianPSF(200.0)
        a = run_trials(model, psf, DIRECT, E2, 40, 7)
        b = run_trials(model, psf, DIRECT, E2, 40, 7)
        assert a == b

    def test_thread_count_invariance(self):
        model = FlatTop(1.0, 0.5)
        psf = GaussianPSF(200.0)
        old = os.environ.get(THREADS_ENV)
        try:
            os.environ[THREADS_ENV] = "1"
            a = run_trials(model, psf, SPADE, E2, 30, 11, Q=24)
            os.environ[THREADS_ENV] = "4"
            b = run_trials(model, psf, SPADE, E2, 30, 11, Q=24)
        finally:
            if old is None:
                os.environ.pop(THREADS_ENV, None)
            else:
                os.environ[THREADS_ENV] = old
        assert a == b

    def test_invalid_thread_env(self):
        old = os.environ.get(THREADS_ENV)
        try:
            os.environ[THREADS_ENV] = "0"
            with pytest.raises(ValueError):
                run_trials(FlatTop(1.0, 0.5), GaussianPSF(10.0), DIRECT, E2, 4, 0)
        finally:
            if old is None:
                os.environ.pop(THREADS_ENV, None)
            else:
                os.environ[THREADS_ENV] = old

    def test_point_source_mass_statistics(self):
        # counting photons from a unit source: mean 1, variance 1/tau
        tau = 400.0
        r = run_trials(PointSources((0.0,), (1.0,)), GaussianPSF(tau),
                       DIRECT, [1.0], 300, 3)
        assert r.beta_true == 1.0
        assert r.crb == pytest.approx(1.0 / tau, rel=1e-10)
        assert abs(r.sample_mean - 1.0) < 5.0 * r.std_error
        assert r.variance_ratio == pytest.approx(1.0, abs=0.35)

    def test_report_fields_consistent(self):
        r = run_trials(FlatTop(1.0, 0.5), GaussianPSF(100.0), DIRECT, E2, 25, 5)
        assert r.trials == 25
        assert r.measurement == DIRECT
        assert r.master_seed == 5
        assert r.std_error == pytest.approx(math.sqrt(r.sample_variance / 25))
        assert r.variance_ratio == pytest.approx(r.sample_variance / r.crb)

    def test_round_trip_dict(self):
        r = run_trials(FlatTop(1.0, 0.5), GaussianPSF(100.0), SPADE, E2, 10, 2, Q=24)
        assert TrialReport.from_dict(r.to_dict()) == r


class TestCompareMethods:
    def test_requires_flat_top(self):
        with pytest.raises(ValueError):
            compare_methods(PointSources((0.0,), (1.0,)), GaussianPSF(1.0), E2, [0.1])

    def test_known_ratio_at_tenth(self):
        rows = compare_methods(FlatTop(1.0, 1.0), GaussianPSF(1e4), E2, [0.1])
        delta, cd, cs, ratio = rows[0]
        assert delta == 0.1
        assert cd == pytest.approx(2.0033345833333334e-4, rel=1e-10)
        assert cs == pytest.approx(3.3345833333333334e-7, rel=1e-9)
        assert ratio == pytest.approx(600.8, abs=0.5)

    def test_small_width_scaling(self):
        # direct bound flattens at 2 theta_0^2 / N; spade bound ~ delta^2/(3 tau)
        tau = 1e4
        rows = compare_methods(FlatTop(1.0, 1.0), GaussianPSF(tau), E2, [0.01])
        _, cd, cs, ratio = rows[0]
        assert cd == pytest.approx(2.0 / tau, rel=1e-4)
        assert cs == pytest.approx(1e-4 / (3.0 * tau), rel=1e-4)
        assert ratio == pytest.approx(60000.8, abs=1.0)

    def test_wide_object_keeps_spade_advantage(self):
        rows = compare_methods(FlatTop(1.0, 1.0), GaussianPSF(1e4), E2, [3.0])
        assert rows[0][3] > 1.0


class TestFisherConvergenceReport:
    def test_monotone_sequences(self):
        rep = fisher_convergence_report(FlatTop(1.0, 0.5), GaussianPSF(1e4), E2, 8)
        for key in ("direct", "spade"):
            seq = rep[key]
            for a, b in zip(seq, seq[1:]):
                assert b >= a * (1.0 - 1e-12)
        assert rep["direct"][-1] <= rep["crb_direct"] * (1.0 + 1e-10)
        assert rep["spade"][-1] <= rep["crb_spade"] * (1.0 + 1e-10)
        assert rep["direct"][-1] >= 0.95 * rep["crb_direct"]
        assert rep["spade"][-1] >= 0.95 * rep["crb_spade"]

    def test_p_max_validation(self):
        with pytest.raises(ValueError):
            fisher_convergence_report(FlatTop(1.0, 0.5), GaussianPSF(1.0), E2, 3)
