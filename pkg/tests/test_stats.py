import math

import numpy as np
import pytest

from oracles import chi2_divergence_mixture_quadrature, tvd_two_gaussians_1d
from sketchlab import dgauss, stats
from sketchlab.errors import DimensionTooLarge, PreconditionUnmet, TooFewSamples
from sketchlab.rng import derive
from sketchlab.sketch import IntegerSketch


class TestEmpiricalTvd:
    def test_identical_samples_zero(self):
        rng = derive(61, "same")
        x = rng.standard_normal(5000)
        est = stats.empirical_tvd(x, x, rng=rng)
        assert est.value == 0.0

    def test_null_calibration(self):
        rng = derive(61, "null")
        vals = []
        for i in range(10):
            x = derive(61, "nx", i).standard_normal(100_000)
            y = derive(61, "ny", i).standard_normal(100_000)
            vals.append(stats.empirical_tvd(x, y, rng=rng).value)
        assert max(vals) <= 0.03

    def test_shifted_gaussian_matches_erf_oracle(self):
        truth = tvd_two_gaussians_1d(0.0, 1.0, 1.0, 1.0)
        assert abs(truth - 0.3829) < 1e-3
        x = derive(61, "sx").standard_normal(100_000)
        y = derive(61, "sy").standard_normal(100_000) + 1.0
        est = stats.empirical_tvd(x, y, rng=derive(61, "sb"))
        assert 0.36 <= est.value <= 0.40

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            stats.empirical_tvd(np.zeros(100), np.zeros(100))

    def test_dimension_guard_and_projection(self):
        rng = derive(61, "proj")
        X = rng.standard_normal((5000, 5))
        Y = rng.standard_normal((5000, 5))
        with pytest.raises(DimensionTooLarge):
            stats.empirical_tvd(X, Y, rng=rng)
        est = stats.empirical_tvd(X, Y, projection=np.ones(5) / np.sqrt(5), rng=rng)
        assert est.value <= 0.05

    def test_ci_reported(self):
        x = derive(61, "cx").standard_normal(3000)
        y = derive(61, "cy").standard_normal(3000)
        est = stats.empirical_tvd(x, y, rng=derive(61, "cb"))
        assert est.value + est.ci_halfwidth <= 1.05
        assert est.binning["dims"] == 1


class TestPmfRatioCheck:
    def test_desk_parameters(self):
        rep = stats.pmf_ratio_check(10_000.0, 10, 2)
        assert rep["ok"] and rep["max_deviation"] <= 0.01

    def test_deterministic(self):
        a = stats.pmf_ratio_check(10_000.0, 10, 2)
        b = stats.pmf_ratio_check(10_000.0, 10, 2)
        assert a == b

    def test_peak_ratio_is_normalizer_mismatch(self):
        s2, n = 10_000.0, 10
        p0 = dgauss.pmf_dgauss_1d(0, s2)
        sigma = math.sqrt(s2)
        from scipy.stats import norm
        q0 = norm.cdf(0.5 / sigma) - norm.cdf(-0.5 / sigma)
        expected = abs((p0 / q0) ** n - 1.0)
        rep = stats.pmf_ratio_check(s2, n, 2, z_range=0)
        assert abs(rep["max_deviation"] - expected) < 1e-12

    def test_precondition(self):
        with pytest.raises(PreconditionUnmet):
            stats.pmf_ratio_check(500.0, 10, 2)


class TestCellLemma:
    def test_one_row_all_ones(self):
        sk = IntegerSketch.from_matrix(np.ones((1, 8), dtype=np.int64))
        rep = stats.cell_lemma_check(sk, 1e8, trials=30_000,
                                     rng=derive(62, "c1"))
        assert rep["pass"], rep
        assert rep["tvd_noise_path"]["value"] <= 0.05
        assert rep["tvd_round_path"]["value"] <= 0.05

    def test_floor_guard(self):
        sk = IntegerSketch.from_matrix(np.ones((1, 8), dtype=np.int64))
        with pytest.raises(PreconditionUnmet):
            stats.cell_lemma_check(sk, 100.0, trials=5000,
                                   rng=derive(62, "c2"))

    def test_rank_guard(self):
        sk = IntegerSketch.from_matrix(np.eye(5, 8, dtype=np.int64))
        with pytest.raises(PreconditionUnmet):
            stats.cell_lemma_check(sk, 1e8, trials=5000,
                                   rng=derive(62, "c3"))


class TestChiSquareMixture:
    def test_point_mass_zero(self):
        rep = stats.chi_square_mixture_check(("point0",), 1.0, 1, 1000,
                                             derive(63, "p0"))
        assert rep["lhs_chi2"] == 0.0 and rep["rhs_bound"] == 0.0 and rep["ok"]

    def test_pm_mixture_vs_quadrature_oracle(self):
        a, sigma = 0.5, 1.0
        rep = stats.chi_square_mixture_check(("pm", a), sigma**2, 1, 400_000,
                                             derive(63, "pm"))
        assert rep["ok"]
        truth = chi2_divergence_mixture_quadrature(a, sigma)
        assert abs(rep["lhs_chi2"] - truth) <= 4 * rep["lhs_se"] + 1e-4
        # closed-form RHS: cosh(a^2/sigma^2) - 1, and the bound truly holds
        assert truth <= math.cosh(a * a / sigma**2) - 1.0 + 1e-12

    def test_gauss_mixture_2d(self):
        rep = stats.chi_square_mixture_check(("gauss", 0.4), 1.0, 2, 200_000,
                                             derive(63, "g2"))
        assert rep["ok"]

    def test_dimension_guard(self):
        with pytest.raises(DimensionTooLarge):
            stats.chi_square_mixture_check(("pm", 0.5), 1.0, 3, 2000,
                                           derive(63, "dg"))


class TestEnergyTwoSample:
    def test_null_passes(self):
        rng = derive(64, "en")
        X = rng.standard_normal((3000, 4))
        Y = rng.standard_normal((3000, 4))
        rep = stats.energy_two_sample(X, Y, sub=800, perms=40, rng=rng)
        assert rep["pass"]

    def test_shift_detected(self):
        rng = derive(64, "es")
        X = rng.standard_normal((3000, 4))
        Y = rng.standard_normal((3000, 4)) + 0.5
        rep = stats.energy_two_sample(X, Y, sub=800, perms=40, rng=rng)
        assert not rep["pass"]


class TestCellLemmaMatrixCovariance:
    def test_full_covariance_path(self):
        rng = derive(62, "mat")
        A = np.array([[3, 1, 0, 2, -1, 0, 1, 1]], dtype=np.int64)
        sk = IntegerSketch.from_matrix(A)
        n = 8
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        scales = 1e8 * np.linspace(1.0, 2.0, n)
        Sigma = q @ np.diag(scales) @ q.T
        rep = stats.cell_lemma_check(sk, Sigma, trials=20_000, rng=rng)
        assert rep["pass"], rep
