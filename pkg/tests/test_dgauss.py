import math

import numpy as np
import pytest
from scipy.stats import chisquare, norm

from sketchlab import dgauss
from sketchlab.errors import NonPositiveVariance, VarianceTooSmall
from sketchlab.numerics import OrthonormalBasis
from sketchlab.rng import derive


def gof_pvalue(samples, sigma2, support_radius):
    """Chi-square goodness of fit against the exact pmf; both tails pooled
    into one bucket, sparse cells (expected < 5) dropped."""
    zs = np.arange(-support_radius, support_radius + 1)
    pmf = dgauss.pmf_dgauss_1d(zs, sigma2)
    counts = np.array([np.sum(samples == z) for z in zs], dtype=float)
    tail_count = np.sum(np.abs(samples) > support_radius)
    tail_p = max(1.0 - float(pmf.sum()), 1e-12)
    counts = np.concatenate([[tail_count], counts])
    probs = np.concatenate([[tail_p], pmf])
    keep = probs * len(samples) >= 5
    counts, probs = counts[keep], probs[keep]
    probs = probs / probs.sum()
    res = chisquare(counts, f_exp=probs * counts.sum())
    return float(res.pvalue)


class TestPmf:
    def test_partition_sigma1(self):
        assert abs(dgauss.partition_1d(1.0) - 2.50663) < 1e-4
        assert abs(dgauss.pmf_dgauss_1d(0, 1.0) - 0.39894) < 1e-4

    def test_symmetry(self):
        for s2 in (0.3, 2.0, 77.7):
            for z in (1, 3, 10):
                assert dgauss.pmf_dgauss_1d(z, s2) == dgauss.pmf_dgauss_1d(-z, s2)

    def test_large_sigma_matches_integrated_continuous(self):
        s2 = 1e6
        sigma = math.sqrt(s2)
        for z in (0, 100, 2500, 5000):
            p = dgauss.pmf_dgauss_1d(z, s2)
            q = norm.cdf((z + 0.5) / sigma) - norm.cdf((z - 0.5) / sigma)
            assert abs(p / q - 1.0) <= 1e-3

    def test_normalization_sum(self):
        for s2 in (0.5, 4.0, 100.0):
            K = int(math.ceil(12 * math.sqrt(s2))) + 1
            total = float(np.sum(dgauss.pmf_dgauss_1d(np.arange(-K, K + 1), s2)))
            assert 1.0 - 1e-12 <= total <= 1.0 + 1e-12

    def test_normalization_fact_bracket(self):
        for s2 in (0.5, 1.0, 4.0, 100.0, 1e6):
            rep = dgauss.verify_normalization_fact(s2)
            assert rep["ok"], rep

    def test_nonpositive_variance(self):
        with pytest.raises(NonPositiveVariance):
            dgauss.pmf_dgauss_1d(0, 0.0)
        with pytest.raises(NonPositiveVariance):
            dgauss.sample_dgauss_1d(-1.0, derive(0, "x"))


class TestSample1d:
    def test_moments_sigma2_100(self):
        rng = derive(21, "mom")
        x = dgauss.sample_dgauss_1d(100.0, rng, size=1_000_000)
        assert abs(float(x.mean())) <= 0.05
        assert 99.0 <= float(x.var()) <= 101.0

    def test_concentrated(self):
        rng = derive(21, "conc")
        x = dgauss.sample_dgauss_1d(0.01, rng, size=10_000)
        assert np.all(x == 0)

    def test_gof_sigma2_25(self):
        rng = derive(21, "gof")
        x = dgauss.sample_dgauss_1d(25.0, rng, size=1_000_000)
        assert gof_pvalue(x, 25.0, 30) > 0.001

    def test_gof_table_branch(self):
        rng = derive(21, "gof-small")
        x = dgauss.sample_dgauss_1d(2.5, rng, size=500_000)
        assert gof_pvalue(x, 2.5, 8) > 0.001

    def test_seed_determinism(self):
        a = dgauss.sample_dgauss_1d(50.0, derive(5, "det"), size=1000)
        b = dgauss.sample_dgauss_1d(50.0, derive(5, "det"), size=1000)
        assert np.array_equal(a, b)


class TestEllipsoidal:
    def test_isotropic_per_coordinate_gof(self):
        n, s2 = 16, 1e4
        rng = derive(22, "ell")
        z = dgauss.sample_dgauss_ellipsoidal(s2 * np.eye(n), rng, size=100_000 // n)
        pooled = z.ravel()  # coordinates iid under isotropic covariance
        assert gof_pvalue(pooled, s2, 300) > 0.001

    def test_variance_too_small(self):
        with pytest.raises(VarianceTooSmall):
            dgauss.sample_dgauss_ellipsoidal(np.eye(8), derive(0, "v"), size=4)

    def test_subspace_covariance_structure(self):
        n, s2 = 16, 1e4
        rng = derive(22, "cov")
        V = OrthonormalBasis(n, [np.eye(n)[0], np.eye(n)[1]])
        spec = dgauss.SubspaceGaussianSpec(n, V, s2)
        assert spec.eigenvalue_check()
        X = dgauss.sample_subspace_query(spec, "discrete", rng, size=100_000)
        v_in = float(np.var(X[:, 0]))
        v_out = float(np.var(X[:, 5]))
        assert abs(v_in - s2 / 4) <= 0.05 * (s2 / 4)
        assert abs(v_out - s2) <= 0.05 * s2


class TestSubspaceQuery:
    def test_empty_subspace_is_isotropic(self):
        n, s2 = 8, 400.0
        spec = dgauss.SubspaceGaussianSpec(n, OrthonormalBasis.empty(n), s2)
        X = dgauss.sample_subspace_query(spec, "discrete", derive(23, "iso"),
                                         size=200_000 // n)
        assert gof_pvalue(X.ravel(), s2, 70) > 0.001

    def test_continuous_full_projection_kill(self):
        n, s2 = 6, 900.0
        V = OrthonormalBasis(n, list(np.eye(n)))
        spec = dgauss.SubspaceGaussianSpec(n, V, s2)
        X = dgauss.sample_subspace_query(spec, "continuous", derive(23, "kill"),
                                         size=50_000)
        # P_perp kills g1 entirely: covariance sigma^2/4 I
        v = np.var(X, axis=0)
        assert np.all(np.abs(v - s2 / 4) <= 0.06 * s2 / 4)

    def test_discrete_tail_bound(self):
        n, s2 = 16, 1e4
        spec = dgauss.SubspaceGaussianSpec(n, OrthonormalBasis.empty(n), s2)
        X = dgauss.sample_subspace_query(spec, "discrete", derive(23, "tail"),
                                         size=100_000)
        assert int(np.max(np.abs(X))) <= 12 * math.sqrt(s2)

    def test_smoothing_floor_guard(self):
        n = 16
        spec = dgauss.SubspaceGaussianSpec(n, OrthonormalBasis.empty(n), 10.0)
        with pytest.raises(VarianceTooSmall):
            dgauss.sample_subspace_query(spec, "discrete", derive(23, "floor"))

    def test_integer_output(self):
        n, s2 = 8, 1e4
        spec = dgauss.SubspaceGaussianSpec(n, OrthonormalBasis.empty(n), s2)
        X = dgauss.sample_subspace_query(spec, "discrete", derive(23, "int"), size=10)
        assert np.issubdtype(X.dtype, np.integer)


class TestCsvDump:
    def test_dump_samples(self, tmp_path):
        rng = derive(25, "csv")
        x = dgauss.sample_dgauss_1d(25.0, rng, size=(20, 4))
        path = tmp_path / "samples.csv"
        dgauss.dump_samples_csv(path, x)
        back = np.loadtxt(path, delimiter=",", dtype=np.int64)
        assert np.array_equal(back, x)
