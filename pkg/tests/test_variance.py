import math

import numpy as np
import pytest
from scipy import integrate, stats

from modecenter import kernels as K
from modecenter import testbeds as T
from modecenter.errors import DegenerateDensityError, DomainError
from modecenter.estimators import irw
from modecenter.variance import (
    asymptotic_variance_bump,
    asymptotic_variance_general,
    tail_gap_integral,
    variance_curve,
    variance_excess,
)

NORMAL = T.centered_pdf("normal")
FINITE = [t for t in T.TESTBED_IDS if T.info(t).sigma2 < math.inf]


def quad_variance(f0, profile, h):
    """Independent oracle: adaptive quadrature of the variance functional."""
    num = 2 * integrate.quad(lambda x: profile.deriv(x / h) ** 2 / h ** 4 * f0(x), 0, h,
                             limit=400, epsabs=0, epsrel=1e-12)[0]
    den = 2 * integrate.quad(lambda x: profile.second_deriv(x / h) / h ** 3 * f0(x), 0, h,
                             limit=400, epsabs=0, epsrel=1e-12)[0]
    return num / den ** 2


def r_of_kprime(beta):
    p = K.normalize(K.KernelShape.bump(beta))
    return 2 * integrate.quad(lambda u: p.deriv(u) ** 2, 0, 1, limit=400, epsabs=1e-14)[0]


class TestBumpVariance:
    def test_large_h_normal(self):
        assert asymptotic_variance_bump(NORMAL, 8, 100) == pytest.approx(1.0, rel=0.01)

    def test_small_h_closed_form(self):
        h = 0.05
        phi0 = 1 / math.sqrt(2 * math.pi)
        sigma_m2 = phi0 * r_of_kprime(8) / phi0 ** 2  # f0''(0) = -f0(0) for the normal
        assert asymptotic_variance_bump(NORMAL, 8, h) * h ** 3 == pytest.approx(sigma_m2, rel=0.1)

    @pytest.mark.parametrize("s", [0.1, 3.0, 25.0])
    @pytest.mark.parametrize("beta", [0.5, 2.0])
    def test_scale_covariance(self, s, beta):
        scaled = lambda x: NORMAL(np.asarray(x) / s) / s
        base = asymptotic_variance_bump(NORMAL, beta, 1.7)
        assert asymptotic_variance_bump(scaled, beta, 1.7 * s) == pytest.approx(s * s * base, rel=1e-10)

    @pytest.mark.parametrize("tb", ["normal", "student_t_3", "outlier", "laplace"])
    @pytest.mark.parametrize("beta,h", [(0.5, 0.7), (2.0, 3.0), (8.0, 12.0)])
    def test_matches_adaptive_quadrature(self, tb, beta, h):
        f0 = T.centered_pdf(tb)
        expected = quad_variance(f0, K.normalize(K.KernelShape.bump(beta)), h)
        assert asymptotic_variance_bump(tb, beta, h) == pytest.approx(expected, rel=1e-7)

    def test_degenerate_density(self):
        far = lambda x: np.where(np.abs(x) > 5, 0.1, 0.0)
        with pytest.raises(DegenerateDensityError):
            asymptotic_variance_bump(far, 2, 1.0)

    @pytest.mark.parametrize("beta,h", [(0, 1), (1, 0), (1, -2), (1, math.inf)])
    def test_domain(self, beta, h):
        with pytest.raises(DomainError):
            asymptotic_variance_bump(NORMAL, beta, h)


class TestGeneralVariance:
    def test_epanechnikov_monte_carlo(self):
        # Epanechnikov IRW: mean of the points within h of the current estimate
        h, n, m = 4.0, 100_000, 200
        rng = np.random.default_rng(2024)
        flat = lambda d: (np.abs(d) < h).astype(float)
        est = np.array([irw(rng.standard_normal(n), flat, h)[0] for _ in range(m)])
        mc = n * est.var(ddof=1)
        se = mc * math.sqrt(2 / (m - 1))
        v = asymptotic_variance_general(NORMAL, K.normalize(K.EPANECHNIKOV), h)
        assert abs(mc - v) < 3 * se

    def test_epanechnikov_closed_form(self):
        # V = E[x^2; |x|<h] / (P(|x|<h) - 2 h f(h))^2 for the flat-weight estimating equation
        h = 1.3
        num = 2 * integrate.quad(lambda x: x * x * stats.norm.pdf(x), 0, h)[0]
        den = (2 * stats.norm.cdf(h) - 1) - 2 * h * stats.norm.pdf(h)
        v = asymptotic_variance_general(NORMAL, K.normalize(K.EPANECHNIKOV), h)
        assert v == pytest.approx(num / den ** 2, rel=1e-9)

    @pytest.mark.parametrize("beta", [0.25, 1.0, 2.0, 8.0])
    @pytest.mark.parametrize("h", [0.3, 2.0, 40.0])
    def test_bump_routes_agree(self, beta, h):
        p = K.normalize(K.KernelShape.bump(beta))
        a = asymptotic_variance_general(NORMAL, p, h)
        assert a == pytest.approx(asymptotic_variance_bump(NORMAL, beta, h), rel=1e-6)

    def test_triweight_limit(self):
        v = asymptotic_variance_general(NORMAL, K.normalize(K.TRIWEIGHT), 100)
        assert v == pytest.approx(1.0, rel=0.01)

    @pytest.mark.parametrize("shape", [K.TRIWEIGHT, K.RAISED_COSINE])
    def test_classic_against_quadrature(self, shape):
        p = K.normalize(shape)
        assert asymptotic_variance_general("laplace", p, 2.5) == pytest.approx(
            quad_variance(T.centered_pdf("laplace"), p, 2.5), rel=1e-7)

    def test_gaussian_rejected(self):
        with pytest.raises(DomainError):
            asymptotic_variance_general(NORMAL, K.normalize(K.GAUSSIAN), 1.0)


class TestExcess:
    @pytest.mark.parametrize("tb", T.TESTBED_IDS)
    @pytest.mark.parametrize("beta", [0.25, 1.0, 8.0])
    @pytest.mark.parametrize("h", [0.05, 3.0, 50.0])
    def test_agrees_with_direct(self, tb, beta, h):
        t = T.get(tb)
        direct = asymptotic_variance_bump(tb, beta, h)
        via = 1 / t.fisher_information + variance_excess(tb, beta, h)
        assert via == pytest.approx(direct, rel=1e-8)

    @pytest.mark.parametrize("tb", T.TESTBED_IDS)
    def test_nonnegative(self, tb):
        for h in (0.1, 1.0, 10.0, 1000.0):
            assert variance_excess(tb, 2.0, h) >= 0


class TestInvariants:
    @pytest.mark.parametrize("tb", T.TESTBED_IDS)
    @pytest.mark.parametrize("beta", [0.25, 1.0, 8.0])
    def test_quadrature_doubling(self, tb, beta):
        for h in (1e-2, 1e-1, 1.0, 10.0, 100.0, 1e3):
            a = asymptotic_variance_bump(tb, beta, h, quad_nodes=16)
            b = asymptotic_variance_bump(tb, beta, h, quad_nodes=32)
            assert abs(a - b) < 1e-6 * abs(b), (h, a, b)

    @pytest.mark.parametrize("tb", FINITE)
    def test_large_h_limit(self, tb):
        sigma2 = T.info(tb).sigma2
        assert abs(asymptotic_variance_bump(tb, 8, 1e3) / sigma2 - 1) < 0.02

    @pytest.mark.parametrize("beta", [0.25, 1.0, 8.0])
    def test_small_h_blow_up(self, beta):
        assert asymptotic_variance_bump(NORMAL, beta, 1e-2) > 1e3 * asymptotic_variance_bump(NORMAL, beta, 1.0)

    def test_regular_variation_gap(self):
        vals = [h ** 2 * (asymptotic_variance_bump("student_t_4", 8, h) - 2.0) for h in (50, 100, 200)]
        assert all(v < 0 for v in vals)
        assert (max(vals) - min(vals)) / abs(np.mean(vals)) < 0.25


class TestCurve:
    def test_normal_monotone_tail(self):
        c = variance_curve("normal", 8, 0.5, 1000, 200)
        upper = c.excess[100:]
        assert np.all(np.diff(upper) < 0)
        assert c.argmin_h == c.h_grid[-1]

    def test_laplace_references(self):
        c = variance_curve("laplace", 8, 0.5, 100, 20)
        assert c.median_ref == pytest.approx(1.0)
        assert c.sigma2_ref == 2.0

    def test_t5_beats_mean(self):
        c = variance_curve("student_t_5", 0.25, 0.5, 1000, 200)
        assert c.min_value < 5 / 3
        assert c.h_grid[0] < c.argmin_h < c.h_grid[-1]

    def test_cauchy_infinite_sigma(self):
        c = variance_curve("student_t_1", 0.5, 0.5, 100, 10)
        assert c.sigma2_ref == math.inf

    def test_structure(self):
        c = variance_curve("logistic", 2.0, 0.1, 10, 7, log_spacing=False)
        np.testing.assert_allclose(c.h_grid, np.linspace(0.1, 10, 7))
        assert np.all(c.values > 0)
        assert c.min_value == c.values[c.argmin_index]
        assert len(c.rows()) == 7

    def test_general_kernel_and_callable(self):
        c = variance_curve(NORMAL, K.TRIWEIGHT, 0.5, 50, 10)
        assert c.excess is None
        assert c.sigma2_ref == pytest.approx(1.0, rel=1e-6)
        assert c.median_ref == pytest.approx(math.pi / 2, rel=1e-12)

    def test_missing_points(self):
        # no mass within 1 of the center, so small bandwidths see nothing
        f = lambda x: np.where(np.abs(x) > 1, stats.norm.pdf(np.abs(x) - 3), 0.0)
        c = variance_curve(f, 2.0, 0.5, 10, 10)
        assert np.isnan(c.values[0])
        assert c.rows()[0][1] is None
        assert np.isfinite(c.min_value)

    @pytest.mark.parametrize("args", [(0.0, 1.0, 5), (2.0, 1.0, 5), (0.5, 1.0, 1)])
    def test_bad_grid(self, args):
        with pytest.raises(DomainError):
            variance_curve("normal", 2.0, *args)


class TestTailGap:
    def test_refinement(self):
        coarse = tail_gap_integral(8, -5)
        fine = tail_gap_integral(8, -5, quad_nodes=160)
        assert coarse == pytest.approx(fine, rel=1e-6)
        assert coarse < 0

    def test_against_scipy(self):
        beta, alpha = 8.0, -5.0
        f = lambda x: x ** (alpha + 2) * math.expm1(-2 * x ** beta / (1 - x ** beta))
        val = integrate.quad(f, 0, 1, limit=400, epsabs=1e-13)[0] + 1 / (alpha + 3)
        assert tail_gap_integral(beta, alpha) == pytest.approx(val, rel=1e-9)

    @pytest.mark.parametrize("beta,alpha", [(8, -3.0), (8, -2.5), (2, -5.0)])
    def test_preconditions(self, beta, alpha):
        with pytest.raises(DomainError):
            tail_gap_integral(beta, alpha)
