import math

import numpy as np
import pytest

from igeochaos import families as fa
from igeochaos.errors import DomainError, SingularMetricError, UsageError

ALL = [
    ("Exponential1D", {}),
    ("Gaussian1D", {}),
    ("ED1", {}),
    ("ED2", {}),
    ("GaussianProduct6N", {"N": 1}),
    ("CorrelatedBivariateGaussian", {"r": 0.4}),
]


def test_maxent_gaussian_standard_normal():
    d = fa.maxent_gaussian(0.0, 1.0)
    assert d.log_pdf(np.array([0.0])) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)
    assert d.normalization() == pytest.approx(1.0, abs=1e-10)


def test_maxent_gaussian_score_mu_component_vanishes_at_mean():
    d = fa.maxent_gaussian(2.0, 4.0)
    s = d.score(np.array([2.0]))
    assert s[0] == 0.0
    # d/dsigma log p at x = mu is -1/sigma
    assert s[1] == pytest.approx(-0.5, abs=1e-14)


def test_maxent_gaussian_rejects_bad_variance():
    with pytest.raises(DomainError):
        fa.maxent_gaussian(0.0, 0.0)
    with pytest.raises(DomainError):
        fa.maxent_gaussian(0.0, -1.0)


def test_dimensions_and_ordering():
    ed1 = fa.build_family("ED1")
    assert ed1.dimension == 3
    assert ed1.names == ["mu1", "mu2", "sigma2"]
    assert fa.build_family("ED2").names == ["mu1", "sigma1", "mu2", "sigma2"]
    assert fa.build_family("GaussianProduct6N", N=2).dimension == 12
    assert fa.build_family("CorrelatedBivariateGaussian", r=0.3).dimension == 4


@pytest.mark.parametrize("kw", [{"N": 0}, {"N": 1.5}, {}])
def test_bad_N(kw):
    with pytest.raises(DomainError):
        fa.build_family("GaussianProduct6N", **kw)


@pytest.mark.parametrize("r", [-1.0, 1.0, 1.5, None])
def test_bad_r(r):
    with pytest.raises(DomainError):
        fa.build_family("CorrelatedBivariateGaussian", r=r)


def test_unknown_kind():
    with pytest.raises(DomainError):
        fa.build_family("Poisson")


def test_correlated_r0_factorizes():
    fam = fa.build_family("CorrelatedBivariateGaussian", r=0.0)
    g1 = fa.build_family("Gaussian1D")
    th = np.array([0.3, 1.2, -0.5, 0.7])
    xy = np.array([[0.1, -0.4], [1.5, 0.2], [-2.0, 1.0]])
    lp = fam.log_pdf(xy, th)
    ref = g1.log_pdf(xy[:, :1], th[:2]) + g1.log_pdf(xy[:, 1:], th[2:])
    np.testing.assert_allclose(lp, ref, rtol=0, atol=1e-14)


def test_product_structure_exact():
    fam = fa.build_family("GaussianProduct6N", N=2)
    rng = np.random.default_rng(1)
    th = fam.sample_point(rng)
    x = rng.normal(size=(4, 6))
    total = fam.log_pdf(x, th)
    parts = fam.block_log_pdfs(x, th)
    np.testing.assert_array_equal(total, np.sum(parts, axis=0))


@pytest.mark.parametrize("kind,kw", ALL)
def test_normalization_and_zero_mean_score(kind, kw):
    fam = fa.build_family(kind, **kw)
    rng = np.random.default_rng(7)
    n = 2 if kind == "CorrelatedBivariateGaussian" else 10
    for _ in range(n):
        th = fam.sample_point(rng)
        assert fam.normalization(th) == pytest.approx(1.0, abs=1e-8)
        assert np.max(np.abs(fam.expected_score(th))) < 1e-7


def test_ed1_microstate_support_is_positive_half_line():
    fam = fa.build_family("ED1")
    lp = fam.log_pdf(np.array([[-1.0, 0.0]]), [1.0, 0.0, 1.0])
    assert lp[0] == -np.inf


def test_relative_entropy_gaussian_examples():
    g = fa.build_family("Gaussian1D")
    assert fa.relative_entropy(g, [0.0, 1.0], [0.0, 1.0]) == 0.0
    assert fa.relative_entropy(g, [1.0, 1.0], [0.0, 1.0]) == pytest.approx(0.5, abs=1e-15)
    ed1 = fa.build_family("ED1")
    assert fa.relative_entropy(ed1, [1.5, 0.2, 0.8], [1.5, 0.2, 0.8]) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("kind,kw", ALL)
def test_relative_entropy_nonnegative(kind, kw):
    fam = fa.build_family(kind, **kw)
    rng = np.random.default_rng(3)
    for _ in range(10):
        a, b = fam.sample_point(rng), fam.sample_point(rng)
        assert fam.relative_entropy(a, b) > 0
        assert fam.relative_entropy(a, a) == pytest.approx(0.0, abs=1e-14)


def test_relative_entropy_matches_quadrature():
    from scipy import integrate

    g = fa.build_family("Gaussian1D")
    tp, t = [0.4, 0.7], [-0.2, 1.3]
    f = lambda x: math.exp(g.log_pdf(np.array([x]), tp)) * (
        g.log_pdf(np.array([x]), tp) - g.log_pdf(np.array([x]), t))
    val, _ = integrate.quad(f, -12, 12, epsabs=1e-13)
    assert g.relative_entropy(tp, t) == pytest.approx(val, abs=1e-10)


def test_mismatched_chart_is_usage_error():
    ed1, ed2 = fa.build_family("ED1"), fa.build_family("ED2")
    p = ed2.point([0.0, 1.0, 0.0, 1.0])
    with pytest.raises(UsageError):
        fa.relative_entropy(ed1, p, [1.0, 0.0, 1.0])


def test_domain_guard():
    fam = fa.build_family("Gaussian1D")
    with pytest.raises(SingularMetricError):
        fam.point([0.0, 1e-13])
    with pytest.raises(DomainError):
        fam.point([0.0, -1.0])
    with pytest.raises(DomainError):
        fam.point([0.0, 1.0, 2.0])


def test_param_point_is_immutable():
    p = fa.build_family("ED1").point([1.0, 0.0, 1.0])
    with pytest.raises(Exception):
        p.coords = (2.0, 0.0, 1.0)
    assert p.chart_id == "ED1"


def test_json_round_trip():
    fam = fa.build_family("GaussianProduct6N", N=2)
    back = fa.family_from_json(fam.to_json())
    assert back.chart_id == fam.chart_id and back.dimension == 12
    fam = fa.build_family("CorrelatedBivariateGaussian", r=-0.25,
                          compact_domain=[(-1, 1), (0.5, 2), (-1, 1), (0.5, 2)])
    back = fa.family_from_dict(fam.to_dict())
    assert back.r == -0.25 and back.compact_domain == fam.compact_domain


def test_compact_domain_must_be_inside():
    with pytest.raises(DomainError):
        fa.build_family("Gaussian1D", compact_domain=[(-1, 1), (0.0, 1.0)])
