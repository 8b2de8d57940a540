import math

import numpy as np
import pytest

from igeochaos import geometry as ge
from igeochaos.charts import EuclideanChart, HyperbolicChart, poincare_half_plane
from igeochaos.families import build_family


def test_metric_examples():
    np.testing.assert_allclose(
        ge.fisher_metric_closed(build_family("ED1"), [2.0, 0.0, 1.0]).g, np.diag([0.25, 1.0, 2.0]),
        rtol=0, atol=1e-15)
    np.testing.assert_allclose(
        ge.fisher_metric_closed(build_family("Gaussian1D"), [0.0, 1.0]).g, np.diag([1.0, 2.0]))
    np.testing.assert_allclose(
        ge.fisher_metric_closed(build_family("CorrelatedBivariateGaussian", r=0.0),
                                [0.0, 1.0, 0.0, 1.0]).g,
        np.diag([1.0, 2.0, 1.0, 2.0]))
    assert ge.fisher_metric_closed(build_family("Exponential1D"), [3.0]).g[0, 0] == pytest.approx(1 / 9)


@pytest.mark.parametrize("kind,kw,theta", [
    ("Exponential1D", {}, [1.7]),
    ("Gaussian1D", {}, [0.3, 1.4]),
    ("ED1", {}, [1.2, -0.5, 0.8]),
    ("CorrelatedBivariateGaussian", {"r": 0.6}, [0.1, 1.3, -0.2, 0.7]),
])
def test_quadrature_metric_matches_closed(kind, kw, theta):
    fam = build_family(kind, **kw)
    g0 = ge.fisher_metric_closed(fam, theta).g
    g1 = ge.fisher_metric_numeric(fam, theta).g
    assert np.max(np.abs(g1 - g0)) < 1e-6 * np.max(np.abs(g0))


def test_relative_entropy_hessian_matches_metric():
    fam = build_family("ED2")
    th = [0.4, 1.2, -0.3, 0.9]
    g0 = ge.fisher_metric_closed(fam, th).g
    g1 = ge.fisher_metric_relative_entropy(fam, th).g
    np.testing.assert_allclose(g1, g0, atol=1e-5 * np.max(g0))


def test_christoffel_flat_and_ed2():
    gam = ge.christoffel(EuclideanChart(3), [0.2, -1.0, 4.0]).gamma
    assert np.all(gam == 0)
    s1 = 1.7
    gam = ge.christoffel(build_family("ED2"), [0.0, s1, 0.0, 1.0]).gamma
    # Gamma^{sigma1}_{mu1 mu1} with index order (mu1, sigma1, mu2, sigma2)
    assert gam[1, 0, 0] == pytest.approx(1 / (2 * s1), rel=1e-14)
    assert gam[0, 0, 1] == pytest.approx(-1 / s1, rel=1e-14)
    assert gam[1, 1, 1] == pytest.approx(-1 / s1, rel=1e-14)


def test_christoffel_symmetric_lower_indices():
    fam = build_family("CorrelatedBivariateGaussian", r=0.3)
    gam = ge.christoffel(fam, [0.1, 1.2, 0.4, 0.8]).gamma
    np.testing.assert_allclose(gam, np.transpose(gam, (0, 2, 1)), atol=1e-15)


@pytest.mark.parametrize("kind,kw,R", [
    ("Gaussian1D", {}, -1.0),
    ("ED1", {}, -1.0),
    ("ED2", {}, -2.0),
    ("GaussianProduct6N", {"N": 1}, -3.0),
    ("Exponential1D", {}, 0.0),
])
def test_scalar_curvature_constant(kind, kw, R):
    fam = build_family(kind, **kw)
    rng = np.random.default_rng(0)
    for _ in range(5):
        th = fam.sample_point(rng)
        assert ge.curvature(fam, th).scalar == pytest.approx(R, abs=1e-12)


@pytest.mark.parametrize("kind,kw", [
    ("ED1", {}), ("ED2", {}), ("CorrelatedBivariateGaussian", {"r": 0.5}),
])
def test_fd_oracle_agrees_with_analytic(kind, kw):
    fam = build_family(kind, **kw)
    th = fam.sample_point(np.random.default_rng(11))
    a = ge.curvature(fam, th)
    b = ge.curvature_numeric(fam, th)
    assert abs(a.scalar - b.scalar) < 1e-4
    assert np.max(np.abs(a.riemann_low - b.riemann_low)) < 1e-4


def test_hyperbolic_chart_curvature():
    for K in (-1.0, -0.25):
        ch = HyperbolicChart(3, K)
        rep = ge.curvature(ch, [0.3, -0.2, 1.4])
        # constant sectional curvature K in dimension 3 gives R = 6K
        assert rep.scalar == pytest.approx(6 * K, abs=1e-12)
        assert all(v == pytest.approx(K, abs=1e-12) for v in rep.sectional.values())
        assert rep.max_abs_weyl < 1e-12


def test_riemann_symmetries():
    fam = build_family("GaussianProduct6N", N=1)
    rep = ge.curvature(fam, fam.sample_point(np.random.default_rng(2)))
    errs = ge.symmetry_errors(rep)
    assert max(errs.values()) < 1e-12


def test_sectional_examples():
    fam = build_family("ED1")
    th = [1.3, 0.2, 0.7]
    assert ge.sectional_curvature(fam, th, [0, 1, 0], [0, 0, 1]) == pytest.approx(-0.5, abs=1e-14)
    assert ge.sectional_curvature(fam, th, [1, 0, 0], [0, 1, 0]) == pytest.approx(0.0, abs=1e-14)


def test_sectional_depends_only_on_plane():
    fam = build_family("ED2")
    th = [0.2, 0.9, -0.1, 1.3]
    rng = np.random.default_rng(5)
    u, v = rng.normal(size=4), rng.normal(size=4)
    k0 = ge.sectional_curvature(fam, th, u, v)
    k1 = ge.sectional_curvature(fam, th, 2 * u - v, 0.5 * u + 3 * v)
    assert k1 == pytest.approx(k0, rel=1e-10, abs=1e-12)


def test_sectional_degenerate_plane():
    from igeochaos.errors import DomainError

    with pytest.raises(DomainError):
        ge.sectional_curvature(build_family("ED1"), [1, 0, 1], [1, 0, 0], [2, 0, 0])


def test_weyl_examples():
    assert ge.curvature(poincare_half_plane(), [0.0, 1.0]).max_abs_weyl < 1e-14
    fam = build_family("GaussianProduct6N", N=1)
    assert ge.curvature(fam, [0.0, 1.0] * 3).max_abs_weyl > 0.01


def test_killing_fields():
    field_x = ge.coordinate_field(0, 2)
    assert ge.killing_residual(poincare_half_plane(), [0.4, 1.7], field_x).norm < 1e-14
    assert ge.killing_residual(EuclideanChart(2), [0.4, 1.7], field_x).norm == 0.0
    fam = build_family("ED1")
    assert ge.killing_residual(fam, [1.2, 0.5, 0.8], ge.coordinate_field(1, 3)).norm < 1e-14
    # d/dsigma is not Killing
    assert ge.killing_residual(fam, [1.2, 0.5, 0.8], ge.coordinate_field(2, 3)).norm > 0.1


def test_dilation_is_killing_on_half_plane():
    def dil(theta):
        return np.asarray(theta, float), np.eye(2)

    assert ge.killing_residual(poincare_half_plane(), [0.3, 2.0], dil).norm < 1e-14


def test_report_to_dict_is_json_ready():
    import json

    rep = ge.curvature(build_family("ED1"), [1.0, 0.0, 1.0])
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["scalar"] == pytest.approx(-1.0)
    assert "1,2" in d["sectional"]
