"""Fisher-Rao metric and the curvature stack.

Every function accepts either a :class:`~igeochaos.families.StatisticalFamily`
or a bare :class:`~igeochaos.charts.Chart`. The analytic path uses the
chart's exact metric derivatives; :func:`curvature_numeric` is an
independent finite-difference pipeline that only samples metric values.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import tensors
from .charts import Chart
from .errors import DomainError, NumericError, SingularMetricError
from .families import StatisticalFamily, as_coords


def _chart(obj):
    if isinstance(obj, StatisticalFamily):
        return obj.chart
    if isinstance(obj, Chart):
        return obj
    raise TypeError(f"expected a family or chart, got {type(obj).__name__}")


def _coords(obj, theta):
    if isinstance(obj, StatisticalFamily):
        return as_coords(obj, theta)
    return _chart(obj).validate(theta)


@dataclass
class MetricValue:
    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det: float

    @classmethod
    def from_matrix(cls, g):
        g = np.asarray(g, dtype=float)
        g = 0.5 * (g + g.T)
        evals = np.linalg.eigvalsh(g)
        if not np.all(evals > 0):
            raise SingularMetricError(f"metric not positive definite (eigenvalues {evals})")
        return cls(g, np.linalg.inv(g), float(np.sqrt(np.linalg.det(g))))


@dataclass
class ChristoffelValue:
    gamma: np.ndarray


@dataclass
class CurvatureReport:
    riemann: np.ndarray
    riemann_low: np.ndarray
    ricci: np.ndarray
    scalar: float
    sectional: dict
    weyl_projective: np.ndarray
    max_abs_weyl: float
    metric: MetricValue = None
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "riemann": self.riemann.tolist(),
            "riemann_low": self.riemann_low.tolist(),
            "ricci": self.ricci.tolist(),
            "scalar": self.scalar,
            "sectional": {f"{i},{j}": k for (i, j), k in self.sectional.items()},
            "weyl_projective": self.weyl_projective.tolist(),
            "max_abs_weyl": self.max_abs_weyl,
            **({"extras": self.extras} if self.extras else {}),
        }


@dataclass
class KillingResidual:
    residual: np.ndarray
    norm: float


def fisher_metric_closed(family, theta):
    """Analytic Fisher-Rao metric of the chart at ``theta``."""
    theta = _coords(family, theta)
    return MetricValue.from_matrix(_chart(family).metric(theta))


def fisher_metric_numeric(family, theta, epsabs=1e-13, epsrel=1e-12, check_tol=1e-6):
    """Fisher metric E[d_mu log p d_nu log p] by adaptive quadrature.

    Raises :class:`NumericError` when the quadrature error estimate exceeds
    ``check_tol`` relative to the largest entry.
    """
    if not isinstance(family, StatisticalFamily):
        raise TypeError("numeric Fisher metric needs a statistical family")
    g, err = family.fisher_quadrature(theta, epsabs=epsabs, epsrel=epsrel)
    scale = float(np.max(np.abs(g)))
    if not np.isfinite(err) or err > check_tol * scale:
        raise NumericError(
            "Fisher quadrature did not converge", {"error_estimate": err, "scale": scale}
        )
    return MetricValue.from_matrix(g)


def fisher_metric_relative_entropy(family, theta):
    """Metric as the Hessian of S(theta'|theta) in theta' at theta' = theta."""
    theta = _coords(family, theta)
    grad = lambda tp: tensors.central_gradient(
        lambda t: np.array(family.relative_entropy(t, theta)), tp, steps=_hess_steps(tp)
    )
    return MetricValue.from_matrix(tensors.central_gradient(grad, theta, steps=_hess_steps(theta)))


def _hess_steps(theta):
    return np.maximum(1e-4, 1e-4 * np.abs(theta))


def christoffel(family, theta):
    theta = _coords(family, theta)
    return ChristoffelValue(_chart(family).christoffel(theta))


def _report(g, riem):
    mv = MetricValue.from_matrix(g)
    ric = tensors.ricci(riem)
    scal = tensors.scalar(mv.g_inv, ric)
    low = tensors.lower(mv.g, riem)
    d = g.shape[0]
    sec = {}
    for i, j in combinations(range(d), 2):
        den = mv.g[i, i] * mv.g[j, j] - mv.g[i, j] ** 2
        sec[(i, j)] = float(low[i, j, i, j] / den)
    W = tensors.weyl_projective(low, mv.g, scal)
    return CurvatureReport(
        riemann=riem,
        riemann_low=low,
        ricci=0.5 * (ric + ric.T),
        scalar=scal,
        sectional=sec,
        weyl_projective=W,
        max_abs_weyl=float(np.max(np.abs(W))) if W.size else 0.0,
        metric=mv,
    )


def curvature(family, theta):
    """Full curvature report from the chart's analytic metric derivatives."""
    theta = _coords(family, theta)
    ch = _chart(family)
    return _report(ch.metric(theta), ch.riemann(theta))


def numeric_christoffel(chart, theta):
    """Gamma from central differences of metric values only."""
    g = chart.metric(theta)
    dg = tensors.central_gradient(chart.metric, theta)
    return tensors.christoffel(np.linalg.inv(g), dg)


def curvature_numeric(family, theta):
    """Finite-difference oracle: metric values -> numeric Gamma -> numeric R."""
    theta = _coords(family, theta)
    ch = _chart(family)
    gamma = numeric_christoffel(ch, theta)
    dgamma = tensors.central_gradient(lambda t: numeric_christoffel(ch, t), theta)
    return _report(ch.metric(theta), tensors.riemann(gamma, dgamma))


def sectional_curvature(family, theta, u, v):
    """K(u, v) = R(u, v, u, v) / (g(u,u) g(v,v) - g(u,v)^2)."""
    theta = _coords(family, theta)
    ch = _chart(family)
    g = ch.metric(theta)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    den = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    if not den > 1e-24:
        raise DomainError("u and v do not span a plane")
    low = tensors.lower(g, ch.riemann(theta))
    return float(np.einsum("abcd,a,b,c,d->", low, u, v, u, v) / den)


def weyl_projective(family, theta):
    return curvature(family, theta).weyl_projective


def killing_residual(family, theta, K_field):
    """Symmetrized covariant derivative D_mu K_nu + D_nu K_mu.

    Parameters
    ----------
    K_field : callable
        ``K_field(theta) -> (K, dK)`` with ``K[a]`` the contravariant
        components and ``dK[a, mu] = d_mu K^a``.
    """
    theta = _coords(family, theta)
    ch = _chart(family)
    K, dK = K_field(theta)
    K = np.asarray(K, dtype=float)
    dK = np.asarray(dK, dtype=float)
    g = ch.metric(theta)
    dg = ch.metric_grad(theta)
    gamma = ch.christoffel(theta)
    K_low = g @ K
    # d_mu K_nu = d_mu g_{nu a} K^a + g_{nu a} d_mu K^a
    dK_low = np.einsum("mna,a->mn", dg, K) + np.einsum("na,am->mn", g, dK)
    DK = dK_low - np.einsum("lmn,l->mn", gamma, K_low)
    res = DK + DK.T
    return KillingResidual(res, float(np.linalg.norm(res)))


def coordinate_field(index, dim):
    """Constant field d/dtheta^index as a ``K_field`` callback."""
    def field(theta):
        K = np.zeros(dim)
        K[index] = 1.0
        return K, np.zeros((dim, dim))

    return field


def symmetry_errors(report):
    """Max violations of the Riemann symmetries for a report."""
    R = report.riemann_low
    scale = max(1.0, float(np.max(np.abs(R))))
    anti1 = np.max(np.abs(R + np.transpose(R, (1, 0, 2, 3))))
    anti2 = np.max(np.abs(R + np.transpose(R, (0, 1, 3, 2))))
    pair = np.max(np.abs(R - np.transpose(R, (2, 3, 0, 1))))
    bianchi = np.max(
        np.abs(R + np.transpose(R, (0, 2, 3, 1)) + np.transpose(R, (0, 3, 1, 2)))
    )
    trace = abs(report.scalar - float(np.einsum("ij,ij->", report.metric.g_inv, report.ricci)))
    return {
        "antisym_first": float(anti1 / scale),
        "antisym_last": float(anti2 / scale),
        "pair": float(pair / scale),
        "bianchi": float(bianchi / scale),
        "scalar_trace": float(trace),
    }
