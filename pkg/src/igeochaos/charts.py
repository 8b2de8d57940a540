"""Coordinate charts: metric values plus the derivatives the flows need.

A chart only has to provide ``metric``; first and second metric derivatives
fall back to central differences when a subclass does not supply them.
Christoffel symbols, Riemann tensor, geodesic acceleration and the tidal term
of the geodesic-deviation equation are derived here once for all charts.
"""

import numpy as np

from . import tensors
from .errors import DomainError, SingularMetricError

SIGMA_GUARD = 1e-12


class Chart:
    """Base class for a Riemannian chart on an open box domain.

    Parameters
    ----------
    dim : int
    chart_id : str
    positive : sequence of bool, optional
        Coordinates that must stay above ``SIGMA_GUARD`` (sigma-type).
    names : sequence of str, optional
    """

    def __init__(self, dim, chart_id, positive=None, names=None):
        self.dim = int(dim)
        self.chart_id = str(chart_id)
        if positive is None:
            positive = [False] * self.dim
        self.positive = np.asarray(positive, dtype=bool)
        self.names = list(names) if names is not None else [f"x{i}" for i in range(self.dim)]

    # -- domain -----------------------------------------------------------
    def contains(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,) or not np.all(np.isfinite(theta)):
            return False
        return bool(np.all(theta[self.positive] > SIGMA_GUARD))

    def validate(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise DomainError(
                f"{self.chart_id}: expected {self.dim} coordinates, got shape {theta.shape}"
            )
        if not np.all(np.isfinite(theta)):
            raise DomainError(f"{self.chart_id}: non-finite coordinate in {theta}")
        bad = self.positive & ~(theta > SIGMA_GUARD)
        if np.any(bad):
            names = [self.names[i] for i in np.flatnonzero(bad)]
            raise SingularMetricError(
                f"{self.chart_id}: coordinates {names} must exceed {SIGMA_GUARD:g}"
            )
        return theta

    def sample_point(self, rng):
        """Random interior point used by property checks."""
        theta = rng.uniform(-2.0, 2.0, self.dim)
        theta[self.positive] = rng.uniform(0.5, 2.0, int(self.positive.sum()))
        return theta

    # -- metric and derivatives ------------------------------------------
    def metric(self, theta):
        raise NotImplementedError

    def metric_grad(self, theta):
        return tensors.central_gradient(self.metric, theta)

    def metric_hess(self, theta):
        return tensors.central_gradient(self.metric_grad, theta)

    # -- derived geometry ------------------------------------------------
    def christoffel(self, theta):
        g = self.metric(theta)
        return tensors.christoffel(np.linalg.inv(g), self.metric_grad(theta))

    def christoffel_and_grad(self, theta):
        g = self.metric(theta)
        return tensors.christoffel_grad(
            np.linalg.inv(g), self.metric_grad(theta), self.metric_hess(theta)
        )

    def riemann(self, theta):
        gamma, dgamma = self.christoffel_and_grad(theta)
        return tensors.riemann(gamma, dgamma)

    def geodesic_acc(self, theta, v):
        """-Gamma^k_ij v^i v^j."""
        return -np.einsum("kij,i,j->k", self.christoffel(theta), v, v)

    def jlc_terms(self, theta, v, J, P):
        """Right-hand side of the covariant first-order deviation system.

        Returns ``(dJ, dP)`` with dJ = P - Gamma(J, v) and
        dP = -Gamma(P, v) - R(v, J, v).
        """
        gamma, dgamma = self.christoffel_and_grad(theta)
        riem = tensors.riemann(gamma, dgamma)
        dJ = P - np.einsum("kij,i,j->k", gamma, J, v)
        dP = -np.einsum("kij,i,j->k", gamma, P, v) - tensors.tidal(riem, v, J)
        return dJ, dP


class MonomialChart(Chart):
    """Metric whose entries are monomials: g_ij = c_ij prod_k theta_k^e_ijk.

    Covers every Gaussian/exponential Fisher metric used here, the
    correlated bivariate Gaussian at fixed r, and half-space models of
    constant negative curvature. Derivatives are exact.
    """

    def __init__(self, coef, exps, chart_id, positive=None, names=None):
        coef = np.asarray(coef, dtype=float)
        exps = np.asarray(exps, dtype=float)
        d = coef.shape[0]
        super().__init__(d, chart_id, positive, names)
        self.coef = coef
        self.exps = exps
        # exponents may only act on positive coordinates
        used = np.any(exps != 0, axis=(0, 1))
        if np.any(used & ~self.positive):
            raise ValueError("monomial exponents on a coordinate that is not positive")
        self._used = np.flatnonzero(used)

    def _prod(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self._used.size == 0:
            return np.ones_like(self.coef)
        t = theta[self._used]
        return np.prod(t[None, None, :] ** self.exps[:, :, self._used], axis=2)

    def metric(self, theta):
        return self.coef * self._prod(theta)

    def metric_grad(self, theta):
        theta = np.asarray(theta, dtype=float)
        g = self.metric(theta)
        out = np.zeros((self.dim,) + g.shape)
        for k in self._used:
            out[k] = g * self.exps[:, :, k] / theta[k]
        return out

    def metric_hess(self, theta):
        theta = np.asarray(theta, dtype=float)
        g = self.metric(theta)
        out = np.zeros((self.dim, self.dim) + g.shape)
        for l in self._used:
            el = self.exps[:, :, l]
            for k in self._used:
                ek = self.exps[:, :, k]
                if k == l:
                    out[l, k] = g * el * (el - 1.0) / theta[l] ** 2
                else:
                    out[l, k] = g * el * ek / (theta[l] * theta[k])
        return out


class ProductChart(Chart):
    """Riemannian product of independent blocks (block-diagonal metric).

    Curvature, Christoffel symbols and flow right-hand sides are computed per
    block, which keeps large products (e.g. 3N Gaussian blocks) cheap.
    """

    def __init__(self, blocks, chart_id, names=None):
        self.blocks = list(blocks)
        self.slices = []
        start = 0
        for b in self.blocks:
            self.slices.append(slice(start, start + b.dim))
            start += b.dim
        positive = np.concatenate([b.positive for b in self.blocks])
        if names is None:
            names = [n for b in self.blocks for n in b.names]
        super().__init__(start, chart_id, positive, names)
        # all-monomial products evaluate metric values in one vectorized call
        self._mono = None
        if all(isinstance(b, MonomialChart) for b in self.blocks):
            coef = np.zeros((start, start))
            exps = np.zeros((start, start, start))
            for b, s in zip(self.blocks, self.slices):
                coef[s, s] = b.coef
                exps[s, s, s] = b.exps
            self._mono = MonomialChart(coef, exps, chart_id, positive)

    def sample_point(self, rng):
        return np.concatenate([b.sample_point(rng) for b in self.blocks])

    def _assemble(self, parts, rank):
        d = self.dim
        out = np.zeros((d,) * rank)
        for s, p in zip(self.slices, parts):
            out[(s,) * rank] = p
        return out

    def metric(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self._mono is not None:
            return self._mono.metric(theta)
        return self._assemble([b.metric(theta[s]) for b, s in zip(self.blocks, self.slices)], 2)

    def metric_grad(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self._assemble(
            [b.metric_grad(theta[s]) for b, s in zip(self.blocks, self.slices)], 3
        )

    def metric_hess(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self._assemble(
            [b.metric_hess(theta[s]) for b, s in zip(self.blocks, self.slices)], 4
        )

    def christoffel(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self._assemble(
            [b.christoffel(theta[s]) for b, s in zip(self.blocks, self.slices)], 3
        )

    def christoffel_and_grad(self, theta):
        theta = np.asarray(theta, dtype=float)
        gs, dgs = [], []
        for b, s in zip(self.blocks, self.slices):
            g, dg = b.christoffel_and_grad(theta[s])
            gs.append(g)
            dgs.append(dg)
        return self._assemble(gs, 3), self._assemble(dgs, 4)

    def riemann(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self._assemble([b.riemann(theta[s]) for b, s in zip(self.blocks, self.slices)], 4)

    def geodesic_acc(self, theta, v):
        out = np.empty(self.dim)
        for b, s in zip(self.blocks, self.slices):
            out[s] = b.geodesic_acc(theta[s], v[s])
        return out

    def jlc_terms(self, theta, v, J, P):
        dJ = np.empty(self.dim)
        dP = np.empty(self.dim)
        for b, s in zip(self.blocks, self.slices):
            dJ[s], dP[s] = b.jlc_terms(theta[s], v[s], J[s], P[s])
        return dJ, dP


class ExponentialBlock(MonomialChart):
    """Fisher metric of an exponential law with mean mu: 1/mu^2."""

    def __init__(self, name="mu"):
        super().__init__([[1.0]], [[[-2.0]]], "exponential", [True], [name])

    def sample_point(self, rng):
        return rng.uniform(0.5, 3.0, 1)

    def christoffel(self, theta):
        return np.array([[[-1.0 / theta[0]]]])

    def geodesic_acc(self, theta, v):
        return v * v / theta

    def jlc_terms(self, theta, v, J, P):
        # one-dimensional: no curvature
        return P + J * v / theta, P * v / theta


class GaussianBlock(MonomialChart):
    """Fisher metric of a normal law in (mu, sigma): diag(1, 2)/sigma^2."""

    def __init__(self, names=("mu", "sigma")):
        coef = np.diag([1.0, 2.0])
        exps = np.zeros((2, 2, 2))
        exps[0, 0, 1] = -2.0
        exps[1, 1, 1] = -2.0
        super().__init__(coef, exps, "gaussian", [False, True], names)

    def christoffel(self, theta):
        s = theta[1]
        gam = np.zeros((2, 2, 2))
        gam[0, 0, 1] = gam[0, 1, 0] = -1.0 / s
        gam[1, 0, 0] = 1.0 / (2.0 * s)
        gam[1, 1, 1] = -1.0 / s
        return gam

    def geodesic_acc(self, theta, v):
        s = theta[1]
        return np.array([2.0 * v[0] * v[1] / s, (v[1] ** 2 - 0.5 * v[0] ** 2) / s])

    def jlc_terms(self, theta, v, J, P):
        s = theta[1]
        # Gamma(X, v) for X = J, P
        def gam(X):
            return np.array(
                [-(X[0] * v[1] + X[1] * v[0]) / s, (0.5 * X[0] * v[0] - X[1] * v[1]) / s]
            )

        # constant curvature K = -1/2: R^k_imj v^i J^m v^j = K (J^k <v,v> - v^k <v,J>)
        gv = np.array([1.0, 2.0]) / s**2
        vv = float(np.dot(gv * v, v))
        vJ = float(np.dot(gv * v, J))
        tid = -0.5 * (J * vv - v * vJ)
        return P - gam(J), -gam(P) - tid


class EuclideanChart(MonomialChart):
    """Flat chart with constant metric (identity scaled by ``scale``)."""

    def __init__(self, dim, scale=1.0):
        coef = np.eye(dim) * scale
        super().__init__(coef, np.zeros((dim, dim, dim)), f"euclidean{dim}")


class HyperbolicChart(MonomialChart):
    """Half-space model of constant curvature K < 0: g = delta / (-K x_n^2)."""

    def __init__(self, dim=2, K=-1.0):
        if not K < 0:
            raise DomainError("HyperbolicChart requires K < 0")
        coef = np.eye(dim) / (-K)
        exps = np.zeros((dim, dim, dim))
        for i in range(dim):
            exps[i, i, dim - 1] = -2.0
        positive = [False] * (dim - 1) + [True]
        super().__init__(coef, exps, f"hyperbolic{dim}", positive)
        self.K = float(K)


def poincare_half_plane():
    """(dx^2 + dy^2)/y^2 on y > 0."""
    ch = HyperbolicChart(2, -1.0)
    ch.chart_id = "poincare"
    ch.names = ["x", "y"]
    return ch
