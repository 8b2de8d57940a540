"""Parametric probability families and their charts.

Coordinate ordering is fixed per kind:

* ``Exponential1D``: (mu,)
* ``Gaussian1D``: (mu, sigma)
* ``ED1``: (mu1, mu2, sigma2) -- exponential x Gaussian
* ``ED2``: (mu1, sigma1, mu2, sigma2) -- Gaussian x Gaussian
* ``GaussianProduct6N``: 3N blocks (mu_a^(alpha), sigma_a^(alpha)) in
  (alpha, a) lexicographic order
* ``CorrelatedBivariateGaussian``: (mu_x, sigma_x, mu_y, sigma_y) at fixed r
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .charts import ExponentialBlock, GaussianBlock, MonomialChart, ProductChart, SIGMA_GUARD
from .errors import DomainError, NumericError, UsageError

KINDS = (
    "Exponential1D",
    "Gaussian1D",
    "ED1",
    "ED2",
    "GaussianProduct6N",
    "CorrelatedBivariateGaussian",
)

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ParamPoint:
    """Coordinates on a named chart; validated on construction."""

    coords: tuple
    chart_id: str

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype or float)

    @property
    def array(self):
        return np.asarray(self.coords, dtype=float)


def as_coords(family, theta):
    """Unwrap a ParamPoint or array and validate it against ``family``."""
    if isinstance(theta, ParamPoint):
        if theta.chart_id != family.chart_id:
            raise UsageError(f"point on chart {theta.chart_id!r}, expected {family.chart_id!r}")
        theta = theta.array
    return family.validate(theta)


# ---------------------------------------------------------------------------
# one-dimensional factors


class _ExponentialFactor:
    n_params = 1
    micro_dim = 1

    @staticmethod
    def log_pdf(x, p):
        mu = p[0]
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, -np.log(mu) - x / mu, -np.inf)

    @staticmethod
    def score(x, p):
        mu = p[0]
        x = np.asarray(x, dtype=float)
        return np.stack([-1.0 / mu + x / mu**2])

    @staticmethod
    def bounds(p):
        return 0.0, 40.0 * p[0]

    @staticmethod
    def kl(pp, p):
        r = pp[0] / p[0]
        return r - 1.0 - math.log(r)


class _GaussianFactor:
    n_params = 2
    micro_dim = 1

    @staticmethod
    def log_pdf(x, p):
        mu, s = p
        x = np.asarray(x, dtype=float)
        return -((x - mu) ** 2) / (2.0 * s * s) - 0.5 * (LOG_2PI + 2.0 * math.log(s))

    @staticmethod
    def score(x, p):
        mu, s = p
        x = np.asarray(x, dtype=float)
        z = (x - mu) / s
        return np.stack([z / s, (z * z - 1.0) / s])

    @staticmethod
    def bounds(p):
        return p[0] - 12.0 * p[1], p[0] + 12.0 * p[1]

    @staticmethod
    def kl(pp, p):
        (m1, s1), (m0, s0) = pp, p
        return math.log(s0 / s1) + (s1 * s1 + (m1 - m0) ** 2) / (2.0 * s0 * s0) - 0.5


_FACTORS = {"exp": _ExponentialFactor, "gauss": _GaussianFactor}


# ---------------------------------------------------------------------------
# charts for the correlated family


def correlated_metric_chart(r):
    """Monomial chart reproducing the printed correlated-Gaussian metric."""
    q = r * r - 1.0
    coef = np.zeros((4, 4))
    exps = np.zeros((4, 4, 4))
    sx, sy = 1, 3
    coef[0, 0] = -1.0 / q
    exps[0, 0, sx] = -2
    coef[1, 1] = -(2.0 - r * r) / q
    exps[1, 1, sx] = -2
    coef[2, 2] = -1.0 / q
    exps[2, 2, sy] = -2
    coef[3, 3] = -(2.0 - r * r) / q
    exps[3, 3, sy] = -2
    coef[0, 2] = coef[2, 0] = r / q
    exps[0, 2, sx] = exps[0, 2, sy] = exps[2, 0, sx] = exps[2, 0, sy] = -1
    coef[1, 3] = coef[3, 1] = r * r / q
    exps[1, 3, sx] = exps[1, 3, sy] = exps[3, 1, sx] = exps[3, 1, sy] = -1
    return MonomialChart(
        coef,
        exps,
        f"CorrelatedBivariateGaussian(r={r:g})",
        [False, True, False, True],
        ["mu_x", "sigma_x", "mu_y", "sigma_y"],
    )


def printed_correlated_scalar(r):
    """Scalar curvature as printed for the correlated family."""
    return -(8.0 * (r * r - 2.0) + 2.0 * r * r * (3.0 * r * r - 2.0)) / (8.0 * (r * r - 1.0))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Density:
    """A density bound to a parameter point.

    ``log_pdf(x)`` and ``score(x)`` take microstates of shape
    ``(micro_dim,)``; the score is the gradient in the family coordinates.
    """

    family: "StatisticalFamily"
    theta: tuple

    def log_pdf(self, x):
        return self.family.log_pdf(x, self.theta)

    def pdf(self, x):
        return float(np.exp(self.log_pdf(x)))

    def score(self, x):
        return self.family.score(x, self.theta)

    def normalization(self, epsabs=1e-13, epsrel=1e-12):
        return self.family.normalization(self.theta, epsabs, epsrel)

    def expected_score(self, epsabs=1e-13, epsrel=1e-12):
        return self.family.expected_score(self.theta, epsabs, epsrel)


class StatisticalFamily:
    """Parametric family with product (or correlated) structure.

    Use :func:`build_family` rather than calling the constructor.

    Attributes
    ----------
    kind : str
    dimension : int
    microstate_dim : int
    chart : Chart
        Closed-form Fisher-Rao chart.
    domain : list of (lo, hi)
    compact_domain : list of (lo, hi) or None
    """

    def __init__(self, kind, factors=None, r=None, N=None, compact_domain=None):
        self.kind = kind
        self.r = r
        self.N = N
        self.factors = list(factors or [])
        if kind == "CorrelatedBivariateGaussian":
            self.chart = correlated_metric_chart(r)
            self.microstate_dim = 2
        else:
            blocks = []
            names = []
            idx = {"exp": 0, "gauss": 0}
            for f in self.factors:
                idx[f] += 1
                if kind == "GaussianProduct6N":
                    a = (idx[f] - 1) % 3 + 1
                    al = (idx[f] - 1) // 3 + 1
                    nm = (f"mu_{a}^{al}", f"sigma_{a}^{al}")
                elif kind == "ED1":
                    nm = ("mu1",) if f == "exp" else ("mu2", "sigma2")
                elif kind == "ED2":
                    nm = (f"mu{idx[f]}", f"sigma{idx[f]}")
                else:
                    nm = ("mu",) if f == "exp" else ("mu", "sigma")
                blocks.append(ExponentialBlock(nm[0]) if f == "exp" else GaussianBlock(nm))
                names.extend(nm)
            self.chart = ProductChart(blocks, kind, names)
            self.microstate_dim = len(self.factors)
        self.chart.chart_id = self.chart_id
        self.dimension = self.chart.dim
        self.domain = [
            (SIGMA_GUARD, math.inf) if p else (-math.inf, math.inf) for p in self.chart.positive
        ]
        if compact_domain is not None:
            compact_domain = [tuple(map(float, b)) for b in compact_domain]
            if len(compact_domain) != self.dimension:
                raise DomainError("compact_domain length does not match dimension")
            for (lo, hi), (dlo, dhi) in zip(compact_domain, self.domain):
                if not (dlo < lo < hi < dhi):
                    raise DomainError(f"compact box [{lo}, {hi}] not strictly inside domain")
        self.compact_domain = compact_domain

    # -- identity --------------------------------------------------------
    @property
    def chart_id(self):
        if self.kind == "GaussianProduct6N":
            return f"GaussianProduct6N(N={self.N})"
        if self.kind == "CorrelatedBivariateGaussian":
            return f"CorrelatedBivariateGaussian(r={self.r:g})"
        return self.kind

    @property
    def names(self):
        return list(self.chart.names)

    def __repr__(self):
        return f"StatisticalFamily({self.chart_id}, dim={self.dimension})"

    def validate(self, theta):
        return self.chart.validate(theta)

    def point(self, coords):
        return ParamPoint(tuple(float(c) for c in self.validate(coords)), self.chart_id)

    def sample_point(self, rng):
        if self.compact_domain is not None:
            lo, hi = np.array(self.compact_domain).T
            return rng.uniform(lo, hi)
        return self.chart.sample_point(rng)

    def density(self, theta):
        return Density(self, tuple(as_coords(self, theta)))

    # -- factor plumbing --------------------------------------------------
    def _split(self, theta):
        out = []
        i = 0
        for f in self.factors:
            n = _FACTORS[f].n_params
            out.append((_FACTORS[f], theta[i : i + n]))
            i += n
        return out

    def log_pdf(self, x, theta):
        """Log density at microstate(s) ``x`` (last axis = microstate_dim)."""
        theta = as_coords(self, theta)
        x = np.asarray(x, dtype=float)
        if self.kind == "CorrelatedBivariateGaussian":
            return _corr_log_pdf(x, theta, self.r)
        x = np.atleast_1d(x)
        total = 0.0
        for j, (fac, p) in enumerate(self._split(theta)):
            total = total + fac.log_pdf(x[..., j], p)
        return total[()] if np.ndim(total) else float(total)

    def block_log_pdfs(self, x, theta):
        """Per-factor log densities whose sum is :meth:`log_pdf`."""
        theta = as_coords(self, theta)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return [fac.log_pdf(x[..., j], p) for j, (fac, p) in enumerate(self._split(theta))]

    def score(self, x, theta):
        """Gradient of log_pdf with respect to the coordinates."""
        theta = as_coords(self, theta)
        x = np.asarray(x, dtype=float)
        if self.kind == "CorrelatedBivariateGaussian":
            return _corr_score(x, theta, self.r)
        x = np.atleast_1d(x)
        return np.concatenate(
            [fac.score(x[..., j], p) for j, (fac, p) in enumerate(self._split(theta))]
        )

    # -- quadrature checks -----------------------------------------------
    def _corr_bounds(self, theta):
        mx, sx, my, sy = theta
        return (mx - 12 * sx, mx + 12 * sx), (my - 12 * sy, my + 12 * sy)

    def _corr_expect(self, fn, theta, epsabs, epsrel):
        """E[fn(x, y)] for the correlated density via nested quad_vec."""
        (ax, bx), (ay, by) = self._corr_bounds(theta)

        def inner(x):
            def f(y):
                xy = np.array([x, y])
                return np.exp(_corr_log_pdf(xy, theta, self.r)) * fn(xy)

            val, err = integrate.quad_vec(f, ay, by, epsabs=epsabs, epsrel=epsrel)
            return val

        val, err = integrate.quad_vec(inner, ax, bx, epsabs=epsabs, epsrel=epsrel)
        return val, err

    def normalization(self, theta, epsabs=1e-13, epsrel=1e-12):
        """Integral of the density over microstate space by adaptive quadrature."""
        theta = as_coords(self, theta)
        if self.kind == "CorrelatedBivariateGaussian":
            val, _ = self._corr_expect(lambda xy: np.ones(1), theta, epsabs, epsrel)
            return float(val[0])
        total = 1.0
        for fac, p in self._split(theta):
            a, b = fac.bounds(p)
            val, err = integrate.quad(
                lambda x: math.exp(float(fac.log_pdf(x, p))), a, b, epsabs=epsabs, epsrel=epsrel,
                limit=200,
            )
            total *= val
        return total

    def expected_score(self, theta, epsabs=1e-13, epsrel=1e-12):
        """E[score] by quadrature; zero for a regular family."""
        theta = as_coords(self, theta)
        if self.kind == "CorrelatedBivariateGaussian":
            val, _ = self._corr_expect(
                lambda xy: _corr_score(xy, theta, self.r), theta, epsabs, epsrel
            )
            return np.asarray(val)
        out = []
        for fac, p in self._split(theta):
            a, b = fac.bounds(p)
            val, err = integrate.quad_vec(
                lambda x: math.exp(float(fac.log_pdf(x, p))) * fac.score(x, p),
                a, b, epsabs=epsabs, epsrel=epsrel,
            )
            out.append(np.ravel(val))
        return np.concatenate(out)

    def fisher_quadrature(self, theta, epsabs=1e-13, epsrel=1e-12):
        """E[score score^T] by adaptive quadrature.

        Independent factors contribute E[s_i s_j] within a factor and
        E[s_i] E[s_j] across factors, both evaluated numerically.
        """
        theta = as_coords(self, theta)
        d = self.dimension
        if self.kind == "CorrelatedBivariateGaussian":
            def fn(xy):
                s = _corr_score(xy, theta, self.r)
                return np.outer(s, s).ravel()

            val, err = self._corr_expect(fn, theta, epsabs, epsrel)
            return np.asarray(val).reshape(d, d), float(np.max(err))
        blocks = []
        means = []
        errs = [0.0]
        for fac, p in self._split(theta):
            a, b = fac.bounds(p)

            def f(x, fac=fac, p=p):
                w = math.exp(float(fac.log_pdf(x, p)))
                s = fac.score(x, p).ravel()
                return np.concatenate([w * np.outer(s, s).ravel(), w * s])

            val, err = integrate.quad_vec(f, a, b, epsabs=epsabs, epsrel=epsrel)
            n = fac.n_params
            blocks.append(np.asarray(val[: n * n]).reshape(n, n))
            means.append(np.asarray(val[n * n :]))
            errs.append(float(err))
        g = np.outer(np.concatenate(means), np.concatenate(means))
        i = 0
        for blk in blocks:
            n = blk.shape[0]
            g[i : i + n, i : i + n] = blk
            i += n
        return g, max(errs)

    def relative_entropy(self, theta_p, theta):
        if isinstance(theta_p, ParamPoint) and isinstance(theta, ParamPoint):
            if theta_p.chart_id != theta.chart_id:
                raise UsageError("relative entropy between points on different charts")
        tp = as_coords(self, theta_p)
        t = as_coords(self, theta)
        if self.kind == "CorrelatedBivariateGaussian":
            return _corr_kl(tp, t, self.r)
        return float(
            sum(fac.kl(pp, p) for (fac, pp), (_, p) in zip(self._split(tp), self._split(t)))
        )

    # -- serialization ----------------------------------------------------
    def to_dict(self):
        return {
            "kind": self.kind,
            "N": self.N,
            "r": self.r,
            "domain": [[_jnum(lo), _jnum(hi)] for lo, hi in self.domain],
            "compact_domain": None
            if self.compact_domain is None
            else [list(b) for b in self.compact_domain],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _jnum(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


# ---------------------------------------------------------------------------
# correlated bivariate Gaussian


def _corr_parts(xy, theta, r):
    mx, sx, my, sy = theta
    zx = (xy[..., 0] - mx) / sx
    zy = (xy[..., 1] - my) / sy
    return zx, zy, sx, sy, 1.0 - r * r


def _corr_log_pdf(xy, theta, r):
    zx, zy, sx, sy, q = _corr_parts(np.asarray(xy, dtype=float), theta, r)
    Q = zx * zx - 2.0 * r * zx * zy + zy * zy
    return -LOG_2PI - math.log(sx * sy) - 0.5 * math.log(q) - Q / (2.0 * q)


def _corr_score(xy, theta, r):
    zx, zy, sx, sy, q = _corr_parts(np.asarray(xy, dtype=float), theta, r)
    ax = (zx - r * zy) / q
    ay = (zy - r * zx) / q
    return np.stack([ax / sx, (zx * ax - 1.0) / sx, ay / sy, (zy * ay - 1.0) / sy])


def _corr_cov(theta, r):
    _, sx, _, sy = theta
    return np.array([[sx * sx, r * sx * sy], [r * sx * sy, sy * sy]])


def _corr_kl(tp, t, r):
    S1 = _corr_cov(tp, r)
    S0 = _corr_cov(t, r)
    S0i = np.linalg.inv(S0)
    dm = np.array([t[0] - tp[0], t[2] - tp[2]])
    return float(
        0.5
        * (
            np.trace(S0i @ S1)
            + dm @ S0i @ dm
            - 2.0
            + math.log(np.linalg.det(S0) / np.linalg.det(S1))
        )
    )


# ---------------------------------------------------------------------------
# public constructors


def build_family(kind, N=None, r=None, compact_domain=None):
    """Construct a :class:`StatisticalFamily`.

    Parameters
    ----------
    kind : str
        One of ``KINDS``.
    N : int, optional
        Number of particles for ``GaussianProduct6N`` (dimension 6N).
    r : float, optional
        Correlation for ``CorrelatedBivariateGaussian``; must lie in (-1, 1).
    compact_domain : list of (lo, hi), optional
    """
    if kind not in KINDS:
        raise DomainError(f"unknown family kind {kind!r}")
    if kind == "Exponential1D":
        return StatisticalFamily(kind, ["exp"], compact_domain=compact_domain)
    if kind == "Gaussian1D":
        return StatisticalFamily(kind, ["gauss"], compact_domain=compact_domain)
    if kind == "ED1":
        return StatisticalFamily(kind, ["exp", "gauss"], compact_domain=compact_domain)
    if kind == "ED2":
        return StatisticalFamily(kind, ["gauss", "gauss"], compact_domain=compact_domain)
    if kind == "GaussianProduct6N":
        if N is None or int(N) != N or N < 1:
            raise DomainError(f"GaussianProduct6N needs integer N >= 1, got {N!r}")
        N = int(N)
        return StatisticalFamily(kind, ["gauss"] * (3 * N), N=N, compact_domain=compact_domain)
    if r is None or not (-1.0 < float(r) < 1.0):
        raise DomainError(f"correlation r must lie in (-1, 1), got {r!r}")
    return StatisticalFamily(kind, r=float(r), compact_domain=compact_domain)


def family_from_dict(doc):
    """Inverse of :meth:`StatisticalFamily.to_dict` (domain is implied by kind)."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise DomainError("family descriptor needs a 'kind'")
    return build_family(
        doc["kind"], N=doc.get("N"), r=doc.get("r"), compact_domain=doc.get("compact_domain")
    )


def family_from_json(text):
    return family_from_dict(json.loads(text))


def maxent_gaussian(mean, variance):
    """Maximum-entropy density for a given mean and variance (uniform prior).

    Returns a :class:`Density` of the ``Gaussian1D`` family at
    (mu, sigma) = (mean, sqrt(variance)).
    """
    if not variance > 0:
        raise DomainError(f"variance must be positive, got {variance!r}")
    fam = build_family("Gaussian1D")
    return fam.density([float(mean), math.sqrt(variance)])


def relative_entropy(family, theta_p, theta):
    """S(theta'|theta) = int p(x|theta') log[p(x|theta')/p(x|theta)] dx (closed form)."""
    return family.relative_entropy(theta_p, theta)
