"""Index algebra for connections and curvature.

All arrays use the layout

* ``dg[k, i, j]``        = d_k g_ij
* ``d2g[l, k, i, j]``    = d_l d_k g_ij
* ``gamma[k, i, j]``     = Gamma^k_ij
* ``dgamma[l, k, i, j]`` = d_l Gamma^k_ij
* ``riemann[a, b, c, d]`` = R^a_bcd

with R^a_bcd = d_c Gamma^a_bd - d_d Gamma^a_bc
+ Gamma^a_mc Gamma^m_bd - Gamma^a_md Gamma^m_bc.
"""

import numpy as np

FD_REL_STEP = 1e-5
FD_MIN_STEP = 1e-5


def fd_steps(theta):
    """Per-coordinate central-difference steps h_i = max(1e-5, 1e-5 |theta_i|)."""
    theta = np.asarray(theta, dtype=float)
    return np.maximum(FD_MIN_STEP, FD_REL_STEP * np.abs(theta))


def central_gradient(f, theta, steps=None):
    """Central-difference gradient of an array-valued function.

    Returns an array with the derivative index first: ``out[k, ...] = d_k f``.
    """
    theta = np.asarray(theta, dtype=float)
    h = fd_steps(theta) if steps is None else np.asarray(steps, dtype=float)
    out = []
    for k in range(theta.size):
        tp = theta.copy()
        tm = theta.copy()
        tp[k] += h[k]
        tm[k] -= h[k]
        out.append((np.asarray(f(tp)) - np.asarray(f(tm))) / (2.0 * h[k]))
    return np.stack(out)


def christoffel_first_kind(dg):
    """Gamma_{m,ij} = 1/2 (d_i g_mj + d_j g_im - d_m g_ij)."""
    return 0.5 * (np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg)


def christoffel(g_inv, dg):
    return np.einsum("km,mij->kij", g_inv, christoffel_first_kind(dg))


def christoffel_grad(g_inv, dg, d2g):
    """Return (Gamma, dGamma) from analytic first and second metric derivatives."""
    gam1 = christoffel_first_kind(dg)
    # d_l Gamma_{m,ij}
    dgam1 = 0.5 * (
        np.transpose(d2g, (0, 2, 1, 3))
        + np.transpose(d2g, (0, 2, 3, 1))
        - d2g
    )
    dginv = -np.einsum("ka,lab,bm->lkm", g_inv, dg, g_inv)
    gamma = np.einsum("km,mij->kij", g_inv, gam1)
    dgamma = np.einsum("lkm,mij->lkij", dginv, gam1) + np.einsum(
        "km,lmij->lkij", g_inv, dgam1
    )
    return gamma, dgamma


def riemann(gamma, dgamma):
    r = np.transpose(dgamma, (1, 2, 0, 3)) - np.transpose(dgamma, (1, 2, 3, 0))
    r = r + np.einsum("amc,mbd->abcd", gamma, gamma)
    r = r - np.einsum("amd,mbc->abcd", gamma, gamma)
    return r


def ricci(riem):
    """R_bd = R^a_bad."""
    return np.einsum("abad->bd", riem)


def scalar(g_inv, ric):
    return float(np.einsum("ij,ij->", g_inv, ric))


def lower(g, riem):
    """R_{mu nu rho sigma} = g_{mu a} R^a_{nu rho sigma}."""
    return np.einsum("ma,abcd->mbcd", g, riem)


def constant_curvature_tensor(g, K):
    """K (g_mr g_ns - g_ms g_nr), the lowered Riemann tensor of curvature K."""
    return K * (np.einsum("mr,ns->mnrs", g, g) - np.einsum("ms,nr->mnrs", g, g))


def weyl_projective(riem_low, g, scal):
    """W = R_{mnrs} - R/(n(n-1)) (g_ns g_mr - g_nr g_ms)."""
    n = g.shape[0]
    if n < 2:
        return np.zeros_like(riem_low)
    iso = np.einsum("ns,mr->mnrs", g, g) - np.einsum("nr,ms->mnrs", g, g)
    return riem_low - scal / (n * (n - 1)) * iso


def tidal(riem, v, J):
    """R^k_{imj} v^i J^m v^j."""
    return np.einsum("kimj,i,m,j->k", riem, v, J, v)
