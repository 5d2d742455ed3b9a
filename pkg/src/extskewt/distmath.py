"""Normal, t and skew-t building blocks.

Densities, distribution functions and samplers for the extended skew-normal
and the non-central extended skew-t families, together with the parameter
maps that keep these families closed under marginalisation and conditioning.

Multivariate t probabilities with non-centrality confined to the last
coordinate are evaluated either by randomized quasi-Monte Carlo (separation
of variables over a scrambled Sobol lattice) or, in low dimension, by nested
Gauss-Jacobi quadrature over the conditional-t recursion. The quadrature
route is deterministic and smooth in its inputs, which keeps finite
differences of likelihoods stable.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import special as sp
from scipy.stats import qmc

from ._linalg import as_corr, cov_to_corr, schur

BOUND_CLIP = 38.0
DELTA_LIMIT = 1.0 - 1e-10
MAX_QUAD_DIM = 3


class CdfResult(NamedTuple):
    """Probability estimate with its absolute error estimate."""

    value: np.ndarray
    error: np.ndarray
    converged: bool


@dataclass(frozen=True)
class QmcConfig:
    """Accuracy controls for multivariate normal and t probabilities.

    ``method`` selects the backend: ``"qmc"`` always uses randomized QMC,
    ``"quad"`` forces nested quadrature (dimension <= 3) and ``"auto"``
    picks quadrature whenever it applies.
    """

    sample_count: int = 4096
    seed: int = 20240611
    target_abs_tol: float = 1e-6
    max_randomizations: int = 12
    method: str = "auto"
    quad_nodes: int = 40

    def __post_init__(self):
        if int(self.sample_count) < 128:
            raise ValueError("sample_count must be >= 128")
        if not 0.0 < self.target_abs_tol < 1.0:
            raise ValueError("target_abs_tol must lie in (0, 1)")
        if int(self.max_randomizations) < 1:
            raise ValueError("max_randomizations must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.method not in ("auto", "qmc", "quad"):
            raise ValueError("method must be 'auto', 'qmc' or 'quad'")
        if int(self.quad_nodes) < 8:
            raise ValueError("quad_nodes must be >= 8")


DEFAULT_CFG = QmcConfig()


@dataclass(frozen=True)
class CorrelationMatrix:
    """Validated correlation matrix."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", as_corr(self.entries))

    @property
    def dim(self):
        return self.entries.shape[0]

    @classmethod
    def from_offdiag(cls, values, dim):
        """Build from upper-triangular entries in row-major order."""
        mat = np.eye(dim)
        iu = np.triu_indices(dim, 1)
        mat[iu] = values
        mat[(iu[1], iu[0])] = values
        return cls(mat)


@dataclass(frozen=True)
class SkewTParams:
    """Parameters (mu, Omega, alpha, tau, kappa, nu) of a non-central extended skew-t law.

    ``nu = inf`` gives the extended skew-normal law, in which case ``kappa``
    simply shifts the extension parameter.
    """

    mu: np.ndarray
    omega: np.ndarray
    alpha: np.ndarray
    tau: float = 0.0
    kappa: float = 0.0
    nu: float = np.inf
    scale_sd: np.ndarray = field(init=False, repr=False)
    corr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        omega = np.atleast_2d(np.asarray(self.omega, dtype=float))
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        d = mu.size
        if omega.shape != (d, d) or alpha.size != d:
            raise ValueError("mu, omega and alpha dimensions disagree")
        if not np.allclose(omega, omega.T, atol=1e-12):
            raise ValueError("omega must be symmetric")
        try:
            np.linalg.cholesky(omega)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError("omega is not positive definite") from exc
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        sd = np.sqrt(np.diag(omega))
        corr = omega / np.outer(sd, sd)
        for name, val in (("mu", mu), ("omega", omega), ("alpha", alpha)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "scale_sd", sd)
        object.__setattr__(self, "corr", corr)
        if np.any(np.abs(self.delta) > DELTA_LIMIT):
            raise ValueError("degenerate slant: |delta_i| too close to 1")

    @classmethod
    def standard(cls, corr, alpha, tau=0.0, kappa=0.0, nu=np.inf):
        corr = np.atleast_2d(np.asarray(corr, dtype=float))
        return cls(np.zeros(corr.shape[0]), corr, alpha, tau, kappa, nu)

    @property
    def dim(self):
        return self.mu.size

    @property
    def q_alpha(self):
        return float(self.alpha @ self.corr @ self.alpha)

    @property
    def delta(self):
        return self.corr @ self.alpha / np.sqrt(1.0 + self.q_alpha)

    @property
    def tau_bar(self):
        return self.tau / np.sqrt(1.0 + self.q_alpha)

    @property
    def kappa_bar(self):
        return self.kappa / np.sqrt(1.0 + self.q_alpha)

    def augmented_corr(self):
        """Correlation matrix of (X, X_{d+1}) used by the distribution function."""
        d = self.dim
        out = np.empty((d + 1, d + 1))
        out[:d, :d] = self.corr
        out[:d, d] = out[d, :d] = -self.delta
        out[d, d] = 1.0
        return out


# ----------------------------------------------------------------------------
# univariate t


def noncentral_t_cdf(x, delta, nu):
    """Distribution function of the univariate non-central t law."""
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    nu = float(nu)
    if not nu > 0:
        raise ValueError("nu must be positive")
    if np.isinf(nu):
        return sp.ndtr(x - delta)
    if np.all(delta == 0.0):
        return sp.stdtr(nu, x) + np.zeros_like(delta)
    return sp.nctdtr(nu, delta, x)


def t_pdf(x, nu):
    x = np.asarray(x, dtype=float)
    if np.isinf(nu):
        return np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)
    logc = sp.gammaln((nu + 1) / 2) - sp.gammaln(nu / 2) - 0.5 * np.log(nu * np.pi)
    return np.exp(logc - 0.5 * (nu + 1) * np.log1p(x * x / nu))


# ----------------------------------------------------------------------------
# deterministic multivariate t probabilities


@lru_cache(maxsize=256)
def _jacobi_rule(n, beta):
    x, w = sp.roots_jacobi(n, 0.0, beta)
    return x, w


@lru_cache(maxsize=32)
def _legendre_rule(n):
    return np.polynomial.legendre.leggauss(n)


def _conditional_step(corr):
    """Partial correlation of coordinates 2..m given the first, and slopes."""
    rho = corr[1:, 0]
    s = np.sqrt(1.0 - rho**2)
    part = (corr[1:, 1:] - np.outer(rho, rho)) / np.outer(s, s)
    np.fill_diagonal(part, 1.0)
    return rho, s, part


def _quad_mvt(upper, corr, nc_last, df, n_nodes):
    """P(T <= upper) for rows of ``upper``; only the last coordinate may be non-central.

    Conditions on the first coordinate, whose law is central t, and recurses
    with ``df + 1``. The outer integral is mapped to an angle so that the
    integrand is analytic apart from an algebraic end-point factor absorbed
    into a Gauss-Jacobi rule.
    """
    upper = np.asarray(upper, dtype=float)
    n, m = upper.shape
    if m == 1:
        return noncentral_t_cdf(upper[:, 0], nc_last, df)
    rho, s, part = _conditional_step(corr)
    b1 = upper[:, 0]
    nc_next = nc_last / s[-1]
    if np.isinf(df):
        xg, wg = _legendre_rule(n_nodes)
        top = sp.ndtr(b1)
        u = 0.5 * (xg[None, :] + 1.0) * top[:, None]
        t = sp.ndtri(np.clip(u, 1e-300, 1.0))
        rest = upper[:, 1:, None]
        b_new = (rest - rho[None, :, None] * t[:, None, :]) / s[None, :, None]
        b_new = np.where(np.isinf(rest), rest, b_new)
        flat = np.moveaxis(b_new, 1, 2).reshape(-1, m - 1)
        inner = _quad_mvt(flat, part, nc_next, df, n_nodes).reshape(n, n_nodes)
        return 0.5 * top * (inner @ wg)
    beta = df - 1.0
    xj, wj = _jacobi_rule(n_nodes, float(beta))
    theta_b = np.arctan(b1 / np.sqrt(df))
    span = theta_b + 0.5 * np.pi
    phi = 0.5 * span[:, None] * (1.0 + xj[None, :])
    theta = phi - 0.5 * np.pi
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(phi > 0, np.sin(phi) / (1.0 + xj[None, :]), 0.5 * span[:, None])
    weight = wj[None, :] * ratio**beta
    kconst = np.exp(sp.gammaln((df + 1) / 2) - sp.gammaln(df / 2)) / np.sqrt(np.pi)
    cth, sth = np.cos(theta), np.sin(theta)
    scale = np.sqrt((df + 1.0) / df)
    rest = upper[:, 1:, None]
    with np.errstate(invalid="ignore"):
        b_new = (rest * cth[:, None, :] - rho[None, :, None] * np.sqrt(df) * sth[:, None, :])
        b_new = b_new * scale / s[None, :, None]
    b_new = np.where(np.isinf(rest), rest, b_new)
    flat = np.moveaxis(b_new, 1, 2).reshape(-1, m - 1)
    inner = _quad_mvt(flat, part, nc_next, df + 1.0, n_nodes).reshape(n, n_nodes)
    out = kconst * 0.5 * span * np.sum(weight * inner, axis=1)
    return np.where(span > 0, out, 0.0)


# ----------------------------------------------------------------------------
# randomized QMC


def _qmc_single(upper, corr, nc, df, cfg):
    if np.any(upper == -np.inf):
        return 0.0, 0.0, True
    live = np.flatnonzero(upper < np.inf)
    if live.size == 0:
        return 1.0, 0.0, True
    if live.size == 1:
        return float(noncentral_t_cdf(upper[live[0]], nc[live[0]], df)), 0.0, True
    if live.size < upper.size:
        upper, nc, corr = upper[live], nc[live], corr[np.ix_(live, live)]
    m = upper.size
    b = upper.copy()
    order = np.argsort(b - nc, kind="stable")
    b, nc = b[order], nc[order]
    chol = np.linalg.cholesky(corr[np.ix_(order, order)])
    dim_q = m - 1 + (0 if np.isinf(df) else 1)
    seeds = np.random.SeedSequence(int(cfg.seed)).spawn(int(cfg.max_randomizations))
    ests = []
    for r in range(int(cfg.max_randomizations)):
        pts = qmc.Sobol(dim_q, scramble=True, seed=np.random.default_rng(seeds[r])).random(
            int(cfg.sample_count)
        )
        if np.isinf(df):
            bb = np.broadcast_to(b - nc, (pts.shape[0], m))
        else:
            chi = np.sqrt(sp.chdtri(df, pts[:, -1]) / df)
            with np.errstate(invalid="ignore"):
                bb = b[None, :] * chi[:, None] - nc[None, :]
        bb = np.clip(bb, -BOUND_CLIP, BOUND_CLIP)
        prob = np.ones(pts.shape[0])
        ys = np.zeros((pts.shape[0], m))
        for i in range(m):
            c = (bb[:, i] - ys[:, :i] @ chol[i, :i]) / chol[i, i]
            ei = sp.ndtr(c)
            prob *= ei
            if i < m - 1:
                ys[:, i] = sp.ndtri(np.clip(pts[:, i] * ei, 1e-300, 1.0 - 1e-16))
        ests.append(prob.mean())
        if r >= 3:
            se = np.std(ests, ddof=1) / np.sqrt(len(ests))
            if se <= cfg.target_abs_tol:
                break
    ests = np.asarray(ests)
    se = np.std(ests, ddof=1) / np.sqrt(ests.size) if ests.size > 1 else np.inf
    return float(ests.mean()), float(se), bool(se <= cfg.target_abs_tol)


def _prep_upper(upper, m):
    arr = np.asarray(upper, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != m:
        raise ValueError(f"upper must have {m} columns")
    if np.any(np.isnan(arr)):
        raise ValueError("upper contains NaN")
    return arr, single


def mvt_cdf(upper, corr, noncentrality=None, nu=np.inf, cfg=DEFAULT_CFG):
    """P(T <= upper) for a (non-central) multivariate t vector.

    ``T = (G + noncentrality) / S`` with ``G ~ N(0, corr)`` and
    ``S = sqrt(chi2_nu / nu)``; ``nu = inf`` gives the normal case.
    ``upper`` may be one vector or a matrix of row vectors.
    """
    corr = as_corr(corr)
    m = corr.shape[0]
    if not nu > 0:
        raise ValueError("nu must be positive")
    nc = np.zeros(m) if noncentrality is None else np.asarray(noncentrality, float).reshape(m)
    arr, single = _prep_upper(upper, m)
    use_quad = cfg.method == "quad" or (
        cfg.method == "auto" and m <= MAX_QUAD_DIM and not np.any(nc[:-1] != 0.0)
    )
    if cfg.method == "quad" and (m > MAX_QUAD_DIM or np.any(nc[:-1] != 0.0)):
        raise ValueError("quadrature backend needs dimension <= 3 and a central leading block")
    if m == 1:
        val = noncentral_t_cdf(arr[:, 0], nc[0], nu)
        err = np.zeros_like(val)
        conv = True
    elif use_quad:
        val = _quad_mvt(arr, corr, nc[-1], float(nu), int(cfg.quad_nodes))
        err = np.zeros_like(val)
        conv = True
    else:
        res = [_qmc_single(row, corr, nc.copy(), float(nu), cfg) for row in arr]
        val = np.array([r[0] for r in res])
        err = np.array([r[1] for r in res])
        conv = all(r[2] for r in res)
    val = np.clip(val, 0.0, 1.0)
    if single:
        return CdfResult(float(val[0]), float(err[0]), conv)
    return CdfResult(val, err, conv)


def mvn_cdf(upper, corr, cfg=DEFAULT_CFG):
    """P(X <= upper) for a standard multivariate normal vector with correlation ``corr``."""
    corr = np.atleast_2d(np.asarray(corr, dtype=float))
    if corr.size == 0:
        raise ValueError("dimension must be >= 1")
    return mvt_cdf(upper, corr, None, np.inf, cfg)


# ----------------------------------------------------------------------------
# skew densities and distribution functions


def _standardize(y, params):
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[1] != params.dim:
        raise ValueError(f"y must have {params.dim} columns")
    return (y - params.mu) / params.scale_sd, single


def _ret(val, single):
    return float(val[0]) if single else val


def esn_pdf(y, params):
    """Extended skew-normal density (``params.nu`` and ``params.kappa`` ignored)."""
    z, single = _standardize(y, params)
    d = params.dim
    chol = np.linalg.cholesky(params.omega)
    resid = np.linalg.solve(chol, (z * params.scale_sd).T)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    logphi = -0.5 * np.sum(resid**2, axis=0) - 0.5 * d * np.log(2 * np.pi) - 0.5 * logdet
    skew = sp.log_ndtr(z @ params.alpha + params.tau) - sp.log_ndtr(params.tau_bar)
    return _ret(np.exp(logphi + skew), single)


def t_logpdf_multi(z, corr, nu):
    """Log density of a central multivariate t with unit scales."""
    d = corr.shape[0]
    chol = np.linalg.cholesky(corr)
    resid = np.linalg.solve(chol, np.atleast_2d(z).T)
    quad = np.sum(resid**2, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    if np.isinf(nu):
        return -0.5 * quad - 0.5 * d * np.log(2 * np.pi) - 0.5 * logdet, quad
    logc = (
        sp.gammaln((nu + d) / 2)
        - sp.gammaln(nu / 2)
        - 0.5 * d * np.log(nu * np.pi)
        - 0.5 * logdet
    )
    return logc - 0.5 * (nu + d) * np.log1p(quad / nu), quad


def ncest_pdf(y, params):
    """Non-central extended skew-t density."""
    if np.isinf(params.nu):
        shifted = SkewTParams(params.mu, params.omega, params.alpha, params.tau - params.kappa)
        return esn_pdf(y, shifted)
    z, single = _standardize(y, params)
    d, nu = params.dim, params.nu
    logt, quad = t_logpdf_multi(z, params.corr, nu)
    logt = logt - np.sum(np.log(params.scale_sd))
    arg = (z @ params.alpha + params.tau) * np.sqrt((nu + d) / (nu + quad))
    num = noncentral_t_cdf(arg, params.kappa, nu + d)
    den = noncentral_t_cdf(params.tau_bar, params.kappa_bar, nu)
    return _ret(np.exp(logt) * num / den, single)


def ncest_cdf(y, params, cfg=DEFAULT_CFG):
    """Non-central extended skew-t distribution function, with error estimate."""
    z, single = _standardize(y, params)
    nu = params.nu
    kb, tb = params.kappa_bar, params.tau_bar
    if np.isinf(nu):
        tb, kb = tb - kb, 0.0
    upper = np.column_stack([z, np.full(z.shape[0], tb)])
    nc = np.zeros(params.dim + 1)
    nc[-1] = kb
    res = mvt_cdf(upper, params.augmented_corr(), nc, nu, cfg)
    den = noncentral_t_cdf(tb, kb, nu)
    val = np.clip(np.asarray(res.value) / den, 0.0, 1.0)
    err = np.asarray(res.error) / den
    if single:
        return CdfResult(float(val[0]), float(err[0]), res.converged)
    return CdfResult(val, err, res.converged)


def est_cdf_std(z, corr, alpha, tau, kappa, nu, cfg=DEFAULT_CFG):
    """Vectorised extended skew-t cdf for standardized arguments (rows of ``z``)."""
    corr = np.atleast_2d(np.asarray(corr, float))
    alpha = np.atleast_1d(np.asarray(alpha, float))
    z = np.atleast_2d(np.asarray(z, float))
    q = float(alpha @ corr @ alpha)
    root = np.sqrt(1.0 + q)
    if q == 0.0:
        lead = mvt_cdf(z, corr, None, nu, cfg)
        if tau == 0.0 and kappa == 0.0 or np.isinf(nu):
            return lead
    k = corr.shape[0]
    big = np.empty((k + 1, k + 1))
    big[:k, :k] = corr
    big[:k, k] = big[k, :k] = -(corr @ alpha) / root
    big[k, k] = 1.0
    tb, kb = tau / root, kappa / root
    if np.isinf(nu):
        tb, kb = tb - kb, 0.0
    upper = np.column_stack([z, np.full(z.shape[0], tb)])
    nc = np.zeros(k + 1)
    nc[-1] = kb
    res = mvt_cdf(upper, big, nc, nu, cfg)
    den = noncentral_t_cdf(tb, kb, nu)
    return CdfResult(np.clip(res.value / den, 0.0, 1.0), res.error / den, res.converged)


def est_pdf_std(z, corr, alpha, tau, kappa, nu):
    """Vectorised extended skew-t density for standardized arguments."""
    params = SkewTParams.standard(corr, alpha, tau, kappa, nu)
    return np.atleast_1d(ncest_pdf(np.atleast_2d(z), params))


# ----------------------------------------------------------------------------
# closure under marginalisation and conditioning


def _index_sets(d, index_set):
    idx = np.unique(np.asarray(list(index_set), dtype=int))
    if idx.size == 0 or idx.size >= d or idx.min() < 0 or idx.max() >= d:
        raise ValueError("index set must be a nonempty proper subset of 0..d-1")
    rest = np.setdiff1d(np.arange(d), idx)
    return idx, rest


def marginal_params(params, index_set):
    """Parameters of the sub-vector ``Y_I`` (indices are 0-based)."""
    idx, rest = _index_sets(params.dim, index_set)
    c = params.corr
    tilde, _ = schur(c, rest, idx)
    a_rest = params.alpha[rest]
    scale = np.sqrt(1.0 + a_rest @ tilde @ a_rest)
    shift = np.linalg.solve(c[np.ix_(idx, idx)], c[np.ix_(idx, rest)] @ a_rest)
    return SkewTParams(
        params.mu[idx],
        params.omega[np.ix_(idx, idx)],
        (params.alpha[idx] + shift) / scale,
        params.tau / scale,
        params.kappa / scale,
        params.nu,
    )


def conditional_params(params, index_set, y_given):
    """Parameters of ``Y_rest | Y_I = y_given`` (indices are 0-based).

    The non-centrality of the conditional law equals that of the joint law;
    only the extension parameter is rescaled.
    """
    idx, rest = _index_sets(params.dim, index_set)
    y_given = np.asarray(y_given, dtype=float).reshape(idx.size)
    om = params.omega
    c = params.corr
    z_i = (y_given - params.mu[idx]) / params.scale_sd[idx]
    cond_cov, reg = schur(om, rest, idx)
    mu_c = params.mu[rest] + reg @ (y_given - params.mu[idx])
    q_i = float(z_i @ np.linalg.solve(c[np.ix_(idx, idx)], z_i))
    nu = params.nu
    zeta = 1.0 if np.isinf(nu) else (nu + q_i) / (nu + idx.size)
    sd_c = np.sqrt(np.diag(cond_cov))
    alpha_c = sd_c / params.scale_sd[rest] * params.alpha[rest]
    creg = np.linalg.solve(c[np.ix_(idx, idx)], c[np.ix_(idx, rest)] @ params.alpha[rest])
    tau_c = (float((creg + params.alpha[idx]) @ z_i) + params.tau) / np.sqrt(zeta)
    return SkewTParams(
        mu_c,
        zeta * cond_cov,
        alpha_c,
        tau_c,
        params.kappa,
        nu + idx.size,
    )


# ----------------------------------------------------------------------------
# samplers

MIN_ACCEPT = 1e-6
GUARD_PROPOSALS = 1_000_000


def _chi_scale(rng, nu, size):
    if np.isinf(nu):
        return np.ones(size)
    return np.sqrt(rng.chisquare(nu, size) / nu)


def sample_conditioning(params, n, rng):
    """Draw ``n`` variates by rejection: keep X when alpha'X + tau > X0.

    X and X0 share the chi mixing variable, which is what makes the result
    follow the non-central extended skew-t law.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(rng)
    d = params.dim
    chol = np.linalg.cholesky(params.corr)
    out = np.empty((0, d))
    proposals = accepted = 0
    batch = max(1024, 2 * n)
    while out.shape[0] < n:
        s = _chi_scale(rng, params.nu, batch)
        g = rng.standard_normal((batch, d)) @ chol.T
        g0 = rng.standard_normal(batch)
        keep = g @ params.alpha + params.tau * s > g0 + params.kappa
        proposals += batch
        accepted += int(keep.sum())
        out = np.vstack([out, g[keep] / s[keep, None]])
        if proposals >= GUARD_PROPOSALS and accepted / proposals < MIN_ACCEPT:
            raise RuntimeError(
                f"acceptance rate {accepted / proposals:.2e} below {MIN_ACCEPT:g} "
                f"after {proposals} proposals; parameters too extreme for rejection"
            )
        rate = max(accepted / proposals, MIN_ACCEPT)
        batch = int(min(max(1024, 1.2 * (n - out.shape[0]) / rate), 2_000_000))
    return params.mu + out[:n] * params.scale_sd


def sample_additive(params, n, rng):
    """Draw ``n`` variates from the additive (selection plus independent noise) form."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(rng)
    d, nu = params.dim, params.nu
    delta = params.delta
    resid_cov = params.corr - np.outer(delta, delta)
    chol = np.linalg.cholesky(resid_cov + 1e-14 * np.eye(d))
    tb, kb = params.tau_bar, params.kappa_bar
    if np.isinf(nu):
        tb, kb = tb - kb, 0.0
    if kb == 0.0:
        top = noncentral_t_cdf(tb, 0.0, nu)
        u = rng.uniform(size=n) * top
        x0 = -(sp.ndtri(u) if np.isinf(nu) else sp.stdtrit(nu, u))
        nu1 = nu + 1.0
        e = rng.standard_normal((n, d)) @ chol.T
        x1 = e / _chi_scale(rng, nu1, n)[:, None]
        mix = np.ones(n) if np.isinf(nu) else np.sqrt((nu + x0**2) / nu1)
        z = mix[:, None] * x1 + x0[:, None] * delta
    else:
        s = np.empty(0)
        proposals = 0
        while s.size < n:
            cand = _chi_scale(rng, nu, max(1024, 2 * n))
            ok = rng.uniform(size=cand.size) < sp.ndtr(tb * cand - kb)
            proposals += cand.size
            s = np.concatenate([s, cand[ok]])
            if proposals >= GUARD_PROPOSALS and s.size / proposals < MIN_ACCEPT:
                raise RuntimeError("acceptance rate too small in additive sampler")
        s = s[:n]
        low = kb - tb * s
        v0 = -sp.ndtri(rng.uniform(size=n) * sp.ndtr(-low))
        e = rng.standard_normal((n, d)) @ chol.T
        z = (v0[:, None] * delta + e) / s[:, None]
    return params.mu + z * params.scale_sd


__all__ = [
    "CdfResult",
    "QmcConfig",
    "CorrelationMatrix",
    "SkewTParams",
    "noncentral_t_cdf",
    "t_pdf",
    "mvn_cdf",
    "mvt_cdf",
    "esn_pdf",
    "ncest_pdf",
    "ncest_cdf",
    "est_cdf_std",
    "est_pdf_std",
    "marginal_params",
    "conditional_params",
    "sample_conditioning",
    "sample_additive",
    "cov_to_corr",
]
