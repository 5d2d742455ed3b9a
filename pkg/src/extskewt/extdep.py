"""Extremal skew-t max-stable layer.

The max-stable process is built from a skew-normal field ``Y`` as
``U(s) = max_i R_i Y_i(s)^+ / m(s)^{1/nu}`` where ``R_i`` are points of a
Poisson process with intensity ``nu r^{-nu-1}`` and ``m(s) = E{Y(s)^+}^nu``.
Margins are ``nu``-Frechet, ``P(U <= x) = exp(-x^{-nu})``.

Two scales are used. Exponent functions taking ``x`` work on the
``nu``-Frechet scale. Partial derivatives (``exponent_partial``) and
everything built from them work on the unit-Frechet scale ``z = x^nu``,
which is the scale of the angular measure and of unit-Frechet data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np
from scipy import special as sp

from ._linalg import as_corr, safe_cholesky, schur
from .skewproc import PowExpCorrelation, _as_sites
from .distmath import (
    DEFAULT_CFG,
    SkewTParams,
    est_cdf_std,
    marginal_params,
    mvt_cdf,
    noncentral_t_cdf,
)

OMEGA_ONE = 1.0 - 1e-12


class ExponentResult(NamedTuple):
    value: np.ndarray
    error: np.ndarray


@dataclass(frozen=True)
class MarginDerived:
    """Per-site quantities entering the exponent function.

    Entry ``j`` of each list refers to site ``j``; ``others[j]`` lists the
    remaining sites in increasing order, matching the rows of
    ``corr_circ[j]`` and ``alpha_circ[j]``.
    """

    alpha_star: np.ndarray
    tau_star: np.ndarray
    kappa_star: np.ndarray
    alpha_circ: list
    tau_circ: np.ndarray
    kappa_circ: np.ndarray
    corr_circ: list
    others: list
    m_plus: np.ndarray
    nu: float

    def x_circ(self, x):
        """Map ``x`` to ``x * m_plus^{1/nu}``."""
        return np.asarray(x, dtype=float) * self.m_plus ** (1.0 / self.nu)


@dataclass(frozen=True)
class ExtDepModel:
    """Extremal skew-t dependence parameters (corr, alpha, tau, nu)."""

    corr: np.ndarray
    alpha: np.ndarray
    tau: float = 0.0
    nu: float = 1.0

    def __post_init__(self):
        corr = as_corr(self.corr)
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if alpha.size == 1 and corr.shape[0] > 1 and np.ndim(self.alpha) == 0:
            alpha = np.full(corr.shape[0], float(alpha[0]))
        if alpha.size != corr.shape[0]:
            raise ValueError("alpha length must equal the dimension of corr")
        if not np.all(np.isfinite(alpha)):
            raise ValueError("alpha must be finite")
        if not (np.isfinite(self.nu) and self.nu > 0):
            raise ValueError("nu must be positive and finite")
        object.__setattr__(self, "corr", corr)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "nu", float(self.nu))

    @classmethod
    def extremal_t(cls, corr, nu):
        corr = np.atleast_2d(np.asarray(corr, dtype=float))
        return cls(corr, np.zeros(corr.shape[0]), 0.0, nu)

    @property
    def dim(self):
        return self.corr.shape[0]

    @property
    def is_symmetric(self):
        return not np.any(self.alpha != 0.0)

    @property
    def tau_bar(self):
        return self.tau / np.sqrt(1.0 + self.alpha @ self.corr @ self.alpha)

    @cached_property
    def derived(self):
        return margin_derived(self)

    def sub_model(self, idx):
        idx = np.asarray(idx, dtype=int)
        if idx.size == self.dim and np.all(idx == np.arange(self.dim)):
            return self
        p = marginal_params(SkewTParams.standard(self.corr, self.alpha, self.tau), idx)
        return ExtDepModel(p.corr, p.alpha, p.tau, self.nu)


def positive_moment_const(nu):
    """``E(G^+)^nu`` for a standard normal G, i.e. ``2^{(nu-2)/2} Gamma((nu+1)/2) / sqrt(pi)``."""
    return np.exp((nu - 2) / 2 * np.log(2.0) + sp.gammaln((nu + 1) / 2) - 0.5 * np.log(np.pi))


def margin_derived(model):
    """Per-margin parameters and positive-part moments ``m_plus``."""
    corr, alpha, tau, nu = model.corr, model.alpha, model.tau, model.nu
    d = model.dim
    sel = sp.ndtr(model.tau_bar)
    a_star = np.empty(d)
    t_star = np.empty(d)
    t_circ = np.empty(d)
    a_circ, c_circ, others = [], [], []
    for j in range(d):
        rest = np.array([i for i in range(d) if i != j], dtype=int)
        others.append(rest)
        if rest.size == 0:
            a_star[j] = alpha[j]
            t_star[j] = tau
            t_circ[j] = alpha[j] * np.sqrt(nu + 1)
            a_circ.append(np.zeros(0))
            c_circ.append(np.zeros((0, 0)))
            continue
        sigma, _ = schur(corr, rest, [j])
        sd = np.sqrt(np.diag(sigma))
        a_rest = alpha[rest]
        q = float(a_rest @ sigma @ a_rest)
        lin = alpha[j] + corr[j, rest] @ a_rest
        a_star[j] = lin / np.sqrt(1 + q)
        t_star[j] = tau / np.sqrt(1 + q)
        t_circ[j] = lin * np.sqrt(nu + 1)
        a_circ.append(sd * a_rest)
        cc = sigma / np.outer(sd, sd)
        np.fill_diagonal(cc, 1.0)
        c_circ.append(cc)
    psi = noncentral_t_cdf(a_star * np.sqrt(nu + 1), -t_star, nu + 1)
    m_plus = positive_moment_const(nu) * psi / sel
    return MarginDerived(
        alpha_star=a_star,
        tau_star=t_star,
        kappa_star=np.zeros(d),
        alpha_circ=a_circ,
        tau_circ=t_circ,
        kappa_circ=np.full(d, -tau),
        corr_circ=c_circ,
        others=others,
        m_plus=m_plus,
        nu=nu,
    )


def _prep_x(x, d):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != d:
        raise ValueError(f"x must have {d} columns")
    if np.any(np.isnan(arr)) or np.any(arr <= 0):
        raise ValueError("x must be positive")
    return arr, single


def _bounds(xc, j, rest, corr, nu):
    w = corr[rest, j]
    ratio = xc[:, rest] / xc[:, [j]]
    with np.errstate(invalid="ignore"):
        u = np.sqrt((nu + 1) / (1 - w**2)) * (ratio - w)
    return np.where(np.isinf(ratio), np.inf, u)


def _finish(vals, errs, single):
    if single:
        return ExponentResult(float(vals[0]), float(errs[0]))
    return ExponentResult(vals, errs)


def exponent_V(model, x, cfg=DEFAULT_CFG):
    """Exponent function V(x) on the nu-Frechet scale, with an error estimate."""
    d, nu = model.dim, model.nu
    x, single = _prep_x(x, d)
    if d == 1:
        return _finish(x[:, 0] ** -nu, np.zeros(x.shape[0]), single)
    der = model.derived
    xc = der.x_circ(x)
    total = np.zeros(x.shape[0])
    err2 = np.zeros(x.shape[0])
    for j in range(d):
        rest = der.others[j]
        live = np.isfinite(x[:, j])
        if not np.any(live):
            continue
        u = _bounds(xc[live], j, rest, model.corr, nu)
        res = est_cdf_std(
            u, der.corr_circ[j], der.alpha_circ[j], der.tau_circ[j], der.kappa_circ[j], nu + 1, cfg
        )
        w = x[live, j] ** -nu
        total[live] += w * res.value
        err2[live] += (w * res.error) ** 2
    return _finish(total, np.sqrt(err2), single)


def exponent_extremal_t(model, x, cfg=DEFAULT_CFG):
    """Exponent function of the extremal-t model (alpha must be zero)."""
    if not model.is_symmetric:
        raise ValueError("extremal-t exponent requires alpha = 0")
    d, nu = model.dim, model.nu
    x, single = _prep_x(x, d)
    if d == 1:
        return _finish(x[:, 0] ** -nu, np.zeros(x.shape[0]), single)
    total = np.zeros(x.shape[0])
    err2 = np.zeros(x.shape[0])
    for j in range(d):
        rest = np.array([i for i in range(d) if i != j])
        live = np.isfinite(x[:, j])
        if not np.any(live):
            continue
        sigma, _ = schur(model.corr, rest, [j])
        sd = np.sqrt(np.diag(sigma))
        pc = sigma / np.outer(sd, sd)
        np.fill_diagonal(pc, 1.0)
        u = _bounds(x[live], j, rest, model.corr, nu)
        res = mvt_cdf(u, pc, None, nu + 1, cfg)
        w = x[live, j] ** -nu
        total[live] += w * np.asarray(res.value)
        err2[live] += (w * np.asarray(res.error)) ** 2
    return _finish(total, np.sqrt(err2), single)


def exponent_skewt_limit(corr, alpha, tau, kappa, nu, x, cfg=DEFAULT_CFG):
    """Exponent of the limit of normalized componentwise maxima of skew-t vectors.

    Maxima of iid vectors from the non-central extended skew-t law with
    parameters ``(corr, alpha, tau, kappa, nu)``, normalized by
    ``norming_constants``, converge to the extremal skew-t law whose
    underlying skew-normal has extension ``-kappa``. The extension ``tau``
    of the parent law does not enter.
    """
    del tau
    return exponent_V(ExtDepModel(corr, alpha, -float(kappa), nu), x, cfg)


def norming_constants(corr, alpha, tau, kappa, nu, n):
    """Scale norming ``a_n`` with ``n P(Z_j > a_{n,j}) -> 1``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    corr = np.atleast_2d(np.asarray(corr, dtype=float))
    d = corr.shape[0]
    p = SkewTParams.standard(corr, alpha, tau, kappa, nu)
    out = np.empty(d)
    for j in range(d):
        m = marginal_params(p, [j]) if d > 1 else p
        a, t, k = float(m.alpha[0]), m.tau, m.kappa
        root = np.sqrt(1 + a * a)
        lead = np.exp(
            sp.gammaln((nu + 1) / 2)
            + (nu - 2) / 2 * np.log(nu)
            - sp.gammaln(nu / 2)
            - 0.5 * np.log(np.pi)
        )
        num = noncentral_t_cdf(a * np.sqrt(nu + 1), k, nu + 1)
        den = noncentral_t_cdf(t / root, k / root, nu)
        out[j] = (n * lead * num / den) ** (1.0 / nu)
    return out


# ----------------------------------------------------------------------------
# partial derivatives of the exponent function (unit-Frechet scale)


@dataclass(frozen=True)
class _PartialPlan:
    subset: np.ndarray
    rest: np.ndarray
    inv_jj: np.ndarray
    logdet_jj: float
    reg: np.ndarray
    beta: np.ndarray
    sd: np.ndarray
    corr_h: np.ndarray
    skew: bool


def _partial_plan(model, subset):
    d = model.dim
    J = np.asarray(sorted(subset), dtype=int)
    if J.size == 0 or J.size > d or len(set(J.tolist())) != J.size or J.min() < 0 or J.max() >= d:
        raise ValueError("subset must be a nonempty set of site indices")
    K = np.array([i for i in range(d) if i not in set(J.tolist())], dtype=int)
    c = model.corr
    cjj = c[np.ix_(J, J)]
    inv_jj = np.linalg.inv(cjj)
    logdet = float(np.linalg.slogdet(cjj)[1])
    sigma_k, reg = schur(c, K, J)
    a_k = model.alpha[K]
    beta = model.alpha[J] + reg.T @ a_k
    skew = not model.is_symmetric
    if skew:
        m = K.size + 1
        cov = np.empty((m, m))
        cov[: K.size, : K.size] = sigma_k
        cross = -sigma_k @ a_k
        cov[: K.size, -1] = cov[-1, : K.size] = cross
        cov[-1, -1] = 1.0 + a_k @ sigma_k @ a_k
    else:
        cov = sigma_k
    sd = np.sqrt(np.diag(cov))
    corr_h = cov / np.outer(sd, sd) if sd.size else cov
    if sd.size:
        np.fill_diagonal(corr_h, 1.0)
    return _PartialPlan(J, K, inv_jj, logdet, reg, beta, sd, corr_h, skew)


def exponent_partial(model, z, subset, cfg=DEFAULT_CFG):
    """``-d^k V / dz_J`` on the unit-Frechet scale (k = |J|), for rows of ``z``.

    Entries of ``z`` outside ``J`` may be zero, which gives the limit used for
    angular densities on faces of the simplex. Always nonnegative.
    """
    d, nu = model.dim, model.nu
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if z.shape[1] != d:
        raise ValueError(f"z must have {d} columns")
    plan = _partial_plan(model, subset)
    J, K = plan.subset, plan.rest
    zj = z[:, J]
    if np.any(~(zj > 0)) or np.any(z[:, K] < 0):
        raise ValueError("z must be positive on the subset and nonnegative elsewhere")
    m_plus = model.derived.m_plus
    a = (m_plus * z) ** (1.0 / nu)
    a_j = a[:, J]
    k = J.size
    n_df = k + nu
    q = np.einsum("ij,jk,ik->i", a_j, plan.inv_jj, a_j)
    log_pref = (
        np.sum(np.log(a_j / (nu * zj)), axis=1)
        - 0.5 * k * np.log(2 * np.pi)
        - 0.5 * plan.logdet_jj
        + np.log(nu)
        - 0.5 * n_df * np.log(q)
        + (0.5 * n_df - 1) * np.log(2.0)
        + sp.gammaln(0.5 * n_df)
    )
    scale = np.sqrt(n_df / q)
    if plan.skew:
        log_pref -= sp.log_ndtr(model.tau_bar)
        g_k = a[:, K] - a_j @ plan.reg.T
        g_l = a_j @ plan.beta
        upper = np.column_stack([g_k, g_l]) * scale[:, None] / plan.sd
        nc = np.zeros(K.size + 1)
        nc[-1] = -model.tau / plan.sd[-1]
        prob = np.asarray(mvt_cdf(upper, plan.corr_h, nc, n_df, cfg).value)
    elif K.size:
        upper = (a[:, K] - a_j @ plan.reg.T) * scale[:, None] / plan.sd
        prob = np.asarray(mvt_cdf(upper, plan.corr_h, None, n_df, cfg).value)
    else:
        prob = 1.0
    return np.exp(log_pref) * prob


def exponent_unit(model, z, cfg=DEFAULT_CFG):
    """Exponent function on the unit-Frechet scale, ``V(z^{1/nu})``."""
    z = np.asarray(z, dtype=float)
    return exponent_V(model, z ** (1.0 / model.nu), cfg)


# ----------------------------------------------------------------------------
# bivariate exponent and extremal coefficient along a field


def _pair_model(alpha_fn, corr_fn, nu, s, h):
    s = np.asarray(s, dtype=float)
    h = np.asarray(h, dtype=float)
    a0 = float(np.asarray(alpha_fn(s)).reshape(-1)[0])
    a1 = float(np.asarray(alpha_fn(s + h)).reshape(-1)[0])
    w = float(np.asarray(corr_fn(h)).reshape(-1)[0])
    return a0, a1, w


def _pair_terms(a0, a1, w, nu, ratio, cfg):
    """The two univariate extended skew-t terms with Gamma = (m1/m0)^{1/nu}."""
    c = np.sqrt(1 - w * w)
    star0 = (a0 + w * a1) / np.sqrt(1 + a1 * a1 * c * c)
    star1 = (a1 + w * a0) / np.sqrt(1 + a0 * a0 * c * c)
    psi0 = noncentral_t_cdf(star0 * np.sqrt(nu + 1), 0.0, nu + 1)
    psi1 = noncentral_t_cdf(star1 * np.sqrt(nu + 1), 0.0, nu + 1)
    gamma = (psi1 / psi0) ** (1.0 / nu)
    b = lambda v: np.sqrt((nu + 1) / (1 - w * w)) * (v - w)  # noqa: E731
    x_star = ratio * gamma
    t0 = est_cdf_std(
        np.atleast_1d(b(x_star))[:, None], [[1.0]], [a1 * c], np.sqrt(nu + 1) * (a0 + a1 * w), 0.0, nu + 1, cfg
    )
    t1 = est_cdf_std(
        np.atleast_1d(b(1.0 / x_star))[:, None], [[1.0]], [a0 * c], np.sqrt(nu + 1) * (a1 + a0 * w), 0.0, nu + 1, cfg
    )
    return t0, t1, gamma


def gamma_ratio(alpha_fn, corr_fn, nu, s, h):
    """``Gamma_s(h) = (m_plus(s + h) / m_plus(s))^{1/nu}`` for tau = 0."""
    a0, a1, w = _pair_model(alpha_fn, corr_fn, nu, s, h)
    if abs(w) >= 1:
        raise ValueError("|omega(h)| must be < 1")
    _, _, gamma = _pair_terms(a0, a1, w, nu, np.array([1.0]), DEFAULT_CFG)
    return float(gamma)


def bivariate_exponent(alpha_fn, corr_fn, nu, s, h, x_pair, cfg=DEFAULT_CFG):
    """V{x(s), x(s + h)} of the extremal skew-t field with tau = 0."""
    a0, a1, w = _pair_model(alpha_fn, corr_fn, nu, s, h)
    if abs(w) >= 1:
        raise ValueError("|omega(h)| must be < 1 (use extremal_coefficient for h = 0)")
    x0, x1 = (float(v) for v in x_pair)
    if not (x0 > 0 and x1 > 0):
        raise ValueError("x_pair must be positive")
    t0, t1, _ = _pair_terms(a0, a1, w, nu, np.array([x1 / x0]), cfg)
    return float(x0**-nu * t0.value[0] + x1**-nu * t1.value[0])


def extremal_coefficient(alpha_fn, corr_fn, nu, s, h, cfg=DEFAULT_CFG):
    """theta_s(h) = V(1, 1), in [1, 2]."""
    a0, a1, w = _pair_model(alpha_fn, corr_fn, nu, s, h)
    if w > OMEGA_ONE:
        return 1.0
    return bivariate_exponent(alpha_fn, corr_fn, nu, s, h, (1.0, 1.0), cfg)


def extremal_coefficient_curve(alpha_fn, corr_fn, nu, s, lags, cfg=DEFAULT_CFG):
    """theta_s(h) at each lag (scalars for k = 1, rows of lag vectors for k = 2)."""
    return np.array([extremal_coefficient(alpha_fn, corr_fn, nu, s, h, cfg) for h in lags])


def _first(s):
    return np.asarray(s, dtype=float).reshape(-1)[0]


def _xy(s):
    v = np.asarray(s, dtype=float).reshape(-1)
    return v[0], v[1]


EC_CORRELATION = PowExpCorrelation(lam=0.3, xi=1.5)
EC_ANISO_R = np.array([[2.5, 1.5], [1.5, 2.5]])

# slant functions and fixed locations for extremal-coefficient curves on [0, 1]
EC_PRESETS_1D = {
    "fig2-left": lambda s: -1 - _first(s) + np.exp(np.sin(5 * _first(s))),
    "fig2-center": lambda s: 1 + 1.5 * _first(s) - np.exp(np.sin(8 * _first(s))),
    "fig2-right": lambda s: 2.25 * np.sin(9 * _first(s)) * np.cos(9 * _first(s)),
}
EC_LOCATIONS_1D = (0.05, 0.25, 0.8)


def _aniso_top(s):
    a, b = _xy(s)
    return np.exp(np.sin(4 * a) * np.sin(4 * b) - a * b - 1)


def _aniso_bottom(s):
    a, b = _xy(s)
    return 2.25 * (np.sin(3 * a) * np.cos(3 * a) + np.sin(3 * b) * np.cos(3 * b))


# on [0, 1]^2 the lag vector v enters the correlation through h = v' R v
EC_PRESETS_2D = {
    "fig3-top": (_aniso_top, ((0.2, 0.2), (0.4, 0.4), (0.85, 0.85))),
    "fig3-bottom": (_aniso_bottom, ((0.25, 0.25), (0.25, 0.8), (0.8, 0.8))),
}


def quadratic_lag_correlation(base=EC_CORRELATION, r=EC_ANISO_R):
    """Correlation of a lag vector v evaluated at the length ``v' R v``."""
    r = np.asarray(r, dtype=float)
    if r.shape != (2, 2) or np.linalg.eigvalsh(r).min() <= 0:
        raise ValueError("R must be a 2 x 2 positive definite matrix")

    def corr_fn(v):
        v = np.asarray(v, dtype=float).reshape(-1)
        return base.from_length(v @ r @ v)

    return corr_fn


def isotropic_correlation(base=EC_CORRELATION):
    return lambda h: base.from_length(np.abs(_first(h)))


# ----------------------------------------------------------------------------
# tail dependence of the bivariate skew-normal


@dataclass(frozen=True)
class TailDepResult:
    eta: float
    slowly_varying: Callable[[float], float]
    case_label: str


def _marginal_slants(w, a1, a2):
    s1 = (a1 + w * a2) / np.sqrt(1 + a2 * a2 * (1 - w * w))
    s2 = (a2 + w * a1) / np.sqrt(1 + a1 * a1 * (1 - w * w))
    return np.array([s1, s2])


def tail_dependence(omega, alpha1, alpha2):
    """Coefficient of tail dependence and slowly varying factor of a bivariate skew-normal pair.

    Cases are selected by the signs of the two marginal slants: both
    nonnegative (case 1), exactly one negative (case 2a/2b), both negative
    (case 3). This agrees with the stated sign conditions on (alpha1, alpha2)
    and also covers their boundary points.
    """
    w = float(omega)
    if not 0.0 <= w < 1.0:
        raise ValueError("omega must lie in [0, 1)")
    a = np.array([float(alpha1), float(alpha2)])
    if not np.all(np.isfinite(a)):
        raise ValueError("alpha must be finite")
    star = _marginal_slants(w, a[0], a[1])
    abar = np.sqrt(1 + star**2)
    neg = star < 0
    one_m = 1 - w * w
    if not neg.any():
        eta = (1 + w) / 2
        const = 2 * (1 + w) / (1 - w)
        power = -w / (1 + w)
        label = "1"
    elif neg.all():
        j, k = 0, 1
        inv = (
            (a[k] ** 2 * one_m + 1) / abar[k] ** 2
            + (a[j] ** 2 * one_m + 1) / abar[j] ** 2
            + 2 * (a[k] * a[j] * one_m - w) / (abar[k] * abar[j])
        ) / one_m
        eta = 1 / inv
        num = -(2**1.5) * np.sqrt(np.pi) * abar[j] ** 1.5 * abar[k] ** 2 * one_m
        num /= a[k] * abar[j] + a[j] * abar[k]
        den = (abar[j] - w * abar[k]) * (
            1 - w * abar[j] + a[j] * (a[j] + a[k] * abar[j] / abar[k]) * one_m
        )
        const = num / den
        power = 1 / (2 * eta) - 1.5
        label = "3"
    else:
        j = int(np.flatnonzero(neg)[0])
        k = 1 - j
        ab = abar[j]
        if a[k] >= -a[j] / ab:
            eta = one_m * ab**2 / (one_m + (ab - w) ** 2)
            const = 2 * ab**2 * one_m / ((ab**2 - w) * (1 - w * ab))
            power = 1 / (2 * eta) - 1
            label = "2a"
        else:
            gap = a[k] + a[j] / ab
            eta = 1 / ((one_m + (ab - w) ** 2) / (one_m * ab**2) + gap**2)
            num = -(2**1.5) * np.sqrt(np.pi) * ab**2 * one_m / gap
            den = (ab - w) * (1 - w * ab + a[j] * (a[j] + a[k] * ab) * one_m)
            const = num / den
            power = 1 / (2 * eta) - 1.5
            label = "2b"

    def slowly_varying(x, _c=float(const), _p=float(power)):
        return _c * (4 * np.pi * np.log(np.asarray(x, dtype=float))) ** _p

    return TailDepResult(float(eta), slowly_varying, label)


# ----------------------------------------------------------------------------
# spectral simulation


@dataclass
class MaxStableSample:
    values: np.ndarray
    points_used: np.ndarray
    truncated: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def any_truncated(self):
        return bool(np.any(self.truncated))


def _skew_normal_draws(model, chol, delta, size, rng):
    """Skew-normal vectors via the selection-plus-noise representation."""
    t_bar = model.tau_bar
    u = rng.uniform(size=size) * sp.ndtr(t_bar)
    v0 = -sp.ndtri(u)  # V0 > -t_bar
    e = rng.standard_normal((size, model.dim)) @ chol.T
    return v0[:, None] * delta + e


def simulate_maxstable(
    model,
    n_paths,
    rng,
    stopping=1.0,
    c_bound=10.0,
    max_spectral_points=100_000,
    batch=64,
):
    """Approximate spectral simulation of the extremal skew-t process at the model sites.

    Each path accumulates ``R_i Y_i^+ / m^{1/nu}`` over Poisson points
    ``R_i = Gamma_i^{-1/nu}`` until ``(R_i c_bound)^nu < stopping * min_s U(s)^nu``,
    i.e. until no later point can change the maximum as long as
    ``Y^+ / m^{1/nu} <= c_bound``.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    rng = np.random.default_rng(rng)
    d, nu = model.dim, model.nu
    corr = model.corr
    qa = model.alpha @ corr @ model.alpha
    delta = corr @ model.alpha / np.sqrt(1 + qa)
    chol = safe_cholesky(corr - np.outer(delta, delta))
    scale = model.derived.m_plus ** (-1.0 / nu)
    out = np.zeros((n_paths, d))
    arrival = np.zeros(n_paths)
    used = np.zeros(n_paths, dtype=int)
    active = np.arange(n_paths)
    while active.size:
        na = active.size
        gam = arrival[active, None] + np.cumsum(rng.exponential(size=(na, batch)), axis=1)
        y = _skew_normal_draws(model, chol, delta, na * batch, rng).reshape(na, batch, d)
        contrib = gam[:, :, None] ** (-1.0 / nu) * np.maximum(y, 0.0) * scale
        out[active] = np.maximum(out[active], contrib.max(axis=1))
        arrival[active] = gam[:, -1]
        used[active] += batch
        low = out[active].min(axis=1)
        r_last = arrival[active] ** (-1.0 / nu)
        done = (r_last * c_bound) ** nu < stopping * low**nu
        capped = used[active] >= max_spectral_points
        active = active[~(done | capped)]
    truncated = used >= max_spectral_points
    if np.any(truncated):
        warnings.warn(
            f"{int(truncated.sum())} paths hit max_spectral_points={max_spectral_points} "
            "before the stopping rule was met",
            RuntimeWarning,
            stacklevel=2,
        )
    return MaxStableSample(out, used, truncated)


def empirical_extremal_coefficient(u, v, nu):
    """Estimate of theta from paired nu-Frechet samples, with its standard error.

    ``1 / max(U^nu, V^nu)`` is exponential with rate theta.
    """
    u = np.asarray(u, dtype=float) ** nu
    v = np.asarray(v, dtype=float) ** nu
    e = 1.0 / np.maximum(u, v)
    mean = e.mean()
    theta = 1.0 / mean
    se = theta**2 * e.std(ddof=1) / np.sqrt(e.size)
    return float(theta), float(se)


def model_from_sites(sites, correlation, alpha_fn, nu, tau=0.0):
    """ExtDepModel at ``sites`` from a correlation family and a slant function."""
    pts = _as_sites(sites)
    corr = correlation.matrix(pts)
    alpha = np.asarray(alpha_fn(pts), dtype=float).reshape(pts.shape[0])
    return ExtDepModel(corr, alpha, tau, nu)


__all__ = [
    "ExtDepModel",
    "MarginDerived",
    "ExponentResult",
    "TailDepResult",
    "MaxStableSample",
    "margin_derived",
    "positive_moment_const",
    "exponent_V",
    "exponent_extremal_t",
    "exponent_skewt_limit",
    "exponent_partial",
    "exponent_unit",
    "extremal_coefficient_curve",
    "quadratic_lag_correlation",
    "isotropic_correlation",
    "EC_PRESETS_1D",
    "EC_PRESETS_2D",
    "EC_LOCATIONS_1D",
    "norming_constants",
    "gamma_ratio",
    "bivariate_exponent",
    "extremal_coefficient",
    "tail_dependence",
    "simulate_maxstable",
    "empirical_extremal_coefficient",
    "model_from_sites",
]
