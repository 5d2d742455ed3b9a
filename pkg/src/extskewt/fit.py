"""Inference for extremal (skew-)t dependence models.

Composite likelihoods from exact bivariate and trivariate max-stable
densities, the rescaled angular likelihood, a restarted Nelder-Mead driver,
CLIC with sandwich standard errors, and conditional exceedance predictions.

Data passed to the likelihoods are on the unit-Frechet scale. A model with
``nu`` degrees of freedom has ``nu``-Frechet margins, so data ``z`` enter
through ``x = z^{1/nu}``; the densities below work on ``z`` directly.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np
from scipy import optimize
from sklearn.base import BaseEstimator

from .angular import PartitionConfig, angular_loglik, angular_samples
from .distmath import DEFAULT_CFG
from .extdep import ExtDepModel, exponent_partial, exponent_V, simulate_maxstable
from .skewproc import PowExpCorrelation, _as_sites

MAX_ITER = 5000
FTOL = 1e-8
XTOL = 1e-6
ALPHA_MAX = 100.0  # slants beyond this sit on a flat ridge of the likelihood
NU_MAX = 100.0  # positive-part moments overflow for nu of a few hundred

# ----------------------------------------------------------------------------
# parameterizations


def _squash(kind, v):
    if kind == "tanh":
        return math.tanh(v)
    if kind == "exp":
        return math.exp(v)
    if kind == "xi":  # (0, 2)
        return 2.0 / (1.0 + math.exp(-v))
    return float(v)


def _unsquash(kind, v):
    if kind == "tanh":
        return math.atanh(v)
    if kind == "exp":
        return math.log(v)
    if kind == "xi":
        return -math.log(2.0 / v - 1.0)
    return float(v)


@dataclass(frozen=True)
class Parameterization:
    """Named parameters, their transforms and a builder of ExtDepModel.

    ``fixed`` holds natural-scale values excluded from optimisation.
    """

    names: tuple
    kinds: tuple
    builder: Callable[[dict], ExtDepModel]
    fixed: dict = field(default_factory=dict)

    @property
    def free_names(self):
        return tuple(n for n in self.names if n not in self.fixed)

    @property
    def dim(self):
        return len(self.free_names)

    def _kind(self, name):
        return self.kinds[self.names.index(name)]

    def natural(self, theta):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.dim:
            raise ValueError(f"expected {self.dim} free parameters, got {theta.size}")
        out = dict(self.fixed)
        for name, v in zip(self.free_names, theta):
            out[name] = _squash(self._kind(name), v)
        return out

    def free(self, natural):
        return np.array([_unsquash(self._kind(n), natural[n]) for n in self.free_names])

    def model(self, theta):
        return self.builder(self.natural(theta))

    def model_from_natural(self, natural):
        full = dict(self.fixed)
        full.update(natural)
        return self.builder(full)


def _pair_names(d):
    return [f"omega_{i + 1}{j + 1}" for i, j in combinations(range(d), 2)]


def pairwise_corr_params(d, skew=False, fixed=None):
    """One correlation per pair (tanh), optional slant per site, shared nu (exp)."""
    pairs = list(combinations(range(d), 2))
    names = _pair_names(d)
    kinds = ["tanh"] * len(names)
    if skew:
        names += [f"alpha_{j + 1}" for j in range(d)]
        kinds += ["id"] * d
    names.append("nu")
    kinds.append("exp")

    def build(p):
        corr = np.eye(d)
        for (i, j), n in zip(pairs, _pair_names(d)):
            corr[i, j] = corr[j, i] = p[n]
        alpha = np.array([p[f"alpha_{j + 1}"] for j in range(d)]) if skew else np.zeros(d)
        return ExtDepModel(corr, alpha, 0.0, p["nu"])

    return Parameterization(tuple(names), tuple(kinds), build, dict(fixed or {}))


def spatial_params(sites, skew=False, fixed=None):
    """Power-exponential correlation of inter-site distance; slant linear in the coordinates."""
    pts = _as_sites(sites)
    k = pts.shape[1]
    names = ["lam", "xi"]
    kinds = ["exp", "xi"]
    if skew:
        names += ["alpha_0"] + [f"alpha_s{i + 1}" for i in range(k)]
        kinds += ["id"] * (k + 1)
    names.append("nu")
    kinds.append("exp")

    def build(p):
        corr = PowExpCorrelation(p["lam"], min(p["xi"], 2.0)).matrix(pts)
        if skew:
            alpha = p["alpha_0"] + pts @ np.array([p[f"alpha_s{i + 1}"] for i in range(k)])
        else:
            alpha = np.zeros(pts.shape[0])
        return ExtDepModel(corr, alpha, 0.0, p["nu"])

    return Parameterization(tuple(names), tuple(kinds), build, dict(fixed or {}))


def _valid(model):
    """Admissible for optimisation: positive-definite correlation, bounded slant and nu."""
    if np.any(np.abs(model.alpha) > ALPHA_MAX) or model.nu > NU_MAX:
        return False
    try:
        return np.linalg.eigvalsh(model.corr).min() > 1e-10
    except np.linalg.LinAlgError:
        return False


# ----------------------------------------------------------------------------
# max-stable densities


def log_density_unit(model, z, cfg=DEFAULT_CFG):
    """Log density of the max-stable law on the unit-Frechet scale (d = 2 or 3).

    Uses ``f = e^{-V} * sum over set partitions of products of -d_B V``.
    """
    d = model.dim
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if z.shape[1] != d:
        raise ValueError(f"z must have {d} columns")
    if np.any(~(z > 0)):
        raise ValueError("z must be positive")
    first = [exponent_partial(model, z, [j], cfg) for j in range(d)]
    v = sum(z[:, j] * first[j] for j in range(d))  # Euler identity
    if d == 2:
        total = exponent_partial(model, z, [0, 1], cfg) + first[0] * first[1]
    elif d == 3:
        pair = {jk: exponent_partial(model, z, list(jk), cfg) for jk in combinations(range(3), 2)}
        total = (
            exponent_partial(model, z, [0, 1, 2], cfg)
            + first[0] * pair[(1, 2)]
            + first[1] * pair[(0, 2)]
            + first[2] * pair[(0, 1)]
            + first[0] * first[1] * first[2]
        )
    else:
        raise ValueError("densities implemented for d = 2, 3")
    with np.errstate(divide="ignore"):
        return np.log(total) - v


def _density_x(model, x, d, cfg):
    if model.dim != d:
        raise ValueError(f"model must have {d} sites")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if np.any(~(x > 0)):
        raise ValueError("x must be positive")
    nu = model.nu
    jac = np.sum(np.log(nu) + (nu - 1) * np.log(x), axis=1)
    out = np.exp(log_density_unit(model, x**nu, cfg) + jac)
    return float(out[0]) if single else out


def density_d2(model, x, cfg=DEFAULT_CFG):
    """Bivariate max-stable density with nu-Frechet margins."""
    return _density_x(model, x, 2, cfg)


def density_d3(model, x, cfg=DEFAULT_CFG):
    """Trivariate max-stable density with nu-Frechet margins."""
    return _density_x(model, x, 3, cfg)


# ----------------------------------------------------------------------------
# composite likelihood


@dataclass(frozen=True)
class CompositeSpec:
    order: int
    tuples: tuple
    param: Parameterization

    def __post_init__(self):
        if self.order not in (2, 3):
            raise ValueError("order must be 2 or 3")
        tup = tuple(tuple(int(i) for i in t) for t in self.tuples)
        if not tup or any(len(t) != self.order or len(set(t)) != self.order or min(t) < 0 for t in tup):
            raise ValueError("tuples must be distinct-index tuples of length `order`")
        object.__setattr__(self, "tuples", tup)


def default_tuples(d, order, sites=None, max_distance=None):
    """All index tuples of the given order, optionally pruned by maximal pairwise distance."""
    tup = list(combinations(range(d), order))
    if max_distance is not None:
        pts = _as_sites(sites)
        keep = []
        for t in tup:
            sub = pts[list(t)]
            diff = sub[:, None, :] - sub[None, :, :]
            if np.sqrt((diff**2).sum(-1)).max() <= max_distance:
                keep.append(t)
        tup = keep
    return tuple(tup)


class CompositeLikelihoodError(FloatingPointError):
    def __init__(self, row, tup):
        super().__init__(f"non-finite composite term at observation {row}, tuple {tup}")
        self.row = row
        self.tuple = tup


def _tuple_terms(model, data, present, tup, cfg):
    idx = list(tup)
    rows = np.all(present[:, idx], axis=1)
    if not np.any(rows):
        return rows, np.zeros(0)
    return rows, log_density_unit(model.sub_model(idx), data[np.ix_(rows, idx)], cfg)


def composite_terms(spec, data, model, cfg=DEFAULT_CFG, threads=1):
    """Per-observation composite log-likelihood contributions.

    With ``threads > 1`` tuples are evaluated concurrently; the reduction
    always runs in tuple order so results do not depend on ``threads``.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be an n x d matrix")
    d = data.shape[1]
    if max(max(t) for t in spec.tuples) >= d or model.dim != d:
        raise ValueError("tuples and model must match the data columns")
    present = ~np.isnan(data)
    if np.any(data[present] <= 0):
        raise ValueError("data must be positive (unit-Frechet scale)")
    out = np.zeros(data.shape[0])
    job = lambda t: _tuple_terms(model, data, present, t, cfg)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, spec.tuples))
    else:
        parts = map(job, spec.tuples)
    for tup, (rows, vals) in zip(spec.tuples, parts):
        if vals.size == 0:
            continue
        bad = ~np.isfinite(vals)
        if np.any(bad):
            where = np.flatnonzero(rows)[np.flatnonzero(bad)[0]]
            err = CompositeLikelihoodError(int(where), tup)
            err.partial = out
            raise err
        out[rows] += vals
    return out


def composite_loglik(spec, data, theta, cfg=DEFAULT_CFG, strict=False, threads=1):
    """Sum of log densities over observations and tuples; -inf on a non-finite term unless strict."""
    try:
        model = spec.param.model(theta)
    except (ValueError, OverflowError):
        return -np.inf
    if not _valid(model):
        return -np.inf
    try:
        return float(np.sum(composite_terms(spec, data, model, cfg, threads)))
    except CompositeLikelihoodError:
        if strict:
            raise
        return -np.inf
    except ValueError:
        # degenerate parameters (e.g. |omega| rounding to 1)
        if strict:
            raise
        return -np.inf


# ----------------------------------------------------------------------------
# optimisation


@dataclass
class FitResult:
    theta_hat: np.ndarray
    loglik: float
    clic: float = float("nan")
    std_errors: np.ndarray = field(default_factory=lambda: np.zeros(0))
    J_hat: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    H_hat: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    optimizer_trace: list = field(default_factory=list)
    convergence_flag: bool = False
    natural: dict = field(default_factory=dict)
    names: tuple = ()

    def to_dict(self, **extra):
        out = {
            "theta_hat": [float(v) for v in self.theta_hat],
            "natural": {k: float(v) for k, v in self.natural.items()},
            "names": list(self.names),
            "loglik": float(self.loglik),
            "clic": float(self.clic),
            "std_errors": [float(v) for v in self.std_errors],
            "converged": bool(self.convergence_flag),
            "trace": self.optimizer_trace,
        }
        out.update(extra)
        return out


def maximize(objective, theta0, max_iter=MAX_ITER, ftol=FTOL, xtol=XTOL, max_restarts=20):
    """Maximise ``objective`` by Nelder-Mead restarted from the incumbent until a restart stalls.

    Returns a FitResult with ``theta_hat``, ``loglik`` (the maximum) and the
    restart trace; ``convergence_flag`` is False if the iteration cap is hit.
    """
    x = np.atleast_1d(np.asarray(theta0, dtype=float)).copy()
    f0 = objective(x)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the starting point")

    def neg(v):
        val = objective(v)
        return -val if np.isfinite(val) else np.inf

    best_f = -f0
    trace = []
    used = 0
    converged = False
    for restart in range(max_restarts):
        budget = max_iter - used
        if budget <= 0:
            break
        res = optimize.minimize(
            neg,
            x,
            method="Nelder-Mead",
            options={"maxiter": budget, "maxfev": 4 * budget, "xatol": xtol, "fatol": ftol, "adaptive": x.size > 3},
        )
        used += int(res.nit)
        step = float(np.max(np.abs(res.x - x))) if x.size else 0.0
        gain = best_f - float(res.fun)
        trace.append({"restart": restart, "nit": int(res.nit), "nfev": int(res.nfev), "objective": -float(res.fun)})
        if res.fun <= best_f:
            x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
        if gain < ftol and step < xtol:
            converged = True
            break
    return FitResult(theta_hat=x, loglik=-best_f, optimizer_trace=trace, convergence_flag=converged)


def profile_maximize(objective, theta0, interest, **kw):
    """Maximise over the ``interest`` coordinates with the others maximised out for each value."""
    theta0 = np.asarray(theta0, dtype=float)
    interest = np.asarray(interest, dtype=int)
    nuisance = np.array([i for i in range(theta0.size) if i not in set(interest.tolist())], dtype=int)
    state = {"nuis": theta0[nuisance].copy()}

    def join(a, b):
        full = np.empty(theta0.size)
        full[interest], full[nuisance] = a, b
        return full

    def inner_fit(a):
        f = lambda b: objective(join(a, b))  # noqa: E731
        if nuisance.size == 1:
            # scalar nuisance: bounded Brent around the last maximiser
            b0 = float(state["nuis"][0])

            def neg(b):
                val = f(np.array([b]))
                return -val if np.isfinite(val) else np.inf

            res = optimize.minimize_scalar(
                neg,
                bounds=(b0 - 4.0, b0 + 4.0),
                method="bounded",
                options={"xatol": xtol_inner},
            )
            return FitResult(theta_hat=np.array([res.x]), loglik=-float(res.fun), convergence_flag=bool(res.success))
        return maximize(f, state["nuis"], max_restarts=3)

    xtol_inner = 1e-8

    def profiled(a):
        inner = inner_fit(a)
        if np.isfinite(inner.loglik):
            state["nuis"] = inner.theta_hat
        return inner.loglik

    outer = maximize(profiled, theta0[interest], **kw)
    inner = inner_fit(outer.theta_hat)
    theta = join(outer.theta_hat, inner.theta_hat)
    return FitResult(
        theta_hat=theta,
        loglik=inner.loglik,
        optimizer_trace=outer.optimizer_trace,
        convergence_flag=outer.convergence_flag and inner.convergence_flag,
    )


# ----------------------------------------------------------------------------
# CLIC and sandwich variance


def clic_value(loglik, J, H):
    """CLIC = -2 [loglik - tr(J H^{-1})]."""
    J = np.atleast_2d(J)
    H = np.atleast_2d(H)
    return float(-2.0 * (loglik - np.trace(J @ _inverse(H))))


def _inverse(H):
    try:
        inv = np.linalg.inv(H)
        if not np.all(np.isfinite(inv)) or np.linalg.cond(H) > 1e14:
            raise np.linalg.LinAlgError
        return inv
    except np.linalg.LinAlgError:
        warnings.warn("singular Hessian: using the pseudo-inverse", RuntimeWarning, stacklevel=3)
        return np.linalg.pinv(H)


def sandwich(per_obs, point, rel_step=1e-5, hess_step=1e-4):
    """Per-observation J (score covariance) and H (Hessian of -mean loglik) at ``point``.

    ``per_obs(p)`` returns the vector of per-observation log-likelihood terms
    at natural parameters ``p``.
    """
    p = np.asarray(point, dtype=float)
    k = p.size
    base = per_obs(p)
    n = base.size
    scores = np.empty((n, k))
    for a in range(k):
        h = rel_step * max(abs(p[a]), 1.0)
        e = np.zeros(k)
        e[a] = h
        scores[:, a] = (per_obs(p + e) - per_obs(p - e)) / (2 * h)
    J = np.cov(scores, rowvar=False, bias=True).reshape(k, k)
    f = lambda v: -np.mean(per_obs(v))  # noqa: E731
    hs = hess_step * np.maximum(np.abs(p), 1.0)
    H = np.empty((k, k))
    f0 = -np.mean(base)
    for a in range(k):
        ea = np.zeros(k)
        ea[a] = hs[a]
        H[a, a] = (f(p + ea) - 2 * f0 + f(p - ea)) / hs[a] ** 2
        for b in range(a + 1, k):
            eb = np.zeros(k)
            eb[b] = hs[b]
            H[a, b] = H[b, a] = (f(p + ea + eb) - f(p + ea - eb) - f(p - ea + eb) + f(p - ea - eb)) / (
                4 * hs[a] * hs[b]
            )
    return J, H, n


def _squash_slope(kind, v):
    if kind == "tanh":
        return 1.0 - math.tanh(v) ** 2
    if kind == "exp":
        return math.exp(v)
    if kind == "xi":
        e = 2.0 / (1.0 + math.exp(-v))
        return e * (1.0 - e / 2.0)
    return 1.0


def finalize_fit(result, param, per_obs_free):
    """Attach natural parameters, sandwich standard errors and CLIC to a fit.

    J and H are taken on the unconstrained scale, where every finite-difference
    step is admissible; natural-scale errors follow by the delta method.
    CLIC does not depend on the parameterization.
    """
    theta = result.theta_hat
    J, H, n = sandwich(per_obs_free, theta)
    h_inv = _inverse(H)
    cov = h_inv @ J @ h_inv / n
    slope = np.array([_squash_slope(param._kind(nm), v) for nm, v in zip(param.free_names, theta)])
    result.natural = param.natural(theta)
    result.names = param.free_names
    result.J_hat, result.H_hat = J, H
    result.std_errors = np.abs(slope) * np.sqrt(np.clip(np.diag(cov), 0.0, None))
    result.clic = clic_value(result.loglik, J, H)
    return result


def fit_composite(spec, data, theta0=None, cfg=DEFAULT_CFG, with_errors=True, threads=1, **kw):
    """Maximum composite likelihood fit with optional sandwich errors and CLIC."""
    param = spec.param
    if theta0 is None:
        theta0 = np.zeros(param.dim)
    objective = lambda t: composite_loglik(spec, data, t, cfg, threads=threads)  # noqa: E731
    res = maximize(objective, theta0, **kw)
    if not with_errors:
        res.natural = param.natural(res.theta_hat)
        res.names = param.free_names
        return res
    per_obs = lambda t: composite_terms(spec, data, param.model(t), cfg, threads)  # noqa: E731
    return finalize_fit(res, param, per_obs)


# ----------------------------------------------------------------------------
# angular likelihood fits


def angular_objective(param, samples, partition, cfg=DEFAULT_CFG):
    def objective(theta):
        try:
            model = param.model(theta)
            if not _valid(model):
                return -np.inf
            with np.errstate(divide="ignore", invalid="ignore"):
                val = angular_loglik(model, samples, partition, cfg)
        except (ValueError, OverflowError):
            return -np.inf
        return val if np.isfinite(val) else -np.inf

    return objective


def fit_angular(samples, d, partition, skew=False, theta0=None, profile=False, cfg=DEFAULT_CFG, **kw):
    """Angular-likelihood fit of (omega, [alpha,] nu).

    With ``profile=True`` the correlations are maximised with nu profiled out.
    """
    param = pairwise_corr_params(d, skew)
    if theta0 is None:
        theta0 = param.free({**{n: 0.5 for n in _pair_names(d)}, **{f"alpha_{j + 1}": 0.0 for j in range(d)}, "nu": 2.0})
    objective = angular_objective(param, samples, partition, cfg)
    if profile:
        res = profile_maximize(objective, theta0, np.arange(len(_pair_names(d))), **kw)
    else:
        res = maximize(objective, theta0, **kw)
    res.natural = param.natural(res.theta_hat)
    res.names = param.free_names
    return res


def angular_study_replicate(model, n, partition, rng, profile=False, **kw):
    """One replicate: simulate, keep the top radial points, fit by angular likelihood."""
    sim = simulate_maxstable(model, n, rng)
    z = sim.values**model.nu
    samples = angular_samples(z, partition)
    return fit_angular(samples, model.dim, partition, profile=profile, **kw)


# ----------------------------------------------------------------------------
# prediction


class IndependenceModel:
    """Independent nu-Frechet margins, V(x) = sum x_j^{-nu}."""

    def __init__(self, dim, nu=1.0):
        self.dim = int(dim)
        self.nu = float(nu)

    def exponent(self, x):
        x = np.asarray(x, dtype=float)
        return float(np.sum(x ** -self.nu))

    def sub_model(self, idx):
        return IndependenceModel(len(idx), self.nu)


def _exponent(model, x, cfg):
    if hasattr(model, "exponent"):
        return model.exponent(x)
    return exponent_V(model, x, cfg).value


def _survival(model, x, subset, cfg):
    """P(X_j > x_j for j in subset) by inclusion-exclusion on the exponent function."""
    subset = list(subset)
    total = 0.0
    for r in range(len(subset) + 1):
        for sub in combinations(subset, r):
            if r == 0:
                total += 1.0
                continue
            xx = np.full(model.dim, np.inf)
            xx[list(sub)] = np.asarray(x, dtype=float)[list(sub)]
            total += (-1) ** r * math.exp(-_exponent(model, xx, cfg))
    return total


PATTERNS = {"X|Y,Z": ((0,), (1, 2)), "X,Y|Z": ((0, 1), (2,))}


def _pattern(pattern):
    if isinstance(pattern, str):
        if pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {sorted(PATTERNS)}")
        return PATTERNS[pattern]
    targets, given = pattern
    return tuple(targets), tuple(given)


def conditional_exceedance(model, x, pattern="X|Y,Z", cfg=DEFAULT_CFG):
    """P(targets exceed | given exceed) for a trivariate model on its nu-Frechet scale."""
    if model.dim != 3:
        raise ValueError("conditional exceedance is defined for d = 3")
    targets, given = _pattern(pattern)
    x = np.asarray(x, dtype=float)
    if x.shape != (3,) or np.any(~(x > 0)):
        raise ValueError("x must be three positive thresholds")
    den = _survival(model, x, given, cfg)
    if not den > 0:
        raise ValueError("conditioning event has zero probability")
    num = _survival(model, x, sorted(set(targets) | set(given)), cfg)
    return float(min(max(num / den, 0.0), 1.0))


def frechet_quantile(q, nu):
    return (-math.log(q)) ** (-1.0 / nu)


def conditional_return_level(model, q, p_target, target=0, lower=1e-3, cfg=DEFAULT_CFG):
    """Level x of coordinate ``target`` with P(X_target > x | others > their q-quantile) = p_target."""
    if not 0 < q < 1 or not 0 < p_target <= 1:
        raise ValueError("q must lie in (0, 1) and p_target in (0, 1]")
    d = model.dim
    given = tuple(j for j in range(d) if j != target)
    xq = frechet_quantile(q, model.nu)

    def surv(level):
        x = np.full(d, xq)
        x[target] = level
        num = _survival(model, x, range(d), cfg)
        den = _survival(model, x, given, cfg)
        return num / den

    if surv(lower) <= p_target:
        return lower
    hi = max(10 * xq, 10.0)
    while surv(hi) > p_target:
        hi *= 10
        if hi > 1e12:
            raise ValueError("return level not bracketed below 1e12")
    lo = lower
    while hi / lo - 1 > 1e-8:
        mid = math.sqrt(lo * hi)
        if surv(mid) > p_target:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def conditional_return_contour(model, q, p_target, n_grid=40, cfg=DEFAULT_CFG):
    """Pairs (x1, x2) with P(X1 > x1, X2 > x2 | X3 > q-quantile) = p_target, on a log grid of x1."""
    if model.dim != 3:
        raise ValueError("contour is defined for d = 3")
    xq = frechet_quantile(q, model.nu)
    x1_max = conditional_return_level(model.sub_model([0, 2]), q, p_target, 0, cfg=cfg)
    out = []
    for x1 in x1_max * np.logspace(-2, 0, n_grid, endpoint=False):

        def g(x2):
            x = np.array([x1, x2, xq])
            return _survival(model, x, (0, 1, 2), cfg) / _survival(model, x, (2,), cfg) - p_target

        lo, hi = 1e-3, 10.0
        if g(lo) < 0:
            continue
        while g(hi) > 0:
            hi *= 10
            if hi > 1e12:
                break
        if g(hi) > 0:
            continue
        root = optimize.brentq(lambda v: g(math.exp(v)), math.log(lo), math.log(hi), xtol=1e-10)
        out.append((float(x1), float(math.exp(root))))
    return out


# ----------------------------------------------------------------------------
# estimators


class AngularDependenceEstimator(BaseEstimator):
    """Extremal-t / extremal-skew-t fit from the angular likelihood.

    ``fit`` takes unit-Frechet data (n x d, d = 2 or 3).
    """

    def __init__(self, c=0.02, top_k=100, skew=False, profile=False):
        self.c = c
        self.top_k = top_k
        self.skew = skew
        self.profile = profile

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        part = PartitionConfig(c=self.c, top_k=self.top_k)
        self.samples_ = angular_samples(X, part)
        self.result_ = fit_angular(self.samples_, X.shape[1], part, skew=self.skew, profile=self.profile)
        self.params_ = self.result_.natural
        self.model_ = pairwise_corr_params(X.shape[1], self.skew).model(self.result_.theta_hat)
        self.loglik_ = self.result_.loglik
        return self

    def score(self, X, y=None):
        part = PartitionConfig(c=self.c, top_k=self.top_k)
        return angular_loglik(self.model_, angular_samples(np.asarray(X, dtype=float), part), part)


class CompositeLikelihoodEstimator(BaseEstimator):
    """Pairwise or triplewise composite-likelihood fit on unit-Frechet data.

    With ``sites`` the correlation is a power-exponential function of
    distance; otherwise every pair has its own correlation.
    """

    def __init__(self, order=2, skew=False, sites=None, fixed=None, theta0=None, max_distance=None):
        self.order = order
        self.skew = skew
        self.sites = sites
        self.fixed = fixed
        self.theta0 = theta0
        self.max_distance = max_distance

    def _param(self, d):
        if self.sites is not None:
            return spatial_params(self.sites, self.skew, self.fixed)
        return pairwise_corr_params(d, self.skew, self.fixed)

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        d = X.shape[1]
        param = self._param(d)
        tuples = default_tuples(d, self.order, self.sites, self.max_distance)
        self.spec_ = CompositeSpec(self.order, tuples, param)
        theta0 = self.theta0 if self.theta0 is not None else np.zeros(param.dim)
        self.result_ = fit_composite(self.spec_, X, theta0)
        self.params_ = self.result_.natural
        self.std_errors_ = dict(zip(self.result_.names, self.result_.std_errors))
        self.clic_ = self.result_.clic
        self.model_ = param.model(self.result_.theta_hat)
        return self

    def score(self, X, y=None):
        return composite_loglik(self.spec_, np.asarray(X, dtype=float), self.result_.theta_hat)


__all__ = [
    "Parameterization",
    "pairwise_corr_params",
    "spatial_params",
    "log_density_unit",
    "density_d2",
    "density_d3",
    "CompositeSpec",
    "default_tuples",
    "CompositeLikelihoodError",
    "composite_terms",
    "composite_loglik",
    "FitResult",
    "maximize",
    "profile_maximize",
    "clic_value",
    "sandwich",
    "finalize_fit",
    "fit_composite",
    "angular_objective",
    "fit_angular",
    "angular_study_replicate",
    "IndependenceModel",
    "conditional_exceedance",
    "conditional_return_level",
    "conditional_return_contour",
    "frechet_quantile",
    "AngularDependenceEstimator",
    "CompositeLikelihoodEstimator",
]
