"""Non-stationary skew-normal random processes.

Two constructions are supported. The additive one mixes a stationary
Gaussian process with a single truncated normal shared by all sites,
weighted by a slant function ``delta(s)`` taking values in (-1, 1). The
conditioning one keeps a Gaussian path when a linear functional of it
exceeds an independent normal threshold; its slant ``alpha(s)`` is
unbounded.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special as sp

from ._linalg import safe_cholesky
from .distmath import SkewTParams, sample_conditioning

ADDITIVE = "additive"
CONDITIONING = "conditioning"
DELTA_KIND = "delta"
ALPHA_KIND = "alpha"


def _as_sites(sites):
    arr = np.asarray(sites, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr[:, None]
    return arr


@dataclass(frozen=True)
class SlantFunction:
    """Slant evaluated at sites (rows of an ``(n, k)`` array).

    ``codomain_kind`` is ``"delta"`` for the additive construction (values in
    (-1, 1)) or ``"alpha"`` for the conditioning construction.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    codomain_kind: str = DELTA_KIND

    def __post_init__(self):
        if self.codomain_kind not in (DELTA_KIND, ALPHA_KIND):
            raise ValueError("codomain_kind must be 'delta' or 'alpha'")

    def __call__(self, sites):
        pts = _as_sites(sites)
        vals = np.asarray(self.evaluator(pts), dtype=float).reshape(pts.shape[0])
        if not np.all(np.isfinite(vals)):
            raise ValueError("slant function returned non-finite values")
        if self.codomain_kind == DELTA_KIND and np.any(np.abs(vals) >= 1.0):
            raise ValueError("delta slant must lie strictly inside (-1, 1)")
        return vals

    @classmethod
    def constant(cls, value, kind=DELTA_KIND):
        return cls(lambda s: np.full(s.shape[0], float(value)), kind)


def sine_slant(a, b, kind=DELTA_KIND):
    """``a sin(b s)`` on the first coordinate."""
    return SlantFunction(lambda s: a * np.sin(b * s[:, 0]), kind)


def sincos_slant(a, b, kind=DELTA_KIND):
    """``a^2 sin(b s) cos(b s)`` on the first coordinate."""
    return SlantFunction(lambda s: a * a * np.sin(b * s[:, 0]) * np.cos(b * s[:, 0]), kind)


@dataclass(frozen=True)
class PowExpCorrelation:
    """Power-exponential correlation ``exp(-(h / lam)^xi)``.

    ``aniso`` is an optional positive definite matrix R; the lag length is then
    ``sqrt(h' R h)`` (geometric anisotropy).
    """

    lam: float
    xi: float
    aniso: np.ndarray | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not 0 < self.xi <= 2:
            raise ValueError("xi must lie in (0, 2]")
        if self.aniso is not None:
            r = np.asarray(self.aniso, dtype=float)
            if r.ndim != 2 or r.shape[0] != r.shape[1] or np.linalg.eigvalsh(r).min() <= 0:
                raise ValueError("aniso must be a positive definite matrix")
            object.__setattr__(self, "aniso", r)

    def lag_length(self, h):
        h = np.asarray(h, dtype=float)
        if h.ndim == 0:
            return np.abs(h)
        if self.aniso is None:
            return np.sqrt(np.sum(h * h, axis=-1))
        return np.sqrt(np.einsum("...i,ij,...j->...", h, self.aniso, h))

    def from_length(self, dist):
        dist = np.asarray(dist, dtype=float)
        return np.exp(-((dist / self.lam) ** self.xi))

    def __call__(self, h):
        return self.from_length(self.lag_length(h))

    def matrix(self, sites):
        pts = _as_sites(sites)
        diff = pts[:, None, :] - pts[None, :, :]
        return self(diff)


@dataclass(frozen=True)
class ProcessSpec:
    """Skew-normal process over a finite set of sites."""

    sites: np.ndarray
    correlation: PowExpCorrelation
    slant: SlantFunction
    epsilon_or_tau: float = 0.0
    construction: str = ADDITIVE
    slant_values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = _as_sites(self.sites)
        if pts.shape[0] > 1:
            gaps = np.abs(pts[:, None, :] - pts[None, :, :]).sum(-1)
            gaps[np.diag_indices_from(gaps)] = np.inf
            if np.min(gaps) == 0:
                raise ValueError("sites must be distinct")
        if self.construction not in (ADDITIVE, CONDITIONING):
            raise ValueError("construction must be 'additive' or 'conditioning'")
        want = DELTA_KIND if self.construction == ADDITIVE else ALPHA_KIND
        if self.slant.codomain_kind != want:
            raise ValueError(f"{self.construction} construction needs a {want}-kind slant")
        object.__setattr__(self, "sites", pts)
        object.__setattr__(self, "epsilon_or_tau", float(self.epsilon_or_tau))
        object.__setattr__(self, "slant_values", self.slant(pts))

    @property
    def dim(self):
        return self.sites.shape[0]

    def gaussian_corr(self):
        return self.correlation.matrix(self.sites)


def _require_delta(spec):
    if spec.slant.codomain_kind != DELTA_KIND:
        raise ValueError("operation needs a delta-kind slant")


def finite_dim_params(spec):
    """(Omega_bar, alpha, tau) of the skew-normal law of the process at its sites."""
    if spec.construction == CONDITIONING:
        return spec.gaussian_corr(), spec.slant_values.copy(), spec.epsilon_or_tau
    delta = spec.slant_values
    sigma = spec.gaussian_corr()
    dd = np.sqrt(1.0 - delta**2)
    v = delta / dd
    omega = dd[:, None] * (sigma + np.outer(v, v)) * dd[None, :]
    np.fill_diagonal(omega, 1.0)
    sv = np.linalg.solve(sigma, v)
    alpha = sv / dd / np.sqrt(1.0 + v @ sv)
    tau = np.sqrt(1.0 + alpha @ omega @ alpha) * spec.epsilon_or_tau
    return omega, alpha, float(tau)


def skew_normal_params(spec):
    omega, alpha, tau = finite_dim_params(spec)
    return SkewTParams(np.zeros(spec.dim), omega, alpha, tau)


def _ratio(eps):
    # phi(eps) / Phi(eps), stable for very negative eps
    return np.exp(-0.5 * eps * eps - 0.5 * np.log(2 * np.pi) - sp.log_ndtr(eps))


def truncation_r(eps):
    """``r = (phi/Phi)(eps) * (eps + (phi/Phi)(eps))``: variance reduction of the truncated normal."""
    lam = _ratio(float(eps))
    return float(lam * (eps + lam))


def _delta_at(spec, s):
    return spec.slant(_as_sites(s))


def mean_function(spec, s):
    """Mean of Z(s) under the additive construction."""
    _require_delta(spec)
    vals = _delta_at(spec, s) * _ratio(spec.epsilon_or_tau)
    return vals if vals.size > 1 else float(vals[0])


def _lag_sites(s, h):
    s_arr = _as_sites(s)
    h_arr = np.asarray(h, dtype=float)
    if h_arr.ndim <= 1 and s_arr.shape[1] == 1:
        h_arr = h_arr.reshape(-1, 1)
    return np.broadcast_arrays(s_arr, np.atleast_2d(h_arr))


def covariance_function(spec, s, h):
    """Cov{Z(s), Z(s + h)}."""
    _require_delta(spec)
    s_arr, h_arr = _lag_sites(s, h)
    d0 = spec.slant(s_arr)
    d1 = spec.slant(s_arr + h_arr)
    rho = spec.correlation(h_arr)
    r = truncation_r(spec.epsilon_or_tau)
    out = rho * np.sqrt((1 - d0**2) * (1 - d1**2)) + d0 * d1 * (1 - r)
    return out if out.size > 1 else float(out[0])


def ns_correlation(spec, s, h):
    """Correlation of Z(s) and Z(s + h)."""
    _require_delta(spec)
    s_arr, h_arr = _lag_sites(s, h)
    r = truncation_r(spec.epsilon_or_tau)
    d0 = spec.slant(s_arr)
    d1 = spec.slant(s_arr + h_arr)
    c = np.atleast_1d(covariance_function(spec, s_arr, h_arr))
    var0, var1 = 1 - r * d0**2, 1 - r * d1**2
    if np.any(var0 <= 0) or np.any(var1 <= 0):
        raise ArithmeticError("non-positive variance; invalid process specification")
    out = c / np.sqrt(var0 * var1)
    return out if out.size > 1 else float(out[0])


def variogram(spec, s, h):
    """Var{Z(s + h) - Z(s)}."""
    _require_delta(spec)
    s_arr, h_arr = _lag_sites(s, h)
    r = truncation_r(spec.epsilon_or_tau)
    d0 = spec.slant(s_arr)
    d1 = spec.slant(s_arr + h_arr)
    c = np.atleast_1d(covariance_function(spec, s_arr, h_arr))
    out = 2.0 * (1.0 - c - r * (d0**2 + d1**2) / 2.0)
    return out if out.size > 1 else float(out[0])


def gaussian_paths(spec, n_paths, rng):
    """Stationary Gaussian paths at the sites (the X of both constructions)."""
    rng = np.random.default_rng(rng)
    chol = safe_cholesky(spec.gaussian_corr())
    return rng.standard_normal((n_paths, spec.dim)) @ chol.T


def _truncated_normal_above(rng, low, size):
    # X' | X' > low, by inversion on the upper tail
    u = rng.uniform(size=size)
    return -sp.ndtri(u * sp.ndtr(-low))


def simulate_additive(spec, n_paths, rng):
    """Paths Z = sqrt(1 - delta^2) X + delta X'' with one X'' per path."""
    _require_delta(spec)
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    rng = np.random.default_rng(rng)
    x = gaussian_paths(spec, n_paths, rng)
    x2 = _truncated_normal_above(rng, -spec.epsilon_or_tau, n_paths)
    delta = spec.slant_values
    return np.sqrt(1 - delta**2)[None, :] * x + x2[:, None] * delta[None, :]


def simulate_conditioning(spec, n_paths, rng):
    """Skew-normal paths from the conditioning construction.

    With ``tau = 0`` the acceptance-free sign-flip form is used; otherwise
    each path is redrawn until ``<alpha, X> + tau > X'``.
    """
    if spec.construction != CONDITIONING:
        raise ValueError("operation needs the conditioning construction")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    rng = np.random.default_rng(rng)
    alpha = spec.slant_values
    tau = spec.epsilon_or_tau
    if tau == 0.0:
        x = gaussian_paths(spec, n_paths, rng)
        x0 = rng.standard_normal(n_paths)
        sign = np.where(x @ alpha > x0, 1.0, -1.0)
        return x * sign[:, None]
    params = SkewTParams(np.zeros(spec.dim), spec.gaussian_corr(), alpha, tau)
    return sample_conditioning(params, n_paths, rng)


# ----------------------------------------------------------------------------
# presets and output

FIG1_CORRELATION = PowExpCorrelation(lam=0.3, xi=1.5)

FIG1_SLANTS = {
    "row1": sine_slant(0.95, 0.0),
    "row2": sine_slant(0.95, 1.0),
    "row3": sine_slant(0.95, 3.0),
    "row4": sincos_slant(1.3, 0.9),
}


def figure1_spec(row, n_sites=200, epsilon=0.0):
    """Process on an equispaced grid of [0, 1] using one of the shipped slant presets."""
    if row not in FIG1_SLANTS:
        raise KeyError(f"unknown preset {row!r}; choose from {sorted(FIG1_SLANTS)}")
    grid = np.linspace(0.0, 1.0, n_sites)
    return ProcessSpec(grid, FIG1_CORRELATION, FIG1_SLANTS[row], epsilon, ADDITIVE)


def fmt(value):
    return format(float(value), ".17g")


def write_paths_csv(path_or_file, sites, paths):
    """Long-format CSV: path_id, site_index, coordinate columns, value."""
    pts = _as_sites(sites)
    paths = np.atleast_2d(paths)
    header = ["path_id", "site_index"] + [f"coord_{k}" for k in range(pts.shape[1])] + ["value"]
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for p, row in enumerate(paths):
            for i, val in enumerate(row):
                writer.writerow([p, i] + [fmt(c) for c in pts[i]] + [fmt(val)])
    finally:
        if own:
            fh.close()


__all__ = [
    "SlantFunction",
    "PowExpCorrelation",
    "ProcessSpec",
    "sine_slant",
    "sincos_slant",
    "finite_dim_params",
    "skew_normal_params",
    "truncation_r",
    "mean_function",
    "covariance_function",
    "ns_correlation",
    "variogram",
    "gaussian_paths",
    "simulate_additive",
    "simulate_conditioning",
    "figure1_spec",
    "FIG1_CORRELATION",
    "FIG1_SLANTS",
    "write_paths_csv",
]
