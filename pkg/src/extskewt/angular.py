"""Angular measure of the extremal skew-t model on the unit simplex.

Observations on the unit-Frechet scale are split into a radius ``r = sum z``
and an angle ``w = z / r``. The angular measure puts point masses on the
vertices, densities on the edges (d = 3) and a density on the interior.
A threshold ``c`` assigns each angle to one of these parts; the part
densities are then rescaled so that the likelihood is comparable across
values of ``c``.

Densities are with respect to Lebesgue measure on the free coordinates:
``w_1`` for d = 2 and the edges, ``(w_1, w_2)`` for the d = 3 interior.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .distmath import DEFAULT_CFG, SkewTParams, est_cdf_std, ncest_pdf
from .extdep import exponent_partial

SQRT3 = np.sqrt(3.0)
EDGE_NODES = 160
TRI_NODES = 48


class PartitionLabel(NamedTuple):
    kind: str  # "vertex", "edge" or "interior"
    members: tuple

    def __str__(self):
        if self.kind == "interior":
            return "interior"
        return f"{self.kind}:" + "-".join(str(m) for m in self.members)


INTERIOR = PartitionLabel("interior", ())


@dataclass(frozen=True)
class SimplexPoint:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).reshape(-1)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("simplex point must be nonnegative and sum to 1")
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class PartitionConfig:
    c: float = 0.02
    r0: float | None = None
    top_k: int | None = 100

    def __post_init__(self):
        if not 0.0 <= self.c <= 0.1:
            raise ValueError("c must lie in [0, 0.1]")
        if self.r0 is not None and not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if self.top_k is not None and int(self.top_k) < 1:
            raise ValueError("top_k must be >= 1")


@dataclass(frozen=True)
class AngularSample:
    r: float
    w: np.ndarray
    label: PartitionLabel


@dataclass(frozen=True)
class RescalingConstants:
    K_C: float
    K_E: dict = field(default_factory=dict)
    K_I: float = 1.0
    c: float = 0.0


def pseudo_polar(x):
    """Radius ``sum x`` and angle ``x / sum x`` (rows for 2-D input)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("pseudo-polar transform needs strictly positive input")
    r = arr.sum(axis=-1)
    return r, arr / np.expand_dims(r, -1)


def classify(w, c):
    """Partition label of ``w`` (length 2 or 3) at threshold ``c``."""
    w = np.asarray(w, dtype=float).reshape(-1)
    d = w.size
    if d not in (2, 3):
        raise ValueError("classification is defined for d = 2 or 3")
    for j in range(d):
        if w[j] > 1 - c:
            return PartitionLabel("vertex", (j,))
    if d == 3:
        for j, k in combinations(range(3), 2):
            l = 3 - j - k
            if (
                w[j] < 1 - c
                and w[k] < 1 - c
                and w[l] < c
                and w[j] > 1 - 2 * w[k]
                and w[k] > 1 - 2 * w[j]
            ):
                return PartitionLabel("edge", (j, k))
    return INTERIOR


# ----------------------------------------------------------------------------
# densities


def _rows(w, d):
    arr = np.atleast_2d(np.asarray(w, dtype=float))
    if arr.shape[1] != d:
        raise ValueError(f"w must have {d} entries")
    return arr


def interior_density(model, w, cfg=DEFAULT_CFG):
    """Angular density in the interior of the simplex (d = 2 or 3)."""
    d, nu = model.dim, model.nu
    if d not in (2, 3):
        raise ValueError("interior density implemented for d = 2, 3")
    arr = _rows(w, d)
    single = np.ndim(w) == 1
    if np.any(~(arr > 0)):
        raise ValueError("interior density needs strictly positive w")
    der = model.derived
    wc = arr * der.m_plus
    rel = wc[:, 1:] / wc[:, [0]]
    om = model.corr[1:, 0]
    sc = np.sqrt((nu + 1) / (1 - om**2))
    u = sc * (rel ** (1.0 / nu) - om)
    params = SkewTParams(
        np.zeros(d - 1), der.corr_circ[0], der.alpha_circ[0], der.tau_circ[0], der.kappa_circ[0], nu + 1
    )
    dens = np.atleast_1d(ncest_pdf(u, params))
    jac = np.prod(sc / nu * rel ** (1.0 / nu - 1.0) * der.m_plus[1:] / der.m_plus[0], axis=1)
    out = dens * jac / arr[:, 0] ** (d + 1)
    return float(out[0]) if single else out


def vertex_mass(model, j, cfg=DEFAULT_CFG):
    """Point mass of the angular measure at vertex ``e_j``."""
    d, nu = model.dim, model.nu
    if d < 2:
        raise ValueError("vertex mass needs d >= 2")
    der = model.derived
    rest = der.others[j]
    om = model.corr[rest, j]
    u = -np.sqrt((nu + 1) / (1 - om**2)) * om
    res = est_cdf_std(
        u[None, :], der.corr_circ[j], der.alpha_circ[j], der.tau_circ[j], der.kappa_circ[j], nu + 1, cfg
    )
    return float(np.asarray(res.value)[0])


def face_density(model, members, w, cfg=DEFAULT_CFG):
    """Angular density on the face spanned by ``members`` (coordinates outside are zero)."""
    arr = _rows(w, model.dim)
    return exponent_partial(model, arr, members, cfg)


def edge_density(model, edge, w, cfg=DEFAULT_CFG):
    """Angular density on edge ``{i, j}`` of the trivariate simplex.

    ``w`` is either a full point with zero off-edge coordinate or the value
    of ``w_i`` along the edge (``w_j = 1 - w_i``).
    """
    if model.dim != 3:
        raise ValueError("edge density is defined for d = 3")
    i, j = sorted(int(v) for v in edge)
    if i == j or not 0 <= i < 3 or not 0 <= j < 3:
        raise ValueError("edge must be two distinct indices in {0, 1, 2}")
    lval = 3 - i - j
    if np.abs(model.corr[i, j]) >= 1:
        raise ValueError("|omega| must be < 1 on the edge")
    w_arr = np.asarray(w, dtype=float)
    single = w_arr.ndim == 0 or (w_arr.ndim == 1 and w_arr.size == 3)
    if w_arr.ndim == 0 or (w_arr.ndim == 1 and w_arr.size != 3):
        t = np.atleast_1d(w_arr)
        pts = np.zeros((t.size, 3))
        pts[:, i], pts[:, j] = t, 1 - t
    else:
        pts = np.atleast_2d(w_arr).copy()
        if np.any(np.abs(pts[:, lval]) > 1e-14):
            raise ValueError("off-edge coordinate must be zero")
        pts[:, lval] = 0.0
    out = exponent_partial(model, pts, [i, j], cfg)
    return float(out[0]) if single else out


# ----------------------------------------------------------------------------
# integrals over the simplex


def _clustered_unit_rule(n):
    # u -> sin^2(pi u / 2) pushes nodes towards both ends of [0, 1]
    x, wts = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (x + 1)
    return np.sin(0.5 * np.pi * u) ** 2, 0.25 * np.pi * np.sin(np.pi * u) * wts


def _edge_rule(n=EDGE_NODES):
    return _clustered_unit_rule(n)


def _strip_weight(t, c):
    """Ternary-area weight of the edge region above edge coordinate ``t``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.maximum.reduce(
            [
                np.zeros_like(t),
                np.where(t < c, 1 - (1 - c) / (1 - t), 0.0),
                np.where(t > 1 - c, 1 - (1 - c) / t, 0.0),
            ]
        )
        hi = np.minimum.reduce([np.full_like(t, c), (1 - t) / (2 - t), t / (1 + t)])
    prim = lambda v: v - 0.5 * v * v  # noqa: E731
    return 0.5 * SQRT3 * np.maximum(prim(hi) - prim(lo), 0.0)


def _edge_points(edge, t):
    i, j = edge
    pts = np.zeros((t.size, 3))
    pts[:, i], pts[:, j] = t, 1 - t
    return pts


def edge_integrals(model, edge, c, cfg=DEFAULT_CFG):
    """(mass, first moment in w_i, strip integral) for edge ``(i, j)``."""
    t, wts = _edge_rule()
    h = exponent_partial(model, _edge_points(edge, t), list(edge), cfg)
    mass = float(np.sum(wts * h))
    mom = float(np.sum(wts * t * h))
    strip = float(np.sum(wts * h * _strip_weight(t, c))) if c > 0 else 0.0
    return mass, mom, strip


def _triangle_rule(c, n=TRI_NODES):
    """Tensor Gauss rule on {w1 > c, w2 > c, 1 - w1 - w2 > c} (Duffy map, clustered at the sides)."""
    t, wt = _clustered_unit_rule(n)
    side = 1 - 3 * c
    uu, vv = np.meshgrid(t, t, indexing="ij")
    w1 = c + side * uu
    w2 = c + side * (1 - uu) * vv
    weight = np.outer(wt, wt) * side * side * (1 - uu)
    return np.column_stack([w1.ravel(), w2.ravel()]), weight.ravel()


def _interior_points(p2):
    return np.column_stack([p2, 1 - p2.sum(axis=1)])


def truncated_interior_mass(model, c, cfg=DEFAULT_CFG, n=TRI_NODES):
    """Integral of the interior density over {all w_j > c} (d = 3) or (c, 1 - c) (d = 2)."""
    if model.dim == 2:
        t, wt = _clustered_unit_rule(4 * n)
        t = c + (1 - 2 * c) * t
        h = interior_density(model, np.column_stack([t, 1 - t]), cfg)
        return float((1 - 2 * c) * np.sum(wt * h))
    pts, wts = _triangle_rule(c, n)
    h = interior_density(model, _interior_points(pts), cfg)
    return float(np.sum(wts * h))


def interior_mass_adaptive(model, lower=0.0, moment=None, tol=1e-7, cfg=DEFAULT_CFG):
    """Adaptive quadrature of the interior density (optionally times ``w_moment``).

    Independent of the mass identities used by ``rescaling_constants``.
    """
    d = model.dim
    if d == 2:

        def f1(t):
            val = interior_density(model, np.array([t, 1 - t]), cfg)
            return val * ((t, 1 - t)[moment] if moment is not None else 1.0)

        val, _ = integrate.quad(f1, lower, 1 - lower, epsabs=tol, epsrel=tol, limit=400)
        return val

    def f2(w2, w1):
        p = np.array([w1, w2, 1 - w1 - w2])
        val = interior_density(model, p, cfg)
        return val * (p[moment] if moment is not None else 1.0)

    val, _ = integrate.dblquad(
        f2, lower, 1 - 2 * lower, lambda a: lower, lambda a: 1 - lower - a, epsabs=tol, epsrel=tol
    )
    return val


def interior_integrals(model, n=300, cfg=DEFAULT_CFG):
    """Interior mass and first moments by a clustered tensor Gauss rule.

    Independent of the mass identity H(W) = d; nodes are pushed towards the
    boundary where the density may be singular.
    """
    d = model.dim
    t, jt = _clustered_unit_rule(n)
    if d == 2:
        pts = np.column_stack([t, 1 - t])
        weight = jt
    else:
        uu, vv = np.meshgrid(t, t, indexing="ij")
        weight = (np.outer(jt, jt) * (1 - uu)).ravel()
        w1 = uu.ravel()
        w2 = ((1 - uu) * vv).ravel()
        pts = np.column_stack([w1, w2, 1 - w1 - w2])
    ok = np.all(pts > 0, axis=1)
    h = np.zeros(len(pts))
    h[ok] = interior_density(model, pts[ok], cfg)
    return float(np.sum(weight * h)), np.array([np.sum(weight * h * pts[:, j]) for j in range(d)])


def angular_moments(model, n=300, cfg=DEFAULT_CFG):
    """Total mass and first moments of H with the interior integrated by quadrature."""
    d = model.dim
    vm = np.array([vertex_mass(model, j, cfg) for j in range(d)])
    mass, mom = interior_integrals(model, n, cfg)
    mass += vm.sum()
    mom = mom + vm
    if d == 3:
        for e in combinations(range(3), 2):
            em, m_first, _ = edge_integrals(model, e, 0.0, cfg)
            mass += em
            mom[e[0]] += m_first
            mom[e[1]] += em - m_first
    return float(mass), mom


def angular_masses(model, cfg=DEFAULT_CFG):
    """Vertex masses, edge masses and the interior mass implied by H(W) = d."""
    d = model.dim
    vm = np.array([vertex_mass(model, j, cfg) for j in range(d)])
    em = {}
    if d == 3:
        for e in combinations(range(3), 2):
            em[e] = edge_integrals(model, e, 0.0, cfg)[0]
    interior = d - vm.sum() - sum(em.values())
    return vm, em, interior


def rescaling_constants(model, c, cfg=DEFAULT_CFG):
    """Rescaling constants for threshold ``c``.

    K_C is the reciprocal area of a vertex region (ternary area for d = 3,
    interval length for d = 2). K_E spreads each edge mass over its edge
    region in proportion to the edge density, and K_I is the ratio of the
    full interior mass to the mass on the truncated interior. ``c = 0``
    returns the unrescaled configuration.
    """
    d = model.dim
    if d not in (2, 3):
        raise ValueError("rescaling constants implemented for d = 2, 3")
    if c == 0:
        return RescalingConstants(np.inf, {}, 1.0, 0.0)
    if not 0 < c <= 0.1:
        raise ValueError("c must lie in (0, 0.1]")
    k_c = 4.0 / (SQRT3 * c * c) if d == 3 else 1.0 / c
    vm = np.array([vertex_mass(model, j, cfg) for j in range(d)])
    k_e = {}
    edge_total = 0.0
    if d == 3:
        for e in combinations(range(3), 2):
            mass, _, strip = edge_integrals(model, e, c, cfg)
            edge_total += mass
            k_e[e] = mass / strip
    full = d - vm.sum() - edge_total
    k_i = full / truncated_interior_mass(model, c, cfg)
    return RescalingConstants(float(k_c), k_e, float(k_i), float(c))


def rescaled_total_mass(model, consts, cfg=DEFAULT_CFG):
    """Mass of the rescaled configuration (equals d when the pieces are consistent)."""
    d, c = model.dim, consts.c
    vm = np.array([vertex_mass(model, j, cfg) for j in range(d)])
    area_c = SQRT3 * c * c / 4 if d == 3 else c
    total = consts.K_C * vm.sum() * area_c
    for e, k in consts.K_E.items():
        total += k * edge_integrals(model, e, c, cfg)[2]
    return total + consts.K_I * truncated_interior_mass(model, c, cfg)


# ----------------------------------------------------------------------------
# likelihood


def angular_samples(z, partition):
    """Pseudo-polar samples above the radial threshold, labelled at ``partition.c``."""
    r, w = pseudo_polar(z)
    order = np.argsort(-r, kind="stable")
    if partition.r0 is not None:
        keep = order[r[order] > partition.r0]
    else:
        keep = order[: int(partition.top_k)]
    return [AngularSample(float(r[i]), w[i], classify(w[i], partition.c)) for i in keep]


class AngularLikelihoodError(FloatingPointError):
    def __init__(self, index, label):
        super().__init__(f"zero angular density for sample {index} ({label})")
        self.index = index


def angular_loglik(model, samples, partition, cfg=DEFAULT_CFG, consts=None, strict=False):
    """Rescaled angular log-likelihood.

    Samples with zero density contribute ``-inf``; with ``strict=True`` an
    ``AngularLikelihoodError`` naming the sample index is raised instead.
    """
    if len(samples) == 0:
        return 0.0
    d = model.dim
    c = partition.c
    if consts is None:
        consts = rescaling_constants(model, c, cfg)
    labels = [s.label for s in samples]
    w = np.array([s.w for s in samples])
    logs = np.empty(len(samples))
    inner = np.array([lab.kind == "interior" for lab in labels])
    if inner.any():
        logs[inner] = np.log(consts.K_I * np.atleast_1d(interior_density(model, w[inner], cfg)))
    vmass = {}
    for idx, lab in enumerate(labels):
        if lab.kind == "vertex":
            j = lab.members[0]
            if j not in vmass:
                vmass[j] = vertex_mass(model, j, cfg)
            logs[idx] = np.log(consts.K_C * vmass[j])
    if d == 3:
        for e in combinations(range(3), 2):
            sel = np.array([lab.kind == "edge" and lab.members == e for lab in labels])
            if sel.any():
                t = w[sel, e[0]] / (w[sel, e[0]] + w[sel, e[1]])
                h = exponent_partial(model, _edge_points(e, t), list(e), cfg)
                logs[sel] = np.log(consts.K_E[e] * h)
    bad = np.flatnonzero(~np.isfinite(logs))
    if bad.size and strict:
        raise AngularLikelihoodError(int(bad[0]), str(labels[bad[0]]))
    return float(np.sum(logs))


# ----------------------------------------------------------------------------
# output


def density_surface(model, n_grid=30, c=0.0, cfg=DEFAULT_CFG):
    """Rows (w1, w2, w3, density, component) over a simplex grid (d = 3).

    Interior grid points carry the interior density; points with one zero
    coordinate carry the edge density; vertices carry their masses.
    """
    if model.dim != 3:
        raise ValueError("density surface is defined for d = 3")
    rows = []
    grid = np.linspace(0, 1, n_grid + 1)
    for a in range(n_grid + 1):
        for b in range(n_grid + 1 - a):
            w = np.array([grid[a], grid[b], 1 - grid[a] - grid[b]])
            w[2] = max(w[2], 0.0)
            zeros = np.flatnonzero(w <= 1e-15)
            if zeros.size == 2:
                j = int(np.flatnonzero(w > 1e-15)[0])
                rows.append((*w, vertex_mass(model, j, cfg), f"vertex:{j}"))
            elif zeros.size == 1:
                e = tuple(int(v) for v in np.flatnonzero(w > 1e-15))
                rows.append((*w, float(face_density(model, e, w, cfg)[0]), "edge:%d-%d" % e))
            else:
                rows.append((*w, float(interior_density(model, w, cfg)), "interior"))
    return rows


__all__ = [
    "PartitionLabel",
    "SimplexPoint",
    "PartitionConfig",
    "AngularSample",
    "RescalingConstants",
    "pseudo_polar",
    "classify",
    "interior_density",
    "vertex_mass",
    "face_density",
    "edge_density",
    "edge_integrals",
    "truncated_interior_mass",
    "interior_mass_adaptive",
    "interior_integrals",
    "angular_moments",
    "angular_masses",
    "rescaling_constants",
    "rescaled_total_mass",
    "angular_samples",
    "angular_loglik",
    "AngularLikelihoodError",
    "density_surface",
]
