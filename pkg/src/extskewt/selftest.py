"""Fast oracle checks behind ``extskewt selftest``.

Each check compares a library value with an independent route (quadrature,
finite differences or a closed form) and reports (name, passed, detail).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, stats

from .angular import face_density, interior_density, vertex_mass
from .distmath import SkewTParams, ncest_pdf
from .extdep import ExtDepModel, exponent_extremal_t, exponent_V
from .fit import conditional_exceedance, conditional_return_level, density_d2, frechet_quantile

C3 = np.array([[1.0, 0.6, 0.8], [0.6, 1.0, 0.7], [0.8, 0.7, 1.0]])


def _pdf_normalization():
    p = SkewTParams.standard(np.eye(1), [2.0], 0.5, 0.3, 4.0)
    mass = integrate.quad(lambda y: float(ncest_pdf(np.array([[y]]), p)[0]), -np.inf, np.inf)[0]
    return abs(mass - 1) < 1e-4, f"mass {mass:.8f}"


def _reduction():
    m = ExtDepModel.extremal_t(C3, 2.5)
    x = np.array([[0.7, 1.3, 2.0], [1.0, 1.0, 1.0]])
    a, b = exponent_V(m, x), exponent_extremal_t(m, x)
    gap = np.max(np.abs(a.value - b.value))
    tol = 3 * np.max(np.hypot(a.error, b.error)) + 1e-12
    return gap <= tol, f"max gap {gap:.2e} (allowed {tol:.2e})"


def _bivariate_closed_form():
    w, nu = 0.4, 3.0
    m = ExtDepModel.extremal_t([[1, w], [w, 1]], nu)
    v = exponent_V(m, [1.0, 1.0]).value
    ref = 2 * stats.t.cdf(math.sqrt((nu + 1) * (1 - w) / (1 + w)), nu + 1)
    return abs(v - ref) < 1e-8, f"V(1,1) {v:.10f} vs {ref:.10f}"


def _density_fd():
    m = ExtDepModel([[1, 0.5], [0.5, 1]], [1.5, -0.5], 0.0, 2.0)
    x, h = np.array([1.2, 0.8]), 1e-3
    g = lambda a, b: math.exp(-exponent_V(m, [a, b]).value)  # noqa: E731
    fd = (g(x[0] + h, x[1] + h) - g(x[0] + h, x[1] - h) - g(x[0] - h, x[1] + h) + g(x[0] - h, x[1] - h)) / (4 * h * h)
    f = density_d2(m, x)
    return abs(f / fd - 1) < 1e-2, f"density {f:.6f} vs finite difference {fd:.6f}"


def _interior_vs_faces():
    m = ExtDepModel(C3, [1.0, -2.0, 0.5], 0.0, 2.0)
    w = np.array([0.2, 0.5, 0.3])
    a = float(interior_density(m, w))
    b = float(face_density(m, (0, 1, 2), w)[0])
    return abs(a / b - 1) < 1e-8, f"{a:.10g} vs {b:.10g}"


def _vertex_mass_value():
    w = 1 / math.sqrt(2)
    m = ExtDepModel.extremal_t([[1, w], [w, 1]], 1.0)
    got = vertex_mass(m, 0)
    ref = stats.t.cdf(-math.sqrt(2), 2)
    return abs(got - ref) < 1e-8, f"{got:.10f} vs {ref:.10f}"


def _return_level_round_trip():
    m = ExtDepModel(C3, [1.0, -1.0, 0.5], 0.0, 2.0)
    level = conditional_return_level(m, 0.9, 0.2)
    xq = frechet_quantile(0.9, 2.0)
    back = conditional_exceedance(m, np.array([level, xq, xq]), "X|Y,Z")
    return abs(back - 0.2) < 1e-6, f"probability at level {back:.9f}"


CHECKS = (
    ("pdf normalization", _pdf_normalization),
    ("extremal-t reduction", _reduction),
    ("bivariate closed form", _bivariate_closed_form),
    ("density vs finite difference", _density_fd),
    ("interior density vs exponent partials", _interior_vs_faces),
    ("vertex mass closed form", _vertex_mass_value),
    ("return level round trip", _return_level_round_trip),
)


def run_checks():
    out = []
    for name, check in CHECKS:
        try:
            ok, detail = check()
        except Exception as err:  # report, do not abort the suite
            ok, detail = False, f"{type(err).__name__}: {err}"
        out.append((name, bool(ok), detail))
    return out
