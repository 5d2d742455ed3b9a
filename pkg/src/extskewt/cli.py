"""Command-line interface: simulation, curve and surface emission, fitting and prediction.

Every subcommand reads an optional INI config (section named after the
subcommand, plus ``[common]``), lets flags override it, writes CSV/JSON and
a ``<output>.manifest.json`` run manifest next to each output file.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .angular import PartitionConfig, angular_samples, density_surface
from .extdep import (
    EC_CORRELATION,
    EC_LOCATIONS_1D,
    EC_PRESETS_1D,
    EC_PRESETS_2D,
    ExtDepModel,
    extremal_coefficient_curve,
    isotropic_correlation,
    quadratic_lag_correlation,
    simulate_maxstable,
)
from .fit import (
    CompositeSpec,
    conditional_exceedance,
    conditional_return_level,
    default_tuples,
    fit_angular,
    fit_composite,
    frechet_quantile,
    pairwise_corr_params,
    spatial_params,
)
from .skewproc import FIG1_SLANTS, PowExpCorrelation, figure1_spec, fmt, simulate_additive, write_paths_csv

C_SWEEP = (0.0, 0.02, 0.04, 0.06, 0.08, 0.1)
DEFAULT_SEED = 20240611
SEED_ENV = "EXTSKEWT_SEED"
MIN_FRECHET = 10


class UsageError(Exception):
    pass


class DataError(ValueError):
    pass


# ----------------------------------------------------------------------------
# data plumbing


@dataclass
class Dataset:
    station_names: list
    observations: np.ndarray
    coordinates: np.ndarray | None = None
    scale: str = "raw"

    def __post_init__(self):
        obs = np.atleast_2d(np.asarray(self.observations, dtype=float))
        if obs.shape[1] != len(self.station_names):
            raise DataError("column count does not match station count")
        if self.scale not in ("raw", "frechet"):
            raise DataError("scale must be 'raw' or 'frechet'")
        if self.scale == "frechet" and np.any(obs[~np.isnan(obs)] <= 0):
            raise DataError("frechet-scale data must be positive")
        if self.coordinates is not None:
            coords = np.atleast_2d(np.asarray(self.coordinates, dtype=float))
            if coords.shape[0] != len(self.station_names):
                raise DataError("one coordinate row per station is required")
            self.coordinates = coords
        self.observations = obs

    @property
    def n(self):
        return self.observations.shape[0]

    def select(self, names):
        idx = [self.station_names.index(n) for n in names]
        coords = None if self.coordinates is None else self.coordinates[idx]
        return Dataset([self.station_names[i] for i in idx], self.observations[:, idx], coords, self.scale)


MISSING = {"", "NA", "na", "NaN", "nan"}


def _parse_cell(cell, line):
    cell = cell.strip()
    if cell in MISSING:
        return np.nan
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"line {line}: non-numeric cell {cell!r}") from None


def ingest_csv(path, coords_path=None, scale="raw"):
    """Read a header-plus-rows CSV (one column per station); NA or empty cells become NaN.

    The optional sidecar has rows ``name, coord_1, ..., coord_k``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError("line 1: missing header row")
    names = [h.strip() for h in rows[0]]
    if len(set(names)) != len(names) or any(not n for n in names):
        raise DataError("line 1: station names must be non-empty and distinct")
    obs = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(names):
            raise DataError(f"line {line}: expected {len(names)} cells, found {len(row)}")
        obs.append([_parse_cell(c, line) for c in row])
    coords = None
    if coords_path is not None:
        with open(coords_path, newline="") as fh:
            crow = [r for r in csv.reader(fh) if r]
        table = {}
        for line, r in enumerate(crow, start=1):
            if line == 1 and not _is_number(r[-1]):
                continue
            table[r[0].strip()] = [_parse_cell(c, line) for c in r[1:]]
        missing = [n for n in names if n not in table]
        if missing:
            raise DataError(f"no coordinates for stations {missing}")
        coords = np.array([table[n] for n in names])
    return Dataset(names, np.array(obs, dtype=float).reshape(-1, len(names)), coords, scale)


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_dataset_csv(path, data):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(data.station_names)
        for row in data.observations:
            w.writerow(["NA" if np.isnan(v) else fmt(v) for v in row])


def write_coords_csv(path, data):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["station"] + [f"coord_{k + 1}" for k in range(data.coordinates.shape[1])])
        for name, c in zip(data.station_names, data.coordinates):
            w.writerow([name] + [fmt(v) for v in c])


def to_frechet(data):
    """Empirical rank transform to unit Frechet: u = rank / (n + 1), z = -1 / log(u)."""
    obs = data.observations
    out = np.full_like(obs, np.nan)
    for j in range(obs.shape[1]):
        ok = ~np.isnan(obs[:, j])
        n = int(ok.sum())
        if n < MIN_FRECHET:
            raise DataError(f"station {data.station_names[j]!r} has {n} values; at least {MIN_FRECHET} needed")
        u = stats.rankdata(obs[ok, j]) / (n + 1)
        out[ok, j] = -1.0 / np.log(u)
    return Dataset(list(data.station_names), out, data.coordinates, "frechet")


def type7_quantile(values, q):
    v = np.asarray(values, dtype=float)
    return float(np.quantile(v[~np.isnan(v)], q, method="linear"))


# synthetic stand-in for four-station weekly wind maxima
WIND_STATIONS = ("ST1", "ST2", "ST3", "ST4")
WIND_COORDS = np.array([[0.0, 0.0], [38.0, 12.0], [21.0, 47.0], [63.0, 35.0]])
WIND_GEV = ((21.0, 3.2, -0.08), (22.5, 3.6, -0.05), (24.0, 3.9, -0.10), (23.5, 3.4, -0.06))


def synthetic_wind(rng, n=1564, missing_rate=0.01):
    """Weekly-maxima-like raw data at four stations from an extremal skew-t model with GEV margins."""
    corr = PowExpCorrelation(60.0, 1.0).matrix(WIND_COORDS)
    model = ExtDepModel(corr, [0.5, -1.0, 1.5, 0.0], 0.0, 2.0)
    x = simulate_maxstable(model, n, rng).values
    u = np.exp(-(x**-model.nu))
    raw = np.column_stack(
        [stats.genextreme.ppf(u[:, j], -xi, loc=mu, scale=sg) for j, (mu, sg, xi) in enumerate(WIND_GEV)]
    )
    raw[rng.random(raw.shape) < missing_rate] = np.nan
    return Dataset(list(WIND_STATIONS), raw, WIND_COORDS.copy(), "raw")


# ----------------------------------------------------------------------------
# manifest and output helpers


@dataclass
class RunManifest:
    command_line: list
    config_hash: str
    seed: int
    version: str = __version__
    wall_time: float = 0.0
    settings: dict = field(default_factory=dict)

    def write(self, output_path):
        path = Path(str(output_path) + ".manifest.json")
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n")
        return path


def config_hash(settings):
    blob = json.dumps(settings, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def _floats(text, name):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated numbers") from None


def _corr_from_pairs(omega):
    k = len(omega)
    d = {1: 2, 3: 3}.get(k)
    if d is None:
        raise UsageError("--omega needs 1 (d=2) or 3 (d=3) values ordered 12,13,23")
    corr = np.eye(d)
    for (i, j), w in zip(((0, 1), (0, 2), (1, 2)), omega):
        if not -1 < w < 1:
            raise UsageError("--omega values must lie in (-1, 1)")
        corr[i, j] = corr[j, i] = w
    if np.linalg.eigvalsh(corr).min() <= 0:
        raise UsageError("--omega does not form a positive-definite correlation matrix")
    return corr


def _model_from_args(args):
    corr = _corr_from_pairs(_floats(args.omega, "omega"))
    d = corr.shape[0]
    alpha = _floats(args.alpha, "alpha") if args.alpha else [0.0] * d
    if len(alpha) != d:
        raise UsageError(f"--alpha needs {d} values")
    if not args.nu > 0:
        raise UsageError("--nu must be positive")
    return ExtDepModel(corr, alpha, 0.0, args.nu)


def _positive(name):
    def conv(v):
        try:
            x = float(v)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from None
        if not x > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return x

    return conv


def _count(name):
    def conv(v):
        try:
            x = int(v)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from None
        if x < 1:
            raise argparse.ArgumentTypeError(f"{name} must be at least 1")
        return x

    return conv


def _unit_interval(name):
    def conv(v):
        x = float(v)
        if not 0 < x < 1:
            raise argparse.ArgumentTypeError(f"{name} must lie in (0, 1)")
        return x

    return conv


def _load_data(args):
    if not args.data:
        raise UsageError("--data is required")
    data = ingest_csv(args.data, getattr(args, "coords", None), "frechet" if args.scale == "frechet" else "raw")
    if getattr(args, "stations", None):
        names = [s.strip() for s in args.stations.split(",")]
        unknown = [s for s in names if s not in data.station_names]
        if unknown:
            raise UsageError(f"--stations: unknown {unknown}")
        data = data.select(names)
    return data


# ----------------------------------------------------------------------------
# subcommands


def cmd_simulate_process(args, rng):
    spec = figure1_spec(args.preset, args.n_sites, args.epsilon)
    paths = simulate_additive(spec, args.paths, rng)
    write_paths_csv(args.out, spec.sites, paths)
    return [args.out]


def _sites(args, rng):
    if args.sites_file:
        with open(args.sites_file, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        if rows and not _is_number(rows[0][-1]):
            rows = rows[1:]
        names = [r[0] for r in rows]
        return names, np.array([[float(c) for c in r[1:]] for r in rows])
    pts = rng.uniform(0.0, args.domain, (args.sites, 2))
    return [f"S{i + 1}" for i in range(args.sites)], pts


def cmd_simulate_maxstable(args, rng):
    if args.preset == "wind":
        data = synthetic_wind(rng, args.paths or 1564)
    else:
        names, pts = _sites(args, rng)
        corr = PowExpCorrelation(args.lam, args.xi).matrix(pts)
        alpha = _floats(args.alpha, "alpha") if args.alpha else [0.0]
        if len(alpha) not in (1, 1 + pts.shape[1]):
            raise UsageError("--alpha: give a constant or a0,a1,...,ak (linear in the coordinates)")
        a = alpha[0] + (pts @ np.array(alpha[1:]) if len(alpha) > 1 else 0.0)
        model = ExtDepModel(corr, np.broadcast_to(a, (len(names),)).copy(), 0.0, args.nu)
        sim = simulate_maxstable(model, args.paths or 1000, rng)
        # unit-Frechet scale so the fitting commands can read it with --scale frechet
        data = Dataset(names, sim.values**args.nu, pts, "frechet")
    write_dataset_csv(args.out, data)
    coords = str(args.out) + ".sites.csv"
    write_coords_csv(coords, data)
    return [args.out, coords]


def cmd_extremal_coef(args, rng):
    rows = []
    if args.preset in EC_PRESETS_1D:
        alpha_fn = EC_PRESETS_1D[args.preset]
        corr_fn = isotropic_correlation(EC_CORRELATION)
        lags = np.linspace(0.0, 1.0, args.n_lags)
        for s in EC_LOCATIONS_1D:
            theta = extremal_coefficient_curve(alpha_fn, corr_fn, args.nu, np.array([s]), lags)
            rows += [(float(s), float(h), float(t)) for h, t in zip(lags, theta)]
        header = ["s", "h", "theta"]
    else:
        alpha_fn, locs = EC_PRESETS_2D[args.preset]
        corr_fn = quadratic_lag_correlation(EC_CORRELATION)
        g = np.linspace(-1.0, 1.0, args.n_lags)
        lags = np.array([(a, b) for a in g for b in g])
        for s in locs:
            theta = extremal_coefficient_curve(alpha_fn, corr_fn, args.nu, np.array(s), lags)
            rows += [(float(s[0]), float(s[1]), float(v[0]), float(v[1]), float(t)) for v, t in zip(lags, theta)]
        header = ["s1", "s2", "v1", "v2", "theta"]
    _write_rows(args.out, header, rows)
    return [args.out]


def cmd_angular_density(args, rng):
    if args.preset == "figS1":
        model = ExtDepModel(_corr_from_pairs([0.6, 0.8, 0.7]), [-3.0, -3.0, 7.0], 0.0, 3.0)
    else:
        model = _model_from_args(args)
    if model.dim != 3:
        raise UsageError("angular-density needs a trivariate model (three --omega values)")
    rows = density_surface(model, args.n_grid, args.c)
    _write_rows(args.out, ["w1", "w2", "w3", "density", "component"], rows)
    return [args.out]


def _angular_fit_rows(samples_by_c, d, profile, rep):
    rows = []
    for c, samples, part in samples_by_c:
        res = fit_angular(samples, d, part, profile=profile)
        for name in res.names:
            rows.append((rep, c, name, float(res.natural[name]), float(res.loglik), int(res.convergence_flag)))
    return rows


def _angular_job(args, d, cs, seed_seq, model, data):
    rng = np.random.default_rng(seed_seq)
    if data is None:
        z = simulate_maxstable(model, args.n, rng).values ** model.nu
    else:
        z = data
    out = []
    for c in cs:
        part = PartitionConfig(c=c, top_k=args.top_k)
        out.append((c, angular_samples(z, part), part))
    return out


def cmd_fit_angular(args, rng):
    cs = C_SWEEP if args.c_sweep else (args.c,)
    if any(not 0 <= c <= 0.1 for c in cs):
        raise UsageError("--c must lie in [0, 0.1]")
    if args.data:
        data = _load_data(args)
        z = data.observations if data.scale == "frechet" else to_frechet(data).observations
        z = z[~np.any(np.isnan(z), axis=1)]
        if z.shape[1] not in (2, 3):
            raise UsageError("angular fits need 2 or 3 stations")
        jobs = [(None, z)]
        d = z.shape[1]
    else:
        model = _model_from_args(args)
        d = model.dim
        jobs = [(model, None)] * args.replicates
    seeds = np.random.SeedSequence(args.seed).spawn(len(jobs))

    def run(i):
        model, z = jobs[i]
        prepared = _angular_job(args, d, cs, seeds[i], model, z)
        return _angular_fit_rows(prepared, d, args.profile, i)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            parts = list(pool.map(run, range(len(jobs))))
    else:
        parts = [run(i) for i in range(len(jobs))]
    rows = [r for part in parts for r in part]
    _write_rows(args.out, ["replicate", "c", "parameter", "estimate", "loglik", "converged"], rows)
    return [args.out]


def _composite_fit(data, z, model_kind, args):
    d = z.shape[1]
    skew = model_kind == "extremal-skew-t"
    fixed = {"nu": args.fix_nu} if args.fix_nu else None
    if args.spatial:
        if data.coordinates is None:
            raise UsageError("--spatial needs station coordinates (--coords)")
        param = spatial_params(data.coordinates, skew, fixed)
        start = {"lam": args.lam0, "xi": 1.0, "nu": 2.0, "alpha_0": 0.0}
        start.update({f"alpha_s{i + 1}": 0.0 for i in range(data.coordinates.shape[1])})
    else:
        param = pairwise_corr_params(d, skew, fixed)
        start = {n: 0.5 for n in param.names if n.startswith("omega")}
        start.update({f"alpha_{j + 1}": 0.0 for j in range(d)})
        start["nu"] = 2.0
    tuples = default_tuples(d, args.order, data.coordinates if args.max_distance else None, args.max_distance)
    spec = CompositeSpec(args.order, tuples, param)
    theta0 = param.free({k: v for k, v in start.items() if k in param.free_names})
    return fit_composite(spec, z, theta0, threads=args.threads)


def _group(res, prefix):
    vals = [f"{res.natural[n]:.4f}" for n in res.names if n.startswith(prefix)]
    return "(" + ", ".join(vals) + ")" if vals else "-"


def cmd_fit_composite(args, rng):
    data = _load_data(args)
    z = data.observations if data.scale == "frechet" else to_frechet(data).observations
    kinds = ("extremal-t", "extremal-skew-t") if args.model == "both" else (args.model,)
    fits = {k: _composite_fit(data, z, k, args) for k in kinds}
    label = "(" + ",".join(data.station_names) + ")"
    rows = []
    for kind, res in fits.items():
        dep = f"(lam={res.natural['lam']:.4f}, xi={res.natural['xi']:.4f})" if args.spatial else _group(res, "omega")
        rows.append((label, kind, dep, _group(res, "alpha"), float(res.natural["nu"]), float(res.clic), float(res.loglik)))
    _write_rows(args.out, ["stations", "model", "dependence", "slant", "nu", "clic", "loglik"], rows)
    outputs = [args.out]
    if args.json:
        doc = {k: r.to_dict(seed=args.seed, config=_settings(args)) for k, r in fits.items()}
        Path(args.json).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        outputs.append(args.json)
    return outputs


def _predict_model(args):
    if args.fit:
        doc = json.loads(Path(args.fit).read_text())
        key = args.fit_model if args.fit_model in doc else next(iter(doc))
        nat = doc[key]["natural"]
        omega = [nat[k] for k in ("omega_12", "omega_13", "omega_23")]
        alpha = [nat.get(f"alpha_{j}", 0.0) for j in (1, 2, 3)]
        return ExtDepModel(_corr_from_pairs(omega), alpha, 0.0, nat["nu"])
    return _model_from_args(args)


def cmd_predict(args, rng):
    model = _predict_model(args)
    if model.dim != 3:
        raise UsageError("predict needs a trivariate model")
    qs = _floats(args.quantiles, "quantiles")
    if len(qs) != 3 or any(not 0 < q < 1 for q in qs):
        raise UsageError("--quantiles needs three levels in (0, 1)")
    data = _load_data(args) if args.data else None
    x = np.array([frechet_quantile(q, model.nu) for q in qs])
    rows = []
    patterns = {"X|Y,Z": ((0,), (1, 2)), "X,Y|Z": ((0, 1), (2,))}
    for name, (tgt, giv) in patterns.items():
        prob = conditional_exceedance(model, x, name)
        emp, raw = "", ["", "", ""]
        if data is not None:
            obs = data.observations
            raw = [fmt(type7_quantile(obs[:, j], q)) for j, q in enumerate(qs)]
            full = obs[~np.any(np.isnan(obs), axis=1)]
            thr = np.array([type7_quantile(obs[:, j], q) for j, q in enumerate(qs)])
            exc = full > thr
            cond = np.all(exc[:, list(giv)], axis=1)
            emp = fmt(np.all(exc[cond][:, list(tgt)], axis=1).mean()) if cond.any() else "nan"
        rows.append((name, *[fmt(q) for q in qs], *raw, fmt(prob), emp))
    _write_rows(
        args.out,
        ["pattern", "q1", "q2", "q3", "threshold1", "threshold2", "threshold3", "model_probability", "empirical"],
        rows,
    )
    outputs = [args.out]
    if args.return_levels:
        probs = np.geomspace(0.5, 0.01, args.n_levels)
        lrows = []
        for cq in _floats(args.return_levels, "return-levels"):
            if not 0 < cq < 1:
                raise UsageError("--return-levels values must lie in (0, 1)")
            for p in probs:
                level = conditional_return_level(model, cq, float(p))
                raw = ""
                if data is not None:
                    u = math.exp(-(level**-model.nu))
                    raw = fmt(type7_quantile(data.observations[:, 0], u))
                lrows.append((fmt(cq), fmt(p), fmt(level), raw))
        path = str(args.out) + ".return_levels.csv"
        _write_rows(path, ["conditioning_quantile", "probability", "level_frechet", "level_raw"], lrows)
        outputs.append(path)
    return outputs


def cmd_selftest(args, rng):
    from .selftest import run_checks

    results = run_checks()
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in results]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    outputs = []
    if args.out:
        Path(args.out).write_text(text)
        outputs.append(args.out)
    if not all(ok for _, ok, _ in results):
        raise SelfTestFailure
    return outputs


class SelfTestFailure(Exception):
    pass


# ----------------------------------------------------------------------------
# parser, config and dispatch


def _common(p, out_required=True):
    p.add_argument("--config", help="INI file; section [<subcommand>] and [common]")
    p.add_argument("--seed", type=int, help=f"RNG seed (default: ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--threads", type=_count("threads"), default=1)
    p.add_argument("--out", required=out_required, help="output file")


def _model_flags(p, nu=1.0):
    p.add_argument("--omega", default="0.6", help="correlations ordered 12[,13,23]")
    p.add_argument("--alpha", default="", help="slants, one per margin")
    p.add_argument("--nu", type=_positive("nu"), default=nu)


def _data_flags(p):
    p.add_argument("--data", help="CSV with a header row of station names")
    p.add_argument("--coords", help="station coordinate sidecar CSV")
    p.add_argument("--scale", choices=("raw", "frechet"), default="raw")
    p.add_argument("--stations", help="comma-separated station subset")


def build_parser():
    parser = argparse.ArgumentParser(prog="extskewt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-process", help="skew-normal process paths on [0, 1]")
    _common(p)
    p.add_argument("--preset", choices=sorted(FIG1_SLANTS), default="row1")
    p.add_argument("--n-sites", type=_count("n-sites"), default=200)
    p.add_argument("--paths", type=_count("paths"), default=3)
    p.add_argument("--epsilon", type=float, default=0.0)

    p = sub.add_parser("simulate-maxstable", help="extremal skew-t max-stable samples at spatial sites")
    _common(p)
    p.add_argument("--preset", choices=("none", "wind"), default="none")
    p.add_argument("--sites", type=_count("sites"), default=20)
    p.add_argument("--sites-file", help="CSV of name, coord_1, coord_2")
    p.add_argument("--domain", type=_positive("domain"), default=100.0)
    p.add_argument("--paths", type=_count("paths"), help="number of paths (default 1000; 1564 for the wind preset)")
    p.add_argument("--lam", type=_positive("lam"), default=28.0)
    p.add_argument("--xi", type=float, default=1.5)
    p.add_argument("--nu", type=_positive("nu"), default=3.0)
    p.add_argument("--alpha", default="", help="constant slant or a0,a1,a2 linear in the coordinates")

    p = sub.add_parser("extremal-coef", help="non-stationary extremal coefficient curves")
    _common(p)
    p.add_argument("--preset", choices=sorted(EC_PRESETS_1D) + sorted(EC_PRESETS_2D), required=True)
    p.add_argument("--nu", type=_positive("nu"), default=1.0)
    p.add_argument("--n-lags", type=_count("n-lags"), default=51)

    p = sub.add_parser("angular-density", help="angular density surface on the simplex")
    _common(p)
    _model_flags(p, nu=3.0)
    p.add_argument("--preset", choices=("none", "figS1"), default="none")
    p.add_argument("--n-grid", type=_count("n-grid"), default=30)
    p.add_argument("--c", type=float, default=0.0)

    p = sub.add_parser("fit-angular", help="angular-likelihood fits, optionally over a threshold sweep")
    _common(p)
    _data_flags(p)
    _model_flags(p, nu=1.5)
    p.add_argument("--n", type=_count("n"), default=5000, help="simulated sample size per replicate")
    p.add_argument("--replicates", type=_count("replicates"), default=1)
    p.add_argument("--top-k", type=_count("top-k"), default=100)
    p.add_argument("--c", type=float, default=0.02)
    p.add_argument("--c-sweep", action="store_true", help="c in {0, 0.02, ..., 0.1}")
    p.add_argument("--profile", action="store_true", help="profile nu out")

    p = sub.add_parser("fit-composite", help="pairwise/triplewise composite-likelihood fits with CLIC")
    _common(p)
    _data_flags(p)
    p.add_argument("--order", type=int, choices=(2, 3), default=2)
    p.add_argument("--model", choices=("extremal-t", "extremal-skew-t", "both"), default="both")
    p.add_argument("--spatial", action="store_true", help="power-exponential correlation of distance")
    p.add_argument("--fix-nu", type=_positive("fix-nu"))
    p.add_argument("--lam0", type=_positive("lam0"), default=20.0, help="starting range for --spatial")
    p.add_argument("--max-distance", type=_positive("max-distance"))
    p.add_argument("--json", help="also write fit results as JSON")

    p = sub.add_parser("predict", help="conditional exceedance probabilities and return levels")
    _common(p)
    _data_flags(p)
    _model_flags(p, nu=2.0)
    p.add_argument("--fit", help="JSON from fit-composite (overrides --omega/--alpha/--nu)")
    p.add_argument("--fit-model", default="extremal-skew-t")
    p.add_argument("--quantiles", default="0.9,0.7,0.7", help="marginal exceedance levels q1,q2,q3")
    p.add_argument("--return-levels", help="conditioning quantiles for return-level curves")
    p.add_argument("--n-levels", type=_count("n-levels"), default=20)

    p = sub.add_parser("selftest", help="run the built-in oracle checks")
    _common(p, out_required=False)
    return parser


COMMANDS = {
    "simulate-process": cmd_simulate_process,
    "simulate-maxstable": cmd_simulate_maxstable,
    "extremal-coef": cmd_extremal_coef,
    "angular-density": cmd_angular_density,
    "fit-angular": cmd_fit_angular,
    "fit-composite": cmd_fit_composite,
    "predict": cmd_predict,
    "selftest": cmd_selftest,
}


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _config_args(parser, argv):
    """Translate config-file entries into flags placed before the command-line flags."""
    if not argv or argv[0] not in COMMANDS:
        return argv
    command = argv[0]
    path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
    if path is None:
        return argv
    cp = configparser.ConfigParser(interpolation=None)
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path!r}")
    sub = _subparser(parser, command)
    known = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                known[opt[2:].replace("-", "_")] = action
    extra = []
    for section in ("common", command):
        if not cp.has_section(section):
            continue
        for key, value in cp.items(section):
            norm = key.replace("-", "_")
            action = known.get(norm)
            if action is None or norm in ("config", "help"):
                raise UsageError(f"unknown config key {key!r} in section [{section}]")
            flag = action.option_strings[-1]
            if isinstance(action, argparse._StoreTrueAction):
                try:
                    on = cp.getboolean(section, key)
                except ValueError:
                    raise UsageError(f"config key {key!r} must be a boolean") from None
                if on:
                    extra.append(flag)
            else:
                extra += [flag, value]
    unknown = [s for s in cp.sections() if s not in ("common", command) and s not in COMMANDS]
    if unknown:
        raise UsageError(f"unknown config sections {unknown}")
    return [command] + extra + argv[1:]


def _resolve_seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer") from None


def _settings(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "threads")}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        full = _config_args(parser, argv)
        args = parser.parse_args(full)
        args.seed = _resolve_seed(args)
        if args.seed < 0:
            raise UsageError("seed must be non-negative")
        start = time.perf_counter()
        rng = np.random.default_rng(args.seed)
        outputs = COMMANDS[args.command](args, rng)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"extskewt: error: {err}", file=sys.stderr)
        return 2
    except SystemExit as err:  # argparse usage errors
        return int(err.code or 0)
    except SelfTestFailure:
        return 1
    except (DataError, OSError, ValueError, KeyError) as err:
        print(f"extskewt: error: {err}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - start
    settings = _settings(args)
    manifest = RunManifest(
        command_line=["extskewt"] + argv,
        config_hash=config_hash(settings),
        seed=int(args.seed),
        wall_time=wall,
        settings=settings,
    )
    for out in outputs:
        manifest.write(out)
    return 0


__all__ = [
    "Dataset",
    "RunManifest",
    "DataError",
    "UsageError",
    "ingest_csv",
    "write_dataset_csv",
    "to_frechet",
    "type7_quantile",
    "synthetic_wind",
    "build_parser",
    "main",
]


if __name__ == "__main__":
    sys.exit(main())
