import csv
import json
import math

import numpy as np
import pytest
from scipy import stats

from extskewt.cli import (
    DataError,
    Dataset,
    MIN_FRECHET,
    ingest_csv,
    main,
    to_frechet,
    type7_quantile,
    write_dataset_csv,
)


def _write(path, text):
    path.write_text(text)
    return path


def _read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ----------------------------------------------------------------------------
# ingestion


def test_ingest_well_formed(tmp_path):
    body = "A,B,C\n" + "\n".join(f"{i},{i + 0.5},{2 * i}" for i in range(1, 6)) + "\n"
    data = ingest_csv(_write(tmp_path / "d.csv", body))
    assert data.observations.shape == (5, 3)
    assert data.station_names == ["A", "B", "C"]
    assert data.observations[4, 2] == 10.0


def test_ingest_missing_cells(tmp_path):
    data = ingest_csv(_write(tmp_path / "d.csv", "A,B\n1,NA\n2,\n3,4\n"))
    assert np.isnan(data.observations[0, 1])
    assert np.isnan(data.observations[1, 1])
    assert np.count_nonzero(np.isnan(data.observations)) == 2


def test_ingest_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    obs = rng.gamma(2.0, size=(7, 3))
    obs[2, 1] = np.nan
    src = Dataset(["x", "y", "z"], obs)
    write_dataset_csv(tmp_path / "r.csv", src)
    back = ingest_csv(tmp_path / "r.csv")
    assert back.station_names == src.station_names
    np.testing.assert_array_equal(back.observations, src.observations)


@pytest.mark.parametrize(
    "body, line",
    [("A,B\n1,2\n3\n", 3), ("A,B\n1,2\n3,4\n5,abc\n", 4)],
)
def test_ingest_errors_report_line(tmp_path, body, line):
    with pytest.raises(DataError, match=f"line {line}"):
        ingest_csv(_write(tmp_path / "bad.csv", body))


def test_ingest_coordinates(tmp_path):
    _write(tmp_path / "d.csv", "P,Q\n1,2\n")
    _write(tmp_path / "c.csv", "station,coord_1,coord_2\nQ,3,4\nP,1,2\n")
    data = ingest_csv(tmp_path / "d.csv", tmp_path / "c.csv")
    np.testing.assert_array_equal(data.coordinates, [[1, 2], [3, 4]])


def test_dataset_invariants():
    with pytest.raises(DataError):
        Dataset(["a"], np.ones((3, 2)))
    with pytest.raises(DataError):
        Dataset(["a"], np.array([[1.0], [-1.0]]), scale="frechet")


# ----------------------------------------------------------------------------
# Frechet transform and quantiles


def test_frechet_maximum_and_order():
    rng = np.random.default_rng(1)
    obs = rng.normal(size=(50, 2))
    obs[3, 0] = np.nan
    out = to_frechet(Dataset(["a", "b"], obs)).observations
    n = 49
    assert out[:, 0][~np.isnan(out[:, 0])].max() == pytest.approx(-1 / math.log(n / (n + 1)), rel=1e-14)
    assert np.isnan(out[3, 0])
    for j in range(2):
        ok = ~np.isnan(obs[:, j])
        assert np.array_equal(np.argsort(obs[ok, j]), np.argsort(out[ok, j]))


def test_frechet_margins_ks():
    rng = np.random.default_rng(2)
    obs = rng.lognormal(size=(10_000, 2))
    out = to_frechet(Dataset(["a", "b"], obs)).observations
    for j in range(2):
        assert stats.kstest(out[:, j], stats.invweibull(1.0).cdf).pvalue > 0.01


def test_frechet_needs_enough_values():
    obs = np.full((20, 1), np.nan)
    obs[: MIN_FRECHET - 1, 0] = np.arange(1.0, MIN_FRECHET)
    with pytest.raises(DataError):
        to_frechet(Dataset(["a"], obs))


def test_type7_quantile():
    v = np.array([1.0, 2.0, np.nan, 3.0, 4.0])
    # type 7: h = (n - 1) q, linear between order statistics
    assert type7_quantile(v, 0.5) == 2.5
    assert type7_quantile(v, 0.9) == pytest.approx(3.7)


# ----------------------------------------------------------------------------
# subcommands


def test_selftest_exit_zero(tmp_path, capsys):
    assert main(["selftest", "--out", str(tmp_path / "s.txt")]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_extremal_coef_bounds_and_manifest(tmp_path):
    out = tmp_path / "ec.csv"
    assert main(["extremal-coef", "--preset", "fig2-left", "--n-lags", "11", "--out", str(out)]) == 0
    rows = _read_rows(out)
    assert rows[0] == ["s", "h", "theta"]
    theta = np.array([float(r[2]) for r in rows[1:]])
    assert np.all((theta >= 1 - 1e-9) & (theta <= 2 + 1e-9))
    man = json.loads((tmp_path / "ec.csv.manifest.json").read_text())
    assert {"command_line", "config_hash", "seed", "version", "wall_time"} <= set(man)


def test_usage_errors_exit_two(tmp_path):
    out = str(tmp_path / "x.csv")
    assert main(["simulate-process", "--paths", "0", "--out", out]) == 2
    assert main(["no-such-command"]) == 2
    assert main(["predict", "--omega", "0.5,0.5,1.5", "--out", out]) == 2


def test_config_and_flag_override(tmp_path):
    cfg = _write(tmp_path / "c.ini", "[common]\nseed = 5\n[simulate-process]\npaths = 2\nn_sites = 7\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate-process", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["simulate-process", "--config", str(cfg), "--paths", "3", "--out", str(b)]) == 0
    assert len(_read_rows(a)) == 1 + 2 * 7
    assert len(_read_rows(b)) == 1 + 3 * 7
    assert json.loads((tmp_path / "a.csv.manifest.json").read_text())["seed"] == 5


def test_unknown_config_key_exit_two(tmp_path):
    cfg = _write(tmp_path / "c.ini", "[simulate-process]\nbogus = 1\n")
    assert main(["simulate-process", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 2


def test_seed_env_default(tmp_path, monkeypatch):
    a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
    monkeypatch.setenv("EXTSKEWT_SEED", "77")
    assert main(["simulate-process", "--out", str(a)]) == 0
    assert main(["simulate-process", "--seed", "77", "--out", str(b)]) == 0
    assert main(["simulate-process", "--seed", "78", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    monkeypatch.setenv("EXTSKEWT_SEED", "x")
    assert main(["simulate-process", "--out", str(a)]) == 2


def test_repeat_runs_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        args = ["simulate-maxstable", "--sites", "4", "--paths", "50", "--seed", "9", "--out", str(out)]
        assert main(args) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv.sites.csv").read_bytes() == (tmp_path / "b.csv.sites.csv").read_bytes()
    assert (tmp_path / "a.csv.sites.csv.manifest.json").exists()
    # 17 significant digits
    cell = _read_rows(a)[1][0]
    assert float(cell) == float(f"{float(cell):.17g}")


def test_fit_angular_sweep_long_format(tmp_path):
    out = tmp_path / "fa.csv"
    args = ["fit-angular", "--n", "1000", "--replicates", "2", "--c-sweep", "--seed", "3", "--out", str(out)]
    assert main(args) == 0
    rows = _read_rows(out)
    assert rows[0] == ["replicate", "c", "parameter", "estimate", "loglik", "converged"]
    body = rows[1:]
    assert len(body) == 2 * 6 * 2
    assert {float(r[1]) for r in body} == {0.0, 0.02, 0.04, 0.06, 0.08, 0.1}
    assert {r[2] for r in body} == {"omega_12", "nu"}


def test_fit_angular_threads_match(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["fit-angular", "--n", "800", "--replicates", "3", "--seed", "4"]
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--threads", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_then_fit_composite(tmp_path):
    data = tmp_path / "ms.csv"
    assert main(["simulate-maxstable", "--sites", "12", "--paths", "500", "--seed", "11", "--out", str(data)]) == 0
    out, js = tmp_path / "fc.csv", tmp_path / "fc.json"
    args = [
        "fit-composite", "--data", str(data), "--coords", str(data) + ".sites.csv", "--scale", "frechet",
        "--spatial", "--fix-nu", "3", "--model", "extremal-t", "--out", str(out), "--json", str(js),
    ]
    assert main(args) == 0
    rows = _read_rows(out)
    assert rows[0] == ["stations", "model", "dependence", "slant", "nu", "clic", "loglik"]
    fit = json.loads(js.read_text())["extremal-t"]
    se = dict(zip(fit["names"], fit["std_errors"]))
    for name, truth in (("lam", 28.0), ("xi", 1.5)):
        assert abs(fit["natural"][name] - truth) <= 3 * se[name]


def test_predict_table_layout(tmp_path):
    out = tmp_path / "p.csv"
    args = ["predict", "--omega", "0.6,0.8,0.7", "--alpha", "1,-1,0.5", "--nu", "2",
            "--return-levels", "0.9", "--n-levels", "4", "--out", str(out)]
    assert main(args) == 0
    rows = _read_rows(out)
    assert [r[0] for r in rows[1:]] == ["X|Y,Z", "X,Y|Z"]
    probs = [float(r[7]) for r in rows[1:]]
    assert all(0 < p < 1 for p in probs)
    levels = [float(r[2]) for r in _read_rows(str(out) + ".return_levels.csv")[1:]]
    assert len(levels) == 4 and np.all(np.diff(levels) > 0)
