import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from sklearn.base import clone

from extskewt import fit
from extskewt.angular import PartitionConfig, angular_samples
from extskewt.extdep import ExtDepModel, exponent_V, simulate_maxstable
from extskewt.fit import (
    CompositeLikelihoodError,
    CompositeLikelihoodEstimator,
    AngularDependenceEstimator,
    CompositeSpec,
    IndependenceModel,
    clic_value,
    composite_loglik,
    composite_terms,
    conditional_exceedance,
    conditional_return_contour,
    conditional_return_level,
    default_tuples,
    density_d2,
    density_d3,
    fit_angular,
    fit_composite,
    frechet_quantile,
    maximize,
    pairwise_corr_params,
    profile_maximize,
    sandwich,
    spatial_params,
)

C3 = np.array([[1.0, 0.6, 0.8], [0.6, 1.0, 0.7], [0.8, 0.7, 1.0]])
BIV = ExtDepModel.extremal_t([[1, 0.6], [0.6, 1]], 1.5)
SKEW2 = ExtDepModel([[1, 0.4], [0.4, 1]], [2.0, -1.0], 0.0, 2.5)
SKEW3 = ExtDepModel(C3, [1.0, -2.0, 0.5], 0.0, 2.0)


def _mixed_fd(model, x, h):
    x = np.asarray(x, dtype=float)
    d = x.size
    total = 0.0
    for signs in np.array(np.meshgrid(*[[-1, 1]] * d)).reshape(d, -1).T:
        total += np.prod(signs) * math.exp(-exponent_V(model, x + signs * h * x).value)
    return total / (2**d * np.prod(h * x))


# ---------------------------------------------------------------- densities


def test_density_d2_integrates_to_one():
    f = lambda b, a: density_d2(BIV, np.exp([a, b])) * math.exp(a + b)  # noqa: E731
    mass = integrate.dblquad(f, -12, 12, -12, 12, epsabs=1e-6)[0]
    assert mass == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("model", [BIV, SKEW2], ids=["extremal-t", "skew"])
def test_density_d2_matches_mixed_difference(model):
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.uniform(0.5, 3.0, 2)
        assert density_d2(model, x) == pytest.approx(_mixed_fd(model, x, 1e-3), rel=1e-2)


@pytest.mark.parametrize("model", [ExtDepModel.extremal_t(C3, 1.0), SKEW3], ids=["extremal-t", "skew"])
def test_density_d3_matches_mixed_difference(model):
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = rng.uniform(0.6, 2.5, 3)
        assert density_d3(model, x) == pytest.approx(_mixed_fd(model, x, 2e-3), rel=2e-2)


def test_density_symmetry():
    x = np.array([0.7, 2.1])
    assert density_d2(BIV, x) == pytest.approx(density_d2(BIV, x[::-1]), rel=1e-12)
    ex = ExtDepModel.extremal_t(np.full((3, 3), 0.5) + 0.5 * np.eye(3), 2.0)
    y = np.array([0.8, 1.4, 2.2])
    assert density_d3(ex, y) == pytest.approx(density_d3(ex, y[[2, 0, 1]]), rel=1e-10)


def test_density_d3_marginalizes_to_d2():
    x = np.array([1.1, 0.8])
    g = lambda t: density_d3(SKEW3, np.array([x[0], x[1], math.exp(t)])) * math.exp(t)  # noqa: E731
    marg = integrate.quad(g, -15, 15, limit=200)[0]
    assert marg == pytest.approx(density_d2(SKEW3.sub_model([0, 1]), x), rel=1e-2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.05, 50.0), min_size=3, max_size=3))
def test_density_nonnegative(x):
    assert density_d3(SKEW3, np.array(x)) >= 0.0


def test_density_rejects_nonpositive():
    with pytest.raises(ValueError):
        density_d2(BIV, [1.0, 0.0])
    with pytest.raises(ValueError):
        density_d3(BIV, [1.0, 1.0, 1.0])


# ---------------------------------------------------------------- composite likelihood


@pytest.fixture(scope="module")
def tri_data():
    rng = np.random.default_rng(10)
    return simulate_maxstable(ExtDepModel.extremal_t(C3, 2.0), 200, rng).values ** 2.0


def _spec3(order=2):
    return CompositeSpec(order, default_tuples(3, order), pairwise_corr_params(3))


def test_single_pair_single_observation_is_log_density():
    spec = CompositeSpec(2, ((0, 1),), pairwise_corr_params(2))
    theta = spec.param.free({"omega_12": 0.6, "nu": 1.5})
    x = np.array([0.9, 1.7])
    z = x**1.5
    # unit-Frechet density = x-scale density / Jacobian
    jac = np.prod(1.5 * x**0.5)
    expect = math.log(density_d2(BIV, x) / jac)
    assert composite_loglik(spec, z[None, :], theta) == pytest.approx(expect, rel=1e-12)


def test_missing_values_drop_tuples(tri_data):
    spec = _spec3()
    theta = spec.param.free({"omega_12": 0.5, "omega_13": 0.7, "omega_23": 0.6, "nu": 2.0})
    data = tri_data[:20].copy()
    data[3, 2] = np.nan
    model = spec.param.model(theta)
    full = composite_terms(spec, tri_data[:20], model)
    part = composite_terms(spec, data, model)
    drop = fit.log_density_unit(model.sub_model([0, 2]), tri_data[3, [0, 2]][None, :])[0]
    drop += fit.log_density_unit(model.sub_model([1, 2]), tri_data[3, [1, 2]][None, :])[0]
    assert part[3] == pytest.approx(full[3] - drop, rel=1e-12)
    np.testing.assert_allclose(np.delete(part, 3), np.delete(full, 3), rtol=1e-14)


def test_additivity_and_permutation(tri_data):
    spec = _spec3()
    theta = spec.param.free({"omega_12": 0.5, "omega_13": 0.7, "omega_23": 0.6, "nu": 2.0})
    a, b = tri_data[:50], tri_data[50:100]
    both = composite_loglik(spec, tri_data[:100], theta)
    assert both == pytest.approx(composite_loglik(spec, a, theta) + composite_loglik(spec, b, theta), rel=1e-12)
    perm = np.random.default_rng(0).permutation(100)
    assert composite_loglik(spec, tri_data[:100][perm], theta) == pytest.approx(both, rel=1e-12)
    rev = CompositeSpec(2, tuple(reversed(spec.tuples)), spec.param)
    assert composite_loglik(rev, tri_data[:100], theta) == pytest.approx(both, rel=1e-12)


def test_threads_do_not_change_result(tri_data):
    spec = _spec3()
    theta = spec.param.free({"omega_12": 0.5, "omega_13": 0.7, "omega_23": 0.6, "nu": 2.0})
    assert composite_loglik(spec, tri_data, theta, threads=3) == composite_loglik(spec, tri_data, theta)


def test_nonfinite_term_is_flagged(tri_data, monkeypatch):
    spec = _spec3()
    theta = spec.param.free({"omega_12": 0.5, "omega_13": 0.7, "omega_23": 0.6, "nu": 2.0})
    real = fit.log_density_unit

    def broken(model, z, cfg=fit.DEFAULT_CFG):
        out = real(model, z, cfg)
        out[4] = -np.inf
        return out

    monkeypatch.setattr(fit, "log_density_unit", broken)
    with pytest.raises(CompositeLikelihoodError) as err:
        composite_loglik(spec, tri_data[:10], theta, strict=True)
    assert err.value.row == 4 and err.value.tuple == (0, 1)
    assert composite_loglik(spec, tri_data[:10], theta) == -np.inf


def test_composite_spec_validation():
    p = pairwise_corr_params(3)
    with pytest.raises(ValueError):
        CompositeSpec(4, ((0, 1, 2, 3),), p)
    with pytest.raises(ValueError):
        CompositeSpec(2, ((0, 0),), p)
    with pytest.raises(ValueError):
        CompositeSpec(3, ((0, 1),), p)


def test_default_tuples_pruning():
    sites = np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]])
    assert default_tuples(3, 2) == ((0, 1), (0, 2), (1, 2))
    assert default_tuples(3, 2, sites, max_distance=2.0) == ((0, 1),)
    assert default_tuples(3, 3) == ((0, 1, 2),)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(-0.95, 0.95),
    st.floats(0.2, 30.0),
    st.floats(-5.0, 5.0),
)
def test_parameterization_round_trip(omega, nu, alpha):
    p = pairwise_corr_params(2, skew=True)
    nat = {"omega_12": omega, "alpha_1": alpha, "alpha_2": -alpha, "nu": nu}
    back = p.natural(p.free(nat))
    for k, v in nat.items():
        assert back[k] == pytest.approx(v, rel=1e-9, abs=1e-12)


def test_spatial_parameterization_builds_correlation():
    sites = np.array([[0.0, 0.0], [3.0, 4.0]])
    p = spatial_params(sites, fixed={"nu": 3.0})
    assert p.free_names == ("lam", "xi")
    model = p.model(p.free({"lam": 5.0, "xi": 1.0}))
    assert model.corr[0, 1] == pytest.approx(math.exp(-1.0))
    assert model.nu == 3.0


# ---------------------------------------------------------------- optimiser


def test_maximize_quadratic_bowl():
    centre = np.array([1.5, -0.7, 3.0])
    res = maximize(lambda t: -np.sum((t - centre) ** 2 * [1.0, 4.0, 0.5]), np.zeros(3))
    assert res.convergence_flag
    np.testing.assert_allclose(res.theta_hat, centre, atol=1e-6)
    assert res.optimizer_trace and res.optimizer_trace[-1]["objective"] == pytest.approx(res.loglik)


def test_maximize_iteration_cap_flags_failure():
    rosen = lambda t: -(100 * (t[1] - t[0] ** 2) ** 2 + (1 - t[0]) ** 2)  # noqa: E731
    res = maximize(rosen, np.array([-1.2, 1.0]), max_iter=10)
    assert not res.convergence_flag
    assert res.loglik >= rosen(np.array([-1.2, 1.0]))


def test_maximize_rejects_nonfinite_start():
    with pytest.raises(ValueError):
        maximize(lambda t: -np.inf, np.zeros(1))


def test_profile_matches_joint():
    f = lambda t: -((t[0] - 0.3) ** 2 + 2 * (t[1] - 1.0) ** 2 + 0.5 * (t[0] - 0.3) * (t[1] - 1.0))  # noqa: E731
    joint = maximize(f, np.zeros(2))
    prof = profile_maximize(f, np.zeros(2), [0])
    assert prof.loglik == pytest.approx(joint.loglik, abs=1e-4)
    np.testing.assert_allclose(prof.theta_hat, joint.theta_hat, atol=1e-3)


def test_profile_matches_joint_angular():
    rng = np.random.default_rng(3)
    part = PartitionConfig(c=0.02, top_k=100)
    s = angular_samples(simulate_maxstable(BIV, 3000, rng).values ** 1.5, part)
    joint = fit_angular(s, 2, part)
    prof = fit_angular(s, 2, part, profile=True)
    assert prof.loglik == pytest.approx(joint.loglik, abs=1e-4)


# ---------------------------------------------------------------- CLIC and sandwich


def test_clic_trace_identity():
    H = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert clic_value(-100.0, H, H) == pytest.approx(204.0)


def test_clic_penalty_invariant_under_reordering():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 3))
    J = a @ a.T
    b = rng.normal(size=(3, 3))
    H = b @ b.T + np.eye(3)
    perm = [2, 0, 1]
    assert clic_value(-10.0, J, H) == pytest.approx(clic_value(-10.0, J[np.ix_(perm, perm)], H[np.ix_(perm, perm)]))


def test_singular_hessian_warns():
    with pytest.warns(RuntimeWarning, match="pseudo-inverse"):
        clic_value(-1.0, np.eye(2), np.zeros((2, 2)))


def test_sandwich_gaussian_mean():
    # correctly specified normal model: J = H = diag(1/s^2, 2/s^2) per observation
    y = np.random.default_rng(4).normal(2.0, 1.5, 4000)

    def per_obs(p):
        mu, s = p
        return -0.5 * np.log(2 * np.pi * s**2) - (y - mu) ** 2 / (2 * s**2)

    point = np.array([y.mean(), y.std()])
    J, H, n = sandwich(per_obs, point)
    np.testing.assert_allclose(H, H.T)
    np.testing.assert_allclose(np.diag(H), [1 / point[1] ** 2, 2 / point[1] ** 2], rtol=1e-4)
    np.testing.assert_allclose(np.diag(J), np.diag(H), rtol=0.1)
    se = np.sqrt(np.diag(np.linalg.inv(H) @ J @ np.linalg.inv(H)) / n)
    assert se[0] == pytest.approx(point[1] / math.sqrt(n), rel=1e-3)


def test_fit_composite_result_fields(tri_data):
    res = fit_composite(_spec3(), tri_data)
    assert res.convergence_flag and np.isfinite(res.clic)
    np.testing.assert_allclose(res.H_hat, res.H_hat.T)
    assert res.std_errors.shape == (4,) and np.all(res.std_errors > 0)
    doc = res.to_dict(seed=1)
    assert doc["seed"] == 1 and set(doc["natural"]) == {"omega_12", "omega_13", "omega_23", "nu"}


@pytest.mark.slow
def test_standard_errors_shrink_at_root_n():
    rng = np.random.default_rng(21)
    model = ExtDepModel.extremal_t([[1, 0.6], [0.6, 1]], 2.0)
    spec = CompositeSpec(2, ((0, 1),), pairwise_corr_params(2))
    sizes = [250, 1000, 4000]
    se = []
    for n in sizes:
        vals = []
        for _ in range(3):
            z = simulate_maxstable(model, n, rng).values ** 2.0
            vals.append(fit_composite(spec, z, spec.param.free({"omega_12": 0.5, "nu": 2.0})).std_errors[0])
        se.append(np.mean(vals))
    slope = np.polyfit(np.log(sizes), np.log(se), 1)[0]
    assert -0.6 <= slope <= -0.4


@pytest.mark.slow
def test_clic_prefers_skew_model_on_skewed_data():
    rng = np.random.default_rng(6)
    model = ExtDepModel([[1, 0.5], [0.5, 1]], [-4.0, 6.0], 0.0, 2.0)
    wins = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for _ in range(50):
            z = simulate_maxstable(model, 300, rng).values ** 2.0
            c = [fit_composite(CompositeSpec(2, ((0, 1),), pairwise_corr_params(2, s)), z).clic for s in (False, True)]
            wins += c[1] <= c[0]
    assert wins >= 45


# ---------------------------------------------------------------- prediction


def test_independence_conditional_is_marginal():
    ind = IndependenceModel(3, nu=2.0)
    x = np.array([1.3, 0.7, 2.0])
    marg = 1 - math.exp(-(x[0] ** -2.0))
    assert conditional_exceedance(ind, x, "X|Y,Z") == pytest.approx(marg, rel=1e-12)
    joint = marg * (1 - math.exp(-(x[1] ** -2.0)))
    assert conditional_exceedance(ind, x, "X,Y|Z") == pytest.approx(joint, rel=1e-12)


def test_complete_dependence_limit():
    near = ExtDepModel.extremal_t(np.full((3, 3), 0.99999) + 1e-5 * np.eye(3), 2.0)
    x = np.full(3, 1.5)
    assert conditional_exceedance(near, x, "X|Y,Z") == pytest.approx(1.0, abs=1e-2)
    assert conditional_exceedance(near, x, "X,Y|Z") == pytest.approx(1.0, abs=1e-2)


def test_conditional_exceedance_matches_simulation():
    rng = np.random.default_rng(33)
    model = ExtDepModel(C3, [1.0, -1.0, 0.5], 0.0, 2.0)
    sims = simulate_maxstable(model, 100_000, rng).values
    x = np.array([frechet_quantile(0.8, 2.0), frechet_quantile(0.7, 2.0), frechet_quantile(0.75, 2.0)])
    exc = sims > x
    for pattern, (tgt, giv) in fit.PATTERNS.items():
        cond = np.all(exc[:, list(giv)], axis=1)
        hit = np.all(exc[cond][:, list(tgt)], axis=1)
        p_hat = hit.mean()
        se = math.sqrt(p_hat * (1 - p_hat) / cond.sum())
        assert abs(conditional_exceedance(model, x, pattern) - p_hat) < 3 * se


def test_conditional_exceedance_validation():
    with pytest.raises(ValueError):
        conditional_exceedance(BIV, [1.0, 1.0], "X|Y,Z")
    with pytest.raises(ValueError):
        conditional_exceedance(SKEW3, [1.0, 1.0, 1.0], "Y|X")


def test_return_level_lower_bound_monotone_round_trip():
    model = ExtDepModel(C3, [1.0, -1.0, 0.5], 0.0, 2.0)
    q = 0.9
    assert conditional_return_level(model, q, 1.0) == 1e-3
    levels = [conditional_return_level(model, q, p) for p in (0.9, 0.5, 0.2, 0.05)]
    assert all(a <= b for a, b in zip(levels, levels[1:]))
    xq = frechet_quantile(q, model.nu)
    for p, lev in zip((0.9, 0.5, 0.2, 0.05), levels):
        back = conditional_exceedance(model, np.array([lev, xq, xq]), "X|Y,Z")
        assert back == pytest.approx(p, abs=1e-6)


def test_return_level_validation():
    with pytest.raises(ValueError):
        conditional_return_level(SKEW3, 1.5, 0.5)
    with pytest.raises(ValueError):
        conditional_return_level(SKEW3, 0.5, 0.0)


def test_return_contour_points_on_level():
    model = ExtDepModel.extremal_t(C3, 2.0)
    q, p = 0.9, 0.3
    pts = conditional_return_contour(model, q, p, n_grid=8)
    assert len(pts) >= 4
    xq = frechet_quantile(q, 2.0)
    for x1, x2 in pts:
        assert conditional_exceedance(model, np.array([x1, x2, xq]), "X,Y|Z") == pytest.approx(p, abs=1e-6)
    x1s = [a for a, _ in pts]
    x2s = [b for _, b in pts]
    assert all(np.diff(x1s) > 0) and all(np.diff(x2s) <= 1e-9)


# ---------------------------------------------------------------- estimators


def test_estimators_follow_sklearn_protocol(tri_data):
    est = CompositeLikelihoodEstimator(order=2)
    assert clone(est).get_params() == est.get_params()
    est.fit(tri_data)
    assert set(est.params_) == {"omega_12", "omega_13", "omega_23", "nu"}
    assert np.isfinite(est.clic_) and est.score(tri_data) == pytest.approx(est.result_.loglik)
    ang = AngularDependenceEstimator(c=0.02, top_k=60).fit(tri_data)
    assert 0 < ang.params_["nu"] and np.isfinite(ang.loglik_)
    assert ang.score(tri_data) == pytest.approx(ang.loglik_)
