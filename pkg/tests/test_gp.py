"""GP regression checked against dense linear-algebra oracles."""

import numpy as np
import pytest

from feedbo import ValidationError
from feedbo.gp import (
    GaussianProcessModel,
    KernelParams,
    PathwiseSampler,
    fit_gp,
    log_marginal_likelihood,
    matern,
)


def _params(**kw):
    base = dict(lengthscale=0.4, signal_variance=2.0, noise_variance=1e-4, mean=0.5, nu=2.5)
    base.update(kw)
    return KernelParams(**base)


def _training_set(rng, n=12, d=3, noise=0.0):
    X = rng.random((n, d))
    y = np.sin(3.0 * X[:, 0]) + X[:, 1] ** 2 - 0.5 * X[:, 2]
    if noise:
        y = y + rng.standard_normal(n) * noise
    return X, y


# -- kernel ---------------------------------------------------------------------

def test_matern_52_value_at_one_lengthscale():
    p = KernelParams(lengthscale=0.7, signal_variance=1.0, noise_variance=0.0)
    k = matern([[0.0]], [[0.7]], p)[0, 0]
    expected = (1.0 + np.sqrt(5.0) + 5.0 / 3.0) * np.exp(-np.sqrt(5.0))
    assert k == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.52399411, abs=1e-7)


def test_matern_32_value_at_one_lengthscale():
    p = KernelParams(lengthscale=0.3, signal_variance=2.0, noise_variance=0.0, nu=1.5)
    k = matern([[0.1, 0.2]], [[0.1 + 0.3, 0.2]], p)[0, 0]
    assert k == pytest.approx(2.0 * (1.0 + np.sqrt(3.0)) * np.exp(-np.sqrt(3.0)), abs=1e-12)


def test_matern_diagonal_is_signal_variance():
    rng = np.random.default_rng(0)
    X = rng.random((6, 4))
    K = matern(X, X, _params(signal_variance=3.3))
    assert np.diag(K) == pytest.approx(np.full(6, 3.3))


def test_matern_positive_semidefinite():
    rng = np.random.default_rng(1)
    for nu in (1.5, 2.5):
        X = rng.random((30, 3))
        K = matern(X, X, _params(nu=nu, lengthscale=0.2))
        assert np.linalg.eigvalsh(K).min() > -1e-9


def test_kernel_params_validation():
    with pytest.raises(ValidationError):
        KernelParams(lengthscale=0.5, signal_variance=1.0, noise_variance=0.0, nu=2.0)
    with pytest.raises(ValidationError):
        KernelParams(lengthscale=-1.0, signal_variance=1.0, noise_variance=0.0)


# -- marginal likelihood ----------------------------------------------------------

def test_lml_single_observation_pinned():
    # unit predictive variance at one point: lml = -0.5 log(2 pi)
    p = KernelParams(lengthscale=1.0, signal_variance=0.5, noise_variance=0.5, mean=0.0)
    got = log_marginal_likelihood([[0.2, 0.3]], [0.0], p)
    assert got == pytest.approx(-0.5 * np.log(2.0 * np.pi), abs=1e-12)
    assert got == pytest.approx(-0.91893853, abs=1e-7)


def test_lml_matches_dense_formula():
    rng = np.random.default_rng(3)
    X, y = _training_set(rng, n=5)
    p = _params(noise_variance=0.05)
    K = matern(X, X, p) + p.noise_variance * np.eye(5)
    resid = y - p.mean
    sign, logdet = np.linalg.slogdet(K)
    assert sign > 0
    expected = -0.5 * resid @ np.linalg.solve(K, resid) - 0.5 * logdet - 2.5 * np.log(2 * np.pi)
    assert log_marginal_likelihood(X, y, p) == pytest.approx(expected, abs=1e-8)


# -- posterior ---------------------------------------------------------------------

def test_posterior_matches_dense_formula():
    rng = np.random.default_rng(5)
    X, y = _training_set(rng, n=5)
    Xs = rng.random((4, 3))
    p = _params(noise_variance=0.01)
    model = GaussianProcessModel(X, y, p)
    K = matern(X, X, p) + p.noise_variance * np.eye(5)
    Ks = matern(Xs, X, p)
    Kinv = np.linalg.inv(K)
    mean_e = p.mean + Ks @ Kinv @ (y - p.mean)
    cov_e = matern(Xs, Xs, p) - Ks @ Kinv @ Ks.T
    mean, cov = model.posterior(Xs, full_cov=True)
    assert mean == pytest.approx(mean_e, abs=1e-8)
    assert cov == pytest.approx(cov_e, abs=1e-8)
    _, var = model.posterior(Xs)
    assert var == pytest.approx(np.diag(cov_e), abs=1e-8)


def test_posterior_interpolates_noiseless_data():
    rng = np.random.default_rng(7)
    X, y = _training_set(rng, n=12)
    model = GaussianProcessModel(X, y, _params(noise_variance=0.0, lengthscale=0.6))
    mean, var = model.posterior(X)
    assert np.max(np.abs(mean - y)) <= 1e-8
    assert np.max(var) <= 1e-8


def test_posterior_reverts_to_prior_far_from_data():
    rng = np.random.default_rng(9)
    X, y = _training_set(rng, n=8)
    p = _params(lengthscale=0.1, noise_variance=1e-6)
    model = GaussianProcessModel(X, y, p)
    far = np.full((1, 3), 50.0)
    mean, var = model.posterior(far)
    assert mean[0] == pytest.approx(p.mean, abs=1e-6)
    assert var[0] == pytest.approx(p.signal_variance, abs=1e-6)


def test_sample_posterior_moments_match_exact():
    rng = np.random.default_rng(11)
    X, y = _training_set(rng, n=10, noise=0.05)
    p = _params(noise_variance=0.05**2)
    model = GaussianProcessModel(X, y, p)
    Xs = rng.random((4, 3))
    mean, cov = model.posterior(Xs, full_cov=True)
    draws = model.sample_posterior(Xs, 10_000, np.random.default_rng(42))
    emp_mean = draws.mean(axis=0)
    emp_cov = np.cov(draws.T)
    assert np.max(np.abs(emp_mean - mean)) < 4.0 * np.sqrt(np.diag(cov) / 10_000).max() + 1e-6
    denom = max(np.linalg.norm(cov), 1e-12)
    assert np.linalg.norm(emp_cov - cov) / denom < 0.05


def test_sample_posterior_collapses_at_noiseless_training_points():
    rng = np.random.default_rng(13)
    X, y = _training_set(rng, n=6)
    model = GaussianProcessModel(X, y, _params(noise_variance=0.0))
    draws = model.sample_posterior(X, 50, np.random.default_rng(0))
    assert np.max(np.abs(draws - y[None, :])) < 1e-4


# -- fitting ---------------------------------------------------------------------

def test_fit_recovers_lengthscale_mostly():
    true = KernelParams(lengthscale=0.3, signal_variance=1.0, noise_variance=1e-4, mean=0.0)
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        X = rng.random((40, 2))
        K = matern(X, X, true) + true.noise_variance * np.eye(40)
        y = np.linalg.cholesky(K + 1e-10 * np.eye(40)) @ rng.standard_normal(40)
        model = fit_gp(X, y, nu=2.5)
        if 0.15 <= model.params.lengthscale <= 0.6:
            hits += 1
    assert hits >= 16


def test_fit_is_deterministic():
    rng = np.random.default_rng(17)
    X, y = _training_set(rng, n=20, noise=0.02)
    a = fit_gp(X, y).params
    b = fit_gp(X, y).params
    assert (a.lengthscale, a.signal_variance, a.noise_variance, a.mean) == \
           (b.lengthscale, b.signal_variance, b.noise_variance, b.mean)


def test_fit_handles_constant_targets():
    rng = np.random.default_rng(19)
    X = rng.random((8, 3))
    model = fit_gp(X, np.full(8, 4.2))
    mean, _ = model.posterior(rng.random((3, 3)))
    assert mean == pytest.approx(np.full(3, 4.2), abs=1e-3)


def test_fit_warm_start_matches_scale():
    rng = np.random.default_rng(21)
    X, y = _training_set(rng, n=25, noise=0.02)
    cold = fit_gp(X, y)
    warm = fit_gp(X, y, warm_start=cold.params)
    assert warm.log_marginal_likelihood() >= cold.log_marginal_likelihood() - 1e-6


def test_fit_rejects_empty():
    with pytest.raises(ValidationError):
        fit_gp(np.zeros((0, 2)), np.zeros(0))


# -- pathwise sampler ---------------------------------------------------------------

def test_pathwise_draw_interpolates_training_data():
    rng = np.random.default_rng(23)
    X, y = _training_set(rng, n=10)
    model = GaussianProcessModel(X, y, _params(noise_variance=1e-10, lengthscale=0.5))
    path = PathwiseSampler(model, np.random.default_rng(1), n_features=256)
    assert np.max(np.abs(path.draw(X) - y)) < 1e-3


def test_pathwise_marginals_match_posterior():
    rng = np.random.default_rng(29)
    X, y = _training_set(rng, n=15, noise=0.05)
    model = GaussianProcessModel(X, y, _params(noise_variance=0.05**2, lengthscale=0.5))
    Xs = rng.random((5, 3))
    mean, var = model.posterior(Xs)
    draws = np.array([
        PathwiseSampler(model, np.random.default_rng(1000 + i), n_features=512).draw(Xs)
        for i in range(300)
    ])
    sd = np.sqrt(var)
    assert np.max(np.abs(draws.mean(axis=0) - mean) / np.maximum(sd, 1e-6)) < 0.35
    assert draws.std(axis=0) == pytest.approx(sd, rel=0.2)


def test_pathwise_draw_is_a_fixed_function():
    rng = np.random.default_rng(31)
    X, y = _training_set(rng, n=8)
    model = GaussianProcessModel(X, y, _params(noise_variance=1e-6))
    path = PathwiseSampler(model, np.random.default_rng(7), n_features=128)
    pt = np.array([[0.3, 0.4, 0.5]])
    assert path.draw(pt)[0] == path.draw(pt)[0]
    joint = path.draw(np.vstack([pt, pt]))
    assert joint[0] == joint[1]
