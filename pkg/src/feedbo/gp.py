"""Gaussian process regression with isotropic Matern kernels.

Supports the two half-integer smoothness values with closed-form
kernels (nu = 1.5 and 2.5).  Hyperparameters are fitted by maximizing
the log marginal likelihood with a deterministic multi-start L-BFGS-B
search in log-space; targets are standardized internally and the fitted
parameters are reported in raw units.

Two posterior sampling routes exist on purpose:

* ``sample_posterior`` factorizes the exact posterior covariance; it is
  the ground truth the approximate route is tested against.
* ``PathwiseSampler`` draws an approximate prior path from random
  Fourier features and corrects it on the data, giving a function that
  can be evaluated jointly at any number of points in O(n) per point.
  Engines use it for Thompson sampling over large candidate sets where
  factorizing a dense covariance would dominate the runtime.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.optimize import minimize
from scipy.spatial.distance import cdist
from scipy.stats import qmc

from .errors import ValidationError

# log-space fit bounds, in standardized target units
_LOG_BOUNDS = (
    (np.log(1e-3), np.log(10.0)),    # lengthscale
    (np.log(1e-4), np.log(100.0)),   # signal variance
    (np.log(1e-8), np.log(1.0)),     # noise variance
)
_JITTERS = (0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4)


@dataclass(frozen=True)
class KernelParams:
    lengthscale: float
    signal_variance: float
    noise_variance: float
    mean: float = 0.0
    nu: float = 2.5

    def __post_init__(self):
        if self.nu not in (1.5, 2.5):
            raise ValidationError(f"nu must be 1.5 or 2.5, got {self.nu}")
        if self.lengthscale <= 0 or self.signal_variance <= 0 or self.noise_variance < 0:
            raise ValidationError("kernel parameters must be positive (noise may be zero)")


def matern(X1, X2, params: KernelParams) -> np.ndarray:
    """Isotropic Matern covariance matrix between two point sets."""
    X1 = np.atleast_2d(np.asarray(X1, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    dist = cdist(X1, X2)
    if params.nu == 1.5:
        s = np.sqrt(3.0) * dist / params.lengthscale
        poly = 1.0 + s
    else:
        s = np.sqrt(5.0) * dist / params.lengthscale
        poly = 1.0 + s + s * s / 3.0
    return params.signal_variance * poly * np.exp(-s)


def _chol_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    scale = max(np.mean(np.diag(K)), 1e-300)
    for jitter in _JITTERS:
        try:
            L = sla.cholesky(K + jitter * scale * np.eye(K.shape[0]), lower=True)
            return L, jitter * scale
        except sla.LinAlgError:
            continue
    raise ValidationError("covariance matrix is not positive definite even with jitter")


def log_marginal_likelihood(X, y, params: KernelParams) -> float:
    """Exact Gaussian log marginal likelihood of ``y`` under the model."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n = y.size
    K = matern(X, X, params) + params.noise_variance * np.eye(n)
    L, _ = _chol_with_jitter(K)
    resid = y - params.mean
    alpha = sla.cho_solve((L, True), resid)
    return float(
        -0.5 * resid @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2.0 * np.pi)
    )


class GaussianProcessModel:
    """A fitted GP: training data, kernel parameters and cached factors."""

    def __init__(self, X, y, params: KernelParams):
        self.X = np.atleast_2d(np.asarray(X, dtype=float)).copy()
        self.y = np.asarray(y, dtype=float).copy()
        if self.X.shape[0] != self.y.size:
            raise ValidationError("X and y disagree on the number of observations")
        self.params = params
        K = matern(self.X, self.X, params) + params.noise_variance * np.eye(self.y.size)
        self._L, self._jitter = _chol_with_jitter(K)
        self._alpha = sla.cho_solve((self._L, True), self.y - params.mean)

    # -- linear algebra helpers reused by the engines --------------------------

    def kernel(self, A, B) -> np.ndarray:
        return matern(A, B, self.params)

    def cross_covariance(self, Xs) -> np.ndarray:
        """k(Xs, X_train), shape (s, n)."""
        return matern(Xs, self.X, self.params)

    def solve(self, B) -> np.ndarray:
        """(K + sigma^2 I)^-1 B via the cached Cholesky factor."""
        return sla.cho_solve((self._L, True), np.asarray(B, dtype=float))

    # -- prediction -------------------------------------------------------------

    def posterior(self, Xs, full_cov: bool = False):
        """Latent posterior at ``Xs``: (mean, variance) or (mean, covariance)."""
        Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
        Ks = self.cross_covariance(Xs)
        mean = self.params.mean + Ks @ self._alpha
        V = sla.solve_triangular(self._L, Ks.T, lower=True)
        if full_cov:
            cov = matern(Xs, Xs, self.params) - V.T @ V
            cov = 0.5 * (cov + cov.T)
            return mean, cov
        var = self.params.signal_variance - np.sum(V * V, axis=0)
        return mean, np.clip(var, 0.0, None)

    def sample_posterior(self, Xs, n_draws: int, rng: np.random.Generator) -> np.ndarray:
        """Exact joint posterior draws, shape (n_draws, len(Xs)).

        Uses an eigendecomposition so a numerically singular covariance
        (for example at the training points of a noiseless fit) cleanly
        collapses onto the posterior mean.
        """
        mean, cov = self.posterior(Xs, full_cov=True)
        w, Q = np.linalg.eigh(cov)
        w = np.clip(w, 0.0, None)
        root = Q * np.sqrt(w)
        z = rng.standard_normal((n_draws, mean.size))
        return mean[None, :] + z @ root.T

    def log_marginal_likelihood(self) -> float:
        return log_marginal_likelihood(self.X, self.y, self.params)


def _fit_starts(n_starts: int) -> np.ndarray:
    sob = qmc.Sobol(d=3, scramble=False)
    u = sob.random(n_starts)
    lo = np.array([b[0] for b in _LOG_BOUNDS])
    hi = np.array([b[1] for b in _LOG_BOUNDS])
    return lo + (0.1 + 0.8 * u) * (hi - lo)


def fit_gp(X, y, nu: float = 2.5, n_starts: int = 8,
           warm_start: KernelParams | None = None) -> GaussianProcessModel:
    """Fit kernel parameters by maximum marginal likelihood.

    Deterministic: starts come from an unscrambled Sobol sequence.  With
    ``warm_start`` the search polishes that single point instead, which
    is how the engines refit cheaply every round.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.size < 1:
        raise ValidationError("cannot fit a GP on an empty data set")
    y_mean = float(np.mean(y))
    y_std = float(np.std(y))
    if y_std <= 0.0:
        y_std = 1.0
    ys = (y - y_mean) / y_std

    def neg_lml(theta):
        params = KernelParams(
            lengthscale=float(np.exp(theta[0])),
            signal_variance=float(np.exp(theta[1])),
            noise_variance=float(np.exp(theta[2])),
            mean=0.0,
            nu=nu,
        )
        try:
            return -log_marginal_likelihood(X, ys, params)
        except (ValidationError, FloatingPointError):
            return 1e12

    if warm_start is not None:
        theta0 = np.array([
            np.log(warm_start.lengthscale),
            np.log(max(warm_start.signal_variance / y_std**2, 1e-300)),
            np.log(max(warm_start.noise_variance / y_std**2, 1e-300)),
        ])
        lo = np.array([b[0] for b in _LOG_BOUNDS])
        hi = np.array([b[1] for b in _LOG_BOUNDS])
        starts = [np.clip(theta0, lo, hi)]
        maxiter = 25
    else:
        starts = list(_fit_starts(n_starts))
        maxiter = 60

    best_theta, best_val = None, np.inf
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for theta0 in starts:
            res = minimize(neg_lml, theta0, method="L-BFGS-B", bounds=_LOG_BOUNDS,
                           options={"maxiter": maxiter})
            val = res.fun if np.isfinite(res.fun) else neg_lml(res.x)
            if val < best_val:
                best_theta, best_val = res.x, val
    params = KernelParams(
        lengthscale=float(np.exp(best_theta[0])),
        signal_variance=float(np.exp(best_theta[1])) * y_std**2,
        noise_variance=float(np.exp(best_theta[2])) * y_std**2,
        mean=y_mean,
        nu=nu,
    )
    return GaussianProcessModel(X, y, params)


class PathwiseSampler:
    """One approximate posterior function draw, jointly evaluable anywhere.

    The prior path uses random Fourier features with the Matern spectral
    measure (a scaled multivariate t: omega = z * sqrt(2 nu / g) / l with
    g chi-squared on 2 nu degrees of freedom).  The update term is exact,
    so the draw interpolates the training data as noise goes to zero
    regardless of the feature count.
    """

    def __init__(self, model: GaussianProcessModel, rng: np.random.Generator,
                 n_features: int = 1024):
        p = model.params
        d = model.X.shape[1]
        z = rng.standard_normal((n_features, d))
        g = rng.chisquare(2.0 * p.nu, size=n_features)
        g = np.maximum(g, 1e-12)
        self._omega = z * np.sqrt(2.0 * p.nu / g)[:, None] / p.lengthscale
        self._phase = rng.uniform(0.0, 2.0 * np.pi, size=n_features)
        self._weights = rng.standard_normal(n_features)
        self._scale = np.sqrt(2.0 * p.signal_variance / n_features)
        self._model = model
        noise = rng.standard_normal(model.y.size) * np.sqrt(p.noise_variance)
        prior_at_data = self._prior(model.X)
        self._v = model.solve(model.y - p.mean - prior_at_data - noise)

    def _prior(self, Xs) -> np.ndarray:
        Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
        return self._scale * np.cos(Xs @ self._omega.T + self._phase) @ self._weights

    def draw(self, Xs) -> np.ndarray:
        """Evaluate this path at ``Xs``, shape (len(Xs),)."""
        Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
        return (self._model.params.mean + self._prior(Xs)
                + self._model.cross_covariance(Xs) @ self._v)
