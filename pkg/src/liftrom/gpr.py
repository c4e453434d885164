"""Gaussian process regression with an isotropic squared-exponential kernel.

The model works in whatever input coordinates it is given; callers are
expected to pass normalized parameters.  Hyperparameters are fit by
maximizing the log marginal likelihood in log space with restarted Powell
searches.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from .errors import FitError, InputError

JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


def se_kernel(x, x_prime, lengthscale: float, signal_variance: float) -> float:
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    d2 = float(np.sum((x - x_prime) ** 2))
    return signal_variance * np.exp(-d2 / (2.0 * lengthscale**2))


def kernel_matrix(A, B, lengthscale: float, signal_variance: float) -> np.ndarray:
    d2 = cdist(np.atleast_2d(A), np.atleast_2d(B), "sqeuclidean")
    return signal_variance * np.exp(-0.5 * d2 / lengthscale**2)


def _factorize(K: np.ndarray, signal_variance: float):
    """Cholesky with an escalating diagonal jitter (relative to the signal variance)."""
    n = K.shape[0]
    # a pivot at round-off level means the matrix is singular in all but name
    floor = n * np.finfo(float).eps * float(np.max(np.diag(K)))
    for jitter in JITTER_LADDER:
        try:
            chol = cho_factor(K + jitter * signal_variance * np.eye(n), lower=True)
        except LinAlgError:
            continue
        if np.min(np.diag(chol[0])) ** 2 > floor:
            return chol, jitter
    raise FitError("kernel matrix is not positive definite even with maximal jitter")


@dataclass(frozen=True)
class GprModel:
    train_inputs: np.ndarray
    train_targets: np.ndarray
    lengthscale: float
    signal_variance: float
    noise_variance: float
    center_targets: bool = True
    jitter: float = 0.0
    log_marginal_likelihood: float = float("nan")
    _chol: tuple = field(default=None, repr=False, compare=False)
    _alpha: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def mean_offset(self) -> float:
        return float(np.mean(self.train_targets)) if self.center_targets else 0.0

    @property
    def dimension(self) -> int:
        return self.train_inputs.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return self._alpha

    def _queries(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        q = np.atleast_2d(x)
        if q.shape[-1] != self.dimension:
            raise InputError(f"expected {self.dimension}-dimensional inputs, got {q.shape[-1]}")
        return q

    def predict(self, x):
        return predict(self, x)

    def gradient(self, x):
        return posterior_mean_gradient(self, x)

    def to_dict(self) -> dict:
        return {
            "lengthscale": self.lengthscale,
            "signal_variance": self.signal_variance,
            "noise_variance": self.noise_variance,
            "center_targets": self.center_targets,
            "jitter": self.jitter,
            "train_inputs": self.train_inputs.tolist(),
            "train_targets": self.train_targets.tolist(),
            "weights": self._alpha.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GprModel":
        model = _build(
            np.asarray(data["train_inputs"], dtype=float),
            np.asarray(data["train_targets"], dtype=float),
            float(data["lengthscale"]),
            float(data["signal_variance"]),
            float(data["noise_variance"]),
            bool(data.get("center_targets", True)),
        )
        stored = np.asarray(data["weights"], dtype=float)
        if stored.shape != model._alpha.shape or not np.allclose(stored, model._alpha, rtol=1e-8, atol=1e-10):
            raise FitError("stored GPR weights do not match the refactorized kernel matrix")
        return model

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "GprModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _build(X, y, lengthscale, signal_variance, noise_variance, center_targets) -> GprModel:
    offset = float(np.mean(y)) if center_targets else 0.0
    K = kernel_matrix(X, X, lengthscale, signal_variance)
    K[np.diag_indices_from(K)] += noise_variance
    chol, jitter = _factorize(K, signal_variance)
    resid = y - offset
    alpha = cho_solve(chol, resid)
    lml = (
        -0.5 * resid @ alpha
        - np.sum(np.log(np.diag(chol[0])))
        - 0.5 * len(y) * np.log(2 * np.pi)
    )
    X = X.copy()
    y = y.copy()
    X.setflags(write=False)
    y.setflags(write=False)
    return GprModel(X, y, float(lengthscale), float(signal_variance), float(noise_variance),
                    center_targets, jitter, float(lml), chol, alpha)


def _neg_lml(theta, X, y, center_targets):
    ell, sf2, sn2 = np.exp(theta)
    try:
        return -_build(X, y, ell, sf2, sn2, center_targets).log_marginal_likelihood
    except FitError:
        return 1e300


def fit_gpr(
    X,
    y,
    optimize: bool = True,
    lengthscale: float = 1.0,
    signal_variance: float | None = None,
    noise_variance: float = 0.0,
    n_restarts: int = 8,
    seed: int = 0,
    center_targets: bool = True,
    min_noise: float = 1e-10,
) -> GprModel:
    """Fit a GP; with ``optimize`` the three hyperparameters maximize the LML.

    Search bounds scale with the target variance and the input spread.  The
    first restart starts from the given hyperparameters, the rest from a
    seeded log-uniform draw inside the bounds.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[0] != y.size:
        raise InputError("X must be (n, p) with one target per row, n >= 1")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InputError("training data must be finite")
    if noise_variance == 0.0 and not optimize and len(np.unique(X, axis=0)) != X.shape[0]:
        raise InputError("duplicate training inputs require a positive noise variance")

    spread = float(np.ptp(X, axis=0).max()) if X.shape[0] > 1 else 1.0
    spread = spread if spread > 0 else 1.0
    yvar = float(np.var(y)) if y.size > 1 else 0.0
    yvar = yvar if yvar > 0 else max(float(np.mean(y**2)), 1.0)
    if signal_variance is None:
        signal_variance = yvar

    if not optimize:
        return _build(X, y, lengthscale, signal_variance, noise_variance, center_targets)

    bounds = np.log([
        (1e-2 * spread, 1e3 * spread),
        (1e-4 * yvar, 1e4 * yvar),
        (min_noise * yvar, yvar),
    ])
    rng = np.random.default_rng(seed)
    x0 = np.clip(np.log([lengthscale, signal_variance, max(noise_variance, min_noise * yvar)]),
                 bounds[:, 0], bounds[:, 1])
    starts = [x0] + [rng.uniform(bounds[:, 0], bounds[:, 1]) for _ in range(max(n_restarts, 1) - 1)]
    best = None
    for start in starts:
        res = minimize(_neg_lml, start, args=(X, y, center_targets), method="Powell",
                       bounds=bounds, options={"xtol": 1e-6, "ftol": 1e-10, "maxfev": 4000})
        if best is None or res.fun < best.fun:
            best = res
    ell, sf2, sn2 = np.exp(best.x)
    return _build(X, y, ell, sf2, sn2, center_targets)


def predict(model: GprModel, x):
    """Posterior mean and variance; scalars for a single query."""
    q = model._queries(x)
    ks = kernel_matrix(q, model.train_inputs, model.lengthscale, model.signal_variance)
    mean = model.mean_offset + ks @ model._alpha
    v = cho_solve(model._chol, ks.T)
    var = model.signal_variance - np.einsum("ij,ji->i", ks, v)
    var = np.maximum(var, 0.0)
    if np.ndim(x) <= 1:
        return float(mean[0]), float(var[0])
    return mean, var


def posterior_mean_gradient(model: GprModel, x) -> np.ndarray:
    """Analytic gradient of the posterior mean with respect to the inputs."""
    q = model._queries(x)
    ks = kernel_matrix(q, model.train_inputs, model.lengthscale, model.signal_variance)
    diff = q[:, None, :] - model.train_inputs[None, :, :]
    grad = -np.einsum("ij,ijk->ik", ks * model._alpha[None, :], diff) / model.lengthscale**2
    return grad[0] if np.ndim(x) <= 1 else grad
