"""Active subspaces from gradient samples, and their evolution in time.

All subspaces are computed in normalized coordinates ``[-1, 1]^k`` under a
uniform density; physical gradients are chain-ruled by half the box width.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import GradientProviderError, InputError

GradientProvider = Callable[[np.ndarray, float], np.ndarray]

_SYM_TOL = 1e-10
_GAP_FLOOR = 1e-14


@dataclass(frozen=True)
class ParameterDomain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).reshape(-1)
        hi = np.array(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.size == 0:
            raise InputError("domain bounds must be vectors of equal, nonzero length")
        if np.any(lo >= hi):
            raise InputError("domain requires lower < upper componentwise")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform_box(cls, k: int = 10, lower: float = 0.0, upper: float = 0.03) -> "ParameterDomain":
        return cls(np.full(k, lower), np.full(k, upper))

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, mu) -> bool:
        mu = np.asarray(mu, dtype=float)
        return bool(np.all(mu >= self.lower) and np.all(mu <= self.upper))

    def normalize(self, mu) -> np.ndarray:
        return normalize_parameters(mu, self)

    def denormalize(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return self.lower + (z + 1.0) * 0.5 * self.width

    def gradient_scale(self) -> np.ndarray:
        """d mu / d z for the affine map z in [-1, 1] -> mu."""
        return 0.5 * self.width

    def subset(self, keep: Sequence[int]) -> "ParameterDomain":
        keep = list(keep)
        return ParameterDomain(self.lower[keep], self.upper[keep])


def normalize_parameters(mu, dom: ParameterDomain) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.shape[-1] != dom.dimension:
        raise InputError(f"expected {dom.dimension} parameters, got {mu.shape[-1]}")
    if not dom.contains(mu):
        raise InputError("parameters outside the domain")
    return 2.0 * (mu - dom.lower) / dom.width - 1.0


def estimate_covariance(gradients) -> np.ndarray:
    """Monte Carlo estimate ``(1/N) sum g g^T`` of the uncentered gradient covariance."""
    G = np.asarray(gradients, dtype=float)
    if G.ndim == 1:
        G = G[None, :]
    if G.shape[0] == 0:
        raise InputError("at least one gradient is required")
    if not np.all(np.isfinite(G)):
        raise InputError("gradients must be finite")
    return (G.T @ G) / G.shape[0]


@dataclass(frozen=True)
class ActiveSubspace:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    active_dim: int

    @property
    def dimension(self) -> int:
        return self.eigenvalues.size

    @property
    def W1(self) -> np.ndarray:
        return self.eigenvectors[:, :self.active_dim]

    @property
    def W2(self) -> np.ndarray:
        return self.eigenvectors[:, self.active_dim:]

    @property
    def first_eigenvector(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    def active_variable(self, mu_normalized):
        return active_variable(self, mu_normalized)

    def inactive_variable(self, mu_normalized):
        return inactive_variable(self, mu_normalized)


def _select_dim(eigenvalues: np.ndarray) -> int:
    k = eigenvalues.size
    if k < 2:
        return 1
    floor = _GAP_FLOOR * eigenvalues[0] if eigenvalues[0] > 0 else _GAP_FLOOR
    lam = np.maximum(eigenvalues, floor)
    ratios = lam[:-1] / lam[1:]
    return int(np.argmax(ratios)) + 1


def fit_active_subspace(C, M: int | None = None) -> ActiveSubspace:
    """Eigendecomposition of ``C`` sorted descending with a deterministic sign.

    Without ``M`` the dimension sits at the largest ratio of consecutive
    eigenvalues (first one wins on ties).
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InputError("covariance must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(C), initial=0.0)))
    if np.max(np.abs(C - C.T), initial=0.0) > _SYM_TOL * scale:
        raise InputError("covariance matrix is not symmetric")
    evals, evecs = np.linalg.eigh(0.5 * (C + C.T))
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    evals = np.where(evals < 0, 0.0, evals)
    pivot = np.argmax(np.abs(evecs), axis=0)
    signs = np.sign(evecs[pivot, np.arange(evecs.shape[1])])
    evecs = evecs * np.where(signs == 0, 1.0, signs)
    k = evals.size
    if M is None:
        M = _select_dim(evals)
    elif not 1 <= M <= max(1, k - 1):
        raise InputError(f"active dimension must lie in [1, {max(1, k - 1)}]")
    return ActiveSubspace(evals, evecs, int(M))


def _check_dim(asub: ActiveSubspace, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.shape[-1] != asub.dimension:
        raise InputError(f"expected {asub.dimension} coordinates, got {mu.shape[-1]}")
    return mu


def active_variable(asub: ActiveSubspace, mu_normalized) -> np.ndarray:
    return _check_dim(asub, mu_normalized) @ asub.W1


def inactive_variable(asub: ActiveSubspace, mu_normalized) -> np.ndarray:
    return _check_dim(asub, mu_normalized) @ asub.W2


@dataclass(frozen=True)
class DyasSeries:
    times: tuple
    subspaces: tuple

    def first_eigenvectors(self) -> np.ndarray:
        """Shape ``(n_times, k)``."""
        return np.array([s.first_eigenvector for s in self.subspaces])


def compute_dyas(samples, gradient_provider: GradientProvider, times, domain: ParameterDomain,
                 active_dim: int | None = None) -> DyasSeries:
    """Active subspace of the target at every instant in ``times``.

    ``gradient_provider(mu, t)`` returns the gradient with respect to the
    physical parameters ``mu``.
    """
    samples = np.asarray(samples, dtype=float)
    times = [float(t) for t in np.atleast_1d(times)]
    if samples.ndim != 2 or samples.shape[1] != domain.dimension:
        raise InputError("samples must be an (n, k) array matching the domain")
    if not times:
        raise InputError("at least one analysis time is required")
    if samples.shape[0] < domain.dimension + 1:
        warnings.warn(
            f"{samples.shape[0]} gradient samples for k={domain.dimension}: "
            "covariance estimate is rank deficient",
            stacklevel=2,
        )
    scale = domain.gradient_scale()
    subspaces = []
    for t in times:
        grads = np.empty_like(samples)
        for i, mu in enumerate(samples):
            try:
                grads[i] = np.asarray(gradient_provider(mu, t), dtype=float) * scale
            except Exception as exc:
                raise GradientProviderError(f"gradient failed at sample {i}, t={t}: {exc}") from exc
        subspaces.append(fit_active_subspace(estimate_covariance(grads), active_dim))
    return DyasSeries(tuple(times), tuple(subspaces))


def frozen_parameters(series: DyasSeries, tau: float = 0.1) -> list[int]:
    """0-based indices whose first-eigenvector weight stays below ``tau`` at every instant."""
    if tau < 0:
        raise InputError("threshold must be non-negative")
    peak = np.max(np.abs(series.first_eigenvectors()), axis=0)
    return [int(j) for j in np.flatnonzero(peak < tau)]


def sufficiency_summary(asub: ActiveSubspace, samples_normalized, f_values) -> np.ndarray:
    """Rows ``(w1 . mu_i, f_i)`` sorted by the active variable."""
    if asub.active_dim != 1:
        raise InputError("sufficiency summary needs a one-dimensional active subspace")
    z = np.atleast_2d(np.asarray(samples_normalized, dtype=float))
    f = np.asarray(f_values, dtype=float).reshape(-1)
    if z.shape[0] != f.size:
        raise InputError("samples and values must have equal length")
    y = active_variable(asub, z)[:, 0]
    order = np.argsort(y, kind="stable")
    return np.column_stack([y[order], f[order]])
