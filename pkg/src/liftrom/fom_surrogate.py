"""Analytic stand-in for the unsteady RANS lift history.

    f(mu, t) = (baseline + a . mu_hat) (1 - e1)
             + e2 [(g . mu_hat) cos(omega t) + (h . mu_hat) sin(omega t)]
             + (q . mu_hat) (e1 - e2 cos(omega t))

with ``e1 = exp(-t/tau1)``, ``e2 = exp(-t/tau2)`` and ``mu_hat`` the
parameters rescaled to [0, 1].  The sine and coupling terms vanish at t = 0
and as t -> inf; they give each of the four shared discrete-time eigenvalues
its own coefficient vector over the samples, so an ensemble has rank 4 and is
reproduced exactly by a linear operator.  All weights vanish on a declared set
of inactive parameters.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .active_subspaces import ParameterDomain
from .dmd import SnapshotEnsemble
from .errors import InputError

DEFAULT_STEADY = (0.0, 0.05, 0.15, 0.12, 0.0, 0.0, 0.04, 0.18, 0.15, 0.0)
DEFAULT_TRANSIENT = (0.0, 0.02, 0.0, 0.05, 0.0, 0.0, -0.05, 0.03, 0.0, 0.0)
DEFAULT_SINE = (0.0, -0.01, 0.03, 0.0, 0.0, 0.0, 0.02, 0.0, -0.02, 0.0)
DEFAULT_COUPLING = (0.0, 0.03, -0.02, 0.04, 0.0, 0.0, 0.02, -0.03, 0.05, 0.0)
# 0-based positions of c1, c5, d1, d5
DEFAULT_FROZEN = (0, 4, 5, 9)


@dataclass(frozen=True)
class SurrogateSpec:
    baseline: float = 0.355
    steady_weights: tuple = DEFAULT_STEADY
    transient_weights: tuple = DEFAULT_TRANSIENT
    tau1: float = 3.0
    tau2: float = 5.0
    omega: float = 1.0
    sine_weights: tuple = DEFAULT_SINE
    coupling_weights: tuple = DEFAULT_COUPLING
    frozen_indices: tuple = DEFAULT_FROZEN
    _a: np.ndarray = field(init=False, repr=False, compare=False)
    _g: np.ndarray = field(init=False, repr=False, compare=False)
    _h: np.ndarray = field(init=False, repr=False, compare=False)
    _q: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.asarray(self.steady_weights, dtype=float)
        g = np.asarray(self.transient_weights, dtype=float)
        h = np.asarray(self.sine_weights, dtype=float)
        q = np.asarray(self.coupling_weights, dtype=float)
        if a.ndim != 1 or not a.shape == g.shape == h.shape == q.shape:
            raise InputError("all weight vectors must have equal length")
        if not (self.tau1 > 0 and self.tau2 > 0):
            raise InputError("decay times must be positive")
        if not (np.any(a) or np.any(g)):
            raise InputError("at least one weight vector must be nonzero")
        frozen = tuple(int(i) for i in self.frozen_indices)
        if any(not 0 <= i < a.size for i in frozen):
            raise InputError("frozen index out of range")
        if any(np.any(w[list(frozen)]) for w in (a, g, h, q)):
            raise InputError("weights must be exactly zero at frozen indices")
        object.__setattr__(self, "frozen_indices", frozen)
        for name, w in (("steady_weights", a), ("transient_weights", g),
                        ("sine_weights", h), ("coupling_weights", q)):
            object.__setattr__(self, name, tuple(w.tolist()))
        for name, w in (("_a", a), ("_g", g), ("_h", h), ("_q", q)):
            object.__setattr__(self, name, w)

    @property
    def dimension(self) -> int:
        return self._a.size

    def time_factors(self, t):
        """Multipliers of the steady, cosine, sine and coupling weights at ``t``."""
        t = np.asarray(t, dtype=float)
        e1 = np.exp(-t / self.tau1)
        e2 = np.exp(-t / self.tau2)
        cos = e2 * np.cos(self.omega * t)
        return 1.0 - e1, cos, e2 * np.sin(self.omega * t), e1 - cos

    def steady_state(self, mu, domain: ParameterDomain | None = None):
        unit, _ = _unit_params(self, mu, domain)
        return self.baseline + _dot(unit, self._a)

    def discrete_eigenvalues(self, dt: float) -> np.ndarray:
        """The (at most four) eigenvalues of the sampled time dynamics."""
        osc = np.exp((-1.0 / self.tau2 + 1j * self.omega) * dt)
        return np.array([1.0, np.exp(-dt / self.tau1), osc, np.conj(osc)])


def _dot(unit: np.ndarray, w: np.ndarray):
    # row-wise reduction so a sample gives bitwise the same value alone or in a batch
    return np.sum(unit * w, axis=-1)


def _unit_params(spec: SurrogateSpec, mu, domain: ParameterDomain | None):
    domain = domain or ParameterDomain.uniform_box(spec.dimension)
    mu = np.asarray(mu, dtype=float)
    if mu.shape[-1] != spec.dimension or domain.dimension != spec.dimension:
        raise InputError(f"parameter vectors must have length {spec.dimension}")
    if not domain.contains(mu):
        raise InputError("parameter vector outside the domain")
    return (mu - domain.lower) / domain.width, domain


def lift(spec: SurrogateSpec, mu, t, domain: ParameterDomain | None = None):
    """Lift at ``mu`` (shape ``(k,)`` or ``(n, k)``) and time(s) ``t >= 0``.

    Broadcasting: the result has shape ``mu.shape[:-1] + t.shape``.
    """
    if np.any(np.asarray(t) < 0):
        raise InputError("time must be non-negative")
    unit, _ = _unit_params(spec, mu, domain)
    rise, cos, sin, coupling = spec.time_factors(t)
    out = np.multiply.outer(spec.baseline + _dot(unit, spec._a), rise)
    out = out + np.multiply.outer(_dot(unit, spec._g), cos)
    out = out + np.multiply.outer(_dot(unit, spec._h), sin)
    return out + np.multiply.outer(_dot(unit, spec._q), coupling)


def lift_gradient(spec: SurrogateSpec, mu, t, domain: ParameterDomain | None = None):
    """Exact gradient of :func:`lift` with respect to the physical ``mu``."""
    if np.any(np.asarray(t) < 0):
        raise InputError("time must be non-negative")
    _, domain = _unit_params(spec, mu, domain)
    rise, cos, sin, coupling = spec.time_factors(t)
    direction = (np.multiply.outer(rise, spec._a) + np.multiply.outer(cos, spec._g)
                 + np.multiply.outer(sin, spec._h) + np.multiply.outer(coupling, spec._q))
    grad = direction / domain.width
    mu = np.asarray(mu, dtype=float)
    if mu.ndim == 2:
        grad = np.broadcast_to(grad, (mu.shape[0],) + grad.shape).copy()
    return grad


def run_ensemble(spec: SurrogateSpec, samples, t_grid, domain: ParameterDomain | None = None,
                 sample_ids=None) -> SnapshotEnsemble:
    samples = np.asarray(samples, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise InputError("samples must be a non-empty (n, k) array")
    if t_grid.size == 0:
        raise InputError("time grid must be non-empty")
    values = lift(spec, samples, t_grid, domain)
    return SnapshotEnsemble.from_grid(values, t_grid, sample_ids)


def gradient_provider(spec: SurrogateSpec, domain: ParameterDomain | None = None):
    """Adapter matching the ``provider(mu, t) -> gradient`` contract."""

    def provider(mu, t):
        return lift_gradient(spec, mu, t, domain)

    return provider
